#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/SparseLU>

#include "ccsi/grid.hpp"
#include "ccsi/selectors.hpp"
#include "ccsi/stiffness.hpp"
#include "ccsi/types.hpp"

namespace ccsi {

/// One sparse LU factorization of A reused for A, A^T and A^H solves. Solves are const and
/// keep no shared workspace, so concurrent calls are safe.
class LinearSolver {
public:
    explicit LinearSolver(const SparseMatrixXc& a);

    MatrixXc solve(const MatrixXc& b) const;
    MatrixXc solve_transpose(const MatrixXc& b) const;
    MatrixXc solve_adjoint(const MatrixXc& b) const;

    bool symmetric() const { return symmetric_; }
    Eigen::Index size() const { return n_; }

private:
    // mutable: SparseLU::transpose()/adjoint() are non-const view factories
    mutable Eigen::SparseLU<SparseMatrixXc, Eigen::COLAMDOrdering<int>> lu_;
    bool symmetric_ = false;
    Eigen::Index n_ = 0;
};

enum class CacheStatus { Disabled, Hit, Miss };
const char* to_string(CacheStatus s);

struct OperatorOptions {
    PmlOptions pml;
    /// Directory for measurement-matrix cache files; empty disables caching.
    std::filesystem::path cache_dir;
};

/// Immutable discrete operators for one grid, medium, frequency and station layout.
struct OperatorSet {
    GridSpec grid;
    Rect domain;
    Real freq_hz = 0.0;
    std::vector<Point> stations;

    SparseMatrixXc stiffness;
    std::shared_ptr<const LinearSolver> solver;
    SparseMatrixXr receivers;        // M_S
    SparseMatrixXr domain_selector;  // M_D
    DomainIndex index;
    MatrixXc phi;  // M_S A^-1 M_D^T, M x N_D

    std::uint64_t hash = 0;
    CacheStatus cache_status = CacheStatus::Disabled;

    int num_measurements() const { return static_cast<int>(receivers.rows()); }
    int domain_size() const { return index.size(); }
};

OperatorSet build_operator_set(const GridSpec& grid, const MediumMap& medium, Real freq_hz, const Rect& domain,
                               const std::vector<Point>& stations, const OperatorOptions& options = {});

/// Phi row m solves A^T phi_m = (M_S row m)^T; columns restricted to the domain unknowns.
MatrixXc assemble_measurement_matrix(const LinearSolver& solver, const SparseMatrixXr& receivers,
                                     const SparseMatrixXr& domain_selector);

/// M_D A^-1 M_D^T x, column by column.
MatrixXc apply_green(const OperatorSet& ops, const MatrixXc& x);
/// M_D A^-H M_D^T x
MatrixXc apply_green_adjoint(const OperatorSet& ops, const MatrixXc& x);

struct ConditionReport {
    VectorXr singular_values;  // descending
    Real kappa = 0.0;          // +inf when rank deficient
    bool rank_deficient = false;
};

/// Singular values of a wide matrix via a QR of its adjoint (exact for M << N, no squaring
/// of the spectrum as with the Gram matrix).
ConditionReport condition_number(const MatrixXc& phi);

/// Content hash over everything the measurement matrix depends on.
std::uint64_t operator_hash(const GridSpec& grid, const MediumMap& medium, Real freq_hz, const Rect& domain,
                            const std::vector<Point>& stations, const PmlOptions& pml);

// Measurement-matrix cache file, little-endian:
//   bytes 0..7   magic "CCSIPHI\0"
//   u32          format version (1)
//   u32          bytes per complex scalar (16 = complex128)
//   u64 M, u64 N, u64 content hash
//   M*N complex128 values, row-major, (re, im) pairs
void write_phi_cache(const std::filesystem::path& path, const MatrixXc& phi, std::uint64_t hash);
std::optional<MatrixXc> read_phi_cache(const std::filesystem::path& path, std::uint64_t expected_hash);

}  // namespace ccsi

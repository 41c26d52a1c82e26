#include "ccsi/operators.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>

#include "ccsi/hash.hpp"
#include "ccsi/matrix_io.hpp"

namespace ccsi {

LinearSolver::LinearSolver(const SparseMatrixXc& a) : n_(a.rows()) {
    if (a.rows() != a.cols()) throw Error(ErrorCode::DimensionMismatch, "stiffness matrix must be square");
    const SparseMatrixXc diff = a - SparseMatrixXc(a.transpose());
    symmetric_ = diff.norm() == 0.0;
    lu_.analyzePattern(a);
    lu_.factorize(a);
    if (lu_.info() != Eigen::Success) throw Error(ErrorCode::SingularStiffness, "sparse LU factorization failed: " + lu_.lastErrorMessage());
}

MatrixXc LinearSolver::solve(const MatrixXc& b) const {
    MatrixXc x = lu_.solve(b);
    return x;
}

MatrixXc LinearSolver::solve_transpose(const MatrixXc& b) const {
    if (symmetric_) return solve(b);
    MatrixXc x = lu_.transpose().solve(b);
    return x;
}

MatrixXc LinearSolver::solve_adjoint(const MatrixXc& b) const {
    if (symmetric_) return solve(b.conjugate()).conjugate();
    MatrixXc x = lu_.adjoint().solve(b);
    return x;
}

const char* to_string(CacheStatus s) {
    switch (s) {
        case CacheStatus::Disabled: return "disabled";
        case CacheStatus::Hit: return "hit";
        case CacheStatus::Miss: return "miss";
    }
    return "unknown";
}

MatrixXc assemble_measurement_matrix(const LinearSolver& solver, const SparseMatrixXr& receivers,
                                     const SparseMatrixXr& domain_selector) {
    const MatrixXc rhs = MatrixXr(receivers.transpose()).cast<Complex>();
    const MatrixXc rows = solver.solve_transpose(rhs);  // N x M, column m is phi_m
    return (domain_selector.cast<Complex>() * rows).transpose();
}

namespace {

MatrixXc embed(const OperatorSet& ops, const MatrixXc& x) {
    if (x.rows() != ops.domain_size()) throw Error(ErrorCode::DimensionMismatch, "vector is not defined on the inversion domain");
    MatrixXc full = MatrixXc::Zero(ops.grid.num_unknowns(), x.cols());
    for (int k = 0; k < ops.domain_size(); ++k) full.row(ops.index.unknowns[k]) = x.row(k);
    return full;
}

MatrixXc restrict_to_domain(const OperatorSet& ops, const MatrixXc& full) {
    MatrixXc x(ops.domain_size(), full.cols());
    for (int k = 0; k < ops.domain_size(); ++k) x.row(k) = full.row(ops.index.unknowns[k]);
    return x;
}

}  // namespace

MatrixXc apply_green(const OperatorSet& ops, const MatrixXc& x) {
    return restrict_to_domain(ops, ops.solver->solve(embed(ops, x)));
}

MatrixXc apply_green_adjoint(const OperatorSet& ops, const MatrixXc& x) {
    return restrict_to_domain(ops, ops.solver->solve_adjoint(embed(ops, x)));
}

ConditionReport condition_number(const MatrixXc& phi) {
    if (phi.size() == 0 || phi.norm() == 0.0) throw Error(ErrorCode::NumericFailure, "condition number of a zero matrix");
    ConditionReport r;
    if (phi.rows() <= phi.cols()) {
        Eigen::HouseholderQR<MatrixXc> qr(phi.adjoint());
        const MatrixXc upper = qr.matrixQR().topRows(phi.rows()).triangularView<Eigen::Upper>();
        r.singular_values = Eigen::JacobiSVD<MatrixXc>(upper).singularValues();
    } else {
        r.singular_values = Eigen::JacobiSVD<MatrixXc>(phi).singularValues();
    }
    const Real smax = r.singular_values(0);
    const Real smin = r.singular_values(r.singular_values.size() - 1);
    const Real floor = smax * std::numeric_limits<Real>::epsilon() * std::max(phi.rows(), phi.cols());
    r.rank_deficient = !(smin > floor);
    r.kappa = r.rank_deficient ? std::numeric_limits<Real>::infinity() : smax / smin;
    return r;
}

std::uint64_t operator_hash(const GridSpec& grid, const MediumMap& medium, Real freq_hz, const Rect& domain,
                            const std::vector<Point>& stations, const PmlOptions& pml) {
    ContentHasher h;
    h.add(std::string_view("ccsi-operator-v1"));
    h.add(grid.extent.x_min).add(grid.extent.x_max).add(grid.extent.y_min).add(grid.extent.y_max);
    h.add(grid.delta).add(grid.pml_cells).add(static_cast<int>(grid.polarization)).add(grid.nx).add(grid.ny);
    h.add_matrix(medium.eps_rel).add_matrix(medium.sigma);
    h.add(freq_hz);
    h.add(domain.x_min).add(domain.x_max).add(domain.y_min).add(domain.y_max);
    h.add<std::uint64_t>(stations.size());
    for (const auto& s : stations) h.add(s.x).add(s.y);
    h.add(pml.grading_order).add(pml.target_reflection);
    return h.value();
}

namespace {

constexpr Magic kPhiMagic = {'C', 'C', 'S', 'I', 'P', 'H', 'I', '\0'};
constexpr std::uint32_t kPhiVersion = 1;

std::filesystem::path cache_path(const std::filesystem::path& dir, std::uint64_t hash) {
    std::ostringstream os;
    os << "phi_" << std::hex << std::setw(16) << std::setfill('0') << hash << ".bin";
    return dir / os.str();
}

}  // namespace

void write_phi_cache(const std::filesystem::path& path, const MatrixXc& phi, std::uint64_t hash) {
    write_complex_matrix(path, kPhiMagic, kPhiVersion, phi, hash);
}

std::optional<MatrixXc> read_phi_cache(const std::filesystem::path& path, std::uint64_t expected_hash) {
    auto f = read_complex_matrix(path, kPhiMagic, kPhiVersion);
    if (!f || f->hash != expected_hash) return std::nullopt;
    return std::move(f->matrix);
}

OperatorSet build_operator_set(const GridSpec& grid, const MediumMap& medium, Real freq_hz, const Rect& domain,
                               const std::vector<Point>& stations, const OperatorOptions& options) {
    OperatorSet ops;
    ops.grid = grid;
    ops.domain = domain;
    ops.freq_hz = freq_hz;
    ops.stations = stations;

    Selectors sel = build_selectors(grid, domain, stations);
    ops.receivers = std::move(sel.receivers);
    ops.domain_selector = std::move(sel.domain);
    ops.index = std::move(sel.index);

    ops.stiffness = assemble_stiffness(grid, medium, freq_hz, options.pml);
    ops.solver = std::make_shared<const LinearSolver>(ops.stiffness);
    ops.hash = operator_hash(grid, medium, freq_hz, domain, stations, options.pml);

    if (options.cache_dir.empty()) {
        ops.phi = assemble_measurement_matrix(*ops.solver, ops.receivers, ops.domain_selector);
        return ops;
    }
    const auto path = cache_path(options.cache_dir, ops.hash);
    if (auto cached = read_phi_cache(path, ops.hash);
        cached && cached->rows() == ops.num_measurements() && cached->cols() == ops.domain_size()) {
        ops.phi = std::move(*cached);
        ops.cache_status = CacheStatus::Hit;
        return ops;
    }
    ops.phi = assemble_measurement_matrix(*ops.solver, ops.receivers, ops.domain_selector);
    std::filesystem::create_directories(options.cache_dir);
    write_phi_cache(path, ops.phi, ops.hash);
    ops.cache_status = CacheStatus::Miss;
    return ops;
}

}  // namespace ccsi

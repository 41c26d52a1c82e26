#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "ccsi/operators.hpp"
#include "ccsi/scene.hpp"
#include "ccsi/types.hpp"

namespace ccsi {

enum class Variant { CSI, MRCSI, CCCSI };
const char* to_string(Variant v);
Variant parse_variant(const std::string& s);

struct InversionOptions {
    Variant variant = Variant::CCCSI;
    int max_iterations = 2048;
    Real cost_tolerance = 0.0;  // stop once the total cost falls to or below this
    Real brent_tolerance = 1e-6;
    int brent_max_evaluations = 100;
    bool enforce_constraints = true;
    /// CC-CSI only. Off drops every xi term, which turns CC-CSI into classical CSI.
    bool cross_term = true;
};

/// Everything an inversion reads but never changes. Per-source quantities are columns.
struct InversionProblem {
    const OperatorSet* ops = nullptr;
    MatrixXc incident;  // e_inc, N_D x P
    MatrixXc data;      // f, M x P

    InversionProblem(const OperatorSet& operators, MatrixXc incident_fields, MatrixXc measured);

    const OperatorSet& operators() const { return *ops; }
    int num_sources() const { return static_cast<int>(data.cols()); }
    int domain_size() const { return static_cast<int>(incident.rows()); }
};

struct InversionState {
    MatrixXc j;      // contrast sources
    MatrixXc e;      // total fields e_inc + G j
    MatrixXc rho;    // f - Phi j
    MatrixXc gamma;  // chi e - j
    MatrixXc xi;     // f - Phi (chi e); empty unless the cross term is active
    MatrixXc g, g_prev, nu;
    VectorXc chi;
    VectorXc g_chi, g_chi_prev, nu_chi;
    Real eta_s = 0.0;
    Real eta_d = 0.0;
    bool eta_d_fallback = false;
    Real delta_sq = 0.0;  // MR-CSI smoothing of the last contrast update
    int n = 0;
};

struct CostBreakdown {
    int n = 0;
    Real data_term = 0.0;
    Real state_term = 0.0;
    Real cross_term = 0.0;
    Real total = 0.0;
    std::optional<Real> err;
};

/// True when the variant and options carry the cross-correlated term.
bool uses_cross_term(const InversionOptions& options);

/// Back-propagation start: j_p = w_p Phi^H f_p with w_p = |Phi^H f_p|^2 / |Phi Phi^H f_p|^2,
/// then e, chi (closed form), constraints, eta^D and residuals.
InversionState initialize(const InversionProblem& problem, const InversionOptions& options);

/// State built from a given contrast and contrast sources (e = e_inc + G j), residuals current.
InversionState seed_state(const InversionProblem& problem, const VectorXc& chi, const MatrixXc& j,
                          const InversionOptions& options);

/// eta^D = 1 / sum_p |chi e_inc,p|^2, falling back to 1 / sum_p |e_inc,p|^2 when chi e_inc = 0.
void refresh_eta_d(const InversionProblem& problem, InversionState& state);
void compute_residuals(const InversionProblem& problem, InversionState& state, const InversionOptions& options);
CostBreakdown cost(const InversionState& state, const InversionOptions& options);

/// Frechet gradient of the j-cost with respect to conj(j), N_D x P.
MatrixXc gradient_contrast_source(const InversionProblem& problem, const InversionState& state,
                                  const InversionOptions& options);

struct DirectionUpdate {
    Real coefficient = 0.0;
    bool restarted = false;
};

/// Polak-Ribiere: nu <- g + c nu with c = Re<g, g - g_old> / |g_old|^2 over every column.
/// Restarts (c = 0) when |g_old|^2 < 1e-30 or c < -10.
template <typename Derived>
DirectionUpdate polak_ribiere_direction(const Eigen::MatrixBase<Derived>& g, const Eigen::MatrixBase<Derived>& g_old,
                                        Eigen::MatrixBase<Derived>& nu) {
    DirectionUpdate u;
    const Real denom = g_old.squaredNorm();
    if (denom < 1e-30 || nu.size() != g.size()) {
        u.restarted = true;
    } else {
        u.coefficient = (g.cwiseProduct((g - g_old).conjugate())).sum().real() / denom;
        if (u.coefficient < -10.0) {
            u.coefficient = 0.0;
            u.restarted = true;
        }
    }
    if (u.restarted)
        nu.derived() = g;
    else
        nu.derived() = g + u.coefficient * nu;
    return u;
}

struct SourceStep {
    VectorXr alpha;  // per source
    MatrixXc e_nu;   // G nu
};

/// Exact minimizer of the j-cost along nu for every source: alpha_p = -Re<g_p, nu_p> / (2 (a2 + b2 + c2)).
SourceStep step_size_j(const InversionProblem& problem, const InversionState& state, const MatrixXc& nu,
                       const MatrixXc& g, const InversionOptions& options);
void update_contrast_source(InversionState& state, const VectorXr& alpha, const MatrixXc& nu, const MatrixXc& e_nu);

/// sum_p |e_p|^2 per domain unknown, floored at 1e-30 of its maximum.
VectorXr field_energy(const MatrixXc& e);

/// MR-CSI weighted total variation around a reference contrast chi_{n-1}:
///   F(chi) = mean_c (|grad r(chi)|_c^2 + delta^2) / (|grad r(chi_ref)|_c^2 + delta^2)
/// over the cell representatives r (TE: mean of the two components), forward differences
/// with a Neumann boundary, physical units.
class TvFactor {
public:
    TvFactor(const DomainIndex& index, Real delta, const VectorXc& chi_ref, Real delta_sq);

    Real value(const VectorXc& chi) const;
    /// dF/d conj(chi) scaled by 2 (so Re<grad, d> is the directional derivative).
    VectorXc gradient(const VectorXc& chi) const;
    /// Coefficients of F(chi + beta nu) = q0 + q1 beta + q2 beta^2.
    std::array<Real, 3> along(const VectorXc& chi, const VectorXc& nu) const;

private:
    VectorXc representative(const VectorXc& chi) const;
    void differences(const VectorXc& r, VectorXc& dx, VectorXc& dy) const;
    VectorXc differences_adjoint(const VectorXc& dx, const VectorXc& dy) const;

    int nx_, ny_, components_;
    Real delta_;
    Real delta_sq_;
    VectorXr weight_;  // 1 / (n_cells (|grad r_ref|^2 + delta^2)), 0 where that is 0
    Real constant_ = 0.0;  // cells whose reference denominator vanishes count as 1
};

/// Contrast-phase objective as a function of chi with j and e held fixed.
///   CSI / CC without cross term: eta^D sum |chi e - j|^2 (eta^D frozen)
///   CC-CSI: sum |chi e - j|^2 / sum |chi e_inc|^2 + eta^S sum |f - Phi(chi e)|^2
///   MR-CSI: (eta^S sum |rho|^2 + sum |chi e - j|^2 / sum |chi e_inc|^2) * F_TV(chi)
Real contrast_objective(const InversionProblem& problem, const InversionState& state, const VectorXc& chi,
                        const InversionOptions& options, const TvFactor* tv = nullptr);

/// Same objectives with eta^D held at its current value instead of recomputed from chi.
/// This is the function the contrast gradient differentiates.
Real contrast_objective_frozen(const InversionProblem& problem, const InversionState& state, const VectorXc& chi,
                               const InversionOptions& options, const TvFactor* tv = nullptr);

/// Unpreconditioned contrast gradient 2 dC/d conj(chi) of contrast_objective_frozen.
VectorXc gradient_contrast_raw(const InversionProblem& problem, const InversionState& state,
                               const InversionOptions& options, const TvFactor* tv = nullptr);
/// Raw gradient divided by field_energy(e). TE: both components of a cell get
/// (raw_x + raw_y) / (energy_x + energy_y), so the direction stays isotropic.
VectorXc gradient_contrast(const InversionProblem& problem, const InversionState& state,
                           const InversionOptions& options, const TvFactor* tv = nullptr);

struct ContrastStep {
    Real beta = 0.0;
    Real objective_before = 0.0;
    Real objective_after = 0.0;
    int evaluations = 0;
    bool bracket_failed = false;
};

/// Bracket + Brent minimization of contrast_objective(chi + beta nu) over real beta.
ContrastStep step_size_chi(const InversionProblem& problem, const InversionState& state, const VectorXc& nu,
                           const VectorXc& g, const InversionOptions& options, const TvFactor* tv = nullptr);

/// chi = sum_p j_p conj(e_p) / sum_p |e_p|^2
VectorXc closed_form_contrast(const MatrixXc& j, const MatrixXc& e);

/// Re chi >= 0, Im chi <= 0 (when enabled), then TE components replaced by their mean.
void apply_contrast_constraints(VectorXc& chi, const DomainIndex& index, bool clamp);

struct IterationReport {
    CostBreakdown cost;       // after the full iteration, with eta^D of the new contrast
    Real cost_before_j = 0.0;  // total before and after the j-update (same eta^D)
    Real cost_after_j = 0.0;
    Real alpha_min = 0.0, alpha_max = 0.0;
    ContrastStep chi_step;
    bool j_restarted = false;
    bool chi_restarted = false;
    bool eta_d_fallback = false;
    double seconds = 0.0;
};

/// One full pass: j-direction, exact j-step, contrast update, constraints, eta^D and residual refresh.
/// Throws NumericFailure if any cost term stops being finite.
IterationReport iterate(const InversionProblem& problem, InversionState& state, const InversionOptions& options);

struct RunResult {
    std::vector<CostBreakdown> history;  // row 0 = initialization
    std::vector<IterationReport> reports;
    InversionState state;
    ContrastMap contrast;
    double seconds = 0.0;       // iterations only, excluding initialization
    double init_seconds = 0.0;
    int bracket_failures = 0;
    int eta_d_fallbacks = 0;
};

struct RunHooks {
    const ContrastMap* truth = nullptr;
    std::filesystem::path checkpoint_dir;  // empty disables checkpoints
    int checkpoint_every = 128;
    std::function<void(const IterationReport&)> on_iteration;
};

RunResult run(const InversionProblem& problem, const InversionOptions& options, const RunHooks& hooks = {});

ContrastMap contrast_map(const InversionProblem& problem, const VectorXc& chi);

// Checkpoint, little-endian: magic "CCSICKP\0", u32 version (1), u32 variant, i32 n,
// f64 eta_s, eta_d, delta_sq, then complex matrices j, e, g, nu (as u64 rows, u64 cols,
// row-major complex128) and vectors chi, g_chi, nu_chi (same layout, one column).
void write_checkpoint(const std::filesystem::path& path, const InversionState& state, Variant variant);
InversionState read_checkpoint(const std::filesystem::path& path, Variant& variant);

void write_history_csv(const std::filesystem::path& path, const std::vector<CostBreakdown>& history);
std::string format_history_csv(const std::vector<CostBreakdown>& history);

}  // namespace ccsi

#include "ccsi/inversion.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>
#include <optional>
#include <fstream>
#include <sstream>

#include "ccsi/brent.hpp"
#include "ccsi/matrix_io.hpp"

namespace ccsi {

const char* to_string(Variant v) {
    switch (v) {
        case Variant::CSI: return "CSI";
        case Variant::MRCSI: return "MRCSI";
        case Variant::CCCSI: return "CCCSI";
    }
    return "?";
}

Variant parse_variant(const std::string& s) {
    std::string u;
    for (char c : s)
        if (c != '-' && c != '_') u += static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    if (u == "CSI") return Variant::CSI;
    if (u == "MRCSI") return Variant::MRCSI;
    if (u == "CCCSI") return Variant::CCCSI;
    throw Error(ErrorCode::ConfigInvalid, "unknown variant '" + s + "' (expected CSI, MRCSI or CCCSI)");
}

InversionProblem::InversionProblem(const OperatorSet& operators, MatrixXc incident_fields, MatrixXc measured)
    : ops(&operators), incident(std::move(incident_fields)), data(std::move(measured)) {
    if (incident.rows() != operators.domain_size())
        throw Error(ErrorCode::DimensionMismatch, "incident fields do not match the inversion domain");
    if (data.rows() != operators.num_measurements())
        throw Error(ErrorCode::DimensionMismatch, "data rows do not match the receiver count");
    if (data.cols() != incident.cols())
        throw Error(ErrorCode::DimensionMismatch, "data and incident fields disagree on the source count");
}

bool uses_cross_term(const InversionOptions& options) {
    return options.variant == Variant::CCCSI && options.cross_term;
}

namespace {

bool closed_form_chi(const InversionOptions& o) {
    return o.variant == Variant::CSI || (o.variant == Variant::CCCSI && !o.cross_term);
}

MatrixXc times_contrast(const VectorXc& chi, const MatrixXc& m) { return chi.asDiagonal() * m; }

Real real_inner(const MatrixXc& a, const MatrixXc& b) { return (a.conjugate().cwiseProduct(b)).sum().real(); }

VectorXr column_real_inner(const MatrixXc& a, const MatrixXc& b) {
    return (a.conjugate().cwiseProduct(b)).colwise().sum().real().transpose();
}

}  // namespace

void refresh_eta_d(const InversionProblem& problem, InversionState& state) {
    const Real s = times_contrast(state.chi, problem.incident).squaredNorm();
    state.eta_d_fallback = !(s > 0.0);
    if (state.eta_d_fallback) {
        const Real inc = problem.incident.squaredNorm();
        if (!(inc > 0.0)) throw Error(ErrorCode::NumericFailure, "incident field vanishes on the inversion domain");
        state.eta_d = 1.0 / inc;
    } else {
        state.eta_d = 1.0 / s;
    }
}

void compute_residuals(const InversionProblem& problem, InversionState& state, const InversionOptions& options) {
    const MatrixXc& phi = problem.operators().phi;
    const MatrixXc chi_e = times_contrast(state.chi, state.e);
    state.rho = problem.data - phi * state.j;
    state.gamma = chi_e - state.j;
    if (uses_cross_term(options))
        state.xi = problem.data - phi * chi_e;
    else
        state.xi.resize(0, 0);
}

CostBreakdown cost(const InversionState& state, const InversionOptions& options) {
    CostBreakdown c;
    c.n = state.n;
    c.data_term = state.eta_s * state.rho.squaredNorm();
    c.state_term = state.eta_d * state.gamma.squaredNorm();
    if (uses_cross_term(options)) c.cross_term = state.eta_s * state.xi.squaredNorm();
    c.total = c.data_term + c.state_term + c.cross_term;
    return c;
}

VectorXr field_energy(const MatrixXc& e) {
    VectorXr w = e.cwiseAbs2().rowwise().sum();
    const Real top = w.size() ? w.maxCoeff() : 0.0;
    const Real floor = top > 0.0 ? 1e-30 * top : std::numeric_limits<Real>::min();
    return w.cwiseMax(floor);
}

VectorXc closed_form_contrast(const MatrixXc& j, const MatrixXc& e) {
    const VectorXc num = j.cwiseProduct(e.conjugate()).rowwise().sum();
    return num.cwiseQuotient(field_energy(e).cast<Complex>());
}

void apply_contrast_constraints(VectorXc& chi, const DomainIndex& index, bool clamp) {
    if (clamp)
        for (auto& c : chi) c = {std::max(c.real(), 0.0), std::min(c.imag(), 0.0)};
    if (index.components == 2) {
        const int nc = index.num_cells();
        const VectorXc mean = 0.5 * (chi.head(nc) + chi.tail(nc));
        chi.head(nc) = mean;
        chi.tail(nc) = mean;
    }
}

InversionState seed_state(const InversionProblem& problem, const VectorXc& chi, const MatrixXc& j,
                          const InversionOptions& options) {
    if (chi.size() != problem.domain_size() || j.rows() != problem.domain_size() || j.cols() != problem.num_sources())
        throw Error(ErrorCode::DimensionMismatch, "seed state does not match the problem dimensions");
    const Real f2 = problem.data.squaredNorm();
    if (!(f2 > 0.0)) throw Error(ErrorCode::ZeroData, "all measured data are zero");
    InversionState s;
    s.eta_s = 1.0 / f2;
    s.j = j;
    s.e = problem.incident + apply_green(problem.operators(), j);
    s.chi = chi;
    refresh_eta_d(problem, s);
    compute_residuals(problem, s, options);
    return s;
}

InversionState initialize(const InversionProblem& problem, const InversionOptions& options) {
    const OperatorSet& ops = problem.operators();
    const Real f2 = problem.data.squaredNorm();
    if (!(f2 > 0.0)) throw Error(ErrorCode::ZeroData, "all measured data are zero");
    const MatrixXc back = ops.phi.adjoint() * problem.data;
    const MatrixXc forward = ops.phi * back;
    MatrixXc j(back.rows(), back.cols());
    for (Eigen::Index p = 0; p < back.cols(); ++p) {
        const Real den = forward.col(p).squaredNorm();
        const Real w = den > 0.0 ? back.col(p).squaredNorm() / den : 0.0;
        j.col(p) = w * back.col(p);
    }
    InversionState s;
    s.eta_s = 1.0 / f2;
    s.j = std::move(j);
    s.e = problem.incident + apply_green(ops, s.j);
    s.chi = closed_form_contrast(s.j, s.e);
    apply_contrast_constraints(s.chi, ops.index, options.enforce_constraints);
    refresh_eta_d(problem, s);
    compute_residuals(problem, s, options);
    return s;
}

MatrixXc gradient_contrast_source(const InversionProblem& problem, const InversionState& state,
                                  const InversionOptions& options) {
    const OperatorSet& ops = problem.operators();
    MatrixXc inner = state.eta_d * state.gamma;
    if (uses_cross_term(options)) inner -= state.eta_s * (ops.phi.adjoint() * state.xi);
    const MatrixXc back = apply_green_adjoint(ops, times_contrast(state.chi.conjugate(), inner));
    return -2.0 * state.eta_s * (ops.phi.adjoint() * state.rho) - 2.0 * state.eta_d * state.gamma + 2.0 * back;
}

SourceStep step_size_j(const InversionProblem& problem, const InversionState& state, const MatrixXc& nu,
                       const MatrixXc& g, const InversionOptions& options) {
    const OperatorSet& ops = problem.operators();
    SourceStep step;
    step.e_nu = apply_green(ops, nu);
    const MatrixXc chi_e_nu = times_contrast(state.chi, step.e_nu);
    VectorXr curvature = state.eta_s * (ops.phi * nu).colwise().squaredNorm().transpose() +
                         state.eta_d * (chi_e_nu - nu).colwise().squaredNorm().transpose();
    if (uses_cross_term(options))
        curvature += state.eta_s * (ops.phi * chi_e_nu).colwise().squaredNorm().transpose();
    const VectorXr slope = column_real_inner(g, nu);
    step.alpha.resize(nu.cols());
    for (Eigen::Index p = 0; p < nu.cols(); ++p)
        step.alpha[p] = curvature[p] > 0.0 ? -slope[p] / (2.0 * curvature[p]) : 0.0;
    return step;
}

void update_contrast_source(InversionState& state, const VectorXr& alpha, const MatrixXc& nu, const MatrixXc& e_nu) {
    const VectorXc a = alpha.cast<Complex>();
    state.j += nu * a.asDiagonal();
    state.e += e_nu * a.asDiagonal();
}

TvFactor::TvFactor(const DomainIndex& index, Real delta, const VectorXc& chi_ref, Real delta_sq)
    : nx_(index.nx), ny_(index.ny), components_(index.components), delta_(delta), delta_sq_(delta_sq) {
    VectorXc dx, dy;
    differences(representative(chi_ref), dx, dy);
    const Real nc = static_cast<Real>(nx_ * ny_);
    weight_.resize(nx_ * ny_);
    for (int c = 0; c < nx_ * ny_; ++c) {
        const Real den = std::norm(dx[c]) + std::norm(dy[c]) + delta_sq_;
        if (den > 0.0) {
            weight_[c] = 1.0 / (nc * den);
        } else {
            weight_[c] = 0.0;
            constant_ += 1.0 / nc;
        }
    }
}

VectorXc TvFactor::representative(const VectorXc& chi) const {
    const int nc = nx_ * ny_;
    if (components_ == 1) return chi;
    return 0.5 * (chi.head(nc) + chi.tail(nc));
}

void TvFactor::differences(const VectorXc& r, VectorXc& dx, VectorXc& dy) const {
    dx = VectorXc::Zero(nx_ * ny_);
    dy = VectorXc::Zero(nx_ * ny_);
    for (int j = 0; j < ny_; ++j)
        for (int i = 0; i < nx_; ++i) {
            const int c = i + nx_ * j;
            if (i + 1 < nx_) dx[c] = (r[c + 1] - r[c]) / delta_;
            if (j + 1 < ny_) dy[c] = (r[c + nx_] - r[c]) / delta_;
        }
}

VectorXc TvFactor::differences_adjoint(const VectorXc& dx, const VectorXc& dy) const {
    VectorXc out = VectorXc::Zero(nx_ * ny_);
    for (int j = 0; j < ny_; ++j)
        for (int i = 0; i < nx_; ++i) {
            const int c = i + nx_ * j;
            if (i + 1 < nx_) {
                out[c] -= dx[c] / delta_;
                out[c + 1] += dx[c] / delta_;
            }
            if (j + 1 < ny_) {
                out[c] -= dy[c] / delta_;
                out[c + nx_] += dy[c] / delta_;
            }
        }
    return out;
}

Real TvFactor::value(const VectorXc& chi) const {
    VectorXc dx, dy;
    differences(representative(chi), dx, dy);
    Real f = constant_;
    for (int c = 0; c < nx_ * ny_; ++c) f += weight_[c] * (std::norm(dx[c]) + std::norm(dy[c]) + delta_sq_);
    return f;
}

VectorXc TvFactor::gradient(const VectorXc& chi) const {
    VectorXc dx, dy;
    differences(representative(chi), dx, dy);
    const VectorXc w = weight_.cast<Complex>();
    const VectorXc gr = 2.0 * differences_adjoint(w.cwiseProduct(dx), w.cwiseProduct(dy));
    if (components_ == 1) return gr;
    VectorXc g(2 * gr.size());
    g << 0.5 * gr, 0.5 * gr;
    return g;
}

std::array<Real, 3> TvFactor::along(const VectorXc& chi, const VectorXc& nu) const {
    VectorXc rx, ry, sx, sy;
    differences(representative(chi), rx, ry);
    differences(representative(nu), sx, sy);
    std::array<Real, 3> q{constant_, 0.0, 0.0};
    for (int c = 0; c < nx_ * ny_; ++c) {
        const Real w = weight_[c];
        q[0] += w * (std::norm(rx[c]) + std::norm(ry[c]) + delta_sq_);
        q[1] += w * 2.0 * (std::conj(rx[c]) * sx[c] + std::conj(ry[c]) * sy[c]).real();
        q[2] += w * (std::norm(sx[c]) + std::norm(sy[c]));
    }
    return q;
}

namespace {

struct ObjectiveParts {
    Real state_sq = 0.0;     // sum |chi e - j|^2
    Real incident_sq = 0.0;  // sum |chi e_inc|^2
    Real cross_sq = 0.0;     // sum |f - Phi(chi e)|^2
};

ObjectiveParts objective_parts(const InversionProblem& problem, const InversionState& state, const VectorXc& chi,
                               bool cross) {
    ObjectiveParts p;
    const MatrixXc chi_e = times_contrast(chi, state.e);
    p.state_sq = (chi_e - state.j).squaredNorm();
    p.incident_sq = times_contrast(chi, problem.incident).squaredNorm();
    if (cross) p.cross_sq = (problem.data - problem.operators().phi * chi_e).squaredNorm();
    return p;
}

Real require_tv(const TvFactor* tv, const VectorXc& chi) {
    if (!tv) throw Error(ErrorCode::ConfigInvalid, "MR-CSI contrast objective needs a TV factor");
    return tv->value(chi);
}

}  // namespace

Real contrast_objective(const InversionProblem& problem, const InversionState& state, const VectorXc& chi,
                        const InversionOptions& options, const TvFactor* tv) {
    if (closed_form_chi(options)) return contrast_objective_frozen(problem, state, chi, options, tv);
    const bool cross = uses_cross_term(options);
    const ObjectiveParts p = objective_parts(problem, state, chi, cross);
    const Real ratio =
        p.incident_sq > 0.0 ? p.state_sq / p.incident_sq : p.state_sq / problem.incident.squaredNorm();
    if (options.variant == Variant::MRCSI)
        return (state.eta_s * state.rho.squaredNorm() + ratio) * require_tv(tv, chi);
    return ratio + state.eta_s * p.cross_sq;
}

Real contrast_objective_frozen(const InversionProblem& problem, const InversionState& state, const VectorXc& chi,
                               const InversionOptions& options, const TvFactor* tv) {
    const bool cross = uses_cross_term(options);
    const ObjectiveParts p = objective_parts(problem, state, chi, cross);
    const Real state_term = state.eta_d * p.state_sq;
    if (options.variant == Variant::MRCSI)
        return (state.eta_s * state.rho.squaredNorm() + state_term) * require_tv(tv, chi);
    return state_term + state.eta_s * p.cross_sq;
}

VectorXc gradient_contrast_raw(const InversionProblem& problem, const InversionState& state,
                               const InversionOptions& options, const TvFactor* tv) {
    const MatrixXc conj_e = state.e.conjugate();
    VectorXc raw = 2.0 * state.eta_d * conj_e.cwiseProduct(state.gamma).rowwise().sum();
    if (uses_cross_term(options)) {
        const MatrixXc back = problem.operators().phi.adjoint() * state.xi;
        raw -= 2.0 * state.eta_s * conj_e.cwiseProduct(back).rowwise().sum();
    }
    if (options.variant == Variant::MRCSI) {
        const Real c_data = state.eta_s * state.rho.squaredNorm() + state.eta_d * state.gamma.squaredNorm();
        raw = raw * require_tv(tv, state.chi) + c_data * tv->gradient(state.chi);
    }
    return raw;
}

VectorXc gradient_contrast(const InversionProblem& problem, const InversionState& state,
                           const InversionOptions& options, const TvFactor* tv) {
    const VectorXc raw = gradient_contrast_raw(problem, state, options, tv);
    const VectorXr w = field_energy(state.e);
    const DomainIndex& index = problem.operators().index;
    if (index.components == 1) return raw.cwiseQuotient(w.cast<Complex>());
    const int nc = index.num_cells();
    const VectorXc tied = (raw.head(nc) + raw.tail(nc)).cwiseQuotient((w.head(nc) + w.tail(nc)).cast<Complex>());
    VectorXc g(raw.size());
    g << tied, tied;
    return g;
}

ContrastStep step_size_chi(const InversionProblem& problem, const InversionState& state, const VectorXc& nu,
                           const VectorXc& g, const InversionOptions& options, const TvFactor* tv) {
    ContrastStep out;
    const Real nu_sq = nu.squaredNorm();
    const bool frozen = closed_form_chi(options);
    const bool cross = uses_cross_term(options);
    const bool mr = options.variant == Variant::MRCSI;
    if (mr && !tv) throw Error(ErrorCode::ConfigInvalid, "MR-CSI line search needs a TV factor");

    // every term is a quadratic (or ratio of quadratics) in beta
    const MatrixXc y1 = times_contrast(nu, state.e);
    const MatrixXc z0 = times_contrast(state.chi, problem.incident);
    const MatrixXc z1 = times_contrast(nu, problem.incident);
    const std::array<Real, 3> n{state.gamma.squaredNorm(), 2.0 * real_inner(state.gamma, y1), y1.squaredNorm()};
    const std::array<Real, 3> d{z0.squaredNorm(), 2.0 * real_inner(z0, z1), z1.squaredNorm()};
    std::array<Real, 3> x{0.0, 0.0, 0.0};
    if (cross) {
        const MatrixXc& phi = problem.operators().phi;
        const MatrixXc r0 = problem.data - phi * times_contrast(state.chi, state.e);
        const MatrixXc r1 = phi * y1;
        x = {r0.squaredNorm(), -2.0 * real_inner(r0, r1), r1.squaredNorm()};
    }
    const std::array<Real, 3> t = mr ? tv->along(state.chi, nu) : std::array<Real, 3>{1.0, 0.0, 0.0};
    const Real rho_term = state.eta_s * state.rho.squaredNorm();
    const Real inv_incident = 1.0 / problem.incident.squaredNorm();

    auto quad = [](const std::array<Real, 3>& q, Real b) { return q[0] + b * (q[1] + b * q[2]); };
    auto objective = [&](Real b) {
        const Real num = quad(n, b);
        if (frozen) return state.eta_d * num;
        const Real den = quad(d, b);
        const Real ratio = den > 0.0 ? num / den : num * inv_incident;
        if (mr) return (rho_term + ratio) * quad(t, b);
        return ratio + state.eta_s * quad(x, b);
    };

    out.objective_before = objective(0.0);
    out.objective_after = out.objective_before;
    if (!(nu_sq > 0.0)) return out;

    const Real g_norm = g.size() ? g.norm() : 0.0;
    Real step = g_norm > 0.0 ? g_norm / (nu_sq + std::numeric_limits<Real>::min()) : 1.0 / std::sqrt(nu_sq);
    if (!std::isfinite(step) || step <= 0.0) step = 1.0 / std::sqrt(nu_sq);

    const auto br = bracket_minimum<Real>(objective, out.objective_before, step, options.brent_max_evaluations);
    out.evaluations = br.evaluations;
    if (!br.found) {
        out.bracket_failed = true;
        return out;
    }
    const auto m = brent_minimize<Real>(objective, br, options.brent_tolerance, options.brent_max_evaluations,
                                        1e-12 * step);
    out.evaluations += m.evaluations;
    if (m.fx <= out.objective_before) {
        out.beta = m.x;
        out.objective_after = m.fx;
    }
    return out;
}

ContrastMap contrast_map(const InversionProblem& problem, const VectorXc& chi) {
    const OperatorSet& ops = problem.operators();
    return ContrastMap::from_unknowns(ops.index, ops.grid.delta, chi);
}

namespace {

std::string state_dump(const InversionState& s, const IterationReport& r) {
    std::ostringstream os;
    os << "n=" << s.n << " eta_s=" << s.eta_s << " eta_d=" << s.eta_d << " |j|=" << s.j.norm()
       << " |e|=" << s.e.norm() << " |chi|=" << s.chi.norm() << " alpha=[" << r.alpha_min << ", " << r.alpha_max
       << "] beta=" << r.chi_step.beta << " cost=(" << r.cost.data_term << ", " << r.cost.state_term << ", "
       << r.cost.cross_term << ")";
    return os.str();
}

}  // namespace

IterationReport iterate(const InversionProblem& problem, InversionState& state, const InversionOptions& options) {
    const auto t0 = std::chrono::steady_clock::now();
    const OperatorSet& ops = problem.operators();
    IterationReport rep;

    // contrast-source phase
    rep.cost_before_j = cost(state, options).total;
    state.g_prev = std::move(state.g);
    state.g = gradient_contrast_source(problem, state, options);
    rep.j_restarted = polak_ribiere_direction(state.g, state.g_prev, state.nu).restarted;
    const SourceStep step = step_size_j(problem, state, state.nu, state.g, options);
    update_contrast_source(state, step.alpha, state.nu, step.e_nu);
    rep.alpha_min = step.alpha.size() ? step.alpha.minCoeff() : 0.0;
    rep.alpha_max = step.alpha.size() ? step.alpha.maxCoeff() : 0.0;
    compute_residuals(problem, state, options);
    rep.cost_after_j = cost(state, options).total;

    // contrast phase
    if (closed_form_chi(options)) {
        state.chi = closed_form_contrast(state.j, state.e);
    } else {
        std::optional<TvFactor> tv;
        if (options.variant == Variant::MRCSI) {
            // state error over the squared mesh size, in the units of |grad chi|^2
            state.delta_sq = state.eta_d * state.gamma.squaredNorm() / (ops.grid.delta * ops.grid.delta);
            tv.emplace(ops.index, ops.grid.delta, state.chi, state.delta_sq);
        }
        const TvFactor* tvp = tv ? &*tv : nullptr;
        state.g_chi_prev = std::move(state.g_chi);
        state.g_chi = gradient_contrast(problem, state, options, tvp);
        rep.chi_restarted = polak_ribiere_direction(state.g_chi, state.g_chi_prev, state.nu_chi).restarted;
        rep.chi_step = step_size_chi(problem, state, state.nu_chi, state.g_chi, options, tvp);
        state.chi += rep.chi_step.beta * state.nu_chi;
    }
    apply_contrast_constraints(state.chi, ops.index, options.enforce_constraints);
    ++state.n;

    refresh_eta_d(problem, state);
    compute_residuals(problem, state, options);
    rep.cost = cost(state, options);
    rep.eta_d_fallback = state.eta_d_fallback;
    if (!std::isfinite(rep.cost.total) || !std::isfinite(rep.cost_after_j))
        throw Error(ErrorCode::NumericFailure, "non-finite cost at iteration " + std::to_string(state.n) + ": " +
                                                   state_dump(state, rep));
    rep.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return rep;
}

RunResult run(const InversionProblem& problem, const InversionOptions& options, const RunHooks& hooks) {
    if (options.max_iterations < 0) throw Error(ErrorCode::ConfigInvalid, "max_iterations must be >= 0");
    if (options.brent_max_evaluations < 3) throw Error(ErrorCode::ConfigInvalid, "Brent needs at least 3 evaluations");
    if (!(options.brent_tolerance > 0.0)) throw Error(ErrorCode::ConfigInvalid, "Brent tolerance must be positive");
    if (hooks.checkpoint_every <= 0 && !hooks.checkpoint_dir.empty())
        throw Error(ErrorCode::ConfigInvalid, "checkpoint interval must be positive");

    RunResult r;
    auto with_err = [&](CostBreakdown c, const VectorXc& chi) {
        if (hooks.truth) c.err = reconstruction_error(contrast_map(problem, chi), *hooks.truth);
        return c;
    };

    const auto t0 = std::chrono::steady_clock::now();
    r.state = initialize(problem, options);
    r.init_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    r.eta_d_fallbacks += r.state.eta_d_fallback ? 1 : 0;
    r.history.push_back(with_err(cost(r.state, options), r.state.chi));
    if (!hooks.checkpoint_dir.empty()) std::filesystem::create_directories(hooks.checkpoint_dir);

    while (r.state.n < options.max_iterations && r.history.back().total > options.cost_tolerance) {
        IterationReport rep = iterate(problem, r.state, options);
        rep.cost = with_err(rep.cost, r.state.chi);
        r.seconds += rep.seconds;
        r.bracket_failures += rep.chi_step.bracket_failed ? 1 : 0;
        r.eta_d_fallbacks += rep.eta_d_fallback ? 1 : 0;
        r.history.push_back(rep.cost);
        if (hooks.on_iteration) hooks.on_iteration(rep);
        r.reports.push_back(std::move(rep));
        if (!hooks.checkpoint_dir.empty() && r.state.n % hooks.checkpoint_every == 0) {
            char name[32];
            std::snprintf(name, sizeof(name), "checkpoint_%06d.bin", r.state.n);
            write_checkpoint(hooks.checkpoint_dir / name, r.state, options.variant);
        }
    }
    r.contrast = contrast_map(problem, r.state.chi);
    return r;
}

namespace {

constexpr Magic kCheckpointMagic = {'C', 'C', 'S', 'I', 'C', 'K', 'P', '\0'};
constexpr std::uint32_t kCheckpointVersion = 1;

using RowMajorC = Eigen::Matrix<Complex, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

void put_matrix(std::ostream& out, const MatrixXc& m) {
    write_pod(out, static_cast<std::uint64_t>(m.rows()));
    write_pod(out, static_cast<std::uint64_t>(m.cols()));
    const RowMajorC rows = m;
    out.write(reinterpret_cast<const char*>(rows.data()), static_cast<std::streamsize>(rows.size() * sizeof(Complex)));
}

MatrixXc get_matrix(std::istream& in) {
    std::uint64_t rows = 0, cols = 0;
    if (!read_pod(in, rows) || !read_pod(in, cols)) throw Error(ErrorCode::Io, "truncated checkpoint");
    RowMajorC m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    in.read(reinterpret_cast<char*>(m.data()), static_cast<std::streamsize>(m.size() * sizeof(Complex)));
    if (!in) throw Error(ErrorCode::Io, "truncated checkpoint");
    return m;
}

}  // namespace

void write_checkpoint(const std::filesystem::path& path, const InversionState& s, Variant variant) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorCode::Io, "cannot write checkpoint " + path.string());
    out.write(kCheckpointMagic.data(), kCheckpointMagic.size());
    write_pod(out, kCheckpointVersion);
    write_pod(out, static_cast<std::uint32_t>(variant));
    write_pod(out, static_cast<std::int32_t>(s.n));
    write_pod(out, s.eta_s);
    write_pod(out, s.eta_d);
    write_pod(out, s.delta_sq);
    for (const MatrixXc* m : {&s.j, &s.e, &s.g, &s.nu}) put_matrix(out, *m);
    for (const VectorXc* v : {&s.chi, &s.g_chi, &s.nu_chi}) put_matrix(out, *v);
    if (!out) throw Error(ErrorCode::Io, "short write on " + path.string());
}

InversionState read_checkpoint(const std::filesystem::path& path, Variant& variant) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::Io, "cannot open checkpoint " + path.string());
    Magic magic{};
    in.read(magic.data(), magic.size());
    std::uint32_t version = 0, v = 0;
    std::int32_t n = 0;
    InversionState s;
    if (!in || magic != kCheckpointMagic || !read_pod(in, version) || version != kCheckpointVersion ||
        !read_pod(in, v) || v > 2 || !read_pod(in, n) || !read_pod(in, s.eta_s) || !read_pod(in, s.eta_d) ||
        !read_pod(in, s.delta_sq))
        throw Error(ErrorCode::Io, path.string() + " is not a version-1 checkpoint");
    variant = static_cast<Variant>(v);
    s.n = n;
    for (MatrixXc* m : {&s.j, &s.e, &s.g, &s.nu}) *m = get_matrix(in);
    for (VectorXc* vec : {&s.chi, &s.g_chi, &s.nu_chi}) *vec = get_matrix(in);
    return s;
}

std::string format_history_csv(const std::vector<CostBreakdown>& history) {
    std::ostringstream os;
    os << "n,data_term,state_term,cross_term,total,err\n";
    char buf[160];
    for (const auto& c : history) {
        std::snprintf(buf, sizeof(buf), "%d,%.17g,%.17g,%.17g,%.17g,", c.n, c.data_term, c.state_term, c.cross_term,
                      c.total);
        os << buf;
        if (c.err) {
            std::snprintf(buf, sizeof(buf), "%.17g", *c.err);
            os << buf;
        }
        os << "\n";
    }
    return os.str();
}

void write_history_csv(const std::filesystem::path& path, const std::vector<CostBreakdown>& history) {
    std::ofstream out(path);
    if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
    out << format_history_csv(history);
    if (!out) throw Error(ErrorCode::Io, "short write on " + path.string());
}

}  // namespace ccsi

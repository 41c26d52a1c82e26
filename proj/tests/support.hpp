#pragma once

#include <cmath>
#include <random>

#include "ccsi/forward.hpp"
#include "ccsi/inversion.hpp"
#include "ccsi/operators.hpp"
#include "ccsi/scene.hpp"

namespace ccsi::testing {

// Free-space 2-D Green's function for (-lap - k^2) G = delta, e^{iwt} convention.
inline Complex hankel2(int order, Real x) {
    return {std::cyl_bessel_j(static_cast<Real>(order), x), -std::cyl_neumann(static_cast<Real>(order), x)};
}

inline MatrixXc random_matrix(std::mt19937_64& rng, Eigen::Index rows, Eigen::Index cols) {
    std::normal_distribution<Real> n(0.0, 1.0);
    MatrixXc m(rows, cols);
    for (Eigen::Index c = 0; c < cols; ++c)
        for (Eigen::Index r = 0; r < rows; ++r) m(r, c) = {n(rng), n(rng)};
    return m;
}

inline VectorXc random_vector(std::mt19937_64& rng, Eigen::Index n) { return random_matrix(rng, n, 1); }

/// Small inversion case: D is 16 x 16 cells of 50 mm at 300 MHz, 8 stations on a 0.8 m circle,
/// an offset disk of contrast `chi` inside D. Data come from the same grid (matched) or from a
/// refined grid.
struct SmallCase {
    static constexpr Real kFreq = 3e8;
    static constexpr Real kDelta = 0.05;

    GridSpec grid;
    Rect domain{-0.4, 0.4, -0.4, 0.4};
    std::vector<Point> stations;
    Scene scene;
    RasterizedScene truth;
    OperatorSet ops;
    MatrixXc incident;
    MatrixXc data;

    SmallCase(Polarization pol, Complex chi, bool matched = true, int stations_count = 8) {
        const Real omega_eps0 = angular_frequency(kFreq) * constants::kVacuumPermittivity;
        scene.eps_rel_object = chi.real() + 1.0;
        scene.sigma_object = -chi.imag() * omega_eps0;
        scene.shapes = {Shape::disk({0.08, -0.05}, 0.22)};
        grid = build_grid({-1.5, 1.5, -1.5, 1.5}, kDelta, 10, pol, kFreq, 1.0);
        stations = circular_stations(stations_count, 0.8);
        ops = build_operator_set(grid, MediumMap::background(grid), kFreq, domain, stations);
        incident = incident_fields(ops);
        truth = rasterize(scene, grid, ops.index, kFreq);
        if (matched)
            data = synthesize_data_on_grid(truth.medium, grid, kFreq, domain, stations);
        else
            data = synthesize_data(scene, grid, kFreq, domain, stations);
    }

    InversionProblem problem() const { return InversionProblem(ops, incident, data); }

    /// Contrast per domain unknown from the rasterized medium.
    VectorXc true_contrast() const { return truth.contrast.values; }

    /// Total fields of the true medium on D, N_D x P (exact forward solves on this grid).
    MatrixXc true_total_fields() const {
        const LinearSolver object(assemble_stiffness(grid, truth.medium, kFreq));
        return ops.domain_selector.cast<Complex>() * object.solve(source_matrix(grid, stations, kFreq));
    }
};

/// A state away from every fixed point: random j and chi, consistent e.
inline InversionState random_state(const InversionProblem& problem, const InversionOptions& options,
                                   std::uint64_t seed, Real chi_scale = 0.5) {
    std::mt19937_64 rng(seed);
    const MatrixXc j0 = initialize(problem, options).j;
    MatrixXc j = j0 + 0.3 * j0.norm() / std::sqrt(static_cast<Real>(j0.size())) *
                          random_matrix(rng, j0.rows(), j0.cols());
    VectorXc chi = chi_scale * random_vector(rng, problem.domain_size());
    return seed_state(problem, chi, j, options);
}

}  // namespace ccsi::testing

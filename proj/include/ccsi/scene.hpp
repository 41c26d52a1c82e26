#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "ccsi/grid.hpp"
#include "ccsi/selectors.hpp"
#include "ccsi/stiffness.hpp"
#include "ccsi/types.hpp"

namespace ccsi {

/// Disk when r_inner == 0, annulus otherwise.
struct Shape {
    Point center;
    Real r_inner = 0.0;
    Real r_outer = 0.0;
    std::optional<Real> eps_rel;  // overrides the scene value
    std::optional<Real> sigma;

    static Shape disk(Point c, Real r) { return {c, 0.0, r, {}, {}}; }
    static Shape annulus(Point c, Real r_in, Real r_out) { return {c, r_in, r_out, {}, {}}; }

    bool contains(Point p) const;
};

/// Objects in a free-space background; later shapes win where they overlap.
struct Scene {
    std::vector<Shape> shapes;
    Real eps_rel_object = 1.0;
    Real sigma_object = 0.0;

    Real max_eps() const;
    bool empty() const { return shapes.empty(); }
    void validate() const;
};

/// Two disks of radius 0.2 m at (+-0.3, 0.6) and an annulus at (0, -0.2) with radii 0.3/0.6 m.
Scene austria_scene(Real eps_rel, Real sigma);

/// chi = (eps_rel - 1) - i sigma / (omega eps0)
Complex contrast_of(Real eps_rel, Real sigma, Real freq_hz);

/// Contrast on the inversion domain: per field unknown (both TE components) plus one
/// cell-centered representative per cell.
struct ContrastMap {
    int nx = 0, ny = 0;
    int components = 1;
    Real delta = 0.0;
    VectorXc values;  // per domain unknown
    VectorXc cells;   // per cell, row-major in (i, j) with i fastest

    int num_cells() const { return nx * ny; }
    /// Representative = component average.
    static ContrastMap from_unknowns(const DomainIndex& index, Real delta, const VectorXc& values);
};

struct RasterizedScene {
    MediumMap medium;
    ContrastMap contrast;
};

/// Center-point membership per field sample (medium) and per domain cell (representative).
MediumMap rasterize_medium(const Scene& scene, const GridSpec& grid);
RasterizedScene rasterize(const Scene& scene, const GridSpec& grid, const DomainIndex& index, Real freq_hz);

/// ||chi - chi_hat||^2 / ||chi||^2 over the cell representatives.
Real reconstruction_error(const ContrastMap& estimate, const ContrastMap& truth);

/// Scene file: key = value lines.
///   preset = austria            (optional; shapes below are appended)
///   eps_rel = 2.0
///   sigma_s_per_m = 0.01
///   disk = x_m y_m radius_m [eps_rel sigma_s_per_m]
///   annulus = x_m y_m r_inner_m r_outer_m [eps_rel sigma_s_per_m]
Scene parse_scene(const std::string& text, const std::string& origin = "<scene>");
Scene load_scene(const std::filesystem::path& path);
std::string format_scene(const Scene& scene);

}  // namespace ccsi

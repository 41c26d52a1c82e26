#pragma once

#include <filesystem>
#include <string>

#include "ccsi/scene.hpp"
#include "ccsi/selectors.hpp"
#include "ccsi/types.hpp"

namespace ccsi {

/// Real cell values over the inversion domain; (i, j) with i along x, j along y.
struct RealGrid {
    int nx = 0, ny = 0;
    Real x_min = 0.0, y_min = 0.0;  // corner of cell (0, 0)
    Real delta = 0.0;
    VectorXr values;  // i + nx * j
    Real at(int i, int j) const { return values[i + nx * j]; }
};

/// Lower-left corner of the inversion domain on `grid`.
Point domain_origin(const GridSpec& grid, const DomainIndex& index);

/// Re chi + 1
RealGrid permittivity_grid(const ContrastMap& chi, Point origin);
/// -omega eps0 Im chi, S/m
RealGrid conductivity_grid(const ContrastMap& chi, Point origin, Real freq_hz);

// Grid CSV: '#' header lines with nx, ny, x_min_m, y_min_m, delta_m, then ny rows of nx
// comma-separated values, top row = largest y (image orientation), %.17g.
std::string format_grid_csv(const RealGrid& g, const std::string& quantity);
void write_grid_csv(const std::filesystem::path& path, const RealGrid& g, const std::string& quantity);
RealGrid parse_grid_csv(const std::string& text, const std::string& origin = "<grid>");

/// 8-bit level of `v` in the window [lo, hi]: round(255 (v - lo) / (hi - lo)), clamped.
unsigned char gray_level(Real v, Real lo, Real hi);

/// Binary PGM (P5), top row = largest y. The window is recorded in a comment line
/// "# scale <lo> <hi>" so the map can be read back into physical units.
std::string format_pgm(const RealGrid& g, Real lo, Real hi);
void write_pgm(const std::filesystem::path& path, const RealGrid& g, Real lo, Real hi);

}  // namespace ccsi

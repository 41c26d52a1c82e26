#pragma once

#include <vector>

#include "ccsi/grid.hpp"
#include "ccsi/types.hpp"

namespace ccsi {

/// Rectangular block of grid cells forming the inversion domain D, plus the global indices of
/// the field unknowns it owns (cell-major; TE lists all Ex samples, then all Ey samples).
struct DomainIndex {
    int i0 = 0, j0 = 0;  // first cell
    int nx = 0, ny = 0;  // cell counts
    int components = 1;
    std::vector<int> unknowns;

    int num_cells() const { return nx * ny; }
    int size() const { return static_cast<int>(unknowns.size()); }
    /// Local cell index for local unknown `k`.
    int cell_of(int k) const { return k % num_cells(); }
};

struct InterpolationWeight {
    int index;
    Real weight;
};

/// Bilinear stencil over the samples of one field component (nonzero weights only).
/// `offset_x`/`offset_y` are the sample offsets within a cell in units of delta.
std::vector<InterpolationWeight> bilinear_stencil(const GridSpec& grid, Point p, Real offset_x, Real offset_y,
                                                  int index_base);

struct Selectors {
    SparseMatrixXr receivers;  // M_S, M x N
    SparseMatrixXr domain;     // M_D, N_D x N
    DomainIndex index;
};

/// Receiver interpolation rows (one per station for TM; Ex and Ey interleaved for TE) and
/// the 0/1 restriction onto the unknowns owned by cells whose centers lie in `domain`.
Selectors build_selectors(const GridSpec& grid, const Rect& domain, const std::vector<Point>& stations);

DomainIndex build_domain_index(const GridSpec& grid, const Rect& domain);

/// `count` stations evenly spaced on a circle, first one on the +x axis.
std::vector<Point> circular_stations(int count, Real radius, Point center = {});

/// Right-hand side of a unit line source at `station`: a bilinearly spread z-current for TM,
/// a z-directed magnetic line current (curl of a spread Hz point) for TE.
VectorXc line_source(const GridSpec& grid, Point station, Real freq_hz);

}  // namespace ccsi

#pragma once

#include "ccsi/types.hpp"

namespace ccsi {

/// Uniform 2-D staggered grid with PML bands inside the outer extent.
///
/// Field sample layout (i in [0, nx), j in [0, ny)):
///   TM: Ez(i, j) at the cell center (x_min + (i+1/2) delta, y_min + (j+1/2) delta).
///   TE: Ex(i, j) at (x_min + (i+1/2) delta, y_min + j delta) and
///       Ey(i, j) at (x_min + i delta, y_min + (j+1/2) delta).
/// Unknown ordering: TM k = i + nx*j; TE puts the Ex block first, then Ey.
struct GridSpec {
    Rect extent;
    Real delta = 0.0;
    int pml_cells = 0;
    Polarization polarization = Polarization::TM;
    int nx = 0;
    int ny = 0;

    int num_cells() const { return nx * ny; }
    int components() const { return polarization == Polarization::TM ? 1 : 2; }
    int num_unknowns() const { return components() * num_cells(); }

    int cell_index(int i, int j) const { return i + nx * j; }
    int unknown_index(int component, int i, int j) const { return component * num_cells() + cell_index(i, j); }

    Point cell_center(int i, int j) const {
        return {extent.x_min + (i + 0.5) * delta, extent.y_min + (j + 0.5) * delta};
    }

    /// Position of unknown `k`.
    Point sample_position(int k) const;
    /// 0 for Ez/Ex, 1 for Ey.
    int component_of(int k) const { return k / num_cells(); }

    /// Interior region (extent minus the PML bands).
    Rect interior() const;
    bool in_pml(Point p) const;
};

/// Builds a grid over `extent` (re-centered so the extent is a whole number of cells) and
/// checks the FDFD accuracy rule delta <= lambda0 / (15 sqrt(max_eps)).
GridSpec build_grid(const Rect& extent, Real delta, int pml_cells, Polarization polarization, Real freq_hz,
                    Real max_eps);

/// Largest cell size admitted by the accuracy rule.
Real max_cell_size(Real freq_hz, Real max_eps);

/// Same extent and PML thickness with every cell split `factor` times per axis.
GridSpec refine_grid(const GridSpec& grid, int factor);

}  // namespace ccsi

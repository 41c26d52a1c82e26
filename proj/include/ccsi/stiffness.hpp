#pragma once

#include "ccsi/grid.hpp"
#include "ccsi/types.hpp"

namespace ccsi {

/// Material samples on the field unknowns of a grid (one entry per unknown, so TE edge
/// samples carry the value at their own coordinates). Relative permeability is fixed at 1.
struct MediumMap {
    VectorXr eps_rel;
    VectorXr sigma;  // S/m

    static MediumMap background(const GridSpec& grid, Real eps_rel = 1.0, Real sigma = 0.0);
    Real max_eps() const { return eps_rel.size() ? eps_rel.maxCoeff() : 1.0; }
    /// eps_rel - i sigma / (omega eps0)
    VectorXc complex_permittivity(Real freq_hz) const;
};

struct PmlOptions {
    int grading_order = 3;
    Real target_reflection = 1e-8;
};

/// Complex coordinate-stretching factors s(x) = 1 - i sigma(x)/(omega eps0) along each axis.
class PmlStretch {
public:
    PmlStretch(const GridSpec& grid, Real freq_hz, const PmlOptions& options = {});
    Complex sx(Real x) const { return factor(x, lo_x_, hi_x_); }
    Complex sy(Real y) const { return factor(y, lo_y_, hi_y_); }

private:
    Complex factor(Real coord, Real lo, Real hi) const;

    Real lo_x_, hi_x_, lo_y_, hi_y_;
    Real thickness_;
    Real peak_;
    int order_;
};

/// FDFD stiffness matrix with omega^2 absorbed, normalized so that A e_sct = chi e
/// (equivalently (curl curl / k0^2 - eps) in symmetrized stretched coordinates).
/// TM: 5-point Helmholtz stencil on Ez. TE: Yee curl-curl on (Ex, Ey).
/// The PML scaling is symmetrized, so A is complex symmetric.
SparseMatrixXc assemble_stiffness(const GridSpec& grid, const MediumMap& medium, Real freq_hz,
                                  const PmlOptions& pml = {});

/// Plain discrete curl (Ex, Ey) -> Hz on cell centers, entries +-1/delta. TE only.
SparseMatrixXr discrete_curl(const GridSpec& grid);

}  // namespace ccsi

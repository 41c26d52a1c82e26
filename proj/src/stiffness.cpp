#include "ccsi/stiffness.hpp"

#include <cmath>
#include <vector>

namespace ccsi {

MediumMap MediumMap::background(const GridSpec& grid, Real eps_rel, Real sigma) {
    MediumMap m;
    m.eps_rel = VectorXr::Constant(grid.num_unknowns(), eps_rel);
    m.sigma = VectorXr::Constant(grid.num_unknowns(), sigma);
    return m;
}

VectorXc MediumMap::complex_permittivity(Real freq_hz) const {
    const Real scale = 1.0 / (angular_frequency(freq_hz) * constants::kVacuumPermittivity);
    VectorXc eps(eps_rel.size());
    for (Eigen::Index k = 0; k < eps.size(); ++k) eps[k] = Complex(eps_rel[k], -sigma[k] * scale);
    return eps;
}

PmlStretch::PmlStretch(const GridSpec& grid, Real freq_hz, const PmlOptions& options)
    : order_(options.grading_order) {
    const Rect in = grid.interior();
    lo_x_ = in.x_min;
    hi_x_ = in.x_max;
    lo_y_ = in.y_min;
    hi_y_ = in.y_max;
    thickness_ = grid.pml_cells * grid.delta;
    // sigma_max / (omega eps0) for a free-space background.
    peak_ = (order_ + 1) * std::log(1.0 / options.target_reflection) / (2.0 * wavenumber(freq_hz) * thickness_);
}

Complex PmlStretch::factor(Real coord, Real lo, Real hi) const {
    Real depth = 0.0;
    if (coord < lo) depth = lo - coord;
    else if (coord > hi) depth = coord - hi;
    if (depth <= 0.0) return {1.0, 0.0};
    return {1.0, -peak_ * std::pow(depth / thickness_, order_)};
}

namespace {

void check_medium(const GridSpec& grid, const MediumMap& medium) {
    if (medium.eps_rel.size() != grid.num_unknowns() || medium.sigma.size() != grid.num_unknowns())
        throw Error(ErrorCode::DimensionMismatch, "medium map does not match the grid unknown count");
}

SparseMatrixXc assemble_tm(const GridSpec& g, const VectorXc& eps, const PmlStretch& pml, Real k0) {
    const Real inv = 1.0 / (k0 * k0 * g.delta * g.delta);
    std::vector<TripletC> t;
    t.reserve(static_cast<size_t>(g.num_cells()) * 5);

    auto couple = [&](int a, int b, Complex w) {
        // a is always inside; b < 0 denotes the zero ghost beyond the outer boundary
        t.emplace_back(a, a, w);
        if (b >= 0) {
            t.emplace_back(b, b, w);
            t.emplace_back(a, b, -w);
            t.emplace_back(b, a, -w);
        }
    };

    for (int j = 0; j < g.ny; ++j) {
        const Real yc = g.extent.y_min + (j + 0.5) * g.delta;
        for (int i = 0; i <= g.nx; ++i) {
            const Real xf = g.extent.x_min + i * g.delta;
            const Complex w = inv * pml.sy(yc) / pml.sx(xf);
            if (i == 0) couple(g.cell_index(0, j), -1, w);
            else if (i == g.nx) couple(g.cell_index(g.nx - 1, j), -1, w);
            else couple(g.cell_index(i, j), g.cell_index(i - 1, j), w);
        }
    }
    for (int i = 0; i < g.nx; ++i) {
        const Real xc = g.extent.x_min + (i + 0.5) * g.delta;
        for (int j = 0; j <= g.ny; ++j) {
            const Real yf = g.extent.y_min + j * g.delta;
            const Complex w = inv * pml.sx(xc) / pml.sy(yf);
            if (j == 0) couple(g.cell_index(i, 0), -1, w);
            else if (j == g.ny) couple(g.cell_index(i, g.ny - 1), -1, w);
            else couple(g.cell_index(i, j), g.cell_index(i, j - 1), w);
        }
    }
    for (int k = 0; k < g.num_unknowns(); ++k) {
        const Point p = g.sample_position(k);
        t.emplace_back(k, k, -pml.sx(p.x) * pml.sy(p.y) * eps[k]);
    }

    SparseMatrixXc a(g.num_unknowns(), g.num_unknowns());
    a.setFromTriplets(t.begin(), t.end());
    a.makeCompressed();
    return a;
}

SparseMatrixXc assemble_te(const GridSpec& g, const VectorXc& eps, const PmlStretch& pml, Real k0) {
    const int n = g.num_unknowns();
    const int nc = g.num_cells();
    const SparseMatrixXc curl = discrete_curl(g).cast<Complex>();

    // T: stretch along each component's own axis; P: product of both stretches at the sample.
    Eigen::DiagonalMatrix<Complex, Eigen::Dynamic> tangential(n);
    VectorXc mass(n);
    for (int k = 0; k < n; ++k) {
        const Point p = g.sample_position(k);
        tangential.diagonal()[k] = g.component_of(k) == 0 ? pml.sx(p.x) : pml.sy(p.y);
        mass[k] = pml.sx(p.x) * pml.sy(p.y) * eps[k];
    }
    Eigen::DiagonalMatrix<Complex, Eigen::Dynamic> center(nc);
    for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i) {
            const Point c = g.cell_center(i, j);
            center.diagonal()[g.cell_index(i, j)] = 1.0 / (pml.sx(c.x) * pml.sy(c.y) * k0 * k0);
        }

    const SparseMatrixXc scaled_curl = curl * tangential;
    SparseMatrixXc a = SparseMatrixXc(scaled_curl.transpose()) * center * scaled_curl;
    SparseMatrixXc sym = 0.5 * (a + SparseMatrixXc(a.transpose()));
    for (int k = 0; k < n; ++k) sym.coeffRef(k, k) -= mass[k];
    sym.prune(Complex(0.0, 0.0));
    sym.makeCompressed();
    return sym;
}

}  // namespace

SparseMatrixXr discrete_curl(const GridSpec& g) {
    if (g.polarization != Polarization::TE) throw Error(ErrorCode::DimensionMismatch, "discrete curl is TE only");
    const Real h = 1.0 / g.delta;
    std::vector<TripletR> t;
    t.reserve(static_cast<size_t>(g.num_cells()) * 4);
    for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i) {
            const int c = g.cell_index(i, j);
            t.emplace_back(c, g.unknown_index(1, i, j), -h);
            if (i + 1 < g.nx) t.emplace_back(c, g.unknown_index(1, i + 1, j), h);
            t.emplace_back(c, g.unknown_index(0, i, j), h);
            if (j + 1 < g.ny) t.emplace_back(c, g.unknown_index(0, i, j + 1), -h);
        }
    SparseMatrixXr curl(g.num_cells(), g.num_unknowns());
    curl.setFromTriplets(t.begin(), t.end());
    return curl;
}

SparseMatrixXc assemble_stiffness(const GridSpec& grid, const MediumMap& medium, Real freq_hz, const PmlOptions& pml) {
    check_medium(grid, medium);
    const PmlStretch stretch(grid, freq_hz, pml);
    const VectorXc eps = medium.complex_permittivity(freq_hz);
    const Real k0 = wavenumber(freq_hz);
    return grid.polarization == Polarization::TM ? assemble_tm(grid, eps, stretch, k0)
                                                 : assemble_te(grid, eps, stretch, k0);
}

}  // namespace ccsi

#include "ccsi/selectors.hpp"

#include <cmath>
#include <sstream>

#include "ccsi/stiffness.hpp"

namespace ccsi {

std::vector<InterpolationWeight> bilinear_stencil(const GridSpec& grid, Point p, Real offset_x, Real offset_y,
                                                  int index_base) {
    const Real u = (p.x - grid.extent.x_min) / grid.delta - offset_x;
    const Real v = (p.y - grid.extent.y_min) / grid.delta - offset_y;
    int i0 = static_cast<int>(std::floor(u));
    int j0 = static_cast<int>(std::floor(v));
    Real tu = u - i0;
    Real tv = v - j0;
    // snap samples that sit on a node to exactly one weight
    constexpr Real kSnap = 1e-10;
    if (tu > 1.0 - kSnap) { ++i0; tu = 0.0; }
    if (tv > 1.0 - kSnap) { ++j0; tv = 0.0; }
    if (tu < kSnap) tu = 0.0;
    if (tv < kSnap) tv = 0.0;

    std::vector<InterpolationWeight> out;
    const Real wu[2] = {1.0 - tu, tu};
    const Real wv[2] = {1.0 - tv, tv};
    for (int b = 0; b < 2; ++b)
        for (int a = 0; a < 2; ++a) {
            const Real w = wu[a] * wv[b];
            if (w == 0.0) continue;
            const int i = i0 + a;
            const int j = j0 + b;
            if (i < 0 || i >= grid.nx || j < 0 || j >= grid.ny) {
                std::ostringstream os;
                os << "point (" << p.x << ", " << p.y << ") interpolates outside the grid";
                throw Error(ErrorCode::StationInPml, os.str());
            }
            out.push_back({index_base + grid.cell_index(i, j), w});
        }
    return out;
}

DomainIndex build_domain_index(const GridSpec& grid, const Rect& domain) {
    DomainIndex d;
    d.components = grid.components();
    const Real h = grid.delta;
    // cells whose centers fall inside the closed rectangle
    const int i_lo = static_cast<int>(std::ceil((domain.x_min - grid.extent.x_min) / h - 0.5 - 1e-9));
    const int i_hi = static_cast<int>(std::floor((domain.x_max - grid.extent.x_min) / h - 0.5 + 1e-9));
    const int j_lo = static_cast<int>(std::ceil((domain.y_min - grid.extent.y_min) / h - 0.5 - 1e-9));
    const int j_hi = static_cast<int>(std::floor((domain.y_max - grid.extent.y_min) / h - 0.5 + 1e-9));
    if (i_hi < i_lo || j_hi < j_lo) throw Error(ErrorCode::DegenerateExtent, "inversion domain contains no cells");
    if (i_lo < grid.pml_cells || j_lo < grid.pml_cells || i_hi >= grid.nx - grid.pml_cells ||
        j_hi >= grid.ny - grid.pml_cells)
        throw Error(ErrorCode::DegenerateExtent, "inversion domain overlaps the PML");
    d.i0 = i_lo;
    d.j0 = j_lo;
    d.nx = i_hi - i_lo + 1;
    d.ny = j_hi - j_lo + 1;
    d.unknowns.reserve(static_cast<size_t>(d.num_cells()) * d.components);
    for (int c = 0; c < d.components; ++c)
        for (int j = 0; j < d.ny; ++j)
            for (int i = 0; i < d.nx; ++i) d.unknowns.push_back(grid.unknown_index(c, d.i0 + i, d.j0 + j));
    return d;
}

namespace {

void check_station(const GridSpec& grid, const Rect& domain, Point s, size_t q) {
    std::ostringstream os;
    os << "station " << q << " at (" << s.x << ", " << s.y << ")";
    if (domain.contains(s)) throw Error(ErrorCode::StationInsideDomain, os.str() + " lies inside the inversion domain");
    // the whole interpolation stencil must stay in the PML-free interior
    const Rect in = grid.interior();
    const Rect guard{in.x_min + grid.delta, in.x_max - grid.delta, in.y_min + grid.delta, in.y_max - grid.delta};
    if (!guard.contains(s)) throw Error(ErrorCode::StationInPml, os.str() + " touches the PML");
}

}  // namespace

Selectors build_selectors(const GridSpec& grid, const Rect& domain, const std::vector<Point>& stations) {
    Selectors sel;
    sel.index = build_domain_index(grid, domain);
    const int n = grid.num_unknowns();
    const int comps = grid.components();

    std::vector<TripletR> t;
    for (size_t q = 0; q < stations.size(); ++q) {
        check_station(grid, domain, stations[q], q);
        for (int c = 0; c < comps; ++c) {
            const int row = static_cast<int>(q) * comps + c;
            Real ox = 0.5, oy = 0.5;
            if (grid.polarization == Polarization::TE) {
                ox = c == 0 ? 0.5 : 0.0;
                oy = c == 0 ? 0.0 : 0.5;
            }
            for (const auto& w : bilinear_stencil(grid, stations[q], ox, oy, c * grid.num_cells()))
                t.emplace_back(row, w.index, w.weight);
        }
    }
    sel.receivers.resize(static_cast<Eigen::Index>(stations.size()) * comps, n);
    sel.receivers.setFromTriplets(t.begin(), t.end());
    sel.receivers.makeCompressed();

    std::vector<TripletR> d;
    d.reserve(sel.index.unknowns.size());
    for (int k = 0; k < sel.index.size(); ++k) d.emplace_back(k, sel.index.unknowns[k], 1.0);
    sel.domain.resize(sel.index.size(), n);
    sel.domain.setFromTriplets(d.begin(), d.end());
    sel.domain.makeCompressed();
    return sel;
}

std::vector<Point> circular_stations(int count, Real radius, Point center) {
    std::vector<Point> s;
    s.reserve(count);
    for (int q = 0; q < count; ++q) {
        const Real a = 2.0 * constants::kPi * q / count;
        s.push_back({center.x + radius * std::cos(a), center.y + radius * std::sin(a)});
    }
    return s;
}

VectorXc line_source(const GridSpec& grid, Point station, Real freq_hz) {
    if (grid.in_pml(station)) throw Error(ErrorCode::SourceInPml, "line source lies in the PML");
    const Real area = grid.delta * grid.delta;
    if (grid.polarization == Polarization::TM) {
        VectorXc s = VectorXc::Zero(grid.num_unknowns());
        for (const auto& w : bilinear_stencil(grid, station, 0.5, 0.5, 0)) s[w.index] = w.weight / area;
        return s;
    }
    VectorXr hz = VectorXr::Zero(grid.num_cells());
    for (const auto& w : bilinear_stencil(grid, station, 0.5, 0.5, 0)) hz[w.index] = w.weight / area;
    const VectorXr e = discrete_curl(grid).transpose() * hz;
    return e.cast<Complex>() / wavenumber(freq_hz);
}

}  // namespace ccsi

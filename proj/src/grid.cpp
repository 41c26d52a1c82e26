#include "ccsi/grid.hpp"

#include <cmath>
#include <sstream>

namespace ccsi {

Polarization parse_polarization(const std::string& s) {
    if (s == "TM" || s == "tm") return Polarization::TM;
    if (s == "TE" || s == "te") return Polarization::TE;
    throw Error(ErrorCode::ConfigInvalid, "polarization must be TM or TE, got '" + s + "'");
}

const char* to_string(ErrorCode code) {
    switch (code) {
        case ErrorCode::MeshTooCoarse: return "MeshTooCoarse";
        case ErrorCode::DegenerateExtent: return "DegenerateExtent";
        case ErrorCode::DimensionMismatch: return "DimensionMismatch";
        case ErrorCode::StationInsideDomain: return "StationInsideD";
        case ErrorCode::StationInPml: return "StationInPML";
        case ErrorCode::SourceInPml: return "SourceInPML";
        case ErrorCode::SingularStiffness: return "SingularStiffness";
        case ErrorCode::SceneOutsideGrid: return "SceneOutsideGrid";
        case ErrorCode::ZeroTrueContrast: return "ZeroTrueContrast";
        case ErrorCode::ZeroData: return "ZeroData";
        case ErrorCode::NumericFailure: return "NumericFailure";
        case ErrorCode::ConfigInvalid: return "ConfigInvalid";
        case ErrorCode::Io: return "Io";
        case ErrorCode::ManifestMismatch: return "ManifestMismatch";
    }
    return "Unknown";
}

Point GridSpec::sample_position(int k) const {
    const int comp = component_of(k);
    const int c = k - comp * num_cells();
    const int i = c % nx;
    const int j = c / nx;
    if (polarization == Polarization::TM) return cell_center(i, j);
    if (comp == 0) return {extent.x_min + (i + 0.5) * delta, extent.y_min + j * delta};
    return {extent.x_min + i * delta, extent.y_min + (j + 0.5) * delta};
}

Rect GridSpec::interior() const {
    const Real w = pml_cells * delta;
    return {extent.x_min + w, extent.x_max - w, extent.y_min + w, extent.y_max - w};
}

bool GridSpec::in_pml(Point p) const {
    const Rect in = interior();
    return p.x < in.x_min || p.x > in.x_max || p.y < in.y_min || p.y > in.y_max;
}

Real max_cell_size(Real freq_hz, Real max_eps) { return wavelength(freq_hz) / (15.0 * std::sqrt(max_eps)); }

GridSpec build_grid(const Rect& extent, Real delta, int pml_cells, Polarization polarization, Real freq_hz,
                    Real max_eps) {
    if (!(extent.x_max > extent.x_min) || !(extent.y_max > extent.y_min))
        throw Error(ErrorCode::DegenerateExtent, "grid extent must satisfy x_min < x_max and y_min < y_max");
    if (!(delta > 0.0)) throw Error(ErrorCode::DegenerateExtent, "cell size must be positive");
    if (!(freq_hz > 0.0)) throw Error(ErrorCode::ConfigInvalid, "frequency must be positive");
    if (max_eps < 1.0) throw Error(ErrorCode::ConfigInvalid, "max relative permittivity must be >= 1");

    const Real limit = max_cell_size(freq_hz, max_eps);
    if (delta > limit * (1.0 + 1e-12)) {
        std::ostringstream os;
        os << "cell size " << delta << " m exceeds lambda0/(15 sqrt(eps_max)) = " << limit << " m";
        throw Error(ErrorCode::MeshTooCoarse, os.str());
    }

    GridSpec g;
    g.delta = delta;
    g.pml_cells = pml_cells;
    g.polarization = polarization;
    g.nx = static_cast<int>(std::lround(extent.width() / delta));
    g.ny = static_cast<int>(std::lround(extent.height() / delta));
    if (g.nx < 4 || g.ny < 4) throw Error(ErrorCode::DegenerateExtent, "grid needs at least 4 cells per axis");
    if (pml_cells < 4) throw Error(ErrorCode::DegenerateExtent, "PML needs at least 4 cells per side");
    if (2 * pml_cells >= g.nx || 2 * pml_cells >= g.ny)
        throw Error(ErrorCode::DegenerateExtent, "PML bands cover the whole grid");

    const Real cx = 0.5 * (extent.x_min + extent.x_max);
    const Real cy = 0.5 * (extent.y_min + extent.y_max);
    g.extent = {cx - 0.5 * g.nx * delta, cx + 0.5 * g.nx * delta, cy - 0.5 * g.ny * delta, cy + 0.5 * g.ny * delta};
    return g;
}

GridSpec refine_grid(const GridSpec& grid, int factor) {
    if (factor < 1) throw Error(ErrorCode::ConfigInvalid, "refine factor must be >= 1");
    GridSpec g = grid;
    g.delta = grid.delta / factor;
    g.nx = grid.nx * factor;
    g.ny = grid.ny * factor;
    g.pml_cells = grid.pml_cells * factor;
    return g;
}

}  // namespace ccsi

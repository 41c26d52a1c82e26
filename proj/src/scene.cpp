#include "ccsi/scene.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "ccsi/keyvalue.hpp"

namespace ccsi {

bool Shape::contains(Point p) const {
    const Real r = std::hypot(p.x - center.x, p.y - center.y);
    return r <= r_outer && (r_inner <= 0.0 || r >= r_inner);
}

Real Scene::max_eps() const {
    Real m = 1.0;
    for (const auto& s : shapes) m = std::max(m, s.eps_rel.value_or(eps_rel_object));
    return m;
}

void Scene::validate() const {
    if (eps_rel_object < 1.0) throw Error(ErrorCode::ConfigInvalid, "object relative permittivity must be >= 1");
    if (sigma_object < 0.0) throw Error(ErrorCode::ConfigInvalid, "object conductivity must be >= 0");
    for (const auto& s : shapes) {
        if (!(s.r_outer > 0.0)) throw Error(ErrorCode::ConfigInvalid, "shape radius must be positive");
        if (s.r_inner < 0.0 || (s.r_inner > 0.0 && !(s.r_inner < s.r_outer)))
            throw Error(ErrorCode::ConfigInvalid, "annulus needs 0 < r_inner < r_outer");
        if (s.eps_rel && *s.eps_rel < 1.0) throw Error(ErrorCode::ConfigInvalid, "shape eps_rel must be >= 1");
        if (s.sigma && *s.sigma < 0.0) throw Error(ErrorCode::ConfigInvalid, "shape sigma must be >= 0");
    }
}

Scene austria_scene(Real eps_rel, Real sigma) {
    if (eps_rel < 1.0) throw Error(ErrorCode::ConfigInvalid, "austria_scene: eps_rel must be >= 1");
    Scene s;
    s.eps_rel_object = eps_rel;
    s.sigma_object = sigma;
    s.shapes = {Shape::disk({-0.3, 0.6}, 0.2), Shape::disk({0.3, 0.6}, 0.2), Shape::annulus({0.0, -0.2}, 0.3, 0.6)};
    return s;
}

Complex contrast_of(Real eps_rel, Real sigma, Real freq_hz) {
    return {eps_rel - 1.0, -sigma / (angular_frequency(freq_hz) * constants::kVacuumPermittivity)};
}

namespace {

struct Material {
    Real eps_rel = 1.0;
    Real sigma = 0.0;
};

Material material_at(const Scene& scene, Point p) {
    Material m;
    for (const auto& s : scene.shapes)
        if (s.contains(p)) m = {s.eps_rel.value_or(scene.eps_rel_object), s.sigma.value_or(scene.sigma_object)};
    return m;
}

void check_inside(const Scene& scene, const GridSpec& grid) {
    const Rect in = grid.interior();
    for (const auto& s : scene.shapes) {
        const Rect box{s.center.x - s.r_outer, s.center.x + s.r_outer, s.center.y - s.r_outer, s.center.y + s.r_outer};
        if (box.x_min < in.x_min || box.x_max > in.x_max || box.y_min < in.y_min || box.y_max > in.y_max)
            throw Error(ErrorCode::SceneOutsideGrid, "scene shape extends beyond the PML-free grid interior");
    }
}

}  // namespace

ContrastMap ContrastMap::from_unknowns(const DomainIndex& index, Real delta, const VectorXc& values) {
    if (values.size() != index.size()) throw Error(ErrorCode::DimensionMismatch, "contrast vector size does not match the domain");
    ContrastMap c;
    c.nx = index.nx;
    c.ny = index.ny;
    c.components = index.components;
    c.delta = delta;
    c.values = values;
    const int nc = index.num_cells();
    c.cells = values.head(nc);
    for (int comp = 1; comp < index.components; ++comp) c.cells += values.segment(comp * nc, nc);
    c.cells /= static_cast<Real>(index.components);
    return c;
}

MediumMap rasterize_medium(const Scene& scene, const GridSpec& grid) {
    scene.validate();
    check_inside(scene, grid);
    MediumMap m = MediumMap::background(grid);
    if (scene.empty()) return m;
    for (int k = 0; k < grid.num_unknowns(); ++k) {
        const Material mat = material_at(scene, grid.sample_position(k));
        m.eps_rel[k] = mat.eps_rel;
        m.sigma[k] = mat.sigma;
    }
    return m;
}

RasterizedScene rasterize(const Scene& scene, const GridSpec& grid, const DomainIndex& index, Real freq_hz) {
    RasterizedScene r;
    r.medium = rasterize_medium(scene, grid);
    VectorXc values(index.size());
    for (int k = 0; k < index.size(); ++k) {
        const int u = index.unknowns[k];
        values[k] = contrast_of(r.medium.eps_rel[u], r.medium.sigma[u], freq_hz);
    }
    r.contrast = ContrastMap::from_unknowns(index, grid.delta, values);
    // representative is the cell-center sample, not the edge average
    for (int j = 0; j < index.ny; ++j)
        for (int i = 0; i < index.nx; ++i) {
            const Material m = material_at(scene, grid.cell_center(index.i0 + i, index.j0 + j));
            r.contrast.cells[i + index.nx * j] = contrast_of(m.eps_rel, m.sigma, freq_hz);
        }
    return r;
}

Real reconstruction_error(const ContrastMap& estimate, const ContrastMap& truth) {
    if (estimate.cells.size() != truth.cells.size())
        throw Error(ErrorCode::DimensionMismatch, "reconstruction_error: maps live on different grids");
    const Real denom = truth.cells.squaredNorm();
    if (denom == 0.0) throw Error(ErrorCode::ZeroTrueContrast, "reconstruction_error: true contrast is zero");
    return (truth.cells - estimate.cells).squaredNorm() / denom;
}

Scene parse_scene(const std::string& text, const std::string& origin) {
    const KeyValueFile kv = KeyValueFile::parse(text, origin);
    Scene s;
    if (auto preset = kv.get("preset")) {
        if (*preset != "austria") throw Error(ErrorCode::ConfigInvalid, origin + ": unknown scene preset '" + *preset + "'");
        s = austria_scene(1.0, 0.0);
    }
    s.eps_rel_object = kv.real("eps_rel", s.eps_rel_object);
    s.sigma_object = kv.real("sigma_s_per_m", s.sigma_object);
    for (const auto& e : kv.entries()) {
        const std::string where = origin + ":" + std::to_string(e.line) + ": " + e.key;
        if (e.key == "disk") {
            const auto v = parse_reals(e.value, where);
            if (v.size() != 3 && v.size() != 5)
                throw Error(ErrorCode::ConfigInvalid, where + " expects 'x y radius [eps_rel sigma]'");
            s.shapes.push_back(Shape::disk({v[0], v[1]}, v[2]));
            if (v.size() == 5) { s.shapes.back().eps_rel = v[3]; s.shapes.back().sigma = v[4]; }
        } else if (e.key == "annulus") {
            const auto v = parse_reals(e.value, where);
            if (v.size() != 4 && v.size() != 6)
                throw Error(ErrorCode::ConfigInvalid, where + " expects 'x y r_inner r_outer [eps_rel sigma]'");
            s.shapes.push_back(Shape::annulus({v[0], v[1]}, v[2], v[3]));
            if (v.size() == 6) { s.shapes.back().eps_rel = v[4]; s.shapes.back().sigma = v[5]; }
        } else if (e.key != "preset" && e.key != "eps_rel" && e.key != "sigma_s_per_m") {
            throw Error(ErrorCode::ConfigInvalid, where + ": unknown scene key");
        }
    }
    s.validate();
    return s;
}

Scene load_scene(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::Io, "cannot open scene file " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_scene(ss.str(), path.string());
}

std::string format_scene(const Scene& scene) {
    std::ostringstream os;
    os << std::setprecision(17);
    os << "eps_rel = " << scene.eps_rel_object << "\n";
    os << "sigma_s_per_m = " << scene.sigma_object << "\n";
    for (const auto& s : scene.shapes) {
        if (s.r_inner > 0.0)
            os << "annulus = " << s.center.x << " " << s.center.y << " " << s.r_inner << " " << s.r_outer;
        else
            os << "disk = " << s.center.x << " " << s.center.y << " " << s.r_outer;
        if (s.eps_rel || s.sigma)
            os << " " << s.eps_rel.value_or(scene.eps_rel_object) << " " << s.sigma.value_or(scene.sigma_object);
        os << "\n";
    }
    return os.str();
}

}  // namespace ccsi

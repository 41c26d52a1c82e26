#include "ccsi/maps.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "ccsi/keyvalue.hpp"

namespace ccsi {

namespace {

void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
    out << text;
    if (!out) throw Error(ErrorCode::Io, "write failed for " + path.string());
}

RealGrid grid_like(const ContrastMap& chi, Point origin) {
    RealGrid g;
    g.nx = chi.nx;
    g.ny = chi.ny;
    g.x_min = origin.x;
    g.y_min = origin.y;
    g.delta = chi.delta;
    g.values.resize(chi.num_cells());
    return g;
}

}  // namespace

Point domain_origin(const GridSpec& grid, const DomainIndex& index) {
    return {grid.extent.x_min + index.i0 * grid.delta, grid.extent.y_min + index.j0 * grid.delta};
}

RealGrid permittivity_grid(const ContrastMap& chi, Point origin) {
    RealGrid g = grid_like(chi, origin);
    g.values = chi.cells.real().array() + 1.0;
    return g;
}

RealGrid conductivity_grid(const ContrastMap& chi, Point origin, Real freq_hz) {
    RealGrid g = grid_like(chi, origin);
    g.values = -angular_frequency(freq_hz) * constants::kVacuumPermittivity * chi.cells.imag();
    return g;
}

std::string format_grid_csv(const RealGrid& g, const std::string& quantity) {
    std::string out;
    char buf[64];
    out += "# ccsi-grid 1\n# quantity = " + quantity + "\n";
    std::snprintf(buf, sizeof buf, "# nx = %d\n# ny = %d\n", g.nx, g.ny);
    out += buf;
    std::snprintf(buf, sizeof buf, "# x_min_m = %.17g\n", g.x_min);
    out += buf;
    std::snprintf(buf, sizeof buf, "# y_min_m = %.17g\n", g.y_min);
    out += buf;
    std::snprintf(buf, sizeof buf, "# delta_m = %.17g\n", g.delta);
    out += buf;
    for (int j = g.ny - 1; j >= 0; --j) {
        for (int i = 0; i < g.nx; ++i) {
            std::snprintf(buf, sizeof buf, i ? ",%.17g" : "%.17g", g.at(i, j));
            out += buf;
        }
        out += '\n';
    }
    return out;
}

void write_grid_csv(const std::filesystem::path& path, const RealGrid& g, const std::string& quantity) {
    write_text(path, format_grid_csv(g, quantity));
}

RealGrid parse_grid_csv(const std::string& text, const std::string& origin) {
    std::istringstream is(text);
    std::string line;
    std::string header;
    std::vector<std::vector<Real>> rows;
    int n = 0;
    while (std::getline(is, line)) {
        ++n;
        if (line.empty()) continue;
        if (line.rfind("# ccsi-grid", 0) == 0) {
            if (line != "# ccsi-grid 1") throw Error(ErrorCode::Io, origin + ": unsupported grid format '" + line + "'");
            continue;
        }
        if (line[0] == '#') {
            header += line.substr(1) + "\n";
            continue;
        }
        rows.push_back(parse_reals(line, origin + ":" + std::to_string(n)));
    }
    const KeyValueFile kv = KeyValueFile::parse(header, origin);
    RealGrid g;
    g.nx = kv.integer("nx", 0);
    g.ny = kv.integer("ny", 0);
    g.x_min = kv.real("x_min_m", 0.0);
    g.y_min = kv.real("y_min_m", 0.0);
    g.delta = kv.real("delta_m", 0.0);
    if (g.nx <= 0 || g.ny <= 0 || static_cast<int>(rows.size()) != g.ny)
        throw Error(ErrorCode::Io, origin + ": grid shape does not match its header");
    g.values.resize(g.nx * g.ny);
    for (int r = 0; r < g.ny; ++r) {
        if (static_cast<int>(rows[r].size()) != g.nx) throw Error(ErrorCode::Io, origin + ": ragged grid row");
        const int j = g.ny - 1 - r;
        for (int i = 0; i < g.nx; ++i) g.values[i + g.nx * j] = rows[r][i];
    }
    return g;
}

unsigned char gray_level(Real v, Real lo, Real hi) {
    if (!(hi > lo)) return 0;
    const Real t = std::clamp((v - lo) / (hi - lo), 0.0, 1.0);
    return static_cast<unsigned char>(std::lround(255.0 * t));
}

std::string format_pgm(const RealGrid& g, Real lo, Real hi) {
    char buf[128];
    std::snprintf(buf, sizeof buf, "P5\n# scale %.17g %.17g\n%d %d\n255\n", lo, hi, g.nx, g.ny);
    std::string out = buf;
    out.reserve(out.size() + g.values.size());
    for (int j = g.ny - 1; j >= 0; --j)
        for (int i = 0; i < g.nx; ++i) out += static_cast<char>(gray_level(g.at(i, j), lo, hi));
    return out;
}

void write_pgm(const std::filesystem::path& path, const RealGrid& g, Real lo, Real hi) {
    write_text(path, format_pgm(g, lo, hi));
}

}  // namespace ccsi

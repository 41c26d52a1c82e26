#include "manifest.hpp"

#include <cstdio>
#include <fstream>

#include "ccsi/hash.hpp"

namespace ccsi::cli {

std::string hex(std::uint64_t v) {
    char buf[20];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

std::uint64_t hash_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::Io, "cannot read " + path.string());
    ContentHasher h;
    char buf[1 << 16];
    while (in) {
        in.read(buf, sizeof buf);
        h.bytes(buf, static_cast<size_t>(in.gcount()));
    }
    return h.value();
}

std::uint64_t hash_matrix(const MatrixXc& m) { return ContentHasher().add_matrix(m).value(); }

json base_manifest(const RunConfig& c) {
    const std::string echo = format_config(c);
    json m;
    m["tool"] = "ccsi";
    m["version"] = kVersion;
    m["eigen"] = std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                 std::to_string(EIGEN_MINOR_VERSION);
    m["mode"] = to_string(c.mode);
    m["config"] = echo;
    m["config_hash"] = hex(ContentHasher().add(echo).value());
    m["geometry_hash"] = hex(geometry_hash(c));
    m["noise"] = {{"level", c.noise.level}, {"seed", c.noise.seed}};
    m["decisions"] = {
        {"pml", "coordinate stretching, cubic grading, R = 1e-8"},
        {"te_stencil", "Yee edges, curl-curl"},
        {"receiver_interpolation", "bilinear"},
        {"source", "unit line current, bilinearly spread"},
        {"synthetic_data", "uniform refinement by refine_factor"},
        {"rasterization", "center point per field sample"},
        {"noise_draws", "per element, per source substreams"},
        {"te_error_metric", "cell-centered representative"},
        {"contrast_clamp", "after every contrast update, before TE averaging"},
        {"pr_restart", "|g_old|^2 < 1e-30 or coefficient < -10"},
        {"eta_d_fallback", "1 / sum |e_inc|^2 when chi e_inc = 0"},
        {"field_energy_floor", "1e-30 of max"},
        {"mr_tv", "forward differences, Neumann boundary, cell representative"},
        {"mr_delta_sq", "state error divided by the squared mesh size"},
        {"determinism", "single thread, fixed summation order: bit-reproducible"},
    };
    m["files"] = json::object();
    return m;
}

void record_file(json& manifest, const std::filesystem::path& path) {
    manifest["files"][path.filename().string()] = {{"bytes", std::filesystem::file_size(path)},
                                                   {"hash", hex(hash_file(path))}};
}

void write_manifest(const std::filesystem::path& path, const json& manifest) {
    std::ofstream out(path);
    if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
    out << manifest.dump(2) << "\n";
    if (!out) throw Error(ErrorCode::Io, "write failed for " + path.string());
}

json read_manifest(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::Io, "cannot read " + path.string());
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw Error(ErrorCode::Io, path.string() + ": " + e.what());
    }
}

void check_geometry(const json& data_manifest, const RunConfig& config) {
    const std::string expected = hex(geometry_hash(config));
    const std::string found = data_manifest.value("geometry_hash", "");
    if (found != expected)
        throw Error(ErrorCode::ManifestMismatch, "data were generated for geometry " + found +
                                                     ", this configuration has " + expected +
                                                     " (grid, domain, stations, frequency or polarization differ)");
}

}  // namespace ccsi::cli

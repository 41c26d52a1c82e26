#include "ccsi/forward.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>
#include <sstream>

#include "ccsi/keyvalue.hpp"
#include "ccsi/matrix_io.hpp"
#include "ccsi/selectors.hpp"

namespace ccsi {

MatrixXc source_matrix(const GridSpec& grid, const std::vector<Point>& stations, Real freq_hz) {
    MatrixXc s(grid.num_unknowns(), static_cast<Eigen::Index>(stations.size()));
    for (std::size_t p = 0; p < stations.size(); ++p) s.col(static_cast<Eigen::Index>(p)) = line_source(grid, stations[p], freq_hz);
    return s;
}

MatrixXc incident_fields_full(const OperatorSet& background) {
    return background.solver->solve(source_matrix(background.grid, background.stations, background.freq_hz));
}

MatrixXc incident_fields(const OperatorSet& background) {
    return background.domain_selector.cast<Complex>() * incident_fields_full(background);
}

MatrixXc synthesize_data_on_grid(const MediumMap& medium, const GridSpec& grid, Real freq_hz, const Rect& domain,
                                 const std::vector<Point>& stations, const PmlOptions& pml) {
    const Selectors sel = build_selectors(grid, domain, stations);
    const MatrixXc s = source_matrix(grid, stations, freq_hz);
    const LinearSolver background(assemble_stiffness(grid, MediumMap::background(grid), freq_hz, pml));
    const LinearSolver object(assemble_stiffness(grid, medium, freq_hz, pml));
    const MatrixXc scattered = object.solve(s) - background.solve(s);
    return sel.receivers.cast<Complex>() * scattered;
}

MatrixXc synthesize_data(const Scene& scene, const GridSpec& grid, Real freq_hz, const Rect& domain,
                         const std::vector<Point>& stations, const SynthesisOptions& options) {
    if (options.refine_factor < 2)
        throw Error(ErrorCode::ConfigInvalid, "data synthesis needs a refinement factor of at least 2");
    const GridSpec fine = refine_grid(grid, options.refine_factor);
    const Real limit = max_cell_size(freq_hz, scene.max_eps());
    if (fine.delta > limit * (1.0 + 1e-12)) {
        std::ostringstream os;
        os << "synthesis grid cell " << fine.delta << " m exceeds " << limit << " m for eps_rel " << scene.max_eps();
        throw Error(ErrorCode::MeshTooCoarse, os.str());
    }
    const MediumMap medium = rasterize_medium(scene, fine);
    if (scene.empty()) {
        const Selectors sel = build_selectors(fine, domain, stations);
        return MatrixXc::Zero(sel.receivers.rows(), static_cast<Eigen::Index>(stations.size()));
    }
    return synthesize_data_on_grid(medium, fine, freq_hz, domain, stations, options.pml);
}

std::uint64_t substream_seed(std::uint64_t seed, std::uint64_t stream) {
    // splitmix64 finalizer over (seed, stream)
    std::uint64_t z = seed + (stream + 1) * 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

Real uniform_symmetric(std::uint64_t bits) {
    const Real u = static_cast<Real>(bits >> 11) * 0x1.0p-53;
    return 2.0 * u - 1.0;
}

MatrixXc add_noise(const MatrixXc& data, const NoiseModel& noise) {
    if (noise.level < 0.0) throw Error(ErrorCode::ConfigInvalid, "noise level must be >= 0");
    if (noise.level == 0.0) return data;
    MatrixXc out = data;
    for (Eigen::Index p = 0; p < data.cols(); ++p) {
        std::mt19937_64 rng(substream_seed(noise.seed, static_cast<std::uint64_t>(p)));
        const Real scale = noise.level * data.col(p).cwiseAbs().maxCoeff();
        for (Eigen::Index m = 0; m < data.rows(); ++m) {
            const Real n1 = uniform_symmetric(rng());
            const Real n2 = uniform_symmetric(rng());
            out(m, p) += scale * Complex(n1, n2);
        }
    }
    return out;
}

namespace {

constexpr Magic kDataMagic = {'C', 'C', 'S', 'I', 'D', 'A', 'T', '\0'};
constexpr Magic kIncidentMagic = {'C', 'C', 'S', 'I', 'I', 'N', 'C', '\0'};
constexpr std::uint32_t kBinaryVersion = 1;

std::string g17(Real v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

}  // namespace

std::string format_data_csv(const DataSet& d) {
    std::ostringstream os;
    os << "# ccsi-data 1\n";
    os << "# frequency_hz = " << g17(d.freq_hz) << "\n";
    os << "# polarization = " << to_string(d.polarization) << "\n";
    os << "# noise_level = " << g17(d.noise.level) << "\n";
    os << "# noise_seed = " << d.noise.seed << "\n";
    os << "# refine_factor = " << d.refine_factor << "\n";
    for (const auto& s : d.stations) os << "# station = " << g17(s.x) << " " << g17(s.y) << "\n";
    os << "p,m,re,im\n";
    for (Eigen::Index p = 0; p < d.data.cols(); ++p)
        for (Eigen::Index m = 0; m < d.data.rows(); ++m)
            os << p << "," << m << "," << g17(d.data(m, p).real()) << "," << g17(d.data(m, p).imag()) << "\n";
    return os.str();
}

DataSet parse_data_csv(const std::string& text, const std::string& origin) {
    std::istringstream is(text);
    std::string line;
    std::string header;
    bool table = false;
    struct Row {
        long p, m;
        Complex v;
    };
    std::vector<Row> rows;
    int n = 0;
    while (std::getline(is, line)) {
        ++n;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (line[0] == '#') {
            header += line.substr(1) + "\n";
            continue;
        }
        if (!table) {
            if (line != "p,m,re,im") throw Error(ErrorCode::Io, origin + ": expected header 'p,m,re,im'");
            table = true;
            continue;
        }
        const std::string where = origin + ":" + std::to_string(n);
        std::vector<std::string> f;
        std::stringstream ls(line);
        for (std::string tok; std::getline(ls, tok, ',');) f.push_back(tok);
        if (f.size() != 4) throw Error(ErrorCode::Io, where + ": expected 4 fields");
        rows.push_back({parse_int(f[0], where), parse_int(f[1], where), {parse_real(f[2], where), parse_real(f[3], where)}});
    }
    if (!table) throw Error(ErrorCode::Io, origin + ": no data table");

    // the first header line is a tag, not key = value
    const auto first_nl = header.find('\n');
    const std::string tag = header.substr(0, first_nl);
    if (tag.find("ccsi-data 1") == std::string::npos) throw Error(ErrorCode::Io, origin + ": not a ccsi data file");
    const KeyValueFile kv = KeyValueFile::parse(header.substr(first_nl + 1), origin);

    DataSet d;
    d.freq_hz = kv.real("frequency_hz", 0.0);
    d.polarization = parse_polarization(kv.require("polarization"));
    d.noise.level = kv.real("noise_level", 0.0);
    if (auto s = kv.get("noise_seed")) d.noise.seed = std::stoull(*s);
    d.refine_factor = kv.integer("refine_factor", 0);
    for (const auto& s : kv.get_all("station")) {
        const auto v = parse_reals(s, origin + ": station");
        if (v.size() != 2) throw Error(ErrorCode::Io, origin + ": station needs 'x y'");
        d.stations.push_back({v[0], v[1]});
    }
    long mp = 0, mm = 0;
    for (const auto& r : rows) {
        if (r.p < 0 || r.m < 0) throw Error(ErrorCode::Io, origin + ": negative index");
        mp = std::max(mp, r.p + 1);
        mm = std::max(mm, r.m + 1);
    }
    if (static_cast<long>(rows.size()) != mp * mm) throw Error(ErrorCode::Io, origin + ": incomplete data table");
    d.data = MatrixXc::Zero(mm, mp);
    for (const auto& r : rows) d.data(r.m, r.p) = r.v;
    if (static_cast<long>(d.stations.size()) != mp)
        throw Error(ErrorCode::Io, origin + ": station count does not match the source count");
    return d;
}

void write_data_csv(const std::filesystem::path& path, const DataSet& data) {
    std::ofstream out(path);
    if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
    out << format_data_csv(data);
    if (!out) throw Error(ErrorCode::Io, "short write on " + path.string());
}

DataSet read_data_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_data_csv(ss.str(), path.string());
}

void write_data_binary(const std::filesystem::path& path, const MatrixXc& data) {
    write_complex_matrix(path, kDataMagic, kBinaryVersion, data, 0);
}

MatrixXc read_data_binary(const std::filesystem::path& path) {
    auto f = read_complex_matrix(path, kDataMagic, kBinaryVersion);
    if (!f) throw Error(ErrorCode::Io, "unreadable data file " + path.string());
    return std::move(f->matrix);
}

void write_incident_fields(const std::filesystem::path& path, const MatrixXc& incident, std::uint64_t hash) {
    write_complex_matrix(path, kIncidentMagic, kBinaryVersion, incident, hash);
}

MatrixXc read_incident_fields(const std::filesystem::path& path) {
    auto f = read_complex_matrix(path, kIncidentMagic, kBinaryVersion);
    if (!f) throw Error(ErrorCode::Io, "unreadable incident-field file " + path.string());
    return std::move(f->matrix);
}

}  // namespace ccsi

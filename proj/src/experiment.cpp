#include "ccsi/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

#include "ccsi/hash.hpp"

namespace ccsi {

const char* to_string(Mode m) {
    switch (m) {
        case Mode::Forward: return "forward";
        case Mode::Invert: return "invert";
        case Mode::Analyze: return "analyze";
        case Mode::Benchmark: return "benchmark";
    }
    return "?";
}

namespace {

std::string g17(Real v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

Rect parse_rect(const std::string& value, const std::string& key) {
    const auto v = parse_reals(value, key);
    if (v.size() != 4) throw Error(ErrorCode::ConfigInvalid, key + ": expected 'x_min x_max y_min y_max'");
    return {v[0], v[1], v[2], v[3]};
}

bool parse_bool(const std::string& value, const std::string& key) {
    std::string v = value;
    std::transform(v.begin(), v.end(), v.begin(), [](unsigned char c) { return std::tolower(c); });
    if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
    if (v == "false" || v == "0" || v == "no" || v == "off") return false;
    throw Error(ErrorCode::ConfigInvalid, key + ": expected true or false, got '" + value + "'");
}

std::uint64_t parse_u64(const std::string& value, const std::string& key) {
    try {
        std::size_t used = 0;
        const unsigned long long v = std::stoull(value, &used);
        if (used != value.size() || value.front() == '-') throw std::invalid_argument(value);
        return v;
    } catch (const std::exception&) {
        throw Error(ErrorCode::ConfigInvalid, key + ": expected an unsigned integer, got '" + value + "'");
    }
}

std::string rect_text(const Rect& r) {
    return g17(r.x_min) + " " + g17(r.x_max) + " " + g17(r.y_min) + " " + g17(r.y_max);
}

}  // namespace

Real RunConfig::sigma() const {
    if (object_sigma) return *object_sigma;
    return -object_contrast_imag * angular_frequency(freq_hz) * constants::kVacuumPermittivity;
}

Scene RunConfig::scene() const {
    if (!scene_file.empty()) return load_scene(scene_file);
    return austria_scene(object_eps_rel, sigma());
}

std::vector<Point> RunConfig::station_positions() const { return circular_stations(stations, station_radius_m); }

RunConfig apply_config(const KeyValueFile& kv, RunConfig c) {
    for (const auto& e : kv.entries()) {
        const std::string& k = e.key;
        const std::string& v = e.value;
        const std::string where = kv.origin() + (e.line > 0 ? ":" + std::to_string(e.line) : "") + ": " + k;
        try {
            if (k == "mode") {
                if (v == "forward") c.mode = Mode::Forward;
                else if (v == "invert") c.mode = Mode::Invert;
                else if (v == "analyze") c.mode = Mode::Analyze;
                else if (v == "benchmark") c.mode = Mode::Benchmark;
                else throw Error(ErrorCode::ConfigInvalid, "unknown mode '" + v + "'");
            } else if (k == "frequency_hz") c.freq_hz = parse_real(v, k);
            else if (k == "polarization") c.polarization = parse_polarization(v);
            else if (k == "extent_m") c.extent = parse_rect(v, k);
            else if (k == "delta_m") c.delta_m = parse_real(v, k);
            else if (k == "pml_cells") c.pml_cells = parse_int(v, k);
            else if (k == "domain_m") c.domain = parse_rect(v, k);
            else if (k == "refine_factor") c.refine_factor = parse_int(v, k);
            else if (k == "stations") c.stations = parse_int(v, k);
            else if (k == "station_radius_m") c.station_radius_m = parse_real(v, k);
            else if (k == "scene_file") c.scene_file = v;
            else if (k == "object_eps_rel") c.object_eps_rel = parse_real(v, k);
            else if (k == "object_sigma_s_per_m") c.object_sigma = parse_real(v, k);
            else if (k == "object_contrast_imag") {
                c.object_contrast_imag = parse_real(v, k);
                c.object_sigma.reset();
            } else if (k == "noise_level") c.noise.level = parse_real(v, k);
            else if (k == "noise_seed") c.noise.seed = parse_u64(v, k);
            else if (k == "variant") {
                c.variants = {parse_variant(v)};
                c.inversion.variant = c.variants.front();
            } else if (k == "variants") {
                std::istringstream is(v);
                std::string tok;
                c.variants.clear();
                while (is >> tok) c.variants.push_back(parse_variant(tok));
                if (c.variants.empty()) throw Error(ErrorCode::ConfigInvalid, "empty variant list");
                c.inversion.variant = c.variants.front();
            } else if (k == "max_iterations") c.inversion.max_iterations = parse_int(v, k);
            else if (k == "cost_tolerance") c.inversion.cost_tolerance = parse_real(v, k);
            else if (k == "brent_tolerance") c.inversion.brent_tolerance = parse_real(v, k);
            else if (k == "brent_max_evaluations") c.inversion.brent_max_evaluations = parse_int(v, k);
            else if (k == "constraints") c.inversion.enforce_constraints = parse_bool(v, k);
            else if (k == "cross_term") c.inversion.cross_term = parse_bool(v, k);
            else if (k == "output_dir") c.output_dir = v;
            else if (k == "data_dir") c.data_dir = v;
            else if (k == "cache_dir") c.cache_dir = v;
            else if (k == "checkpoint_every") c.checkpoint_every = parse_int(v, k);
            else if (k == "ground_truth") c.ground_truth = parse_bool(v, k);
            else throw Error(ErrorCode::ConfigInvalid, "unknown key");
        } catch (const Error& err) {
            throw Error(err.code(), where + ": " + err.what());
        }
    }
    return c;
}

void validate(const RunConfig& c) {
    const auto fail = [](const std::string& field, const std::string& why) {
        throw Error(ErrorCode::ConfigInvalid, field + ": " + why);
    };
    if (!(c.freq_hz > 0.0)) fail("frequency_hz", "must be positive");
    if (!(c.delta_m > 0.0)) fail("delta_m", "must be positive");
    if (c.pml_cells < 4) fail("pml_cells", "must be at least 4");
    if (!(c.extent.x_max > c.extent.x_min && c.extent.y_max > c.extent.y_min)) fail("extent_m", "must be well ordered");
    if (!(c.domain.x_max > c.domain.x_min && c.domain.y_max > c.domain.y_min)) fail("domain_m", "must be well ordered");
    if (c.stations < 1) fail("stations", "must be at least 1");
    if (!(c.station_radius_m > 0.0)) fail("station_radius_m", "must be positive");
    if (c.noise.level < 0.0 || c.noise.level >= 1.0) fail("noise_level", "must lie in [0, 1)");
    if (!c.scene_file.empty() && !std::filesystem::exists(c.scene_file))
        fail("scene_file", "no such file '" + c.scene_file.string() + "'");
    if (c.scene_file.empty()) {
        if (c.object_eps_rel < 1.0) fail("object_eps_rel", "must be >= 1");
        if (c.sigma() < 0.0) fail("object_sigma_s_per_m", "must be >= 0");
    }
    if (c.mode == Mode::Forward && c.refine_factor < 2) fail("refine_factor", "must be at least 2");
    if (c.mode == Mode::Invert || c.mode == Mode::Benchmark) {
        if (c.inversion.max_iterations < 0) fail("max_iterations", "must be >= 0");
        if (!(c.inversion.brent_tolerance > 0.0)) fail("brent_tolerance", "must be positive");
        if (c.inversion.brent_max_evaluations < 3) fail("brent_max_evaluations", "must be at least 3");
        if (c.checkpoint_every < 0) fail("checkpoint_every", "must be >= 0");
        if (c.variants.empty()) fail("variants", "at least one variant is required");
    }
    if (c.mode == Mode::Invert && c.variants.size() != 1) fail("variant", "invert runs exactly one variant");
    if (c.mode == Mode::Benchmark) {
        if (c.refine_factor < 2) fail("refine_factor", "must be at least 2");
        if (!c.ground_truth) fail("ground_truth", "benchmark needs the true scene");
    }
    if (c.output_dir.empty()) fail("output_dir", "must not be empty");
}

std::string format_config(const RunConfig& c) {
    std::ostringstream os;
    os << "mode = " << to_string(c.mode) << "\n";
    os << "frequency_hz = " << g17(c.freq_hz) << "\n";
    os << "polarization = " << to_string(c.polarization) << "\n";
    os << "extent_m = " << rect_text(c.extent) << "\n";
    os << "delta_m = " << g17(c.delta_m) << "\n";
    os << "pml_cells = " << c.pml_cells << "\n";
    os << "domain_m = " << rect_text(c.domain) << "\n";
    os << "refine_factor = " << c.refine_factor << "\n";
    os << "stations = " << c.stations << "\n";
    os << "station_radius_m = " << g17(c.station_radius_m) << "\n";
    if (!c.scene_file.empty()) os << "scene_file = " << c.scene_file.string() << "\n";
    os << "object_eps_rel = " << g17(c.object_eps_rel) << "\n";
    os << "object_sigma_s_per_m = " << g17(c.sigma()) << "\n";
    os << "noise_level = " << g17(c.noise.level) << "\n";
    os << "noise_seed = " << c.noise.seed << "\n";
    os << "variants =";
    for (Variant v : c.variants) os << " " << to_string(v);
    os << "\n";
    os << "max_iterations = " << c.inversion.max_iterations << "\n";
    os << "cost_tolerance = " << g17(c.inversion.cost_tolerance) << "\n";
    os << "brent_tolerance = " << g17(c.inversion.brent_tolerance) << "\n";
    os << "brent_max_evaluations = " << c.inversion.brent_max_evaluations << "\n";
    os << "constraints = " << (c.inversion.enforce_constraints ? "true" : "false") << "\n";
    os << "cross_term = " << (c.inversion.cross_term ? "true" : "false") << "\n";
    os << "output_dir = " << c.output_dir.string() << "\n";
    if (!c.data_dir.empty()) os << "data_dir = " << c.data_dir.string() << "\n";
    if (!c.cache_dir.empty()) os << "cache_dir = " << c.cache_dir.string() << "\n";
    os << "checkpoint_every = " << c.checkpoint_every << "\n";
    os << "ground_truth = " << (c.ground_truth ? "true" : "false") << "\n";
    return os.str();
}

std::uint64_t geometry_hash(const RunConfig& c) {
    ContentHasher h;
    h.add(c.freq_hz).add(static_cast<int>(c.polarization));
    for (Real v : {c.extent.x_min, c.extent.x_max, c.extent.y_min, c.extent.y_max, c.delta_m}) h.add(v);
    for (Real v : {c.domain.x_min, c.domain.x_max, c.domain.y_min, c.domain.y_max}) h.add(v);
    h.add(c.pml_cells);
    for (const Point& p : c.station_positions()) h.add(p.x).add(p.y);
    return h.value();
}

Setup prepare(const RunConfig& c) {
    const auto start = std::chrono::steady_clock::now();
    Setup s;
    s.grid = build_grid(c.extent, c.delta_m, c.pml_cells, c.polarization, c.freq_hz, c.scene().max_eps());
    s.stations = c.station_positions();
    OperatorOptions opts;
    opts.cache_dir = c.cache_dir;
    s.ops = build_operator_set(s.grid, MediumMap::background(s.grid), c.freq_hz, c.domain, s.stations, opts);
    s.incident = incident_fields(s.ops);
    s.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return s;
}

DataSet synthesize(const RunConfig& c, const Setup& setup) {
    SynthesisOptions opts;
    opts.refine_factor = c.refine_factor;
    DataSet d;
    d.freq_hz = c.freq_hz;
    d.polarization = c.polarization;
    d.stations = setup.stations;
    d.noise = c.noise;
    d.refine_factor = c.refine_factor;
    d.data = add_noise(synthesize_data(c.scene(), setup.grid, c.freq_hz, c.domain, setup.stations, opts), c.noise);
    return d;
}

ContrastMap true_contrast(const RunConfig& c, const Setup& setup) {
    return rasterize(c.scene(), setup.grid, setup.ops.index, c.freq_hz).contrast;
}

double VariantRun::seconds_per_iteration() const {
    const auto n = result.reports.size();
    return n ? result.seconds / static_cast<double>(n) : 0.0;
}

std::vector<VariantRun> run_variants(const InversionProblem& problem, const InversionOptions& options,
                                     const std::vector<Variant>& variants, const ContrastMap* truth,
                                     const std::function<void(Variant, const IterationReport&)>& on_iteration) {
    std::vector<VariantRun> runs;
    for (Variant v : variants) {
        InversionOptions o = options;
        o.variant = v;
        RunHooks hooks;
        hooks.truth = truth;
        if (on_iteration) hooks.on_iteration = [&, v](const IterationReport& r) { on_iteration(v, r); };
        runs.push_back({v, run(problem, o, hooks)});
    }
    return runs;
}

Real cc_overhead_percent(const std::vector<VariantRun>& runs) {
    const VariantRun* csi = nullptr;
    const VariantRun* cc = nullptr;
    for (const auto& r : runs) {
        if (r.variant == Variant::CSI) csi = &r;
        if (r.variant == Variant::CCCSI) cc = &r;
    }
    if (!csi || !cc || csi->seconds_per_iteration() <= 0.0) return std::numeric_limits<Real>::quiet_NaN();
    return (cc->seconds_per_iteration() - csi->seconds_per_iteration()) / csi->seconds_per_iteration() * 100.0;
}

std::string format_err_table(const std::vector<VariantRun>& runs) {
    std::string out = "n";
    for (const auto& r : runs) out += std::string(",err_") + to_string(r.variant);
    out += "\n";
    std::size_t rows = 0;
    for (const auto& r : runs) rows = std::max(rows, r.result.history.size());
    for (std::size_t n = 0; n < rows; ++n) {
        out += std::to_string(n);
        for (const auto& r : runs) {
            out += ",";
            if (n < r.result.history.size() && r.result.history[n].err) out += g17(*r.result.history[n].err);
        }
        out += "\n";
    }
    return out;
}

std::string format_benchmark_summary(const std::vector<VariantRun>& runs) {
    std::string out = "variant,iterations,final_err,total_seconds,seconds_per_iteration,overhead_vs_csi_percent\n";
    const Real overhead = cc_overhead_percent(runs);
    for (const auto& r : runs) {
        const auto& h = r.result.history;
        out += std::string(to_string(r.variant)) + "," + std::to_string(r.result.reports.size()) + ",";
        if (!h.empty() && h.back().err) out += g17(*h.back().err);
        out += "," + g17(r.result.seconds) + "," + g17(r.seconds_per_iteration()) + ",";
        if (r.variant == Variant::CCCSI && std::isfinite(overhead)) out += g17(overhead);
        if (r.variant == Variant::CSI && std::isfinite(overhead)) out += "0";
        out += "\n";
    }
    return out;
}

}  // namespace ccsi

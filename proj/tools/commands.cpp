#include "commands.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <ostream>

#include "ccsi/maps.hpp"
#include "manifest.hpp"

namespace ccsi::cli {

namespace fs = std::filesystem;

int exit_code(ErrorCode code) {
    switch (code) {
        case ErrorCode::Io: return 3;
        case ErrorCode::NumericFailure:
        case ErrorCode::SingularStiffness: return 4;
        default: return 2;
    }
}

namespace {

std::string fmt(const char* f, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
    out << text;
    if (!out) throw Error(ErrorCode::Io, "write failed for " + path.string());
}

void make_dir(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw Error(ErrorCode::Io, "cannot create " + dir.string() + ": " + ec.message());
}

Real max_sigma(const Scene& s) {
    Real m = s.sigma_object;
    for (const auto& sh : s.shapes)
        if (sh.sigma) m = std::max(m, *sh.sigma);
    return m;
}

struct Window {
    Real eps_hi = 1.0;
    Real sigma_hi = 1.0;
};

/// [0, max true eps_r] and [0, 2 sigma_object]; a lossless scene falls back to the estimate's maximum.
Window display_window(const Scene& scene, const RealGrid& sigma) {
    Window w;
    w.eps_hi = scene.max_eps();
    w.sigma_hi = 2.0 * max_sigma(scene);
    if (!(w.sigma_hi > 0.0)) w.sigma_hi = std::max(sigma.values.maxCoeff(), 1e-6);
    return w;
}

void write_maps(const fs::path& dir, const std::string& prefix, const ContrastMap& chi, const Setup& setup,
                const RunConfig& config, json& manifest) {
    const Point origin = domain_origin(setup.grid, setup.ops.index);
    const RealGrid eps = permittivity_grid(chi, origin);
    const RealGrid sigma = conductivity_grid(chi, origin, config.freq_hz);
    const Window w = display_window(config.scene(), sigma);
    const fs::path files[] = {dir / (prefix + "permittivity.csv"), dir / (prefix + "conductivity.csv"),
                              dir / (prefix + "permittivity.pgm"), dir / (prefix + "conductivity.pgm")};
    write_grid_csv(files[0], eps, "relative_permittivity");
    write_grid_csv(files[1], sigma, "conductivity_s_per_m");
    write_pgm(files[2], eps, 0.0, w.eps_hi);
    write_pgm(files[3], sigma, 0.0, w.sigma_hi);
    for (const auto& f : files) record_file(manifest, f);
    manifest["map_scale"] = {{"permittivity", {0.0, w.eps_hi}}, {"conductivity_s_per_m", {0.0, w.sigma_hi}}};
}

bool close(Real a, Real b) { return std::abs(a - b) <= 1e-9 * std::max({std::abs(a), std::abs(b), 1.0}); }

void check_data(const DataSet& d, const RunConfig& c, const Setup& setup) {
    const auto mismatch = [](const std::string& what) {
        throw Error(ErrorCode::ManifestMismatch, "data file does not match the configuration: " + what);
    };
    if (!close(d.freq_hz, c.freq_hz)) mismatch("frequency");
    if (d.polarization != c.polarization) mismatch("polarization");
    if (d.stations.size() != setup.stations.size()) mismatch("station count");
    for (std::size_t k = 0; k < d.stations.size(); ++k)
        if (!close(d.stations[k].x, setup.stations[k].x) || !close(d.stations[k].y, setup.stations[k].y))
            mismatch("station " + std::to_string(k) + " position");
    if (d.num_measurements() != setup.ops.num_measurements()) mismatch("receiver count");
}

/// Logs the first, every 64th and the last iteration.
auto progress(std::ostream& log, int total) {
    return [&log, total, counts = std::map<Variant, int>()](Variant v, const IterationReport& r) mutable {
        const int n = ++counts[v];
        if (n == 1 || n == total || n % 64 == 0)
            log << to_string(v) << " iteration " << n << "/" << total << " cost " << fmt("%.6e", r.cost.total)
                << (r.cost.err ? " err " + fmt("%.6f", *r.cost.err) : std::string()) << "\n"
                << std::flush;
    };
}

json history_summary(const RunResult& r) {
    json s;
    s["iterations"] = r.reports.size();
    s["initial_cost"] = r.history.front().total;
    s["final_cost"] = r.history.back().total;
    if (r.history.front().err) {
        s["initial_err"] = *r.history.front().err;
        s["final_err"] = *r.history.back().err;
    }
    s["seconds"] = r.seconds;
    s["init_seconds"] = r.init_seconds;
    s["bracket_failures"] = r.bracket_failures;
    s["eta_d_fallbacks"] = r.eta_d_fallbacks;
    return s;
}

}  // namespace

void cmd_forward(const RunConfig& c, std::ostream& log) {
    validate(c);
    const fs::path out = c.output_dir;
    make_dir(out);
    const Setup setup = prepare(c);
    log << "inversion grid " << setup.grid.nx << " x " << setup.grid.ny << ", " << setup.ops.domain_size()
        << " domain unknowns, " << setup.stations.size() << " stations\n";
    const DataSet data = synthesize(c, setup);
    log << "data " << data.num_measurements() << " x " << data.num_sources() << " (refine factor "
        << c.refine_factor << ", noise " << c.noise.level << ")\n";

    json m = base_manifest(c);
    write_data_csv(out / "data.csv", data);
    write_data_binary(out / "data.bin", data.data);
    write_incident_fields(out / "incident.bin", setup.incident, setup.ops.hash);
    write_text(out / "scene.cfg", format_scene(c.scene()));
    write_text(out / "config.cfg", format_config(c));
    for (const char* f : {"data.csv", "data.bin", "incident.bin", "scene.cfg", "config.cfg"}) record_file(m, out / f);
    m["operator_hash"] = hex(setup.ops.hash);
    m["data_hash"] = hex(hash_matrix(data.data));
    m["shape"] = {{"measurements", data.num_measurements()}, {"sources", data.num_sources()},
                  {"domain_unknowns", setup.ops.domain_size()}};
    write_manifest(out / "manifest.json", m);
    log << "wrote " << out.string() << "\n";
}

void cmd_invert(const RunConfig& c, std::ostream& log) {
    validate(c);
    const fs::path data_dir = c.data_path();
    const fs::path data_file = data_dir / "data.csv";
    if (!fs::exists(data_file))
        throw Error(ErrorCode::Io, "data_dir: no data.csv in '" + data_dir.string() + "' (run forward first)");
    if (fs::exists(data_dir / "manifest.json")) check_geometry(read_manifest(data_dir / "manifest.json"), c);
    const DataSet data = read_data_csv(data_file);
    const Setup setup = prepare(c);
    check_data(data, c, setup);

    const fs::path out = c.output_dir;
    make_dir(out);
    const InversionProblem problem(setup.ops, setup.incident, data.data);
    std::optional<ContrastMap> truth;
    if (c.ground_truth) truth = true_contrast(c, setup);
    const Variant v = c.variants.front();
    InversionOptions options = c.inversion;
    options.variant = v;
    RunHooks hooks;
    hooks.truth = truth ? &*truth : nullptr;
    hooks.on_iteration = [report = progress(log, options.max_iterations), v](const IterationReport& r) mutable {
        report(v, r);
    };
    if (c.checkpoint_every > 0) {
        hooks.checkpoint_dir = out / "checkpoints";
        hooks.checkpoint_every = c.checkpoint_every;
        make_dir(hooks.checkpoint_dir);
    }
    const RunResult r = run(problem, options, hooks);

    json m = base_manifest(c);
    m["variant"] = to_string(v);
    m["data_manifest_checked"] = fs::exists(data_dir / "manifest.json");
    m["data_hash"] = hex(hash_matrix(data.data));
    m["operator_hash"] = hex(setup.ops.hash);
    m["result"] = history_summary(r);
    write_history_csv(out / "history.csv", r.history);
    record_file(m, out / "history.csv");
    write_maps(out, "", r.contrast, setup, c, m);
    write_manifest(out / "manifest.json", m);
    log << to_string(v) << " finished " << r.reports.size() << " iterations in " << fmt("%.1f", r.seconds) << " s";
    if (r.history.back().err) log << ", err " << fmt("%.6f", *r.history.front().err) << " -> " << fmt("%.6f", *r.history.back().err);
    log << "\n";
}

void cmd_analyze(const RunConfig& c, std::ostream& log) {
    validate(c);
    const fs::path out = c.output_dir;
    make_dir(out);
    const Setup setup = prepare(c);
    const ConditionReport cond = condition_number(setup.ops.phi);
    std::string sv = "index,singular_value\n";
    for (Eigen::Index k = 0; k < cond.singular_values.size(); ++k)
        sv += std::to_string(k) + "," + fmt("%.17g", cond.singular_values[k]) + "\n";
    write_text(out / "singular_values.csv", sv);

    json m = base_manifest(c);
    m["operator_hash"] = hex(setup.ops.hash);
    m["phi"] = {{"rows", setup.ops.phi.rows()},
                {"cols", setup.ops.phi.cols()},
                {"kappa", cond.rank_deficient ? json("inf") : json(cond.kappa)},
                {"rank_deficient", cond.rank_deficient},
                {"cache", to_string(setup.ops.cache_status)}};
    record_file(m, out / "singular_values.csv");
    write_manifest(out / "manifest.json", m);
    log << "Phi " << setup.ops.phi.rows() << " x " << setup.ops.phi.cols() << " (" << to_string(c.polarization)
        << "), cache " << to_string(setup.ops.cache_status) << "\n";
    log << "kappa " << (cond.rank_deficient ? std::string("inf") : fmt("%.6e", cond.kappa)) << "\n";
    log << "singular values " << fmt("%.6e", cond.singular_values[0]) << " .. "
        << fmt("%.6e", cond.singular_values[cond.singular_values.size() - 1]) << "\n";
}

void cmd_benchmark(const RunConfig& c, std::ostream& log) {
    validate(c);
    const fs::path out = c.output_dir;
    make_dir(out);
    const Setup setup = prepare(c);
    const DataSet data = synthesize(c, setup);
    const ContrastMap truth = true_contrast(c, setup);
    const InversionProblem problem(setup.ops, setup.incident, data.data);

    const std::vector<VariantRun> runs =
        run_variants(problem, c.inversion, c.variants, &truth, progress(log, c.inversion.max_iterations));

    json m = base_manifest(c);
    m["data_hash"] = hex(hash_matrix(data.data));
    m["operator_hash"] = hex(setup.ops.hash);
    write_data_csv(out / "data.csv", data);
    write_text(out / "err.csv", format_err_table(runs));
    write_text(out / "summary.csv", format_benchmark_summary(runs));
    for (const char* f : {"data.csv", "err.csv", "summary.csv"}) record_file(m, out / f);
    for (const auto& r : runs) {
        const std::string name = to_string(r.variant);
        const std::string prefix = name + "_";
        m["results"][name] = history_summary(r.result);
        write_history_csv(out / (prefix + "history.csv"), r.result.history);
        record_file(m, out / (prefix + "history.csv"));
        write_maps(out, prefix, r.result.contrast, setup, c, m);
    }
    const Real overhead = cc_overhead_percent(runs);
    if (std::isfinite(overhead)) m["cc_overhead_percent"] = overhead;
    write_manifest(out / "manifest.json", m);
    log << format_benchmark_summary(runs);
}

void dispatch(const RunConfig& c, std::ostream& log) {
    switch (c.mode) {
        case Mode::Forward: return cmd_forward(c, log);
        case Mode::Invert: return cmd_invert(c, log);
        case Mode::Analyze: return cmd_analyze(c, log);
        case Mode::Benchmark: return cmd_benchmark(c, log);
    }
}

}  // namespace ccsi::cli

#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "commands.hpp"

using namespace ccsi;

namespace {

struct Flags {
    std::string config;
    std::vector<std::string> sets;
    std::string output, data, variant, polarization, scene;
    std::vector<std::string> variants;
    int iterations = -1;
    double noise = -1.0;
    long long seed = -1;
    double delta = 0.0;
    double eps = 0.0;
};

void add_common(CLI::App* sub, Flags& f) {
    sub->add_option("-c,--config", f.config, "key = value configuration file")->check(CLI::ExistingFile);
    sub->add_option("-s,--set", f.sets, "override one configuration key, KEY=VALUE (repeatable)");
    sub->add_option("-o,--output", f.output, "output directory (output_dir)");
    sub->add_option("--polarization", f.polarization, "TM or TE");
    sub->add_option("--delta", f.delta, "inversion cell size in meters (delta_m)");
    sub->add_option("--eps", f.eps, "object relative permittivity (object_eps_rel)");
    sub->add_option("--scene", f.scene, "scene file (scene_file)");
}

/// File values first, then --set entries, then the dedicated flags.
KeyValueFile overrides(const Flags& f) {
    KeyValueFile kv = KeyValueFile::parse("", "<command line>");
    for (const auto& s : f.sets) {
        const auto eq = s.find('=');
        if (eq == std::string::npos) throw Error(ErrorCode::ConfigInvalid, "--set expects KEY=VALUE, got '" + s + "'");
        kv.set(s.substr(0, eq), s.substr(eq + 1));
    }
    const auto put = [&kv](const char* key, const std::string& v) {
        if (!v.empty()) kv.set(key, v);
    };
    put("output_dir", f.output);
    put("data_dir", f.data);
    put("polarization", f.polarization);
    put("scene_file", f.scene);
    put("variant", f.variant);
    if (!f.variants.empty()) {
        std::string joined;
        for (const auto& v : f.variants) joined += v + " ";
        kv.set("variants", joined);
    }
    if (f.iterations >= 0) kv.set("max_iterations", std::to_string(f.iterations));
    if (f.noise >= 0.0) kv.set("noise_level", std::to_string(f.noise));
    if (f.seed >= 0) kv.set("noise_seed", std::to_string(f.seed));
    if (f.delta > 0.0) kv.set("delta_m", std::to_string(f.delta));
    if (f.eps > 0.0) kv.set("object_eps_rel", std::to_string(f.eps));
    return kv;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"2-D contrast source inversion workbench: forward data, CSI / MR-CSI / CC-CSI inversion, "
                 "operator analysis and benchmarks.\nExit codes: 0 ok, 2 invalid input, 3 IO, 4 numeric failure."};
    app.require_subcommand(1);
    Flags f;

    auto* forward = app.add_subcommand("forward", "synthesize incident fields and measurement data");
    add_common(forward, f);
    forward->add_option("--noise", f.noise, "noise level zeta in [0, 1)");
    forward->add_option("--seed", f.seed, "noise seed");

    auto* invert = app.add_subcommand("invert", "reconstruct the contrast from a data directory");
    add_common(invert, f);
    invert->add_option("-d,--data", f.data, "directory written by 'forward' (data_dir)");
    invert->add_option("--variant", f.variant, "CSI, MRCSI or CCCSI");
    invert->add_option("-n,--iterations", f.iterations, "iteration budget (max_iterations)");

    auto* analyze = app.add_subcommand("analyze", "measurement-matrix size and condition number");
    add_common(analyze, f);

    auto* bench = app.add_subcommand("benchmark", "run several variants on identical data");
    add_common(bench, f);
    bench->add_option("--variants", f.variants, "variants to compare (default CSI MRCSI CCCSI)");
    bench->add_option("-n,--iterations", f.iterations, "iteration budget per variant");
    bench->add_option("--noise", f.noise, "noise level zeta in [0, 1)");
    bench->add_option("--seed", f.seed, "noise seed");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    try {
        RunConfig base;
        if (forward->parsed()) base.mode = Mode::Forward;
        if (invert->parsed()) base.mode = Mode::Invert;
        if (analyze->parsed()) base.mode = Mode::Analyze;
        if (bench->parsed()) {
            base.mode = Mode::Benchmark;
            base.variants = {Variant::CSI, Variant::MRCSI, Variant::CCCSI};
        }
        const Mode mode = base.mode;
        RunConfig config = f.config.empty() ? base : apply_config(KeyValueFile::load(f.config), base);
        config = apply_config(overrides(f), config);
        config.mode = mode;
        cli::dispatch(config, std::cout);
        return 0;
    } catch (const Error& e) {
        std::cerr << "error [" << to_string(e.code()) << "]: " << e.what() << "\n";
        return cli::exit_code(e.code());
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 4;
    }
}

#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "ccsi/forward.hpp"
#include "ccsi/inversion.hpp"
#include "ccsi/keyvalue.hpp"
#include "ccsi/operators.hpp"
#include "ccsi/scene.hpp"

namespace ccsi {

enum class Mode { Forward, Invert, Analyze, Benchmark };
const char* to_string(Mode m);

/// Everything one run needs, in SI units. Keys of the config file carry the unit in their name:
///
///   frequency_hz = 3e8               polarization = TM
///   extent_m = -3.6 3.6 -3.6 3.6     delta_m = 0.03       pml_cells = 10
///   domain_m = -1.5 1.5 -1.5 1.5     refine_factor = 2
///   stations = 36                    station_radius_m = 3.0
///   scene_file = path | object_eps_rel = 2.0 + object_sigma_s_per_m = 0.01
///                                    (or object_contrast_imag = -0.6)
///   noise_level = 0.1                noise_seed = 7
///   variant = CCCSI                  variants = CSI MRCSI CCCSI   (benchmark)
///   max_iterations = 2048            cost_tolerance = 0
///   brent_tolerance = 1e-6           brent_max_evaluations = 100
///   constraints = true               cross_term = true
///   output_dir = out                 data_dir = out      cache_dir = (empty)
///   checkpoint_every = 128           ground_truth = true
struct RunConfig {
    Mode mode = Mode::Forward;
    Real freq_hz = 3e8;
    Polarization polarization = Polarization::TM;
    Rect extent{-3.6, 3.6, -3.6, 3.6};
    Real delta_m = 0.03;
    int pml_cells = 10;
    Rect domain{-1.5, 1.5, -1.5, 1.5};
    int refine_factor = 2;
    int stations = 36;
    Real station_radius_m = 3.0;
    std::filesystem::path scene_file;
    Real object_eps_rel = 2.0;
    std::optional<Real> object_sigma;
    Real object_contrast_imag = -0.6;
    NoiseModel noise;
    std::vector<Variant> variants{Variant::CCCSI};
    InversionOptions inversion;
    std::filesystem::path output_dir = "out";
    std::filesystem::path data_dir;  // empty: same as output_dir
    std::filesystem::path cache_dir;
    int checkpoint_every = 128;
    bool ground_truth = true;

    /// Conductivity of the object (explicit, or from the imaginary contrast at freq_hz).
    Real sigma() const;
    Scene scene() const;
    std::vector<Point> station_positions() const;
    std::filesystem::path data_path() const { return data_dir.empty() ? output_dir : data_dir; }
};

/// Applies the entries of `kv` on top of `base`. Unknown keys are rejected with their line.
RunConfig apply_config(const KeyValueFile& kv, RunConfig base = {});
/// Mode-specific checks; throws ConfigInvalid naming the offending field.
void validate(const RunConfig& config);
/// Canonical `key = value` echo of every field, readable by apply_config.
std::string format_config(const RunConfig& config);

/// Hash of everything that fixes the data geometry: grid, domain, stations, frequency, polarization.
std::uint64_t geometry_hash(const RunConfig& config);

/// Inversion grid and background operators for a config.
struct Setup {
    GridSpec grid;
    std::vector<Point> stations;
    OperatorSet ops;
    MatrixXc incident;  // N_D x P
    double seconds = 0.0;
};

/// Builds the inversion grid (accuracy rule checked against the scene's largest permittivity),
/// the background operator set and the incident fields.
Setup prepare(const RunConfig& config);

/// Scattered data on the refined grid with the configured noise added.
DataSet synthesize(const RunConfig& config, const Setup& setup);

/// Ground-truth contrast of the configured scene on the inversion domain.
ContrastMap true_contrast(const RunConfig& config, const Setup& setup);

struct VariantRun {
    Variant variant = Variant::CCCSI;
    RunResult result;
    double seconds_per_iteration() const;
};

/// Every variant on the same problem, options and truth, one after the other.
std::vector<VariantRun> run_variants(const InversionProblem& problem, const InversionOptions& options,
                                     const std::vector<Variant>& variants, const ContrastMap* truth,
                                     const std::function<void(Variant, const IterationReport&)>& on_iteration = {});

/// (t_CC - t_CSI) / t_CSI * 100 per iteration; NaN unless both variants ran.
Real cc_overhead_percent(const std::vector<VariantRun>& runs);

/// n, err_<variant>... one row per iteration (row 0 = initialization).
std::string format_err_table(const std::vector<VariantRun>& runs);
/// variant, iterations, final_err, total_seconds, seconds_per_iteration, overhead_vs_csi_percent
std::string format_benchmark_summary(const std::vector<VariantRun>& runs);

}  // namespace ccsi

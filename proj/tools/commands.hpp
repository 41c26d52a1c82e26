#pragma once

#include <iosfwd>

#include "ccsi/experiment.hpp"

namespace ccsi::cli {

/// 0 success, 2 validation, 3 IO, 4 numeric.
int exit_code(ErrorCode code);

/// Incident fields, measurement data (CSV + binary twin), scene echo and manifest.
void cmd_forward(const RunConfig& config, std::ostream& log);
/// One variant on the data in data_dir: history, contrast grids and maps, manifest.
void cmd_invert(const RunConfig& config, std::ostream& log);
/// Phi dimensions, condition number, singular values and cache status.
void cmd_analyze(const RunConfig& config, std::ostream& log);
/// Every configured variant on identical data: combined err table and a timing summary.
void cmd_benchmark(const RunConfig& config, std::ostream& log);

void dispatch(const RunConfig& config, std::ostream& log);

}  // namespace ccsi::cli

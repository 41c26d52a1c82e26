#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include <json.hpp>

#include "ccsi/experiment.hpp"

namespace ccsi::cli {

using nlohmann::json;

inline constexpr const char* kVersion = "1.0.0";

std::string hex(std::uint64_t v);
std::uint64_t hash_file(const std::filesystem::path& path);
std::uint64_t hash_matrix(const MatrixXc& m);

/// Config echo, hashes, seed and the modelling choices a rerun has to reproduce.
json base_manifest(const RunConfig& config);

/// Adds {"name": {"bytes": n, "hash": "..."}} under "files".
void record_file(json& manifest, const std::filesystem::path& path);

void write_manifest(const std::filesystem::path& path, const json& manifest);
json read_manifest(const std::filesystem::path& path);

/// Throws ManifestMismatch when the data directory was produced for another geometry.
void check_geometry(const json& data_manifest, const RunConfig& config);

}  // namespace ccsi::cli

#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <istream>
#include <optional>
#include <ostream>

#include "ccsi/types.hpp"

namespace ccsi {

using Magic = std::array<char, 8>;

// Binary complex matrix file, little-endian:
//   8-byte magic, u32 version, u32 bytes per complex scalar (16), u64 rows, u64 cols,
//   u64 content hash, then rows*cols complex128 values row-major as (re, im).
void write_complex_matrix(std::ostream& out, const Magic& magic, std::uint32_t version, const MatrixXc& m,
                          std::uint64_t hash);
void write_complex_matrix(const std::filesystem::path& path, const Magic& magic, std::uint32_t version,
                          const MatrixXc& m, std::uint64_t hash);

struct ComplexMatrixFile {
    MatrixXc matrix;
    std::uint64_t hash = 0;
};

/// nullopt on magic/version mismatch or truncation.
std::optional<ComplexMatrixFile> read_complex_matrix(std::istream& in, const Magic& magic, std::uint32_t version);
std::optional<ComplexMatrixFile> read_complex_matrix(const std::filesystem::path& path, const Magic& magic,
                                                     std::uint32_t version);

template <typename T>
void write_pod(std::ostream& out, const T& v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
bool read_pod(std::istream& in, T& v) {
    in.read(reinterpret_cast<char*>(&v), sizeof(T));
    return static_cast<bool>(in);
}

}  // namespace ccsi

#include "ccsi/matrix_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>

namespace ccsi {

static_assert(std::endian::native == std::endian::little, "binary formats assume a little-endian host");

using RowMajorC = Eigen::Matrix<Complex, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

void write_complex_matrix(std::ostream& out, const Magic& magic, std::uint32_t version, const MatrixXc& m,
                          std::uint64_t hash) {
    out.write(magic.data(), magic.size());
    write_pod(out, version);
    write_pod(out, static_cast<std::uint32_t>(sizeof(Complex)));
    write_pod(out, static_cast<std::uint64_t>(m.rows()));
    write_pod(out, static_cast<std::uint64_t>(m.cols()));
    write_pod(out, hash);
    const RowMajorC rows = m;
    out.write(reinterpret_cast<const char*>(rows.data()), static_cast<std::streamsize>(rows.size() * sizeof(Complex)));
}

void write_complex_matrix(const std::filesystem::path& path, const Magic& magic, std::uint32_t version,
                          const MatrixXc& m, std::uint64_t hash) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
    write_complex_matrix(out, magic, version, m, hash);
    if (!out) throw Error(ErrorCode::Io, "short write on " + path.string());
}

std::optional<ComplexMatrixFile> read_complex_matrix(std::istream& in, const Magic& magic, std::uint32_t version) {
    Magic got{};
    in.read(got.data(), got.size());
    std::uint32_t ver = 0, width = 0;
    std::uint64_t rows = 0, cols = 0;
    ComplexMatrixFile f;
    if (!in || got != magic || !read_pod(in, ver) || ver != version || !read_pod(in, width) ||
        width != sizeof(Complex) || !read_pod(in, rows) || !read_pod(in, cols) || !read_pod(in, f.hash))
        return std::nullopt;
    RowMajorC m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    in.read(reinterpret_cast<char*>(m.data()), static_cast<std::streamsize>(m.size() * sizeof(Complex)));
    if (!in) return std::nullopt;
    f.matrix = m;
    return f;
}

std::optional<ComplexMatrixFile> read_complex_matrix(const std::filesystem::path& path, const Magic& magic,
                                                     std::uint32_t version) {
    std::ifstream in(path, std::ios::binary);
    if (!in) return std::nullopt;
    return read_complex_matrix(in, magic, version);
}

}  // namespace ccsi

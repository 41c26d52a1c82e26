#pragma once

#include <complex>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>
#include <Eigen/Sparse>

namespace ccsi {

using Real = double;
using Complex = std::complex<Real>;

using VectorXr = Eigen::Matrix<Real, Eigen::Dynamic, 1>;
using VectorXc = Eigen::Matrix<Complex, Eigen::Dynamic, 1>;
using MatrixXr = Eigen::Matrix<Real, Eigen::Dynamic, Eigen::Dynamic>;
using MatrixXc = Eigen::Matrix<Complex, Eigen::Dynamic, Eigen::Dynamic>;

using SparseMatrixXc = Eigen::SparseMatrix<Complex>;
using SparseMatrixXr = Eigen::SparseMatrix<Real>;
using TripletC = Eigen::Triplet<Complex>;
using TripletR = Eigen::Triplet<Real>;

namespace constants {
inline constexpr Real kSpeedOfLight = 299792458.0;
inline constexpr Real kVacuumPermittivity = 8.8541878128e-12;
inline constexpr Real kPi = 3.14159265358979323846;
}  // namespace constants

inline Real angular_frequency(Real freq_hz) { return 2.0 * constants::kPi * freq_hz; }
inline Real wavenumber(Real freq_hz) { return angular_frequency(freq_hz) / constants::kSpeedOfLight; }
inline Real wavelength(Real freq_hz) { return constants::kSpeedOfLight / freq_hz; }

enum class Polarization { TM, TE };

inline const char* to_string(Polarization p) { return p == Polarization::TM ? "TM" : "TE"; }
Polarization parse_polarization(const std::string& s);

struct Point {
    Real x = 0.0;
    Real y = 0.0;
};

/// Axis-aligned rectangle [x_min, x_max] x [y_min, y_max] in meters.
struct Rect {
    Real x_min = 0.0;
    Real x_max = 0.0;
    Real y_min = 0.0;
    Real y_max = 0.0;

    bool contains(Point p) const { return p.x >= x_min && p.x <= x_max && p.y >= y_min && p.y <= y_max; }
    Real width() const { return x_max - x_min; }
    Real height() const { return y_max - y_min; }
};

enum class ErrorCode {
    MeshTooCoarse,
    DegenerateExtent,
    DimensionMismatch,
    StationInsideDomain,
    StationInPml,
    SourceInPml,
    SingularStiffness,
    SceneOutsideGrid,
    ZeroTrueContrast,
    ZeroData,
    NumericFailure,
    ConfigInvalid,
    Io,
    ManifestMismatch,
};

const char* to_string(ErrorCode code);

/// Exception carrying a machine-readable category; the CLI maps categories to exit codes.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

}  // namespace ccsi

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "ccsi/grid.hpp"
#include "ccsi/operators.hpp"
#include "ccsi/scene.hpp"
#include "ccsi/types.hpp"

namespace ccsi {

/// Right-hand sides for every station acting as a source, N x P.
MatrixXc source_matrix(const GridSpec& grid, const std::vector<Point>& stations, Real freq_hz);

/// Background fields A_b^-1 s_p over the whole grid, N x P.
MatrixXc incident_fields_full(const OperatorSet& background);
/// Background fields restricted to the domain unknowns, N_D x P.
MatrixXc incident_fields(const OperatorSet& background);

struct SynthesisOptions {
    int refine_factor = 2;
    PmlOptions pml;
};

/// Scattered data f_p = M_S (e_tot,p - e_inc,p) on a grid refined `refine_factor` times
/// relative to `grid`, M x P. Throws MeshTooCoarse if the refined grid cannot resolve the
/// scene's largest permittivity. refine_factor must be >= 2.
MatrixXc synthesize_data(const Scene& scene, const GridSpec& grid, Real freq_hz, const Rect& domain,
                         const std::vector<Point>& stations, const SynthesisOptions& options = {});

/// Same without refinement: data live on exactly the grid used for inversion.
MatrixXc synthesize_data_on_grid(const MediumMap& medium, const GridSpec& grid, Real freq_hz, const Rect& domain,
                                 const std::vector<Point>& stations, const PmlOptions& pml = {});

struct NoiseModel {
    Real level = 0.0;  // zeta
    std::uint64_t seed = 0;
};

/// f + zeta * max_m |f_p,m| * (n1 + i n2) per source, n1/n2 uniform in [-1, 1]. Each source
/// draws from its own substream, so the result does not depend on evaluation order.
MatrixXc add_noise(const MatrixXc& data, const NoiseModel& noise);

/// Uniform draw in [-1, 1) from 53 random bits.
Real uniform_symmetric(std::uint64_t bits);
std::uint64_t substream_seed(std::uint64_t seed, std::uint64_t stream);

struct DataSet {
    Real freq_hz = 0.0;
    Polarization polarization = Polarization::TM;
    std::vector<Point> stations;
    NoiseModel noise;
    int refine_factor = 0;
    MatrixXc data;  // M x P

    int num_sources() const { return static_cast<int>(data.cols()); }
    int num_measurements() const { return static_cast<int>(data.rows()); }
};

// Data CSV:
//   # ccsi-data 1
//   # frequency_hz = <f>
//   # polarization = TM|TE
//   # noise_level = <zeta>
//   # noise_seed = <seed>
//   # refine_factor = <r>
//   # station = <x_m> <y_m>          (one line per station, in source order)
//   p,m,re,im
//   <p>,<m>,<re>,<im>               (printed with 17 significant digits)
void write_data_csv(const std::filesystem::path& path, const DataSet& data);
DataSet read_data_csv(const std::filesystem::path& path);
std::string format_data_csv(const DataSet& data);
DataSet parse_data_csv(const std::string& text, const std::string& origin = "<data>");

/// Binary twin of the data matrix (M x P) in the complex matrix file format.
void write_data_binary(const std::filesystem::path& path, const MatrixXc& data);
MatrixXc read_data_binary(const std::filesystem::path& path);

/// Incident fields on the inversion domain (N_D x P), same format with its own magic.
void write_incident_fields(const std::filesystem::path& path, const MatrixXc& incident, std::uint64_t hash);
MatrixXc read_incident_fields(const std::filesystem::path& path);

}  // namespace ccsi

#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "ccsi/forward.hpp"
#include "support.hpp"

using namespace ccsi;

namespace {

constexpr Real kFreq = 3e8;

struct Geometry {
    GridSpec grid = build_grid({-1.5, 1.5, -1.5, 1.5}, 0.05, 10, Polarization::TM, kFreq, 1.0);
    Rect domain{-0.4, 0.4, -0.4, 0.4};
    std::vector<Point> stations = circular_stations(8, 0.8);
};

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

TEST_CASE("empty scene produces exactly zero data") {
    const Geometry g;
    const MatrixXc f = synthesize_data(Scene{}, g.grid, kFreq, g.domain, g.stations);
    CHECK(f.rows() == 8);
    CHECK(f.cols() == 8);
    CHECK(f.norm() == 0.0);
    const MatrixXc same = synthesize_data_on_grid(MediumMap::background(g.grid), g.grid, kFreq, g.domain, g.stations);
    CHECK(same.norm() == 0.0);
}

TEST_CASE("synthesis refuses meshes that cannot resolve the scene") {
    const Geometry g;
    Scene s;
    s.eps_rel_object = 40.0;
    s.shapes = {Shape::disk({0.0, 0.0}, 0.2)};
    try {
        synthesize_data(s, g.grid, kFreq, g.domain, g.stations);
        FAIL("expected MeshTooCoarse");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::MeshTooCoarse);
    }
    SynthesisOptions one;
    one.refine_factor = 1;
    CHECK_THROWS_AS(synthesize_data(Scene{}, g.grid, kFreq, g.domain, g.stations, one), Error);
}

TEST_CASE("refined-grid data agree with matched-grid data to discretization level") {
    const Geometry g;
    Scene s;
    s.eps_rel_object = 1.5;
    s.sigma_object = 0.003;
    s.shapes = {Shape::disk({0.05, 0.0}, 0.25)};
    const MatrixXc fine = synthesize_data(s, g.grid, kFreq, g.domain, g.stations);
    const MatrixXc coarse = synthesize_data_on_grid(rasterize_medium(s, g.grid), g.grid, kFreq, g.domain, g.stations);
    const Real rel = (fine - coarse).norm() / fine.norm();
    MESSAGE("refined vs matched relative difference " << rel);
    CHECK(rel > 1e-6);  // different discretizations, no inverse crime
    CHECK(rel < 0.3);
}

TEST_CASE("measurement data are reciprocal") {
    // f(m, p) = f(p, m) for a scatterer between co-located sources and receivers
    const Geometry g;
    Scene s;
    s.eps_rel_object = 1.6;
    s.sigma_object = 0.004;
    s.shapes = {Shape::disk({0.1, -0.05}, 0.2)};
    const MatrixXc f = synthesize_data_on_grid(rasterize_medium(s, g.grid), g.grid, kFreq, g.domain, g.stations);
    CHECK((f - f.transpose()).norm() <= 1e-10 * f.norm());
}

TEST_CASE("incident fields equal the restricted full-grid solves") {
    const Geometry g;
    const OperatorSet ops = build_operator_set(g.grid, MediumMap::background(g.grid), kFreq, g.domain, g.stations);
    const MatrixXc full = incident_fields_full(ops);
    const MatrixXc inc = incident_fields(ops);
    CHECK(inc.rows() == ops.domain_size());
    CHECK(inc.cols() == 8);
    for (int k = 0; k < ops.domain_size(); k += 37) CHECK(inc(k, 3) == full(ops.index.unknowns[k], 3));
}

TEST_CASE("noise respects its bound, statistics and seed") {
    std::mt19937_64 rng(1);
    const MatrixXc f = testing::random_matrix(rng, 36, 36);
    const NoiseModel model{0.1, 7};
    const MatrixXc noisy = add_noise(f, model);
    const MatrixXc delta = noisy - f;
    Real sum_re = 0.0, sum_sq = 0.0;
    for (int p = 0; p < 36; ++p) {
        const Real bound = 0.1 * std::sqrt(2.0) * f.col(p).cwiseAbs().maxCoeff();
        for (int m = 0; m < 36; ++m) {
            CHECK(std::abs(delta(m, p)) <= bound);
            const Real scale = 0.1 * f.col(p).cwiseAbs().maxCoeff();
            sum_re += delta(m, p).real() / scale;
            sum_sq += std::norm(delta(m, p)) / (scale * scale);
        }
    }
    // n1, n2 uniform in [-1, 1]: mean 0, E|n1 + i n2|^2 = 2/3
    const Real count = 36.0 * 36.0;
    CHECK(std::abs(sum_re / count) < 4.0 * std::sqrt(1.0 / 3.0 / count));
    CHECK(sum_sq / count == doctest::Approx(2.0 / 3.0).epsilon(0.05));

    CHECK(add_noise(f, model) == noisy);
    CHECK(add_noise(f, {0.1, 8}) != noisy);
    CHECK(add_noise(f, {0.0, 7}) == f);
    CHECK_THROWS_AS(add_noise(f, {-0.1, 7}), Error);

    // per-source substreams: dropping sources leaves the others untouched
    const MatrixXc head = add_noise(f.leftCols(5), model);
    CHECK(head == noisy.leftCols(5));
}

TEST_CASE("uniform draws cover [-1, 1)") {
    CHECK(uniform_symmetric(0) == -1.0);
    CHECK(uniform_symmetric(~std::uint64_t{0}) < 1.0);
    CHECK(uniform_symmetric(~std::uint64_t{0}) > 0.9999999);
    CHECK(substream_seed(7, 0) != substream_seed(7, 1));
    CHECK(substream_seed(7, 0) != substream_seed(8, 0));
}

TEST_CASE("data CSV round trips exactly and binary twin matches") {
    std::mt19937_64 rng(2);
    DataSet d;
    d.freq_hz = 3e8;
    d.polarization = Polarization::TE;
    d.stations = circular_stations(4, 3.0);
    d.noise = {0.1, 42};
    d.refine_factor = 2;
    d.data = testing::random_matrix(rng, 8, 4) * 1e-3;
    const auto dir = std::filesystem::temp_directory_path() / "ccsi_data_test";
    std::filesystem::create_directories(dir);
    write_data_csv(dir / "data.csv", d);
    const DataSet back = read_data_csv(dir / "data.csv");
    CHECK(back.data == d.data);
    CHECK(back.polarization == Polarization::TE);
    CHECK(back.freq_hz == 3e8);
    CHECK(back.noise.seed == 42);
    CHECK(back.stations.size() == 4);
    CHECK(back.stations[1].y == d.stations[1].y);
    write_data_binary(dir / "data.bin", d.data);
    CHECK(read_data_binary(dir / "data.bin") == d.data);

    // same content twice gives byte-identical files
    write_data_csv(dir / "again.csv", d);
    CHECK(slurp(dir / "data.csv") == slurp(dir / "again.csv"));
    std::filesystem::remove_all(dir);
}

TEST_CASE("malformed data files are reported") {
    CHECK_THROWS_AS(parse_data_csv("p,m,re,im\n0,0,1,0\n"), Error);  // no header tag
    const std::string head = "# ccsi-data 1\n# frequency_hz = 3e8\n# polarization = TM\n# station = 1 0\n";
    CHECK_NOTHROW(parse_data_csv(head + "p,m,re,im\n0,0,1,0\n"));
    CHECK_THROWS_AS(parse_data_csv(head + "p,m,re,im\n0,0,1\n"), Error);
    CHECK_THROWS_AS(parse_data_csv(head + "p,m,re,im\n0,1,1,0\n"), Error);  // m = 0 missing
    CHECK_THROWS_AS(parse_data_csv(head + "p,m,re,im\n0,0,1,0\n1,0,1,0\n"), Error);  // 2 sources, 1 station
}

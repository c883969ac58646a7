#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <unistd.h>
#include <cstring>
#include <nlohmann/json.hpp>

#include "sscb/errors.hpp"
#include "sscb/fft.hpp"
#include "sscb/simdata.hpp"
#include "support.hpp"

using namespace sscb;
using namespace sscb::testing;
namespace fs = std::filesystem;

namespace {

void spit(const fs::path& p, const std::string& s) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  out << s;
}

}  // namespace

TEST_CASE("GRF normalization and determinism") {
  GrfConfig cfg;
  cfg.n = 32;
  cfg.seed = 5;
  const RealField a = simulate_convergence(cfg);
  const RealField b = simulate_convergence(cfg);
  CHECK(a == b);
  CHECK(std::abs(a.mean()) < 1e-12);
  double var = 0.0;
  for (double v : a.values()) var += v * v;
  CHECK(std::abs(var / static_cast<double>(a.size()) - 1.0) < 1e-12);
  cfg.seed = 6;
  CHECK(!(simulate_convergence(cfg) == a));
  cfg.n = 31;
  CHECK_THROWS_AS(simulate_convergence(cfg), InvalidGridError);
}

TEST_CASE("GRF power spectrum slope") {
  const std::size_t n = 256;
  GrfConfig cfg;
  cfg.n = n;
  cfg.beta = 2.0;
  std::map<int, std::pair<double, int>> bins;
  Rng rng(61);
  for (int real = 0; real < 50; ++real) {
    const RealField x = simulate_convergence(cfg, rng);
    const auto spec = fft::forward(x);
    for (std::size_t r = 0; r < n; ++r)
      for (std::size_t c = 0; c < n; ++c) {
        const double k = std::hypot(dft_frequency(r, n), dft_frequency(c, n));
        const int bin = static_cast<int>(std::lround(k));
        if (bin < 16 || bin > 64) continue;
        bins[bin].first += std::norm(spec[r * n + c]);
        bins[bin].second += 1;
      }
  }
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int m = 0;
  for (const auto& [bin, acc] : bins) {
    const double lx = std::log(static_cast<double>(bin));
    const double ly = std::log(acc.first / acc.second);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
    ++m;
  }
  const double slope = (m * sxy - sx * sy) / (m * sxx - sx * sx);
  CHECK(std::abs(slope + cfg.beta) <= 0.2);
}

TEST_CASE("observations") {
  const std::size_t n = 16;
  const MassMappingOperator op(n);
  Rng rng(62);
  const RealField kappa = random_field(n, n, rng);
  Rng r1(1);
  const ComplexField clean = make_observation(kappa, op, GaussianNoiseModel(0.0), r1);
  CHECK(clean == op.forward(kappa));
  CHECK(max_abs_diff(op.adjoint(clean).values(), zero_mean(kappa).values()) < 1e-12);

  Rng r2(2), r3(2);
  const ComplexField noisy = make_observation(RealField(n, n, 1.5), op, GaussianNoiseModel(0.5), r2);
  const ComplexField eps = add_noise(ComplexField(n, n), GaussianNoiseModel(0.5), r3);
  for (std::size_t i = 0; i < noisy.size(); ++i) CHECK(std::abs(noisy[i] - eps[i]) < 1e-12);
}

TEST_CASE("field file round trips") {
  TempDir tmp;
  Rng rng(63);
  const RealField x = random_field(5, 7, rng);
  write_field(tmp.path / "x.sscb", x);
  CHECK(read_real_field(tmp.path / "x.sscb") == x);

  ComplexField z(3, 2);
  for (std::size_t i = 0; i < z.size(); ++i) z[i] = {static_cast<double>(i), -0.5 * static_cast<double>(i)};
  write_field(tmp.path / "z.sscb", z);
  CHECK(read_complex_field(tmp.path / "z.sscb") == z);
  CHECK(std::holds_alternative<ComplexField>(read_field(tmp.path / "z.sscb")));

  const std::string bytes = slurp(tmp.path / "z.sscb");
  REQUIRE(bytes.size() == 17 + 6 * 16);
  CHECK(bytes.substr(0, 8) == "SSCBFLD1");
  CHECK(static_cast<unsigned char>(bytes[8]) == 3);
  CHECK(static_cast<unsigned char>(bytes[12]) == 2);
  CHECK(static_cast<unsigned char>(bytes[16]) == 1);
  double second_re = 0.0, second_im = 0.0;
  std::memcpy(&second_re, bytes.data() + 17 + 16, 8);
  std::memcpy(&second_im, bytes.data() + 17 + 24, 8);
  CHECK(second_re == 1.0);
  CHECK(second_im == -0.5);

  spit(tmp.path / "trunc.sscb", bytes.substr(0, bytes.size() - 3));
  CHECK_THROWS_AS(read_field(tmp.path / "trunc.sscb"), FormatError);
  spit(tmp.path / "short.sscb", bytes.substr(0, 10));
  CHECK_THROWS_AS(read_field(tmp.path / "short.sscb"), FormatError);
  std::string bad = bytes;
  bad[0] = 'X';
  spit(tmp.path / "magic.sscb", bad);
  CHECK_THROWS_AS(read_field(tmp.path / "magic.sscb"), FormatError);
  bad = bytes;
  bad[16] = 7;
  spit(tmp.path / "dtype.sscb", bad);
  CHECK_THROWS_AS(read_field(tmp.path / "dtype.sscb"), FormatError);
  bad = bytes;
  for (int i = 8; i < 16; ++i) bad[static_cast<std::size_t>(i)] = static_cast<char>(0xFF);
  spit(tmp.path / "huge.sscb", bad);
  CHECK_THROWS_AS(read_field(tmp.path / "huge.sscb"), FormatError);
  CHECK_THROWS_AS(read_real_field(tmp.path / "z.sscb"), FormatError);
  CHECK_THROWS_AS(read_field(tmp.path / "missing.sscb"), IoError);
}

TEST_CASE("manifest JSON") {
  DatasetManifest m;
  m.seed_root = 99;
  const nlohmann::json j = m;
  for (const char* key : {"grid_n", "noise_sigma", "grf", "seed_root", "n_calibration", "n_test", "format_version"})
    CHECK(j.contains(key));
  CHECK(j.at("grf").contains("beta"));
  CHECK(j.at("grf").contains("k0"));
  CHECK(j.get<DatasetManifest>() == m);
  nlohmann::json extra = j;
  extra["colour"] = 1;
  CHECK_THROWS_AS(extra.get<DatasetManifest>(), ConfigError);
}

TEST_CASE("dataset storage, regeneration and ground-truth audit") {
  TempDir tmp;
  DatasetManifest m;
  m.grid_n = 16;
  m.n_calibration = 6;
  m.n_test = 4;
  m.seed_root = 17;
  const Dataset ds = Dataset::generate(m, tmp.path, 2);
  CHECK(fs::exists(Dataset::manifest_path(tmp.path)));
  const Dataset opened = Dataset::open(tmp.path);
  CHECK(opened.manifest() == m);
  CHECK(opened.size(Split::Calibration) == 6);
  CHECK(opened.size(Split::Test) == 4);

  const Sample s = generate_sample(m, Split::Test, 2);
  CHECK(opened.observation(Split::Test, 2) == s.gamma);
  CHECK(opened.ground_truth_reads() == 0);
  CHECK(opened.ground_truth(Split::Test, 2) == s.kappa);
  CHECK(opened.ground_truth_reads() == 1);
  opened.reset_ground_truth_reads();
  CHECK(opened.ground_truth_reads() == 0);
  CHECK_THROWS_AS(opened.observation(Split::Test, 4), ConfigError);

  // Splits and indices draw from different substreams.
  CHECK(!(generate_sample(m, Split::Calibration, 2).kappa == s.kappa));
  CHECK(!(generate_sample(m, Split::Test, 1).kappa == s.kappa));

  CHECK(opened.verify_regeneration());
  const std::string before = slurp(opened.gamma_path(Split::Calibration, 3));
  fs::remove_all(tmp.path / "calibration");
  fs::remove_all(tmp.path / "test");
  Dataset::generate(opened.manifest(), tmp.path, 1);
  CHECK(slurp(opened.gamma_path(Split::Calibration, 3)) == before);
  CHECK(opened.verify_regeneration(3));

  write_field(opened.kappa_path(Split::Test, 0), RealField(16, 16));
  CHECK(!opened.verify_regeneration());
}

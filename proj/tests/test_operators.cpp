#include <doctest.h>

#include <cmath>
#include <numeric>

#include "sscb/errors.hpp"
#include "sscb/fft.hpp"
#include "sscb/operators.hpp"
#include "support.hpp"

using namespace sscb;
using namespace sscb::testing;

TEST_CASE("frequency grid layout") {
  const FrequencyGrid g4 = make_frequency_grid(4);
  const int expected[] = {0, 1, -2, -1};
  for (std::size_t c = 0; c < 4; ++c) {
    CHECK(g4.kx_at(0, c) == expected[c]);
    CHECK(g4.ky_at(c, 0) == expected[c]);
    CHECK(g4.kx_at(3, c) == expected[c]);
  }
  const FrequencyGrid g2 = make_frequency_grid(2);
  CHECK(g2.kx_at(0, 0) == 0);
  CHECK(g2.kx_at(0, 1) == -1);
  for (std::size_t n : {2u, 8u, 64u}) {
    const FrequencyGrid g = make_frequency_grid(n);
    CHECK(g.kx_at(0, 0) == 0);
    CHECK(g.ky_at(0, 0) == 0);
  }
  CHECK_THROWS_AS(make_frequency_grid(5), InvalidGridError);
  CHECK_THROWS_AS(make_frequency_grid(0), InvalidGridError);
  CHECK_THROWS_AS(make_frequency_grid(1), InvalidGridError);
}

TEST_CASE("lensing kernel values") {
  const std::size_t n = 8;
  const FrequencyGrid g = make_frequency_grid(n);
  const ComplexField d = lensing_kernel(g);
  CHECK(d(0, 0) == Complex{0.0, 0.0});
  CHECK(std::abs(d(0, 1) - Complex{1.0, 0.0}) < 1e-15);   // kx=1, ky=0
  CHECK(std::abs(d(1, 0) - Complex{-1.0, 0.0}) < 1e-15);  // kx=0, ky=1
  CHECK(std::abs(d(1, 1) - Complex{0.0, 1.0}) < 1e-15);   // kx=ky=1
  for (std::size_t i = 1; i < d.size(); ++i) CHECK(std::abs(std::abs(d[i]) - 1.0) < 1e-14);
}

TEST_CASE("fft is unitary and round trips") {
  Rng rng(1);
  const ComplexField x = random_complex_field(16, 16, rng);
  const auto spec = fft::forward(x);
  double ex = 0.0, es = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    ex += std::norm(x[i]);
    es += std::norm(spec[i]);
  }
  CHECK(rel_err(ex, es) < 1e-12);
  const ComplexField back = fft::inverse(spec, x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) CHECK(std::abs(back[i] - x[i]) < 1e-12);
}

TEST_CASE("mass-mapping operator against the dense DFT oracle") {
  const std::size_t n = 4;
  const Dense a = dense_lensing_operator(n);
  const MassMappingOperator op(n);
  Rng rng(2);
  for (int trial = 0; trial < 10; ++trial) {
    const RealField x = random_field(n, n, rng);
    const Measurement y = op.apply(x);
    const auto y_ref = a.apply(x.values());
    CHECK(max_abs_diff(y, y_ref) < 1e-12);

    Measurement z(op.measurement_size());
    std::normal_distribution<double> nd;
    for (double& v : z) v = nd(rng);
    CHECK(max_abs_diff(op.adjoint(z).values(), a.apply_t(z)) < 1e-12);
  }

  const Dense g = a.gram();
  const double m = static_cast<double>(n * n);
  double worst = 0.0;
  for (std::size_t i = 0; i < n * n; ++i)
    for (std::size_t j = 0; j < n * n; ++j) {
      const double proj = (i == j ? 1.0 : 0.0) - 1.0 / m;
      worst = std::max(worst, std::abs(g(i, j) - proj));
    }
  CHECK(worst < 1e-12);
}

TEST_CASE("adjoint identity and isometry off DC") {
  const std::size_t n = 8;
  const MassMappingOperator op(n);
  Rng rng(3);
  for (int trial = 0; trial < 100; ++trial) {
    const RealField x = random_field(n, n, rng);
    const ComplexField y = random_complex_field(n, n, rng);
    const double lhs = dot(op.apply(x), y.to_components());
    const double rhs = dot(x.values(), op.adjoint(y).values());
    CHECK(rel_err(lhs, rhs) < 1e-10);
    const double na = squared_norm(op.apply(x));
    const double nz = squared_norm(zero_mean(x).values());
    CHECK(rel_err(na, nz) < 1e-10);
  }
}

TEST_CASE("pseudoinverse identities") {
  const std::size_t n = 8;
  const MassMappingOperator op(n);
  Rng rng(4);
  const RealField x = random_field(n, n, rng);
  const RealField xz = zero_mean(x);
  CHECK(max_abs_diff(op.pseudoinverse(op.apply(xz)).values(), xz.values()) < 1e-12);
  CHECK(max_abs_diff(op.apply(op.pseudoinverse(op.apply(x))), op.apply(x)) < 1e-12);
  CHECK(max_abs_diff(op.pseudoinverse(op.apply(x)).values(), xz.values()) < 1e-12);
  const ComplexField zero(n, n);
  CHECK(squared_norm(op.pseudoinverse(zero.to_components()).values()) == 0.0);
  REQUIRE(op.pseudoinverse_gram_trace().has_value());
  CHECK(*op.pseudoinverse_gram_trace() == doctest::Approx(static_cast<double>(n * n - 1)));
}

TEST_CASE("forward of trivial inputs") {
  const MassMappingOperator op(8);
  CHECK(squared_norm(op.apply(RealField(8, 8))) == 0.0);
  CHECK(squared_norm(op.apply(RealField(8, 8, 3.5))) < 1e-26);
  CHECK_THROWS_AS(op.apply(RealField(8, 6)), DimensionMismatchError);
  CHECK_THROWS_AS(op.adjoint(Measurement(10)), DimensionMismatchError);
  CHECK_THROWS_AS(MassMappingOperator(7), InvalidGridError);
}

TEST_CASE("noise model") {
  CHECK_THROWS_AS(GaussianNoiseModel(-1.0), ConfigError);
  CHECK_THROWS_AS(GaussianNoiseModel(std::nan("")), ConfigError);
  const GaussianNoiseModel noise(0.5);
  CHECK(noise.trace(128) == doctest::Approx(32.0));

  const Measurement y(100000, 1.0);
  Rng a(9), b(9);
  const Measurement n1 = add_noise(y, noise, a);
  const Measurement n2 = add_noise(y, noise, b);
  CHECK(n1 == n2);
  double mean = 0.0;
  for (double v : n1) mean += v - 1.0;
  mean /= static_cast<double>(n1.size());
  double var = 0.0;
  for (double v : n1) var += (v - 1.0 - mean) * (v - 1.0 - mean);
  const double sd = std::sqrt(var / static_cast<double>(n1.size() - 1));
  CHECK(std::abs(sd - 0.5) / 0.5 < 0.01);

  Rng c(9);
  CHECK(add_noise(y, GaussianNoiseModel(1e-300), c) == y);
}

TEST_CASE("identity operator") {
  const IdentityOperator op(4);
  Rng rng(5);
  const RealField x = random_field(4, 4, rng);
  CHECK(max_abs_diff(op.apply(x), x.values()) == 0.0);
  CHECK(max_abs_diff(op.adjoint(x.data()).values(), x.values()) == 0.0);
  CHECK(max_abs_diff(op.pseudoinverse(x.data()).values(), x.values()) == 0.0);
  CHECK(op.measurement_size() == 16);
}

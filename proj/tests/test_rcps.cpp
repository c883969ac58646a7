#include <doctest.h>

#include <algorithm>
#include <boost/math/distributions/binomial.hpp>
#include <boost/multiprecision/cpp_bin_float.hpp>
#include <cmath>
#include <random>

#include "sscb/errors.hpp"
#include "sscb/rcps.hpp"
#include "sscb/rng.hpp"

using namespace sscb;

namespace {

double enumerate_cdf(int k, int n, double p) {
  double total = 0.0;
  for (int mask = 0; mask < (1 << n); ++mask) {
    const int ones = __builtin_popcount(static_cast<unsigned>(mask));
    if (ones <= k) total += std::pow(p, ones) * std::pow(1.0 - p, n - ones);
  }
  return total;
}

// Direct summation in 50-digit arithmetic.
double precise_cdf(long k, long n, double p) {
  using boost::multiprecision::cpp_bin_float_50;
  const cpp_bin_float_50 pp(p);
  const cpp_bin_float_50 odds = pp / (1 - pp);
  cpp_bin_float_50 term = boost::multiprecision::pow(1 - pp, n);
  cpp_bin_float_50 total = 0;
  for (long i = 0; i <= k; ++i) {
    total += term;
    term *= cpp_bin_float_50(n - i) / cpp_bin_float_50(i + 1) * odds;
  }
  return static_cast<double>(total);
}

double reference_ucb(long k, long n, double delta) {
  if (k >= n) return 1.0;
  return boost::math::binomial_distribution<>::find_upper_bound_on_p(
      static_cast<double>(n), static_cast<double>(k), delta);
}

}  // namespace

TEST_CASE("binomial cdf small cases") {
  CHECK(binomial_cdf(5, 5, 0.3) == 1.0);
  CHECK(binomial_cdf(0, 9, 0.0) == 1.0);
  CHECK(binomial_cdf(4, 9, 0.0) == 1.0);
  CHECK(binomial_cdf(1, 3, 0.5) == doctest::Approx(0.5).epsilon(1e-15));
  for (int n = 1; n <= 10; ++n)
    for (int k = 0; k <= n; ++k)
      for (double p : {0.05, 0.3, 0.5, 0.77})
        CHECK(std::abs(binomial_cdf(k, n, p) - enumerate_cdf(k, n, p)) < 1e-13);
  CHECK_THROWS_AS(binomial_cdf(1, 3, 1.5), ConfigError);
  CHECK_THROWS_AS(binomial_cdf(4, 3, 0.5), ConfigError);
}

TEST_CASE("binomial cdf against high-precision summation up to n = 10^4") {
  for (long n : {50L, 1000L, 10000L})
    for (double p : {0.001, 0.1, 0.5, 0.93})
      for (double frac : {0.0, 0.01, 0.1, 0.5, 0.9, 0.999}) {
        const long k = static_cast<long>(frac * static_cast<double>(n));
        CHECK(std::abs(binomial_cdf(k, n, p) - precise_cdf(k, n, p)) <= 1e-12);
      }
}

TEST_CASE("binomial UCB") {
  CHECK(std::abs(binomial_ucb(0.0, 100, 0.1) - (1.0 - std::pow(0.1, 0.01))) < 1e-9);
  CHECK(binomial_ucb(0.0, 100, 0.1) == doctest::Approx(0.0227627).epsilon(1e-5));
  CHECK(binomial_ucb(1.0, 17, 0.3) == 1.0);
  const double u = binomial_ucb(0.1, 1000, 0.1);
  CHECK(std::abs(u - reference_ucb(100, 1000, 0.1)) < 1e-9);
  CHECK(u == doctest::Approx(0.1 + 1.2816 * std::sqrt(0.09 / 1000.0)).epsilon(0.01));

  for (long n : {20L, 200L})
    for (double delta : {0.05, 0.1, 0.3, 0.5}) {
      double prev = -1.0;
      for (long k = 0; k <= n; ++k) {
        const double r = static_cast<double>(k) / static_cast<double>(n);
        const double v = binomial_ucb(r, n, delta);
        CHECK(v >= r);
        CHECK(v >= prev);
        CHECK(std::abs(v - reference_ucb(k, n, delta)) < 1e-9);
        prev = v;
      }
    }
  for (double r : {0.0, 0.05, 0.4})
    CHECK(binomial_ucb(r, 100, 0.05) >= binomial_ucb(r, 100, 0.2));
  CHECK_THROWS_AS(binomial_ucb(0.1, 0, 0.1), ConfigError);
}

TEST_CASE("empirical risk and coverage") {
  const std::vector<double> s = {1.0, 3.0};
  const std::vector<double> q = {1.0, 1.0};
  CHECK(empirical_risk(s, q, 2.0) == 0.5);
  CHECK(empirical_risk(s, q, 1e300) == 0.0);
  CHECK(empirical_risk(s, q, 0.0) == 1.0);
  const std::vector<double> s3 = {1.0, 2.0, 3.0};
  const std::vector<double> q3 = {1.0, 1.0, 1.0};
  CHECK(evaluate_coverage(s3, q3, 2.5) == doctest::Approx(2.0 / 3.0));
  CHECK(evaluate_coverage(s3, q3, 1e300) == 1.0);
  CHECK(evaluate_coverage(s3, q3, 0.0) == 0.0);
  CHECK(evaluate_coverage(s3, q3, 2.0) + empirical_risk(s3, q3, 2.0) == 1.0);

  Rng rng(51);
  std::normal_distribution<double> nd;
  std::vector<double> a(300), b(300);
  for (std::size_t i = 0; i < a.size(); ++i) {
    a[i] = nd(rng);
    b[i] = std::exp(nd(rng));
  }
  for (double lam : {0.1, 0.7, 1.0, 3.0})
    CHECK(evaluate_coverage(a, b, lam) + empirical_risk(a, b, lam) == doctest::Approx(1.0).epsilon(1e-15));

  CHECK_THROWS_AS(empirical_risk(s, std::vector<double>{1.0}, 1.0), DimensionMismatchError);
  CHECK_THROWS_AS(empirical_risk(s, std::vector<double>{1.0, 0.0}, 1.0), ConfigError);
  CHECK_THROWS_AS(evaluate_coverage(s, std::vector<double>{1.0}, 1.0), DimensionMismatchError);
}

TEST_CASE("lambda grid") {
  const auto g = log_lambda_grid(1e-2, 1e2, 400);
  CHECK(g.size() == 400);
  CHECK(g.front() == 1e2);
  CHECK(g.back() == 1e-2);
  for (std::size_t i = 1; i < g.size(); ++i) CHECK(g[i] < g[i - 1]);
  const RcpsConfig defaults;
  CHECK(defaults.delta == 0.1);
  CHECK(defaults.lambda_grid == g);
  CHECK_THROWS_AS(log_lambda_grid(1.0, 0.5, 10), ConfigError);
}

TEST_CASE("calibration edge cases") {
  RcpsConfig cfg;
  cfg.alpha = 0.1;
  std::vector<double> s(100, -1.0), q(100, 1.0);
  const CalibrationResult r = calibrate_lambda(s, q, cfg);
  CHECK(r.lambda_star == cfg.lambda_grid.back());
  CHECK(r.empirical_risk == 0.0);
  CHECK(r.ucb <= cfg.alpha);
  CHECK(r.n_calibration == 100);

  cfg.alpha = 0.02;  // below the zero-loss floor 1 - 0.1^(1/100)
  CHECK_THROWS_AS(calibrate_lambda(s, q, cfg), CalibrationInfeasibleError);

  RcpsConfig bad;
  bad.lambda_grid = {1.0, 2.0};
  CHECK_THROWS_AS(calibrate_lambda(s, q, bad), ConfigError);
}

TEST_CASE("calibration matches a brute-force scan") {
  Rng rng(52);
  std::uniform_real_distribution<double> u(0.05, 1.4);
  std::vector<double> ratios(100);
  for (double& r : ratios) r = u(rng);
  ratios[10] = 3.0;
  ratios[20] = 2.0;
  std::vector<double> q(100), s(100);
  for (std::size_t j = 0; j < 100; ++j) {
    q[j] = 0.5 + 0.01 * static_cast<double>(j);
    s[j] = ratios[j] * q[j];
  }
  RcpsConfig cfg;
  cfg.delta = 0.1;
  cfg.alpha = 0.5 * (reference_ucb(2, 100, 0.1) + reference_ucb(3, 100, 0.1));
  const CalibrationResult r = calibrate_lambda(s, q, cfg);

  std::vector<double> sorted = ratios;
  std::sort(sorted.rbegin(), sorted.rend());
  double expected = 0.0;
  for (double lam : cfg.lambda_grid) {  // descending
    std::size_t losses = 0;
    for (std::size_t j = 0; j < 100; ++j) losses += s[j] >= lam * q[j];
    if (reference_ucb(static_cast<long>(losses), 100, 0.1) > cfg.alpha) break;
    expected = lam;
  }
  CHECK(r.lambda_star == expected);
  CHECK(r.lambda_star > sorted[2]);
  const auto above = std::find_if(cfg.lambda_grid.rbegin(), cfg.lambda_grid.rend(),
                                  [&](double lam) { return lam > sorted[2]; });
  CHECK(r.lambda_star == *above);
  CHECK(r.empirical_risk == 0.02);
}

TEST_CASE("risk control guarantee (reduced)") {
  const double alpha = 0.1, delta = 0.1;
  const std::size_t n = 200;
  RcpsConfig cfg;
  cfg.alpha = alpha;
  cfg.delta = delta;
  Rng rng(53);
  std::exponential_distribution<double> expo;
  std::uniform_real_distribution<double> scale(0.2, 2.0);
  const int reps = 500;
  int ok = 0;
  for (int rep = 0; rep < reps; ++rep) {
    const double theta = scale(rng);
    std::vector<double> s(n), q(n, 1.0);
    for (double& v : s) v = theta * expo(rng);
    const double lam = calibrate_lambda(s, q, cfg).lambda_star;
    ok += std::exp(-lam / theta) <= alpha;
  }
  CHECK(static_cast<double>(ok) / reps >= 1.0 - delta - 0.02);
}

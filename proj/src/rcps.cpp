#include "sscb/rcps.hpp"

#include <algorithm>
#include <boost/math/special_functions/beta.hpp>
#include <cmath>
#include <limits>
#include <string>

#include "sscb/errors.hpp"

namespace sscb {

namespace {

void check_pair(std::span<const double> scores, std::span<const double> quantiles) {
  if (scores.size() != quantiles.size()) {
    throw DimensionMismatchError("score and quantile lists differ in length");
  }
  for (double q : quantiles) {
    if (!(q > 0.0)) throw ConfigError("bootstrap quantiles must be positive");
  }
}

void check_unit_open(double v, const char* name) {
  if (!(v > 0.0 && v < 1.0)) {
    throw ConfigError(std::string(name) + " must lie in (0, 1), got " + std::to_string(v));
  }
}

long loss_count(double r_hat, std::size_t n) {
  // r_hat = k / n reconstructs k up to rounding; the offset stops ceil from
  // stepping one past it.
  const double k = std::ceil(static_cast<double>(n) * r_hat - 1e-9);
  return std::clamp<long>(static_cast<long>(k), 0, static_cast<long>(n));
}

}  // namespace

std::vector<double> log_lambda_grid(double lo, double hi, std::size_t points) {
  if (!(lo > 0.0) || !(hi > lo) || points < 2) {
    throw ConfigError("lambda grid needs 0 < lo < hi and at least two points");
  }
  std::vector<double> grid(points);
  const double log_lo = std::log(lo);
  const double log_hi = std::log(hi);
  for (std::size_t i = 0; i < points; ++i) {
    const double t = static_cast<double>(i) / static_cast<double>(points - 1);
    grid[i] = std::exp(log_hi + t * (log_lo - log_hi));
  }
  grid.front() = hi;
  grid.back() = lo;
  return grid;
}

void RcpsConfig::validate() const {
  check_unit_open(alpha, "alpha");
  check_unit_open(delta, "delta");
  if (lambda_grid.empty()) throw ConfigError("lambda grid is empty");
  for (std::size_t i = 0; i < lambda_grid.size(); ++i) {
    if (!(lambda_grid[i] > 0.0)) throw ConfigError("lambda grid values must be positive");
    if (i > 0 && !(lambda_grid[i] < lambda_grid[i - 1])) {
      throw ConfigError("lambda grid must be strictly descending");
    }
  }
}

double binomial_cdf(long k, long n, double p) {
  if (n < 0 || k < 0 || k > n) throw ConfigError("binomial_cdf needs 0 <= k <= n");
  if (!(p >= 0.0 && p <= 1.0)) throw ConfigError("binomial_cdf needs p in [0, 1]");
  if (k == n || p == 0.0) return 1.0;
  if (p == 1.0) return 0.0;

  // P(X <= k) = I_{1-p}(n - k, k + 1)
  return boost::math::ibetac(static_cast<double>(k + 1), static_cast<double>(n - k), p);
}

double binomial_ucb(double r_hat, std::size_t n, double delta) {
  if (n == 0) throw ConfigError("binomial_ucb needs at least one calibration sample");
  if (!(r_hat >= 0.0 && r_hat <= 1.0)) throw ConfigError("empirical risk must lie in [0, 1]");
  check_unit_open(delta, "delta");
  const long k = loss_count(r_hat, n);
  const long sn = static_cast<long>(n);
  if (k >= sn) return 1.0;
  // The CDF is decreasing in R: cdf(k; n, 0) = 1 >= delta and cdf(k; n, 1) = 0 < delta.
  double lo = 0.0;
  double hi = 1.0;
  while (hi - lo > 1e-12) {
    const double mid = 0.5 * (lo + hi);
    if (binomial_cdf(k, sn, mid) >= delta) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return hi;
}

double empirical_risk(std::span<const double> scores, std::span<const double> quantiles,
                      double lambda) {
  check_pair(scores, quantiles);
  if (scores.empty()) throw ConfigError("empirical risk of an empty calibration set");
  std::size_t losses = 0;
  for (std::size_t j = 0; j < scores.size(); ++j) {
    if (scores[j] >= lambda * quantiles[j]) ++losses;
  }
  return static_cast<double>(losses) / static_cast<double>(scores.size());
}

CalibrationResult calibrate_lambda(std::span<const double> scores,
                                   std::span<const double> quantiles, const RcpsConfig& cfg) {
  cfg.validate();
  check_pair(scores, quantiles);
  const std::size_t n = scores.size();
  if (n == 0) throw ConfigError("calibration needs at least one observation");

  // The UCB depends on the data only through the loss count.
  std::vector<double> ucb_by_count(n + 1, std::numeric_limits<double>::quiet_NaN());
  auto ucb_for = [&](double risk) {
    const auto k = static_cast<std::size_t>(loss_count(risk, n));
    if (std::isnan(ucb_by_count[k])) {
      ucb_by_count[k] = binomial_ucb(static_cast<double>(k) / static_cast<double>(n), n, cfg.delta);
    }
    return ucb_by_count[k];
  };

  CalibrationResult result;
  result.alpha = cfg.alpha;
  result.delta = cfg.delta;
  result.n_calibration = n;
  bool found = false;
  for (double lambda : cfg.lambda_grid) {
    const double risk = empirical_risk(scores, quantiles, lambda);
    const double ucb = ucb_for(risk);
    if (ucb > cfg.alpha) {
      if (!found) {
        throw CalibrationInfeasibleError(
            "UCB " + std::to_string(ucb) + " exceeds alpha " + std::to_string(cfg.alpha) +
            " at the largest lambda " + std::to_string(lambda) + "; widen the lambda grid");
      }
      break;
    }
    found = true;
    result.lambda_star = lambda;
    result.empirical_risk = risk;
    result.ucb = ucb;
  }
  return result;
}

double evaluate_coverage(std::span<const double> true_scores, std::span<const double> quantiles,
                         double lambda) {
  check_pair(true_scores, quantiles);
  if (true_scores.empty()) throw ConfigError("coverage of an empty test set");
  std::size_t covered = 0;
  for (std::size_t j = 0; j < true_scores.size(); ++j) {
    if (true_scores[j] < lambda * quantiles[j]) ++covered;
  }
  return static_cast<double>(covered) / static_cast<double>(true_scores.size());
}

}  // namespace sscb

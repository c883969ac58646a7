#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace sscb {

/// Strictly descending log-spaced grid from `hi` down to `lo`.
std::vector<double> log_lambda_grid(double lo, double hi, std::size_t points);

struct RcpsConfig {
  double alpha = 0.1;
  double delta = 0.1;
  std::vector<double> lambda_grid = log_lambda_grid(1e-2, 1e2, 400);

  void validate() const;
};

struct CalibrationResult {
  double alpha = 0.0;
  double delta = 0.0;
  double lambda_star = 0.0;
  double empirical_risk = 0.0;
  double ucb = 0.0;
  std::size_t n_calibration = 0;
};

/// P(Binom(n, p) <= k) via the regularized incomplete beta function.
double binomial_cdf(long k, long n, double p);

/// sup{R : P(Binom(n, R) <= ceil(n r_hat)) >= delta}, by bisection.
double binomial_ucb(double r_hat, std::size_t n, double delta);

/// (1/N) sum_j 1{score_j >= lambda q_j}.
double empirical_risk(std::span<const double> scores, std::span<const double> quantiles,
                      double lambda);

/// Fixed-sequence scan of the descending grid: the smallest lambda such that
/// the UCB is <= alpha at it and at every larger grid point. Throws
/// CalibrationInfeasibleError if the largest grid point already violates it.
CalibrationResult calibrate_lambda(std::span<const double> scores,
                                   std::span<const double> quantiles, const RcpsConfig& cfg);

/// Fraction of j with score_j < lambda q_j; equals 1 - empirical_risk.
double evaluate_coverage(std::span<const double> true_scores, std::span<const double> quantiles,
                         double lambda);

}  // namespace sscb

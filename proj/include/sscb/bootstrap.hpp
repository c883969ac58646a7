#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "sscb/field.hpp"
#include "sscb/operators.hpp"
#include "sscb/reconstruct.hpp"
#include "sscb/scores.hpp"
#include "sscb/transforms.hpp"

namespace sscb {

enum class BootstrapMode { Parametric, Equivariant };

std::string to_string(BootstrapMode mode);
BootstrapMode bootstrap_mode_from_string(const std::string& s);

struct BootstrapConfig {
  std::size_t n_samples = 100;
  BootstrapMode mode = BootstrapMode::Equivariant;
  std::uint64_t seed = 0;
  ScoreKind score_kind = ScoreKind::MeasurementSpace;
  std::size_t workers = 1;

  void validate() const;
};

struct BootstrapSummary {
  std::vector<double> scores;  // one per bootstrap sample, in sample order
  RealField estimate;          // x_hat(y)
};

// Sample i draws its noise from substream (seed, noise, i) and its transform
// from (seed, transform, i). Both engines therefore see the same noise for the
// same seed, and results do not depend on cfg.workers.

/// y_i = A x_hat + e_i, x_i = x_hat(y_i), s_i = s(x_i, x_hat).
BootstrapSummary parametric_bootstrap(const Measurement& y, const Reconstructor& reconstructor,
                                      const ForwardOperator& op, const GaussianNoiseModel& noise,
                                      const BootstrapConfig& cfg);

/// y_i = A T_i x_hat + e_i, x_i = T_i^-1 x_hat(y_i), s_i = s(x_i, x_hat).
BootstrapSummary equivariant_bootstrap(const Measurement& y, const Reconstructor& reconstructor,
                                       const ForwardOperator& op,
                                       const GaussianNoiseModel& noise,
                                       const TransformSamplerConfig& sampler,
                                       const BootstrapConfig& cfg);

/// Dispatches on cfg.mode; `sampler` is ignored in parametric mode.
BootstrapSummary run_bootstrap(const Measurement& y, const Reconstructor& reconstructor,
                               const ForwardOperator& op, const GaussianNoiseModel& noise,
                               const TransformSamplerConfig& sampler, const BootstrapConfig& cfg);

/// k-th smallest score with k = ceil((1 - alpha) N) clamped to [1, N].
double bootstrap_quantile(std::span<const double> scores, double alpha);
double bootstrap_quantile(const BootstrapSummary& summary, double alpha);

/// Quantiles for several alphas from one sort.
std::vector<double> bootstrap_quantiles(std::span<const double> scores,
                                        std::span<const double> alphas);

}  // namespace sscb

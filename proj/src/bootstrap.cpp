#include "sscb/bootstrap.hpp"

#include <algorithm>
#include <cmath>

#include "sscb/errors.hpp"
#include "sscb/parallel.hpp"

namespace sscb {

namespace {

void validate_alpha(double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) {
    throw ConfigError("alpha must lie in (0, 1), got " + std::to_string(alpha));
  }
}

std::size_t quantile_rank(std::size_t n, double alpha) {
  // The small offset keeps (1 - alpha) * n from rounding up past an integer.
  const double k = std::ceil((1.0 - alpha) * static_cast<double>(n) - 1e-9);
  return std::clamp<std::size_t>(static_cast<std::size_t>(std::max(k, 1.0)), 1, n);
}

}  // namespace

std::string to_string(BootstrapMode mode) {
  return mode == BootstrapMode::Parametric ? "parametric" : "equivariant";
}

BootstrapMode bootstrap_mode_from_string(const std::string& s) {
  if (s == "parametric") return BootstrapMode::Parametric;
  if (s == "equivariant") return BootstrapMode::Equivariant;
  throw ConfigError("unknown bootstrap mode '" + s + "' (expected parametric|equivariant)");
}

void BootstrapConfig::validate() const {
  if (n_samples == 0) throw ConfigError("bootstrap needs at least one sample");
}

BootstrapSummary parametric_bootstrap(const Measurement& y, const Reconstructor& reconstructor,
                                      const ForwardOperator& op, const GaussianNoiseModel& noise,
                                      const BootstrapConfig& cfg) {
  cfg.validate();
  BootstrapSummary summary;
  summary.estimate = reconstructor.reconstruct(y);
  summary.scores.resize(cfg.n_samples);
  const Measurement clean = op.apply(summary.estimate);
  parallel_for(cfg.n_samples, cfg.workers, [&](std::size_t i) {
    Rng noise_rng = make_rng(cfg.seed, {stream::kNoise, i});
    const RealField sample = reconstructor.reconstruct(add_noise(clean, noise, noise_rng));
    summary.scores[i] = score(cfg.score_kind, sample, summary.estimate, op);
  });
  return summary;
}

BootstrapSummary equivariant_bootstrap(const Measurement& y, const Reconstructor& reconstructor,
                                       const ForwardOperator& op,
                                       const GaussianNoiseModel& noise,
                                       const TransformSamplerConfig& sampler,
                                       const BootstrapConfig& cfg) {
  cfg.validate();
  sampler.validate();
  BootstrapSummary summary;
  summary.estimate = reconstructor.reconstruct(y);
  if (summary.estimate.rows() != summary.estimate.cols() ||
      summary.estimate.rows() != sampler.n) {
    throw DimensionMismatchError("equivariant bootstrap needs square fields matching sampler.n");
  }
  summary.scores.resize(cfg.n_samples);
  parallel_for(cfg.n_samples, cfg.workers, [&](std::size_t i) {
    Rng noise_rng = make_rng(cfg.seed, {stream::kNoise, i});
    Rng transform_rng = make_rng(cfg.seed, {stream::kTransform, i});
    const TransformSpec t = sample_transform(sampler, transform_rng);
    const Measurement clean = op.apply(apply_transform(t, summary.estimate));
    const RealField sample =
        invert_transform(t, reconstructor.reconstruct(add_noise(clean, noise, noise_rng)));
    summary.scores[i] = score(cfg.score_kind, sample, summary.estimate, op);
  });
  return summary;
}

BootstrapSummary run_bootstrap(const Measurement& y, const Reconstructor& reconstructor,
                               const ForwardOperator& op, const GaussianNoiseModel& noise,
                               const TransformSamplerConfig& sampler, const BootstrapConfig& cfg) {
  return cfg.mode == BootstrapMode::Parametric
             ? parametric_bootstrap(y, reconstructor, op, noise, cfg)
             : equivariant_bootstrap(y, reconstructor, op, noise, sampler, cfg);
}

double bootstrap_quantile(std::span<const double> scores, double alpha) {
  validate_alpha(alpha);
  if (scores.empty()) throw ConfigError("bootstrap quantile of an empty score list");
  std::vector<double> sorted(scores.begin(), scores.end());
  const std::size_t k = quantile_rank(sorted.size(), alpha);
  std::nth_element(sorted.begin(), sorted.begin() + static_cast<long>(k - 1), sorted.end());
  return sorted[k - 1];
}

double bootstrap_quantile(const BootstrapSummary& summary, double alpha) {
  return bootstrap_quantile(summary.scores, alpha);
}

std::vector<double> bootstrap_quantiles(std::span<const double> scores,
                                        std::span<const double> alphas) {
  if (scores.empty()) throw ConfigError("bootstrap quantile of an empty score list");
  std::vector<double> sorted(scores.begin(), scores.end());
  std::sort(sorted.begin(), sorted.end());
  std::vector<double> out;
  out.reserve(alphas.size());
  for (double alpha : alphas) {
    validate_alpha(alpha);
    out.push_back(sorted[quantile_rank(sorted.size(), alpha) - 1]);
  }
  return out;
}

}  // namespace sscb

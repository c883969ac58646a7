#include "sscb/scores.hpp"

#include <cmath>

#include "sscb/errors.hpp"

namespace sscb {

namespace {

enum class JvpPath { Exact, FiniteDifference };

JvpPath resolve_path(const Reconstructor& reconstructor, const SureConfig& cfg) {
  if (cfg.jacobian_mode == JacobianMode::ExactLinear && reconstructor.is_linear()) {
    return JvpPath::Exact;
  }
  return JvpPath::FiniteDifference;
}

double fd_step_size(const Measurement& y, const SureConfig& cfg) {
  const double rms = y.empty() ? 0.0 : std::sqrt(squared_norm(y) / static_cast<double>(y.size()));
  return cfg.fd_step * std::max(1.0, rms);
}

void require_deterministic(const Measurement& y, const Reconstructor& reconstructor) {
  if (!(reconstructor.reconstruct(y) == reconstructor.reconstruct(y))) {
    throw ContractViolationError(
        "finite-difference SURE requires a deterministic reconstructor");
  }
}

Measurement axpy(const Measurement& y, double a, const Measurement& z) {
  Measurement out(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) out[i] = y[i] + a * z[i];
  return out;
}

// Image-space directional derivative of x_hat along z.
RealField reconstruction_jvp(const Measurement& y, const Measurement& z,
                             const Reconstructor& reconstructor, JvpPath path, double h) {
  if (path == JvpPath::Exact) return reconstructor.reconstruct(z);
  RealField plus = reconstructor.reconstruct(axpy(y, h, z));
  RealField minus = reconstructor.reconstruct(axpy(y, -h, z));
  plus -= minus;
  plus *= 1.0 / (2.0 * h);
  return plus;
}

RealField projector_apply(const RealField& x, const ForwardOperator& op) {
  return op.pseudoinverse(op.apply(x));
}

}  // namespace

void SureConfig::validate() const {
  if (n_probes == 0) throw ConfigError("SURE needs at least one Hutchinson probe");
  if (!(fd_step > 0.0) || !std::isfinite(fd_step)) throw ConfigError("fd_step must be positive");
}

std::string to_string(ScoreKind kind) {
  return kind == ScoreKind::MeasurementSpace ? "measurement" : "projector";
}

ScoreKind score_kind_from_string(const std::string& s) {
  if (s == "measurement") return ScoreKind::MeasurementSpace;
  if (s == "projector") return ScoreKind::Projector;
  throw ConfigError("unknown score kind '" + s + "' (expected measurement|projector)");
}

std::string to_string(JacobianMode mode) {
  return mode == JacobianMode::ExactLinear ? "exact_linear" : "finite_difference";
}

JacobianMode jacobian_mode_from_string(const std::string& s) {
  if (s == "exact_linear") return JacobianMode::ExactLinear;
  if (s == "finite_difference") return JacobianMode::FiniteDifference;
  throw ConfigError("unknown jacobian mode '" + s + "' (expected exact_linear|finite_difference)");
}

double score_measurement(const RealField& x_a, const RealField& x_b, const ForwardOperator& op) {
  const Measurement diff = op.apply(x_a - x_b);
  return squared_norm(diff) / static_cast<double>(op.measurement_size());
}

double score_projector(const RealField& x_a, const RealField& x_b, const ForwardOperator& op) {
  const RealField diff = projector_apply(x_a - x_b, op);
  return squared_norm(diff.values()) / static_cast<double>(op.image_size());
}

double score(ScoreKind kind, const RealField& x_a, const RealField& x_b,
             const ForwardOperator& op) {
  return kind == ScoreKind::MeasurementSpace ? score_measurement(x_a, x_b, op)
                                             : score_projector(x_a, x_b, op);
}

double hutchinson_trace(const LinearMap& jacobian, std::span<const double> sigma_diag,
                        std::size_t n_probes, Rng& rng) {
  if (n_probes == 0) throw ConfigError("Hutchinson estimator needs at least one probe");
  const std::size_t dim = sigma_diag.size();
  Measurement z(dim);
  double total = 0.0;
  for (std::size_t k = 0; k < n_probes; ++k) {
    std::uint64_t bits = 0;
    for (std::size_t i = 0; i < dim; ++i) {
      if (i % 64 == 0) bits = rng();
      z[i] = (bits & 1U) ? 1.0 : -1.0;
      bits >>= 1;
    }
    const Measurement jz = jacobian(z);
    if (jz.size() != dim) throw DimensionMismatchError("Jacobian map changed the dimension");
    double acc = 0.0;
    for (std::size_t i = 0; i < dim; ++i) acc += z[i] * sigma_diag[i] * jz[i];
    total += acc;
  }
  return total / static_cast<double>(n_probes);
}

double hutchinson_trace(const LinearMap& jacobian, std::size_t dim, double variance,
                        std::size_t n_probes, Rng& rng) {
  const std::vector<double> diag(dim, variance);
  return hutchinson_trace(jacobian, diag, n_probes, rng);
}

Measurement measurement_jvp(const Measurement& y, const Measurement& z,
                            const Reconstructor& reconstructor, const ForwardOperator& op,
                            const SureConfig& cfg) {
  const JvpPath path = resolve_path(reconstructor, cfg);
  return op.apply(reconstruction_jvp(y, z, reconstructor, path, fd_step_size(y, cfg)));
}

double sure_measurement(const Measurement& y, const Reconstructor& reconstructor,
                        const ForwardOperator& op, const GaussianNoiseModel& noise,
                        const SureConfig& cfg, Rng& rng) {
  cfg.validate();
  const std::size_t m = op.measurement_size();
  if (y.size() != m) throw DimensionMismatchError("observation length does not match operator");
  const double inv_m = 1.0 / static_cast<double>(m);

  const JvpPath path = resolve_path(reconstructor, cfg);
  if (path == JvpPath::FiniteDifference) require_deterministic(y, reconstructor);

  const Measurement fitted = op.apply(reconstructor.reconstruct(y));
  double residual = 0.0;
  for (std::size_t i = 0; i < m; ++i) residual += (y[i] - fitted[i]) * (y[i] - fitted[i]);

  if (noise.variance() == 0.0) return inv_m * residual;

  const double h = fd_step_size(y, cfg);
  const LinearMap jvp = [&](const Measurement& z) {
    return op.apply(reconstruction_jvp(y, z, reconstructor, path, h));
  };
  const double divergence = hutchinson_trace(jvp, m, noise.variance(), cfg.n_probes, rng);
  return inv_m * residual - inv_m * noise.trace(m) + 2.0 * inv_m * divergence;
}

double sure_projector(const Measurement& y, const Reconstructor& reconstructor,
                      const ForwardOperator& op, const GaussianNoiseModel& noise,
                      const SureConfig& cfg, Rng& rng) {
  cfg.validate();
  const std::size_t m = op.measurement_size();
  if (y.size() != m) throw DimensionMismatchError("observation length does not match operator");
  const double inv_m_img = 1.0 / static_cast<double>(op.image_size());

  const JvpPath path = resolve_path(reconstructor, cfg);
  if (path == JvpPath::FiniteDifference) require_deterministic(y, reconstructor);

  Measurement misfit = op.apply(reconstructor.reconstruct(y));
  for (std::size_t i = 0; i < m; ++i) misfit[i] -= y[i];
  const double residual = squared_norm(op.pseudoinverse(misfit).values());

  if (noise.variance() == 0.0) return inv_m_img * residual;

  const LinearMap gram = [&](const Measurement& z) {
    return op.pseudoinverse_adjoint(op.pseudoinverse(z));
  };
  const double noise_trace = hutchinson_trace(gram, m, noise.variance(), cfg.n_probes, rng);

  const double h = fd_step_size(y, cfg);
  const LinearMap jvp = [&](const Measurement& z) {
    const RealField dx = reconstruction_jvp(y, z, reconstructor, path, h);
    return op.pseudoinverse_adjoint(projector_apply(dx, op));
  };
  const double divergence = hutchinson_trace(jvp, m, noise.variance(), cfg.n_probes, rng);
  return inv_m_img * residual - inv_m_img * noise_trace + 2.0 * inv_m_img * divergence;
}

double sure(ScoreKind kind, const Measurement& y, const Reconstructor& reconstructor,
            const ForwardOperator& op, const GaussianNoiseModel& noise, const SureConfig& cfg,
            Rng& rng) {
  return kind == ScoreKind::MeasurementSpace
             ? sure_measurement(y, reconstructor, op, noise, cfg, rng)
             : sure_projector(y, reconstructor, op, noise, cfg, rng);
}

std::optional<double> projector_noise_trace(const ForwardOperator& op,
                                            const GaussianNoiseModel& noise) {
  if (auto gram = op.pseudoinverse_gram_trace()) return *gram * noise.variance();
  return std::nullopt;
}

}  // namespace sscb

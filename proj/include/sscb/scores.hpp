#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <string>

#include "sscb/field.hpp"
#include "sscb/operators.hpp"
#include "sscb/reconstruct.hpp"
#include "sscb/rng.hpp"

namespace sscb {

/// Which weighting M defines the non-conformity score ||x_a - x_b||_M^2.
enum class ScoreKind {
  MeasurementSpace,  // M = A^T A, normalized by the m' real measurement components
  Projector,         // M = A^+ A, normalized by the image pixel count
};

enum class JacobianMode {
  ExactLinear,       // J z = A x_hat(z); falls back to finite differences for nonlinear reconstructors
  FiniteDifference,  // central differences, always
};

struct SureConfig {
  std::size_t n_probes = 16;
  JacobianMode jacobian_mode = JacobianMode::ExactLinear;
  double fd_step = 1e-4;

  void validate() const;
};

std::string to_string(ScoreKind kind);
ScoreKind score_kind_from_string(const std::string& s);
std::string to_string(JacobianMode mode);
JacobianMode jacobian_mode_from_string(const std::string& s);

/// (1/m') ||A x_a - A x_b||^2.
double score_measurement(const RealField& x_a, const RealField& x_b, const ForwardOperator& op);
/// (1/m_img) ||A^+ A x_a - A^+ A x_b||^2.
double score_projector(const RealField& x_a, const RealField& x_b, const ForwardOperator& op);
double score(ScoreKind kind, const RealField& x_a, const RealField& x_b, const ForwardOperator& op);

using LinearMap = std::function<Measurement(const Measurement&)>;

/// Skilling-Hutchinson estimate of tr(Sigma J) with Rademacher probes:
/// (1/K) sum_k z_k^T Sigma (J z_k). sigma_diag holds the diagonal of Sigma and
/// fixes the dimension.
double hutchinson_trace(const LinearMap& jacobian, std::span<const double> sigma_diag,
                        std::size_t n_probes, Rng& rng);
/// Same with Sigma = variance * I over `dim` components.
double hutchinson_trace(const LinearMap& jacobian, std::size_t dim, double variance,
                        std::size_t n_probes, Rng& rng);

/// Unbiased estimate of score_measurement(x_true, x_hat(y)) from y alone:
///   (1/m')||y - A x_hat||^2 - (1/m') tr(Sigma) + (2/m') tr(Sigma d(A x_hat)/dy).
/// The commonly printed form subtracts tr(Sigma) without the 1/m' factor;
/// that is dimensionally inconsistent with the normalized residual and is
/// biased, so both trace terms carry 1/m' here.
double sure_measurement(const Measurement& y, const Reconstructor& reconstructor,
                        const ForwardOperator& op, const GaussianNoiseModel& noise,
                        const SureConfig& cfg, Rng& rng);

/// Unbiased estimate of score_projector(x_true, x_hat(y)):
///   (1/m)||A^+(A x_hat - y)||^2 - (1/m) tr((A^+)^T A^+ Sigma)
///     + (2/m) tr(Sigma d((A^+)^T A^+ A x_hat)/dy).
double sure_projector(const Measurement& y, const Reconstructor& reconstructor,
                      const ForwardOperator& op, const GaussianNoiseModel& noise,
                      const SureConfig& cfg, Rng& rng);

double sure(ScoreKind kind, const Measurement& y, const Reconstructor& reconstructor,
            const ForwardOperator& op, const GaussianNoiseModel& noise, const SureConfig& cfg,
            Rng& rng);

/// Closed-form tr((A^+)^T A^+ Sigma) when the operator provides it.
std::optional<double> projector_noise_trace(const ForwardOperator& op,
                                            const GaussianNoiseModel& noise);

/// Directional derivative of y -> A x_hat(y) along z, using the exact linear
/// path or central finite differences per cfg.
Measurement measurement_jvp(const Measurement& y, const Measurement& z,
                            const Reconstructor& reconstructor, const ForwardOperator& op,
                            const SureConfig& cfg);

}  // namespace sscb

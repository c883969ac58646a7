#pragma once

#include <memory>
#include <vector>

#include "sscb/field.hpp"
#include "sscb/operators.hpp"

namespace sscb {

/// Maps a measurement to an image estimate. Implementations must be
/// deterministic; linear ones must say so so that SURE can use exact
/// Jacobian-vector products.
class Reconstructor {
 public:
  virtual ~Reconstructor() = default;
  virtual RealField reconstruct(const Measurement& y) const = 0;
  virtual bool is_linear() const = 0;
};

/// Smoothing scale used for the lensing experiments, in pixels.
inline constexpr double kDefaultSmoothingPixels = 1.0 / 0.29;

struct KaiserSquiresConfig {
  double sigma_smooth = kDefaultSmoothingPixels;
};

/// Gaussian smoothing as a Fourier multiplier exp(-2 pi^2 s^2 (kx^2 + ky^2) / n^2).
RealField smoothing_multiplier(const FrequencyGrid& grid, double sigma_smooth);

/// Kaiser-Squires: pseudo-invert the operator, then Gaussian-smooth.
class KaiserSquires final : public Reconstructor {
 public:
  KaiserSquires(std::shared_ptr<const ForwardOperator> op, KaiserSquiresConfig cfg = {});

  RealField reconstruct(const Measurement& y) const override;
  RealField reconstruct(const ComplexField& y) const;
  bool is_linear() const override { return true; }

  const KaiserSquiresConfig& config() const { return cfg_; }
  const RealField& multiplier() const { return multiplier_; }

 private:
  std::shared_ptr<const ForwardOperator> op_;
  KaiserSquiresConfig cfg_;
  RealField multiplier_;
  std::vector<Complex> fused_kernel_;  // S * conj(D) when the operator is mass-mapping
};

RealField kaiser_squires(const ComplexField& y, const MassMappingOperator& op,
                         const KaiserSquiresConfig& cfg);

/// Applies a real, frequency-symmetric Fourier multiplier to a real field.
RealField apply_fourier_multiplier(const RealField& x, std::span<const double> multiplier);

}  // namespace sscb

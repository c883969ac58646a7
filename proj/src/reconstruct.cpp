#include "sscb/reconstruct.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "sscb/errors.hpp"
#include "sscb/fft.hpp"

namespace sscb {

RealField smoothing_multiplier(const FrequencyGrid& grid, double sigma_smooth) {
  if (!std::isfinite(sigma_smooth) || sigma_smooth < 0.0) {
    throw ConfigError("smoothing sigma must be finite and non-negative, got " +
                      std::to_string(sigma_smooth));
  }
  const std::size_t n = grid.n;
  const double n2 = static_cast<double>(n) * static_cast<double>(n);
  const double scale = 2.0 * std::numbers::pi * std::numbers::pi * sigma_smooth * sigma_smooth / n2;
  RealField out(n, n);
  for (std::size_t i = 0; i < n * n; ++i) {
    const double kx = grid.kx[i];
    const double ky = grid.ky[i];
    out[i] = std::exp(-scale * (kx * kx + ky * ky));
  }
  return out;
}

RealField apply_fourier_multiplier(const RealField& x, std::span<const double> multiplier) {
  if (multiplier.size() != x.size()) {
    throw DimensionMismatchError("Fourier multiplier size does not match field");
  }
  std::vector<Complex> spectrum = fft::forward(x);
  for (std::size_t i = 0; i < spectrum.size(); ++i) spectrum[i] *= multiplier[i];
  return fft::inverse_real(spectrum, x.shape());
}

KaiserSquires::KaiserSquires(std::shared_ptr<const ForwardOperator> op, KaiserSquiresConfig cfg)
    : op_(std::move(op)), cfg_(cfg) {
  if (!op_) throw ConfigError("Kaiser-Squires needs an operator");
  const Shape shape = op_->image_shape();
  if (shape.rows != shape.cols) throw InvalidGridError("Kaiser-Squires needs a square image");
  multiplier_ = smoothing_multiplier(make_frequency_grid(shape.rows), cfg_.sigma_smooth);
  if (const auto* mm = dynamic_cast<const MassMappingOperator*>(op_.get())) {
    fused_kernel_.resize(shape.size());
    for (std::size_t i = 0; i < shape.size(); ++i) {
      fused_kernel_[i] = multiplier_[i] * std::conj(mm->kernel()[i]);
    }
  }
}

RealField KaiserSquires::reconstruct(const ComplexField& y) const {
  if (fused_kernel_.empty()) return reconstruct(y.to_components());
  if (!(y.shape() == op_->image_shape())) {
    throw DimensionMismatchError("shear shape does not match operator");
  }
  // Smoothing and the conjugate lensing kernel are both Fourier multipliers,
  // so A^+ followed by smoothing is a single pass.
  std::vector<Complex> spectrum = fft::forward(y);
  for (std::size_t i = 0; i < spectrum.size(); ++i) spectrum[i] *= fused_kernel_[i];
  return fft::inverse_real(spectrum, y.shape());
}

RealField KaiserSquires::reconstruct(const Measurement& y) const {
  if (!fused_kernel_.empty()) {
    if (y.size() != op_->measurement_size()) {
      throw DimensionMismatchError("measurement length does not match operator");
    }
    return reconstruct(ComplexField::from_components(op_->image_shape(), y));
  }
  RealField x = op_->pseudoinverse(y);
  if (cfg_.sigma_smooth == 0.0) return x;
  return apply_fourier_multiplier(x, multiplier_.values());
}

RealField kaiser_squires(const ComplexField& y, const MassMappingOperator& op,
                         const KaiserSquiresConfig& cfg) {
  RealField x = op.pseudoinverse(y);
  if (cfg.sigma_smooth == 0.0) return x;
  return apply_fourier_multiplier(x, smoothing_multiplier(op.grid(), cfg.sigma_smooth).values());
}

}  // namespace sscb

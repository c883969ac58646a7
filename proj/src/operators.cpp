#include "sscb/operators.hpp"

#include <cmath>
#include <string>

#include "sscb/errors.hpp"
#include "sscb/fft.hpp"

namespace sscb {

GaussianNoiseModel::GaussianNoiseModel(double sigma_component) : sigma_(sigma_component) {
  if (!std::isfinite(sigma_component) || sigma_component < 0.0) {
    throw ConfigError("noise sigma must be finite and non-negative, got " +
                      std::to_string(sigma_component));
  }
}

void ForwardOperator::check_image(const RealField& x) const {
  if (!(x.shape() == image_shape())) {
    throw DimensionMismatchError("image shape " + std::to_string(x.rows()) + "x" +
                                 std::to_string(x.cols()) + " does not match operator " +
                                 std::to_string(image_shape().rows) + "x" +
                                 std::to_string(image_shape().cols));
  }
}

void ForwardOperator::check_measurement(const Measurement& y) const {
  if (y.size() != measurement_size()) {
    throw DimensionMismatchError("measurement length " + std::to_string(y.size()) +
                                 " does not match operator " +
                                 std::to_string(measurement_size()));
  }
}

ComplexField lensing_kernel(const FrequencyGrid& grid) {
  const std::size_t n = grid.n;
  ComplexField kernel(n, n);
  for (std::size_t i = 0; i < n * n; ++i) {
    const double kx = grid.kx[i];
    const double ky = grid.ky[i];
    const double k2 = kx * kx + ky * ky;
    // DC is unobservable; the 0/0 is defined as 0.
    kernel[i] = k2 == 0.0 ? Complex{} : Complex(kx * kx - ky * ky, 2.0 * kx * ky) / k2;
  }
  return kernel;
}

MassMappingOperator::MassMappingOperator(std::size_t n)
    : grid_(make_frequency_grid(n)), kernel_(lensing_kernel(grid_)) {}

ComplexField MassMappingOperator::forward(const RealField& x) const {
  check_image(x);
  std::vector<Complex> spectrum = fft::forward(x);
  for (std::size_t i = 0; i < spectrum.size(); ++i) spectrum[i] *= kernel_[i];
  return fft::inverse(spectrum, x.shape());
}

RealField MassMappingOperator::adjoint(const ComplexField& y) const {
  if (!(y.shape() == image_shape())) {
    throw DimensionMismatchError("shear shape does not match operator");
  }
  std::vector<Complex> spectrum = fft::forward(y);
  for (std::size_t i = 0; i < spectrum.size(); ++i) spectrum[i] *= std::conj(kernel_[i]);
  return fft::inverse_real(spectrum, y.shape());
}

Measurement MassMappingOperator::apply(const RealField& x) const {
  return forward(x).to_components();
}

RealField MassMappingOperator::adjoint(const Measurement& y) const {
  check_measurement(y);
  return adjoint(ComplexField::from_components(image_shape(), y));
}

RealField MassMappingOperator::pseudoinverse(const Measurement& y) const { return adjoint(y); }

Measurement MassMappingOperator::pseudoinverse_adjoint(const RealField& x) const {
  return apply(x);
}

std::optional<double> MassMappingOperator::pseudoinverse_gram_trace() const {
  return static_cast<double>(grid_.n * grid_.n - 1);
}

IdentityOperator::IdentityOperator(std::size_t rows, std::size_t cols) : shape_{rows, cols} {
  if (rows == 0 || cols == 0) throw InvalidGridError("identity operator needs a non-empty shape");
}

Measurement IdentityOperator::apply(const RealField& x) const {
  check_image(x);
  return x.data();
}

RealField IdentityOperator::adjoint(const Measurement& y) const {
  check_measurement(y);
  return RealField(shape_.rows, shape_.cols, y);
}

Measurement add_noise(const Measurement& y, const GaussianNoiseModel& noise, Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Measurement out(y.size());
  const double sigma = noise.sigma();
  for (std::size_t i = 0; i < y.size(); ++i) out[i] = y[i] + sigma * normal(rng);
  return out;
}

ComplexField add_noise(const ComplexField& y, const GaussianNoiseModel& noise, Rng& rng) {
  return ComplexField::from_components(y.shape(), add_noise(y.to_components(), noise, rng));
}

}  // namespace sscb

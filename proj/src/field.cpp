#include "sscb/field.hpp"

#include <cmath>
#include <numeric>
#include <string>

#include "sscb/errors.hpp"

namespace sscb {

namespace {

void require_same_shape(Shape a, Shape b) {
  if (!(a == b)) {
    throw DimensionMismatchError("field shapes differ: " + std::to_string(a.rows) + "x" +
                                 std::to_string(a.cols) + " vs " + std::to_string(b.rows) + "x" +
                                 std::to_string(b.cols));
  }
}

}  // namespace

RealField::RealField(std::size_t rows, std::size_t cols, double fill)
    : shape_{rows, cols}, values_(rows * cols, fill) {}

RealField::RealField(std::size_t rows, std::size_t cols, std::vector<double> values)
    : shape_{rows, cols}, values_(std::move(values)) {
  if (values_.size() != rows * cols) {
    throw DimensionMismatchError("RealField value count does not match shape");
  }
}

bool RealField::all_finite() const {
  for (double v : values_) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

double RealField::mean() const {
  if (values_.empty()) return 0.0;
  return std::accumulate(values_.begin(), values_.end(), 0.0) / static_cast<double>(values_.size());
}

RealField& RealField::operator+=(const RealField& other) {
  require_same_shape(shape_, other.shape_);
  for (std::size_t i = 0; i < values_.size(); ++i) values_[i] += other.values_[i];
  return *this;
}

RealField& RealField::operator-=(const RealField& other) {
  require_same_shape(shape_, other.shape_);
  for (std::size_t i = 0; i < values_.size(); ++i) values_[i] -= other.values_[i];
  return *this;
}

RealField& RealField::operator*=(double s) {
  for (double& v : values_) v *= s;
  return *this;
}

RealField operator+(RealField a, const RealField& b) { return a += b; }
RealField operator-(RealField a, const RealField& b) { return a -= b; }
RealField operator*(double s, RealField a) { return a *= s; }

ComplexField::ComplexField(std::size_t rows, std::size_t cols, Complex fill)
    : shape_{rows, cols}, values_(rows * cols, fill) {}

ComplexField::ComplexField(std::size_t rows, std::size_t cols, std::vector<Complex> values)
    : shape_{rows, cols}, values_(std::move(values)) {
  if (values_.size() != rows * cols) {
    throw DimensionMismatchError("ComplexField value count does not match shape");
  }
}

bool ComplexField::all_finite() const {
  for (const Complex& v : values_) {
    if (!std::isfinite(v.real()) || !std::isfinite(v.imag())) return false;
  }
  return true;
}

Measurement ComplexField::to_components() const {
  const std::size_t m = values_.size();
  Measurement out(2 * m);
  for (std::size_t i = 0; i < m; ++i) {
    out[i] = values_[i].real();
    out[m + i] = values_[i].imag();
  }
  return out;
}

ComplexField ComplexField::from_components(Shape shape, std::span<const double> components) {
  const std::size_t m = shape.size();
  if (components.size() != 2 * m) {
    throw DimensionMismatchError("component vector length " + std::to_string(components.size()) +
                                 " does not match 2 x " + std::to_string(m));
  }
  ComplexField out(shape.rows, shape.cols);
  for (std::size_t i = 0; i < m; ++i) out[i] = Complex(components[i], components[m + i]);
  return out;
}

int dft_frequency(std::size_t i, std::size_t n) {
  const auto si = static_cast<long>(i);
  const auto sn = static_cast<long>(n);
  return static_cast<int>(si < (sn + 1) / 2 ? si : si - sn);
}

FrequencyGrid make_frequency_grid(std::size_t n) {
  if (n < 2 || n % 2 != 0) {
    throw InvalidGridError("grid size must be even and >= 2, got " + std::to_string(n));
  }
  FrequencyGrid grid;
  grid.n = n;
  grid.kx.resize(n * n);
  grid.ky.resize(n * n);
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t c = 0; c < n; ++c) {
      grid.kx[r * n + c] = dft_frequency(c, n);
      grid.ky[r * n + c] = dft_frequency(r, n);
    }
  }
  return grid;
}

double dot(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw DimensionMismatchError("dot: length mismatch");
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

double squared_norm(std::span<const double> a) { return dot(a, a); }

}  // namespace sscb

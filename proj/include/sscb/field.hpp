#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

namespace sscb {

using Complex = std::complex<double>;

/// Flat vector of real measurement components. Complex measurements are laid
/// out as all real parts followed by all imaginary parts (length 2 * rows * cols).
using Measurement = std::vector<double>;

struct Shape {
  std::size_t rows = 0;
  std::size_t cols = 0;

  std::size_t size() const { return rows * cols; }
  bool operator==(const Shape&) const = default;
};

/// Row-major real raster. Holds convergence maps and reconstructions.
class RealField {
 public:
  RealField() = default;
  RealField(std::size_t rows, std::size_t cols, double fill = 0.0);
  RealField(std::size_t rows, std::size_t cols, std::vector<double> values);

  std::size_t rows() const { return shape_.rows; }
  std::size_t cols() const { return shape_.cols; }
  Shape shape() const { return shape_; }
  std::size_t size() const { return values_.size(); }

  double& operator()(std::size_t r, std::size_t c) { return values_[r * shape_.cols + c]; }
  double operator()(std::size_t r, std::size_t c) const { return values_[r * shape_.cols + c]; }
  double& operator[](std::size_t i) { return values_[i]; }
  double operator[](std::size_t i) const { return values_[i]; }

  std::span<double> values() { return values_; }
  std::span<const double> values() const { return values_; }
  const std::vector<double>& data() const { return values_; }

  bool all_finite() const;
  double mean() const;

  RealField& operator+=(const RealField& other);
  RealField& operator-=(const RealField& other);
  RealField& operator*=(double s);

  bool operator==(const RealField&) const = default;

 private:
  Shape shape_;
  std::vector<double> values_;
};

RealField operator+(RealField a, const RealField& b);
RealField operator-(RealField a, const RealField& b);
RealField operator*(double s, RealField a);

/// Row-major complex raster. Holds shear measurements.
class ComplexField {
 public:
  ComplexField() = default;
  ComplexField(std::size_t rows, std::size_t cols, Complex fill = {});
  ComplexField(std::size_t rows, std::size_t cols, std::vector<Complex> values);

  std::size_t rows() const { return shape_.rows; }
  std::size_t cols() const { return shape_.cols; }
  Shape shape() const { return shape_; }
  std::size_t size() const { return values_.size(); }

  Complex& operator()(std::size_t r, std::size_t c) { return values_[r * shape_.cols + c]; }
  Complex operator()(std::size_t r, std::size_t c) const { return values_[r * shape_.cols + c]; }
  Complex& operator[](std::size_t i) { return values_[i]; }
  Complex operator[](std::size_t i) const { return values_[i]; }

  std::span<Complex> values() { return values_; }
  std::span<const Complex> values() const { return values_; }

  bool all_finite() const;

  /// Real-vector view: real parts, then imaginary parts.
  Measurement to_components() const;
  static ComplexField from_components(Shape shape, std::span<const double> components);

  bool operator==(const ComplexField&) const = default;

 private:
  Shape shape_;
  std::vector<Complex> values_;
};

/// Integer DFT frequencies in unshifted order; kx varies along columns, ky along rows.
struct FrequencyGrid {
  std::size_t n = 0;
  std::vector<int> kx;
  std::vector<int> ky;

  int kx_at(std::size_t r, std::size_t c) const { return kx[r * n + c]; }
  int ky_at(std::size_t r, std::size_t c) const { return ky[r * n + c]; }
};

/// Throws InvalidGridError unless n >= 2 and even.
FrequencyGrid make_frequency_grid(std::size_t n);

/// Signed frequency of DFT bin i for an n-point transform, in [-n/2, n/2).
int dft_frequency(std::size_t i, std::size_t n);

double dot(std::span<const double> a, std::span<const double> b);
double squared_norm(std::span<const double> a);

}  // namespace sscb

#pragma once

#include <cstddef>
#include <memory>
#include <optional>
#include <vector>

#include "sscb/field.hpp"
#include "sscb/rng.hpp"

namespace sscb {

/// Isotropic Gaussian noise, i.i.d. over every real measurement component.
/// sigma_component == 0 denotes a noiseless measurement process.
class GaussianNoiseModel {
 public:
  explicit GaussianNoiseModel(double sigma_component);

  double sigma() const { return sigma_; }
  double variance() const { return sigma_ * sigma_; }
  /// tr(Sigma) over m' real components.
  double trace(std::size_t measurement_size) const {
    return static_cast<double>(measurement_size) * variance();
  }

 private:
  double sigma_;
};

/// Linear measurement operator between a real image raster and a real
/// measurement vector of length measurement_size(). All inner products are real.
class ForwardOperator {
 public:
  virtual ~ForwardOperator() = default;

  virtual Shape image_shape() const = 0;
  virtual std::size_t measurement_size() const = 0;
  virtual bool is_linear() const { return true; }

  virtual Measurement apply(const RealField& x) const = 0;
  virtual RealField adjoint(const Measurement& y) const = 0;
  virtual RealField pseudoinverse(const Measurement& y) const = 0;
  /// (A^+)^T: image space to measurement space.
  virtual Measurement pseudoinverse_adjoint(const RealField& x) const = 0;

  /// Closed form of tr((A^+)^T A^+) when the operator knows it.
  virtual std::optional<double> pseudoinverse_gram_trace() const { return std::nullopt; }

  std::size_t image_size() const { return image_shape().size(); }

 protected:
  void check_image(const RealField& x) const;
  void check_measurement(const Measurement& y) const;
};

/// D(kx, ky) = (kx^2 - ky^2 + 2i kx ky) / (kx^2 + ky^2), with D(0, 0) = 0.
ComplexField lensing_kernel(const FrequencyGrid& grid);

/// Flat-sky shear operator A = F^-1 D F with unitary DFTs. Maps a real n x n
/// convergence map to an n x n complex shear map (2 n^2 real components).
/// |D| = 1 off DC, so A^T A is the zero-mean projector and A^+ = A^T.
class MassMappingOperator final : public ForwardOperator {
 public:
  explicit MassMappingOperator(std::size_t n);

  std::size_t n() const { return grid_.n; }
  const FrequencyGrid& grid() const { return grid_; }
  const ComplexField& kernel() const { return kernel_; }

  ComplexField forward(const RealField& x) const;
  RealField adjoint(const ComplexField& y) const;
  RealField pseudoinverse(const ComplexField& y) const { return adjoint(y); }

  Shape image_shape() const override { return {grid_.n, grid_.n}; }
  std::size_t measurement_size() const override { return 2 * grid_.n * grid_.n; }
  Measurement apply(const RealField& x) const override;
  RealField adjoint(const Measurement& y) const override;
  RealField pseudoinverse(const Measurement& y) const override;
  Measurement pseudoinverse_adjoint(const RealField& x) const override;
  /// tr(A A^T) = rank of the zero-mean projector = n^2 - 1.
  std::optional<double> pseudoinverse_gram_trace() const override;

 private:
  FrequencyGrid grid_;
  ComplexField kernel_;
};

/// Identity on a real raster, measurement space = image space. Test double.
class IdentityOperator final : public ForwardOperator {
 public:
  explicit IdentityOperator(std::size_t n) : IdentityOperator(n, n) {}
  IdentityOperator(std::size_t rows, std::size_t cols);

  Shape image_shape() const override { return shape_; }
  std::size_t measurement_size() const override { return shape_.size(); }
  Measurement apply(const RealField& x) const override;
  RealField adjoint(const Measurement& y) const override;
  RealField pseudoinverse(const Measurement& y) const override { return adjoint(y); }
  Measurement pseudoinverse_adjoint(const RealField& x) const override { return apply(x); }
  std::optional<double> pseudoinverse_gram_trace() const override {
    return static_cast<double>(shape_.size());
  }

 private:
  Shape shape_;
};

/// Adds independent N(0, sigma^2) draws to every real component.
/// Always consumes exactly one normal draw per component.
Measurement add_noise(const Measurement& y, const GaussianNoiseModel& noise, Rng& rng);
ComplexField add_noise(const ComplexField& y, const GaussianNoiseModel& noise, Rng& rng);

}  // namespace sscb

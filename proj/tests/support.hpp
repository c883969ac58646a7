#pragma once

#include <cmath>
#include <complex>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>
#include <unistd.h>
#include <numbers>
#include <random>
#include <vector>

#include "sscb/field.hpp"
#include "sscb/rng.hpp"

namespace sscb::testing {

struct TempDir {
  std::filesystem::path path;
  TempDir() {
    static int counter = 0;
    path = std::filesystem::temp_directory_path() /
           ("sscb_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::remove_all(path);
    std::filesystem::create_directories(path);
  }
  ~TempDir() { std::filesystem::remove_all(path); }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
};

inline std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline RealField random_field(std::size_t rows, std::size_t cols, Rng& rng) {
  std::normal_distribution<double> dist;
  RealField x(rows, cols);
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = dist(rng);
  return x;
}

inline ComplexField random_complex_field(std::size_t rows, std::size_t cols, Rng& rng) {
  std::normal_distribution<double> dist;
  ComplexField y(rows, cols);
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = {dist(rng), dist(rng)};
  return y;
}

inline double max_abs_diff(std::span<const double> a, std::span<const double> b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

inline double rel_err(double a, double b) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-300});
}

inline RealField zero_mean(RealField x) {
  const double mu = x.mean();
  for (std::size_t i = 0; i < x.size(); ++i) x[i] -= mu;
  return x;
}

// Dense real matrix, row-major.
struct Dense {
  std::size_t rows = 0, cols = 0;
  std::vector<double> a;

  double& operator()(std::size_t r, std::size_t c) { return a[r * cols + c]; }
  double operator()(std::size_t r, std::size_t c) const { return a[r * cols + c]; }

  std::vector<double> apply(std::span<const double> x) const {
    std::vector<double> y(rows, 0.0);
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t c = 0; c < cols; ++c) y[r] += (*this)(r, c) * x[c];
    return y;
  }
  std::vector<double> apply_t(std::span<const double> y) const {
    std::vector<double> x(cols, 0.0);
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t c = 0; c < cols; ++c) x[c] += (*this)(r, c) * y[r];
    return x;
  }
  Dense gram() const {
    Dense g{cols, cols, std::vector<double>(cols * cols, 0.0)};
    for (std::size_t i = 0; i < cols; ++i)
      for (std::size_t j = 0; j < cols; ++j)
        for (std::size_t r = 0; r < rows; ++r) g(i, j) += (*this)(r, i) * (*this)(r, j);
    return g;
  }
};

// The lensing operator built from explicit DFT matrices, mapping a real
// n x n image to [Re(gamma); Im(gamma)].
inline Dense dense_lensing_operator(std::size_t n) {
  using C = std::complex<double>;
  const std::size_t m = n * n;
  auto freq = [n](std::size_t i) {
    const long k = static_cast<long>(i);
    return k < static_cast<long>(n / 2) ? k : k - static_cast<long>(n);
  };
  std::vector<C> dft(m * m);  // unitary 2-D DFT
  for (std::size_t u = 0; u < n; ++u)
    for (std::size_t v = 0; v < n; ++v)
      for (std::size_t r = 0; r < n; ++r)
        for (std::size_t c = 0; c < n; ++c) {
          const double phase = -2.0 * std::numbers::pi * static_cast<double>(u * r + v * c) / static_cast<double>(n);
          dft[(u * n + v) * m + (r * n + c)] = std::polar(1.0 / static_cast<double>(n), phase);
        }
  std::vector<C> d(m);
  for (std::size_t u = 0; u < n; ++u)
    for (std::size_t v = 0; v < n; ++v) {
      const double kx = static_cast<double>(freq(v));
      const double ky = static_cast<double>(freq(u));
      const double k2 = kx * kx + ky * ky;
      d[u * n + v] = k2 == 0.0 ? C{} : C{kx * kx - ky * ky, 2.0 * kx * ky} / k2;
    }
  // A = F^H diag(d) F
  Dense out{2 * m, m, std::vector<double>(2 * m * m, 0.0)};
  for (std::size_t p = 0; p < m; ++p)
    for (std::size_t q = 0; q < m; ++q) {
      C acc{};
      for (std::size_t f = 0; f < m; ++f) acc += std::conj(dft[f * m + p]) * d[f] * dft[f * m + q];
      out(p, q) = acc.real();
      out(m + p, q) = acc.imag();
    }
  return out;
}

}  // namespace sscb::testing

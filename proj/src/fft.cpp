#include "sscb/fft.hpp"

#include <fftw3.h>

#include <cmath>
#include <map>
#include <mutex>
#include <tuple>

#include "sscb/errors.hpp"

namespace sscb::fft {

namespace {

// FFTW planning is not thread-safe; execution of an existing plan on new arrays is.
class PlanCache {
 public:
  static PlanCache& instance() {
    static PlanCache cache;
    return cache;
  }

  fftw_plan get(Shape shape, int sign) {
    std::lock_guard<std::mutex> lock(mutex_);
    auto key = std::make_tuple(shape.rows, shape.cols, sign);
    if (auto it = plans_.find(key); it != plans_.end()) return it->second;
    std::vector<Complex> scratch_in(shape.size()), scratch_out(shape.size());
    fftw_plan plan = fftw_plan_dft_2d(static_cast<int>(shape.rows), static_cast<int>(shape.cols),
                                      reinterpret_cast<fftw_complex*>(scratch_in.data()),
                                      reinterpret_cast<fftw_complex*>(scratch_out.data()), sign,
                                      FFTW_ESTIMATE | FFTW_UNALIGNED);
    if (plan == nullptr) throw Error("FFTW failed to create a plan");
    plans_.emplace(key, plan);
    return plan;
  }

  PlanCache(const PlanCache&) = delete;
  PlanCache& operator=(const PlanCache&) = delete;

 private:
  PlanCache() = default;
  ~PlanCache() {
    for (auto& [key, plan] : plans_) fftw_destroy_plan(plan);
  }

  std::mutex mutex_;
  std::map<std::tuple<std::size_t, std::size_t, int>, fftw_plan> plans_;
};

void execute(std::span<const Complex> in, std::span<Complex> out, Shape shape, int sign) {
  if (in.size() != shape.size() || out.size() != shape.size()) {
    throw DimensionMismatchError("fft buffer size does not match shape");
  }
  fftw_plan plan = PlanCache::instance().get(shape, sign);
  // FFTW takes a non-const input pointer but does not modify it for out-of-place c2c.
  auto* src = const_cast<fftw_complex*>(reinterpret_cast<const fftw_complex*>(in.data()));
  auto* dst = reinterpret_cast<fftw_complex*>(out.data());
  if (in.data() == out.data()) {
    std::vector<Complex> copy(in.begin(), in.end());
    fftw_execute_dft(plan, reinterpret_cast<fftw_complex*>(copy.data()), dst);
  } else {
    fftw_execute_dft(plan, src, dst);
  }
  const double scale = 1.0 / std::sqrt(static_cast<double>(shape.size()));
  for (Complex& v : out) v *= scale;
}

}  // namespace

void forward(std::span<const Complex> in, std::span<Complex> out, Shape shape) {
  execute(in, out, shape, FFTW_FORWARD);
}

void inverse(std::span<const Complex> in, std::span<Complex> out, Shape shape) {
  execute(in, out, shape, FFTW_BACKWARD);
}

std::vector<Complex> forward(const RealField& x) {
  std::vector<Complex> in(x.values().begin(), x.values().end());
  std::vector<Complex> out(in.size());
  forward(in, out, x.shape());
  return out;
}

std::vector<Complex> forward(const ComplexField& x) {
  std::vector<Complex> out(x.size());
  forward(x.values(), out, x.shape());
  return out;
}

ComplexField inverse(std::span<const Complex> spectrum, Shape shape) {
  ComplexField out(shape.rows, shape.cols);
  inverse(spectrum, out.values(), shape);
  return out;
}

RealField inverse_real(std::span<const Complex> spectrum, Shape shape) {
  std::vector<Complex> tmp(shape.size());
  inverse(spectrum, tmp, shape);
  RealField out(shape.rows, shape.cols);
  for (std::size_t i = 0; i < tmp.size(); ++i) out[i] = tmp[i].real();
  return out;
}

}  // namespace sscb::fft

#pragma once

#include <span>
#include <vector>

#include "sscb/field.hpp"

namespace sscb::fft {

// Unitary 2D DFT over row-major complex buffers. Plans are cached per shape and
// shared between threads; execution is re-entrant.
void forward(std::span<const Complex> in, std::span<Complex> out, Shape shape);
void inverse(std::span<const Complex> in, std::span<Complex> out, Shape shape);

std::vector<Complex> forward(const RealField& x);
std::vector<Complex> forward(const ComplexField& x);
ComplexField inverse(std::span<const Complex> spectrum, Shape shape);

/// Real part of the inverse transform.
RealField inverse_real(std::span<const Complex> spectrum, Shape shape);

}  // namespace sscb::fft

#pragma once

#include <complex>
#include <span>

namespace vortexgate {

// In-place unnormalized 2D DFT over an n x n row-major array.  Plans are
// built once per size and shared; execution is safe from several threads.
enum class FftDirection { Forward, Backward };

void fft2d(std::span<std::complex<double>> data, int n, FftDirection dir);

// Unnormalized 1D DFT of `count` contiguous rows of length n each.
void fft_rows(std::span<std::complex<double>> data, int n, int count, FftDirection dir);

} // namespace vortexgate

#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

#include "torspec/field.hpp"

namespace torspec::fft {

constexpr bool is_pow2(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

inline std::size_t next_pow2(std::size_t n) {
  std::size_t p = 1;
  while (p < n) p <<= 1;
  return p;
}

/// In-place radix-2 transform, unnormalized: forward uses e^{-2 pi i jn/N},
/// inverse uses e^{+2 pi i jn/N}. n must be a power of two.
void transform(Complex* a, std::size_t n, bool inverse);

/// Transform every axis of a dense row-major tensor (unnormalized). Lines are
/// processed in parallel; each line transform is serial, so the output does
/// not depend on the thread count.
void transform_tensor(Complex* data, std::span<const std::size_t> dims, bool inverse);

/// Synthesis u(x_j) = sum_k hat_u_k e^{i k . x_j} on the grid x_j = 2 pi j / N
/// per axis. grid_dims must be powers of two with grid_dims[a] > 2*cutoff[a].
std::vector<Complex> to_grid(const SpectralField& u, std::span<const std::size_t> grid_dims);

/// Analysis: recover coefficients inside the cutoff box from grid values.
SpectralField from_grid(std::span<const Complex> values, std::span<const std::size_t> grid_dims,
                        std::span<const int> cutoffs, int freq_axes, bool make_real);

}  // namespace torspec::fft

namespace torspec::ref {

/// Naive O(n^2) discrete Fourier transform, serial. Reference for the fast
/// path; any n >= 1.
void dft(const Complex* in, Complex* out, std::size_t n, bool inverse);

/// Serial reference tensor transform built on dft().
void transform_tensor(Complex* data, std::span<const std::size_t> dims, bool inverse);

}  // namespace torspec::ref

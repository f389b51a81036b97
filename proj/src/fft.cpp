#include "torspec/fft.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "torspec/parallel.hpp"

namespace torspec::fft {

namespace {

void bit_reverse(Complex* a, std::size_t n) {
  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(a[i], a[j]);
  }
}

}  // namespace

void transform(Complex* a, std::size_t n, bool inverse) {
  if (!is_pow2(n)) throw std::invalid_argument("fft::transform: length must be a power of two");
  if (n == 1) return;
  bit_reverse(a, n);
  for (std::size_t len = 2; len <= n; len <<= 1) {
    const double angle = (inverse ? 2.0 : -2.0) * std::numbers::pi / static_cast<double>(len);
    const Complex wlen(std::cos(angle), std::sin(angle));
    for (std::size_t base = 0; base < n; base += len) {
      Complex w(1.0, 0.0);
      for (std::size_t off = 0; off < len / 2; ++off) {
        const Complex even = a[base + off];
        const Complex odd = a[base + off + len / 2] * w;
        a[base + off] = even + odd;
        a[base + off + len / 2] = even - odd;
        w *= wlen;
      }
    }
  }
}

namespace detail {

/// Apply a 1-D line transform along each axis of a dense row-major tensor.
template <class LineFn>
void for_each_line(Complex* data, std::span<const std::size_t> dims, LineFn&& line) {
  std::size_t total = 1;
  for (std::size_t d : dims) total *= d;
  if (total == 0) return;

  std::size_t stride_after = 1;  // product of extents after the current axis
  for (int axis = static_cast<int>(dims.size()) - 1; axis >= 0; --axis) {
    const std::size_t n = dims[static_cast<std::size_t>(axis)];
    const std::size_t lines = total / n;
    const std::size_t stride = stride_after;
    par::parallel_for(static_cast<std::ptrdiff_t>(lines), [&](std::ptrdiff_t li) {
      const auto l = static_cast<std::size_t>(li);
      // Line origin: interleave the index around the transformed axis.
      const std::size_t outer = l / stride;
      const std::size_t inner = l % stride;
      const std::size_t origin = outer * stride * n + inner;
      std::vector<Complex> buf(n);
      for (std::size_t i = 0; i < n; ++i) buf[i] = data[origin + i * stride];
      line(buf.data(), n);
      for (std::size_t i = 0; i < n; ++i) data[origin + i * stride] = buf[i];
    });
    stride_after *= n;
  }
}

}  // namespace detail

void transform_tensor(Complex* data, std::span<const std::size_t> dims, bool inverse) {
  detail::for_each_line(data, dims, [inverse](Complex* buf, std::size_t n) {
    transform(buf, n, inverse);
  });
}

std::vector<Complex> to_grid(const SpectralField& u, std::span<const std::size_t> grid_dims) {
  if (grid_dims.size() != static_cast<std::size_t>(u.axes()))
    throw std::invalid_argument("to_grid: dimension mismatch");
  for (int a = 0; a < u.axes(); ++a) {
    if (!is_pow2(grid_dims[static_cast<std::size_t>(a)]))
      throw std::invalid_argument("to_grid: grid dims must be powers of two");
    if (grid_dims[static_cast<std::size_t>(a)] <= 2 * static_cast<std::size_t>(u.cutoff(a)))
      throw std::invalid_argument("to_grid: grid too small for the cutoff");
  }
  std::size_t total = 1;
  for (std::size_t d : grid_dims) total *= d;
  std::vector<Complex> grid(total, Complex{0.0, 0.0});

  // Scatter coefficients into wrapped DFT bins.
  std::array<int, SpectralField::kMaxAxes> k{};
  for (std::size_t i = 0; i < u.size(); ++i) {
    u.decode(i, std::span<int>(k.data(), static_cast<std::size_t>(u.axes())));
    std::size_t bin = 0;
    for (int a = 0; a < u.axes(); ++a) {
      const std::size_t n = grid_dims[static_cast<std::size_t>(a)];
      const int ka = k[static_cast<std::size_t>(a)];
      const std::size_t pos = static_cast<std::size_t>((ka % static_cast<int>(n) + static_cast<int>(n))) % n;
      bin = bin * n + pos;
    }
    grid[bin] = u[i];
  }
  transform_tensor(grid.data(), grid_dims, /*inverse=*/true);
  return grid;
}

SpectralField from_grid(std::span<const Complex> values, std::span<const std::size_t> grid_dims,
                        std::span<const int> cutoffs, int freq_axes, bool make_real) {
  std::size_t total = 1;
  for (std::size_t d : grid_dims) total *= d;
  if (values.size() != total) throw std::invalid_argument("from_grid: size mismatch");
  std::vector<Complex> work(values.begin(), values.end());
  transform_tensor(work.data(), grid_dims, /*inverse=*/false);
  const double scale = 1.0 / static_cast<double>(total);

  SpectralField u(cutoffs, freq_axes, make_real);
  std::array<int, SpectralField::kMaxAxes> k{};
  for (std::size_t i = 0; i < u.size(); ++i) {
    u.decode(i, std::span<int>(k.data(), static_cast<std::size_t>(u.axes())));
    std::size_t bin = 0;
    for (int a = 0; a < u.axes(); ++a) {
      const std::size_t n = grid_dims[static_cast<std::size_t>(a)];
      const int ka = k[static_cast<std::size_t>(a)];
      const std::size_t pos = static_cast<std::size_t>((ka % static_cast<int>(n) + static_cast<int>(n))) % n;
      bin = bin * n + pos;
    }
    u[i] = work[bin] * scale;
  }
  if (make_real) u.symmetrize_real();
  return u;
}

}  // namespace torspec::fft

namespace torspec::ref {

void dft(const Complex* in, Complex* out, std::size_t n, bool inverse) {
  const double sign = inverse ? 1.0 : -1.0;
  for (std::size_t j = 0; j < n; ++j) {
    Complex acc{0.0, 0.0};
    for (std::size_t m = 0; m < n; ++m) {
      const double angle = sign * 2.0 * std::numbers::pi * static_cast<double>(j) *
                           static_cast<double>(m) / static_cast<double>(n);
      acc += in[m] * Complex(std::cos(angle), std::sin(angle));
    }
    out[j] = acc;
  }
}

void transform_tensor(Complex* data, std::span<const std::size_t> dims, bool inverse) {
  std::size_t total = 1;
  for (std::size_t d : dims) total *= d;
  if (total == 0) return;

  std::size_t stride_after = 1;
  for (int axis = static_cast<int>(dims.size()) - 1; axis >= 0; --axis) {
    const std::size_t n = dims[static_cast<std::size_t>(axis)];
    const std::size_t lines = total / n;
    const std::size_t stride = stride_after;
    std::vector<Complex> buf(n), out(n);
    for (std::size_t l = 0; l < lines; ++l) {
      const std::size_t outer = l / stride;
      const std::size_t inner = l % stride;
      const std::size_t origin = outer * stride * n + inner;
      for (std::size_t i = 0; i < n; ++i) buf[i] = data[origin + i * stride];
      dft(buf.data(), out.data(), n, inverse);
      for (std::size_t i = 0; i < n; ++i) data[origin + i * stride] = out[i];
    }
    stride_after *= n;
  }
}

}  // namespace torspec::ref

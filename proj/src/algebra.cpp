#include "torspec/algebra.hpp"

#include <cmath>
#include <stdexcept>

#include "torspec/fft.hpp"
#include "torspec/parallel.hpp"

namespace torspec {

namespace {

void require_same_shape(const SpectralField& u, const SpectralField& v, const char* what) {
  if (!u.same_shape(v)) throw std::invalid_argument(std::string(what) + ": mismatched field shapes");
}

}  // namespace

SpectralField add(const SpectralField& u, const SpectralField& v) {
  require_same_shape(u, v, "add");
  SpectralField out = u;
  out.set_real_flag(u.is_real() && v.is_real());
  par::parallel_for(static_cast<std::ptrdiff_t>(out.size()),
                    [&](std::ptrdiff_t i) { out[static_cast<std::size_t>(i)] += v[static_cast<std::size_t>(i)]; });
  return out;
}

SpectralField sub(const SpectralField& u, const SpectralField& v) {
  require_same_shape(u, v, "sub");
  SpectralField out = u;
  out.set_real_flag(u.is_real() && v.is_real());
  par::parallel_for(static_cast<std::ptrdiff_t>(out.size()),
                    [&](std::ptrdiff_t i) { out[static_cast<std::size_t>(i)] -= v[static_cast<std::size_t>(i)]; });
  return out;
}

SpectralField scaled(const SpectralField& u, Complex c) {
  SpectralField out = u;
  out.set_real_flag(u.is_real() && c.imag() == 0.0);
  par::parallel_for(static_cast<std::ptrdiff_t>(out.size()),
                    [&](std::ptrdiff_t i) { out[static_cast<std::size_t>(i)] *= c; });
  return out;
}

void axpy(SpectralField& y, Complex a, const SpectralField& x) {
  require_same_shape(y, x, "axpy");
  y.set_real_flag(y.is_real() && x.is_real() && a.imag() == 0.0);
  par::parallel_for(static_cast<std::ptrdiff_t>(y.size()),
                    [&](std::ptrdiff_t i) { y[static_cast<std::size_t>(i)] += a * x[static_cast<std::size_t>(i)]; });
}

SpectralField multiply_cutoff(const SpectralField& u, const SpectralField& v,
                              std::span<const int> out_cutoffs) {
  require_same_shape(u, v, "multiply");
  if (out_cutoffs.size() != static_cast<std::size_t>(u.axes()))
    throw std::invalid_argument("multiply: output cutoff rank mismatch");

  // Alias-free grid: N > K_u + K_v + K_out per axis.
  std::vector<std::size_t> dims;
  for (int a = 0; a < u.axes(); ++a) {
    const std::size_t need = static_cast<std::size_t>(2 * u.cutoff(a) +
                                                      out_cutoffs[static_cast<std::size_t>(a)] + 1);
    dims.push_back(fft::next_pow2(need));
  }
  auto gu = fft::to_grid(u, dims);
  const auto gv = fft::to_grid(v, dims);
  par::parallel_for(static_cast<std::ptrdiff_t>(gu.size()),
                    [&](std::ptrdiff_t i) { gu[static_cast<std::size_t>(i)] *= gv[static_cast<std::size_t>(i)]; });
  SpectralField out = fft::from_grid(gu, dims, out_cutoffs, u.freq_axes(),
                                     u.is_real() && v.is_real());
  return out;
}

SpectralField multiply(const SpectralField& u, const SpectralField& v) {
  return multiply_cutoff(u, v, u.cutoffs());
}

SpectralField multiply_widened(const SpectralField& u, const SpectralField& v) {
  std::vector<int> wide;
  for (int c : u.cutoffs()) wide.push_back(2 * c);
  return multiply_cutoff(u, v, wide);
}

SpectralField derivative(const SpectralField& u, int axis, int order) {
  if (axis < 0 || axis >= u.axes()) throw std::invalid_argument("derivative: bad axis");
  if (order != 1 && order != 2) throw std::invalid_argument("derivative: order must be 1 or 2");
  SpectralField out = u;
  par::parallel_for(static_cast<std::ptrdiff_t>(out.size()), [&](std::ptrdiff_t ii) {
    const auto i = static_cast<std::size_t>(ii);
    std::array<int, SpectralField::kMaxAxes> k{};
    out.decode(i, std::span<int>(k.data(), static_cast<std::size_t>(out.axes())));
    const Complex ik(0.0, static_cast<double>(k[static_cast<std::size_t>(axis)]));
    out[i] *= (order == 1) ? ik : ik * ik;
  });
  return out;
}

SpectralField translate(const SpectralField& u, std::span<const double> shift) {
  if (shift.size() != static_cast<std::size_t>(u.space_axes()))
    throw std::invalid_argument("translate: shift rank must equal spatial dimension");
  SpectralField out = u;
  par::parallel_for(static_cast<std::ptrdiff_t>(out.size()), [&](std::ptrdiff_t ii) {
    const auto i = static_cast<std::size_t>(ii);
    std::array<int, SpectralField::kMaxAxes> k{};
    out.decode(i, std::span<int>(k.data(), static_cast<std::size_t>(out.axes())));
    double phase = 0.0;
    for (int a = 0; a < u.space_axes(); ++a)
      phase += shift[static_cast<std::size_t>(a)] *
               k[static_cast<std::size_t>(u.freq_axes() + a)];
    out[i] *= Complex(std::cos(phase), std::sin(phase));
  });
  return out;
}

namespace ref {

SpectralField multiply_direct(const SpectralField& u, const SpectralField& v,
                              std::span<const int> out_cutoffs) {
  SpectralField out(out_cutoffs, u.freq_axes(), u.is_real() && v.is_real());
  const auto n = static_cast<std::size_t>(u.axes());
  std::array<int, SpectralField::kMaxAxes> ku{}, kv{}, ks{};
  for (std::size_t i = 0; i < u.size(); ++i) {
    u.decode(i, std::span<int>(ku.data(), n));
    if (u[i] == Complex{0.0, 0.0}) continue;
    for (std::size_t j = 0; j < v.size(); ++j) {
      v.decode(j, std::span<int>(kv.data(), n));
      for (std::size_t a = 0; a < n; ++a) ks[a] = ku[a] + kv[a];
      if (!out.in_box(std::span<const int>(ks.data(), n))) continue;
      out.at(std::span<const int>(ks.data(), n)) += u[i] * v[j];
    }
  }
  return out;
}

}  // namespace ref

}  // namespace torspec

#include "torspec/field.hpp"

#include <cmath>

#include "torspec/fft.hpp"
#include "torspec/parallel.hpp"
#include "torspec/rng.hpp"
#include "torspec/space.hpp"

namespace torspec {

namespace {

struct WeightSplit {
  double abs1;      // sum_a |k_a| over all axes
  double freq_sq;   // sum over frequency axes k_a^2
  double space_sq;  // sum over spatial axes k_a^2
};

WeightSplit split_mode(const SpectralField& shape, std::span<const int> mode) {
  WeightSplit w{0.0, 0.0, 0.0};
  for (int a = 0; a < shape.axes(); ++a) {
    const double k = mode[static_cast<std::size_t>(a)];
    w.abs1 += std::abs(k);
    if (a < shape.freq_axes())
      w.freq_sq += k * k;
    else
      w.space_sq += k * k;
  }
  return w;
}

}  // namespace

double mode_weight(const SpectralField& shape, std::span<const int> mode, const SpaceParams& p) {
  const WeightSplit w = split_mode(shape, mode);
  double weight = std::exp(2.0 * p.rho * w.abs1) * std::pow(1.0 + w.space_sq, p.r);
  if (shape.freq_axes() > 0) weight *= std::pow(1.0 + w.freq_sq, p.freq_exponent());
  return weight;
}

double norm(const SpectralField& u, const SpaceParams& p) {
  p.validate();
  const double s = par::sum_terms(u.size(), [&](std::size_t i) {
    std::array<int, SpectralField::kMaxAxes> k{};
    u.decode(i, std::span<int>(k.data(), static_cast<std::size_t>(u.axes())));
    const double w = mode_weight(u, std::span<const int>(k.data(), static_cast<std::size_t>(u.axes())), p);
    return std::norm(u[i]) * w;
  });
  return std::sqrt(s);
}

double norm_combined(const SpectralField& u, const SpaceParams& p) {
  p.validate();
  const double s = par::sum_terms(u.size(), [&](std::size_t i) {
    std::array<int, SpectralField::kMaxAxes> k{};
    u.decode(i, std::span<int>(k.data(), static_cast<std::size_t>(u.axes())));
    const WeightSplit w = split_mode(u, std::span<const int>(k.data(), static_cast<std::size_t>(u.axes())));
    const double weight =
        std::exp(2.0 * p.rho * w.abs1) * std::pow(1.0 + w.freq_sq + w.space_sq, p.r);
    return std::norm(u[i]) * weight;
  });
  return std::sqrt(s);
}

Complex inner(const SpectralField& u, const SpectralField& v, const SpaceParams& p) {
  p.validate();
  if (!u.same_shape(v)) throw std::invalid_argument("inner: mismatched field shapes");
  const double re = par::sum_terms(u.size(), [&](std::size_t i) {
    std::array<int, SpectralField::kMaxAxes> k{};
    u.decode(i, std::span<int>(k.data(), static_cast<std::size_t>(u.axes())));
    const double w = mode_weight(u, std::span<const int>(k.data(), static_cast<std::size_t>(u.axes())), p);
    return (u[i] * std::conj(v[i])).real() * w;
  });
  const double im = par::sum_terms(u.size(), [&](std::size_t i) {
    std::array<int, SpectralField::kMaxAxes> k{};
    u.decode(i, std::span<int>(k.data(), static_cast<std::size_t>(u.axes())));
    const double w = mode_weight(u, std::span<const int>(k.data(), static_cast<std::size_t>(u.axes())), p);
    return (u[i] * std::conj(v[i])).imag() * w;
  });
  return {re, im};
}

SupBound sup_bound(const SpectralField& u, const SpaceParams& p) {
  p.validate();
  const int d = u.space_axes();
  const int b = u.freq_axes();
  if (2.0 * p.r <= d)
    throw std::domain_error("sup_bound requires r > d/2");
  if (b > 0 && 2.0 * p.freq_exponent() <= b)
    throw std::domain_error("sup_bound requires r_freq > b/2");

  const double bound = par::sum_terms(u.size(), [&](std::size_t i) {
    std::array<int, SpectralField::kMaxAxes> k{};
    u.decode(i, std::span<int>(k.data(), static_cast<std::size_t>(u.axes())));
    const WeightSplit w = split_mode(u, std::span<const int>(k.data(), static_cast<std::size_t>(u.axes())));
    return std::abs(u[i]) * std::exp(p.rho * w.abs1);
  });
  const double c2 = par::sum_terms(u.size(), [&](std::size_t i) {
    std::array<int, SpectralField::kMaxAxes> k{};
    u.decode(i, std::span<int>(k.data(), static_cast<std::size_t>(u.axes())));
    const WeightSplit w = split_mode(u, std::span<const int>(k.data(), static_cast<std::size_t>(u.axes())));
    double inv = std::pow(1.0 + w.space_sq, -p.r);
    if (u.freq_axes() > 0) inv *= std::pow(1.0 + w.freq_sq, -p.freq_exponent());
    return inv;
  });
  return {bound, std::sqrt(c2)};
}

double grid_l2_norm(const SpectralField& u, int oversample) {
  std::vector<std::size_t> dims;
  for (int c : u.cutoffs())
    dims.push_back(fft::next_pow2(static_cast<std::size_t>(oversample * c + 1)));
  const auto values = fft::to_grid(u, dims);
  const double mean_sq = par::sum_terms(values.size(), [&](std::size_t i) {
                           return std::norm(values[i]);
                         }) / static_cast<double>(values.size());
  return std::sqrt(mean_sq);
}

double grid_max_abs(const SpectralField& u, int oversample) {
  std::vector<std::size_t> dims;
  for (int c : u.cutoffs())
    dims.push_back(fft::next_pow2(static_cast<std::size_t>(oversample * c + 2)));
  const auto values = fft::to_grid(u, dims);
  double worst = 0.0;
  for (const Complex& v : values) worst = std::max(worst, std::abs(v));
  return worst;
}

SpectralField random_field(std::span<const int> cutoffs, int freq_axes, std::uint64_t seed,
                           double decay_r, double rho) {
  SpectralField u(cutoffs, freq_axes, true);
  par::parallel_for(static_cast<std::ptrdiff_t>(u.size()), [&](std::ptrdiff_t i) {
    const auto idx = static_cast<std::size_t>(i);
    std::array<int, SpectralField::kMaxAxes> k{};
    u.decode(idx, std::span<int>(k.data(), static_cast<std::size_t>(u.axes())));
    double abs1 = 0.0, sq = 0.0;
    for (int a = 0; a < u.axes(); ++a) {
      abs1 += std::abs(k[static_cast<std::size_t>(a)]);
      sq += static_cast<double>(k[static_cast<std::size_t>(a)]) * k[static_cast<std::size_t>(a)];
    }
    const double mag = std::exp(-rho * abs1) * std::pow(1.0 + sq, -0.5 * decay_r);
    u[idx] = Complex(rng::normal(seed, idx, 0), rng::normal(seed, idx, 1)) * mag;
  });
  u.symmetrize_real();
  return u;
}

}  // namespace torspec

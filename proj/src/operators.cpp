#include "torspec/operators.hpp"

#include <cmath>
#include <stdexcept>

#include "torspec/parallel.hpp"

namespace torspec {

double eigenvalue(std::span<const int> k, const EllipticOperatorSpec& spec) {
  if (k.size() != spec.nu.size()) throw std::invalid_argument("eigenvalue: dimension mismatch");
  double s = spec.m;
  for (std::size_t i = 0; i < k.size(); ++i)
    s -= spec.nu[i] * spec.nu[i] * static_cast<double>(k[i]) * static_cast<double>(k[i]);
  return s;
}

double evolution_eigenvalue(std::span<const int> l, std::span<const int> k,
                            const EvolutionOperatorSpec& spec) {
  if (l.size() != spec.omega.size() || k.size() != spec.nu.size())
    throw std::invalid_argument("evolution_eigenvalue: dimension mismatch");
  double dot = 0.0;
  for (std::size_t i = 0; i < l.size(); ++i) dot += spec.omega[i] * static_cast<double>(l[i]);
  double s = spec.m - dot * dot;
  for (std::size_t i = 0; i < k.size(); ++i)
    s -= spec.nu[i] * spec.nu[i] * static_cast<double>(k[i]) * static_cast<double>(k[i]);
  return s;
}

double multiplier(std::span<const int> mode, int freq_axes, const EvolutionOperatorSpec& spec) {
  return evolution_eigenvalue(mode.subspan(0, static_cast<std::size_t>(freq_axes)),
                              mode.subspan(static_cast<std::size_t>(freq_axes)), spec);
}

double multiplier(std::span<const int> mode, const EllipticOperatorSpec& spec) {
  return eigenvalue(mode, spec);
}

double kernel_tolerance(double delta, double mode_sq) {
  return std::max(delta, 1e-9 * (1.0 + mode_sq));
}

namespace {

double mode_sq(std::span<const int> mode) {
  double s = 0.0;
  for (int c : mode) s += static_cast<double>(c) * static_cast<double>(c);
  return s;
}

template <class Mult>
SpectralField apply_diagonal(const SpectralField& u, Mult&& mult) {
  SpectralField out = u;
  par::parallel_for(static_cast<std::ptrdiff_t>(out.size()), [&](std::ptrdiff_t ii) {
    const auto i = static_cast<std::size_t>(ii);
    std::array<int, SpectralField::kMaxAxes> k{};
    out.decode(i, std::span<int>(k.data(), static_cast<std::size_t>(out.axes())));
    out[i] *= mult(std::span<const int>(k.data(), static_cast<std::size_t>(out.axes())));
  });
  return out;
}

template <class Mult>
SpectralField apply_diagonal_inverse(const SpectralField& u, Mult&& mult, bool exclude_kernel,
                                     double delta) {
  SpectralField out = u;
  // Serial scan so a zero divisor reports the offending mode deterministically.
  std::array<int, SpectralField::kMaxAxes> k{};
  for (std::size_t i = 0; i < out.size(); ++i) {
    out.decode(i, std::span<int>(k.data(), static_cast<std::size_t>(out.axes())));
    const std::span<const int> mode(k.data(), static_cast<std::size_t>(out.axes()));
    const double ev = mult(mode);
    if (std::abs(ev) <= kernel_tolerance(delta, mode_sq(mode))) {
      if (!exclude_kernel) {
        std::string ms;
        for (int c : mode) ms += std::to_string(c) + " ";
        throw ZeroDivisorError("apply_inverse: near-zero eigenvalue " + std::to_string(ev) +
                               " at mode " + ms);
      }
      out[i] = Complex{0.0, 0.0};
    } else {
      out[i] /= ev;
    }
  }
  return out;
}

void check_spatial_rank(const SpectralField& u, int dim, int freq) {
  if (u.space_axes() != dim || u.freq_axes() != freq)
    throw std::invalid_argument("operator/field dimension mismatch");
}

}  // namespace

SpectralField apply(const EllipticOperatorSpec& spec, const SpectralField& u) {
  check_spatial_rank(u, spec.dim(), 0);
  return apply_diagonal(u, [&](std::span<const int> mode) { return eigenvalue(mode, spec); });
}

SpectralField apply(const EvolutionOperatorSpec& spec, const SpectralField& u) {
  check_spatial_rank(u, spec.dim(), spec.freq_dim());
  return apply_diagonal(u, [&](std::span<const int> mode) {
    return multiplier(mode, spec.freq_dim(), spec);
  });
}

SpectralField apply_inverse(const EllipticOperatorSpec& spec, const SpectralField& u,
                            bool exclude_kernel, double delta) {
  check_spatial_rank(u, spec.dim(), 0);
  return apply_diagonal_inverse(
      u, [&](std::span<const int> mode) { return eigenvalue(mode, spec); }, exclude_kernel, delta);
}

SpectralField apply_inverse(const EvolutionOperatorSpec& spec, const SpectralField& u,
                            bool exclude_kernel, double delta) {
  check_spatial_rank(u, spec.dim(), spec.freq_dim());
  return apply_diagonal_inverse(
      u, [&](std::span<const int> mode) { return multiplier(mode, spec.freq_dim(), spec); },
      exclude_kernel, delta);
}

namespace {

/// Enumerate the full box of a (freq + space) cutoff vector.
template <class Fn>
void for_each_mode(std::span<const int> cutoffs, Fn&& fn) {
  std::array<int, SpectralField::kMaxAxes> k{};
  const int axes = static_cast<int>(cutoffs.size());
  for (int a = 0; a < axes; ++a) k[static_cast<std::size_t>(a)] = -cutoffs[static_cast<std::size_t>(a)];
  for (;;) {
    fn(std::span<const int>(k.data(), static_cast<std::size_t>(axes)));
    int a = axes - 1;
    for (; a >= 0; --a) {
      if (++k[static_cast<std::size_t>(a)] <= cutoffs[static_cast<std::size_t>(a)]) break;
      k[static_cast<std::size_t>(a)] = -cutoffs[static_cast<std::size_t>(a)];
    }
    if (a < 0) return;
  }
}

}  // namespace

double inverse_norm_bound(const EllipticOperatorSpec& spec, std::span<const int> cutoffs) {
  double worst = 0.0;
  for_each_mode(cutoffs, [&](std::span<const int> mode) {
    worst = std::max(worst, 1.0 / std::abs(eigenvalue(mode, spec)));
  });
  return worst;
}

double inverse_norm_bound(const EvolutionOperatorSpec& spec, std::span<const int> cutoffs) {
  double worst = 0.0;
  for_each_mode(cutoffs, [&](std::span<const int> mode) {
    worst = std::max(worst, 1.0 / std::abs(multiplier(mode, spec.freq_dim(), spec)));
  });
  return worst;
}

double inverse_gain_bound(const EllipticOperatorSpec& spec, std::span<const int> cutoffs) {
  double worst = 0.0;
  for_each_mode(cutoffs, [&](std::span<const int> mode) {
    worst = std::max(worst, (1.0 + mode_sq(mode)) / std::abs(eigenvalue(mode, spec)));
  });
  return worst;
}

double inverse_gain_bound(const EvolutionOperatorSpec& spec, std::span<const int> cutoffs) {
  const auto b = static_cast<std::size_t>(spec.freq_dim());
  double worst = 0.0;
  for_each_mode(cutoffs, [&](std::span<const int> mode) {
    const double ksq = mode_sq(mode.subspan(b));
    worst = std::max(worst, (1.0 + ksq) / std::abs(multiplier(mode, spec.freq_dim(), spec)));
  });
  return worst;
}

}  // namespace torspec

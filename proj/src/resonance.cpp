#include "torspec/resonance.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <sstream>

#include "torspec/parallel.hpp"
#include "torspec/rng.hpp"

namespace torspec {

std::string to_string(SpectralClass c) {
  switch (c) {
    case SpectralClass::Nonresonant: return "nonresonant";
    case SpectralClass::Resonant: return "resonant";
    case SpectralClass::EvolutionH1: return "evolution-H1";
    case SpectralClass::EvolutionH2: return "evolution-H2";
    case SpectralClass::EvolutionCenter: return "evolution-center";
  }
  return "?";
}

std::string ResonanceReport::to_text() const {
  std::ostringstream os;
  os.precision(17);
  os << "classification = " << to_string(classification) << "\n";
  os << "delta = " << delta << "\n";
  os << "margin = " << margin << "\n";
  os << "freq_axes = " << freq_axes << "\n";
  os << "kernel_count = " << kernel_modes.size() << "\n";
  for (const auto& mode : kernel_modes) {
    os << "kernel_mode =";
    for (int c : mode) os << " " << c;
    os << "\n";
  }
  return os.str();
}

namespace {

double sq_sum(std::span<const int> k) {
  double s = 0.0;
  for (int c : k) s += static_cast<double>(c) * static_cast<double>(c);
  return s;
}

template <class Fn>
void for_each_box_mode(std::span<const int> cutoffs, Fn&& fn) {
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

/// Closure of a mode set under componentwise sign flips, sorted.
std::vector<std::vector<int>> flip_closure(const std::set<std::vector<int>>& modes) {
  std::set<std::vector<int>> closed;
  for (const auto& m : modes) {
    const auto n = m.size();
    for (std::size_t mask = 0; mask < (std::size_t{1} << n); ++mask) {
      std::vector<int> f = m;
      for (std::size_t a = 0; a < n; ++a)
        if (mask & (std::size_t{1} << a)) f[a] = -f[a];
      closed.insert(std::move(f));
    }
  }
  return {closed.begin(), closed.end()};
}

}  // namespace

ResonanceReport resonance_scan(const EllipticOperatorSpec& spec, double delta, int kmax) {
  if (delta < 0.0) throw std::invalid_argument("resonance_scan: delta must be >= 0");
  ResonanceReport rep;
  rep.delta = delta;
  std::set<std::vector<int>> kernel;
  double margin = std::numeric_limits<double>::infinity();

  std::vector<int> cutoffs(static_cast<std::size_t>(spec.dim()), kmax);
  for_each_box_mode(cutoffs, [&](std::span<const int> k) {
    const double ev = eigenvalue(k, spec);
    if (std::abs(ev) <= kernel_tolerance(delta, sq_sum(k)))
      kernel.insert(std::vector<int>(k.begin(), k.end()));
    else
      margin = std::min(margin, std::abs(ev));
  });

  rep.kernel_modes = flip_closure(kernel);
  rep.margin = std::isfinite(margin) ? margin : 0.0;
  rep.classification = kernel.empty() ? SpectralClass::Nonresonant : SpectralClass::Resonant;
  return rep;
}

ResonanceReport resonance_scan(const EvolutionOperatorSpec& spec, double delta, int kmax,
                               int lmax) {
  if (delta < 0.0) throw std::invalid_argument("resonance_scan: delta must be >= 0");
  ResonanceReport rep;
  rep.delta = delta;
  rep.freq_axes = spec.freq_dim();

  // Spatial sign test: if -sum nu^2 k^2 + m stays negative the whole spectrum
  // does, for every l.
  double max_spatial = -std::numeric_limits<double>::infinity();
  double min_spatial_abs = std::numeric_limits<double>::infinity();
  std::vector<int> kcut(static_cast<std::size_t>(spec.dim()), kmax);
  const EllipticOperatorSpec spatial{spec.nu, spec.m};
  for_each_box_mode(kcut, [&](std::span<const int> k) {
    const double ev = eigenvalue(k, spatial);
    max_spatial = std::max(max_spatial, ev);
    min_spatial_abs = std::min(min_spatial_abs, std::abs(ev));
  });

  if (max_spatial < -kernel_tolerance(delta, 0.0)) {
    rep.classification = SpectralClass::EvolutionH1;
    rep.margin = min_spatial_abs;
    return rep;
  }

  std::vector<int> cutoffs(static_cast<std::size_t>(spec.freq_dim()), lmax);
  cutoffs.insert(cutoffs.end(), static_cast<std::size_t>(spec.dim()), kmax);
  std::set<std::vector<int>> kernel;
  double margin = std::numeric_limits<double>::infinity();
  for_each_box_mode(cutoffs, [&](std::span<const int> mode) {
    const double ev = multiplier(mode, spec.freq_dim(), spec);
    if (std::abs(ev) <= kernel_tolerance(delta, sq_sum(mode)))
      kernel.insert(std::vector<int>(mode.begin(), mode.end()));
    else
      margin = std::min(margin, std::abs(ev));
  });
  rep.kernel_modes = flip_closure(kernel);
  rep.margin = std::isfinite(margin) ? margin : 0.0;

  if (spec.freq_dim() == 1 && kernel.empty()) {
    rep.classification = SpectralClass::EvolutionH2;
  } else {
    // b >= 2 makes {<omega,l>^2} dense near the positive spatial values, so
    // no enumeration can certify a margin; route to the center manifold.
    rep.classification = SpectralClass::EvolutionCenter;
  }
  return rep;
}

MeasureEstimate excluded_measure_estimate(int dim, double m, double delta, int kmax, int samples,
                                          std::uint64_t seed) {
  if (delta < 0.0) throw std::invalid_argument("excluded_measure_estimate: delta must be >= 0");
  MeasureEstimate est;
  est.delta = delta;
  est.samples = samples;
  est.seed = seed;

  // Whole-cube degenerate case: the k = 0 shell triggers independently of nu.
  if (std::abs(m) <= delta) {
    est.analytic_bound = 1.0;
    est.mc_estimate = 1.0;
    est.mc_stderr = 0.0;
    return est;
  }

  // Candidate shells (componentwise nonnegative representatives): only modes
  // with sum k_i^2 <= m + delta can satisfy |F_k(nu) - m| <= delta on
  // [1,2]^d, plus one shell of margin for the analytic bound.
  const double upper = m + delta;
  const int shell_cap = static_cast<int>(std::floor(std::max(upper, 0.0))) + 1;
  std::vector<std::vector<int>> trigger_shells;  // can actually fire
  double bound = 0.0;
  std::vector<int> cut(static_cast<std::size_t>(dim), std::min(kmax, static_cast<int>(std::ceil(std::sqrt(static_cast<double>(shell_cap)))) + 1));
  for_each_box_mode(cut, [&](std::span<const int> k) {
    bool nonneg = true, zero = true;
    double s2 = 0.0, s4 = 0.0;
    for (int c : k) {
      if (c < 0) nonneg = false;
      if (c != 0) zero = false;
      s2 += static_cast<double>(c) * c;
      s4 += static_cast<double>(c) * c * c * c;
    }
    if (!nonneg || zero || s2 > shell_cap) return;
    if (4.0 * s2 < m - delta) return;  // F_k <= 4 s2 cannot reach [m-delta, m+delta]
    bound += 2.0 * delta / (2.0 * std::sqrt(s4));  // inf |grad F_k| at nu = 1
    if (s2 <= upper) trigger_shells.push_back(std::vector<int>(k.begin(), k.end()));
  });
  est.analytic_bound = std::min(bound, 1.0);

  if (samples <= 0) return est;
  const double hits = par::sum_terms(static_cast<std::size_t>(samples), [&](std::size_t i) {
    std::array<double, 4> nu{};
    for (int a = 0; a < dim; ++a)
      nu[static_cast<std::size_t>(a)] = 1.0 + rng::uniform01(seed, i, static_cast<std::uint64_t>(a));
    for (const auto& k : trigger_shells) {
      double f = 0.0;
      for (int a = 0; a < dim; ++a)
        f += static_cast<double>(k[static_cast<std::size_t>(a)]) * k[static_cast<std::size_t>(a)] *
             nu[static_cast<std::size_t>(a)] * nu[static_cast<std::size_t>(a)];
      if (std::abs(f - m) <= delta) return 1.0;
    }
    return 0.0;
  });
  const double p = hits / static_cast<double>(samples);
  est.mc_estimate = p;
  est.mc_stderr = std::sqrt(std::max(p * (1.0 - p), 0.0) / static_cast<double>(samples));
  return est;
}

}  // namespace torspec

#include "torspec/center_manifold.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <stdexcept>

#include "torspec/algebra.hpp"
#include "torspec/fft.hpp"
#include "torspec/parallel.hpp"
#include "torspec/rng.hpp"
#include "torspec/solver.hpp"

namespace torspec {

// ---------------------------------------------------------------------------
// Linear block structure
// ---------------------------------------------------------------------------

double mode_mu(std::span<const int> k, const EllipticOperatorSpec& op) {
  return -eigenvalue(k, op);  // sum nu^2 k^2 - m
}

FirstOrderState apply_system(const EllipticOperatorSpec& op, const FirstOrderState& z) {
  if (!z.u.same_shape(z.v)) throw std::invalid_argument("apply_system: mismatched components");
  FirstOrderState out{z.v, z.u};
  std::array<int, SpectralField::kMaxAxes> k{};
  for (std::size_t i = 0; i < z.u.size(); ++i) {
    out.v.decode(i, std::span<int>(k.data(), static_cast<std::size_t>(z.u.axes())));
    out.v[i] = mode_mu(std::span<const int>(k.data(), static_cast<std::size_t>(z.u.axes())), op) *
               z.u[i];
  }
  return out;
}

SpectralSplitting split_spectrum(const EllipticOperatorSpec& op, int cutoff,
                                 const SplitPolicy& policy) {
  SpectralSplitting split;
  split.op = op;
  split.cutoff = cutoff;

  const SpectralField shape = SpectralField::spatial(op.dim(), cutoff, false);
  std::array<int, SpectralField::kMaxAxes> kb{};
  double min_hyperbolic = std::numeric_limits<double>::infinity();
  double max_slow = 0.0;
  for (std::size_t i = 0; i < shape.size(); ++i) {
    shape.decode(i, std::span<int>(kb.data(), static_cast<std::size_t>(op.dim())));
    const std::span<const int> kview(kb.data(), static_cast<std::size_t>(op.dim()));
    const std::vector<int> k(kview.begin(), kview.end());
    double sq = 0.0;
    for (int c : k) sq += static_cast<double>(c) * c;
    const double mu = mode_mu(kview, op);

    if (std::abs(mu) <= kernel_tolerance(0.0, sq)) {
      split.has_jordan = true;
      for (int sign : {1, -1})
        split.center.push_back({k, sign, Complex{0.0, 0.0}, mu, ModeClass::CenterJordan});
    } else if (mu < 0.0) {
      const double freq = std::sqrt(-mu);
      for (int sign : {1, -1})
        split.center.push_back(
            {k, sign, Complex{0.0, sign * freq}, mu, ModeClass::CenterOscillatory});
    } else {
      const double rate = std::sqrt(mu);
      if (rate <= policy.slow_threshold) {
        max_slow = std::max(max_slow, rate);
        for (int sign : {1, -1})
          split.center.push_back({k, sign, Complex{sign * rate, 0.0}, mu, ModeClass::CenterSlow});
      } else {
        min_hyperbolic = std::min(min_hyperbolic, rate);
        split.stable.push_back({k, -1, Complex{-rate, 0.0}, mu, ModeClass::Hyperbolic});
        split.unstable.push_back({k, +1, Complex{rate, 0.0}, mu, ModeClass::Hyperbolic});
      }
    }
  }
  if (split.stable.empty())
    throw std::invalid_argument("split_spectrum: no hyperbolic modes; enlarge the cutoff");
  split.beta1 = split.beta2 = min_hyperbolic;
  split.beta3_minus = split.beta3_plus = max_slow;
  if (split.beta1 <= split.beta3_minus)
    throw std::invalid_argument("split_spectrum: slow widening erased the spectral gap");
  return split;
}

namespace {

double entry_weight(const EigenModeEntry& e, const SpaceParams& p) {
  double abs1 = 0.0, sq = 0.0;
  for (int c : e.k) {
    abs1 += std::abs(c);
    sq += static_cast<double>(c) * c;
  }
  return std::exp(2.0 * p.rho * abs1) * std::pow(1.0 + sq, p.r);
}

Complex entry_coefficient(const EigenModeEntry& e, Complex u, Complex v) {
  switch (e.cls) {
    case ModeClass::Hyperbolic:
    case ModeClass::CenterSlow: {
      const double rate = std::sqrt(e.mu);
      return 0.5 * (u + static_cast<double>(e.lambda_sign) * v / rate);
    }
    case ModeClass::CenterOscillatory: {
      const double freq = std::sqrt(-e.mu);
      return 0.5 * (u - static_cast<double>(e.lambda_sign) * Complex{0.0, 1.0} * v / freq);
    }
    case ModeClass::CenterJordan:
      return e.lambda_sign > 0 ? u : v;
  }
  return {};
}

void entry_add_state(const EigenModeEntry& e, Complex c, Complex& u, Complex& v) {
  switch (e.cls) {
    case ModeClass::Hyperbolic:
    case ModeClass::CenterSlow:
    case ModeClass::CenterOscillatory:
      u += c;
      v += e.lambda * c;
      return;
    case ModeClass::CenterJordan:
      if (e.lambda_sign > 0)
        u += c;
      else
        v += c;
      return;
  }
}

/// Eigen-coefficient of the forcing direction N = (0, g) along one entry.
Complex forcing_projection(const EigenModeEntry& e, Complex ghat) {
  switch (e.cls) {
    case ModeClass::CenterOscillatory: {
      const double freq = std::sqrt(-e.mu);
      return -static_cast<double>(e.lambda_sign) * Complex{0.0, 1.0} * ghat / (2.0 * freq);
    }
    case ModeClass::CenterSlow:
    case ModeClass::Hyperbolic: {
      const double rate = std::sqrt(e.mu);
      return static_cast<double>(e.lambda_sign) * ghat / (2.0 * rate);
    }
    case ModeClass::CenterJordan:
      // N = (0, g): only the v-slot (lambda_sign < 0) receives forcing.
      return e.lambda_sign < 0 ? ghat : Complex{0.0, 0.0};
  }
  return {};
}

}  // namespace

EigenCoordinates decompose(const SpectralSplitting& split, const FirstOrderState& z) {
  EigenCoordinates c;
  auto grab = [&](const std::vector<EigenModeEntry>& entries, std::vector<Complex>& out) {
    out.reserve(entries.size());
    for (const auto& e : entries)
      out.push_back(entry_coefficient(e, z.u.coeff(std::span<const int>(e.k)),
                                      z.v.coeff(std::span<const int>(e.k))));
  };
  grab(split.stable, c.stable);
  grab(split.unstable, c.unstable);
  grab(split.center, c.center);
  return c;
}

FirstOrderState reconstruct(const SpectralSplitting& split, const EigenCoordinates& c) {
  FirstOrderState z{SpectralField::spatial(split.op.dim(), split.cutoff, false),
                    SpectralField::spatial(split.op.dim(), split.cutoff, false)};
  auto put = [&](const std::vector<EigenModeEntry>& entries, const std::vector<Complex>& coords) {
    for (std::size_t i = 0; i < entries.size(); ++i) {
      Complex u{0.0, 0.0}, v{0.0, 0.0};
      entry_add_state(entries[i], coords[i], u, v);
      z.u.at(std::span<const int>(entries[i].k)) += u;
      z.v.at(std::span<const int>(entries[i].k)) += v;
    }
  };
  put(split.stable, c.stable);
  put(split.unstable, c.unstable);
  put(split.center, c.center);
  return z;
}

double eigen_norm(const SpectralSplitting& split, const EigenCoordinates& c,
                  const SpaceParams& p) {
  double s = 0.0;
  for (std::size_t i = 0; i < split.stable.size(); ++i)
    s += std::norm(c.stable[i]) * entry_weight(split.stable[i], p);
  for (std::size_t i = 0; i < split.unstable.size(); ++i)
    s += std::norm(c.unstable[i]) * entry_weight(split.unstable[i], p);
  for (std::size_t i = 0; i < split.center.size(); ++i)
    s += std::norm(c.center[i]) * entry_weight(split.center[i], p);
  return std::sqrt(s);
}

FirstOrderState semigroup_apply(const SpectralSplitting& split, Block block, double t,
                                const FirstOrderState& z) {
  if (block == Block::Stable && t < 0.0)
    throw std::invalid_argument("semigroup_apply: stable block is a forward semigroup");
  if (block == Block::Unstable && t > 0.0)
    throw std::invalid_argument("semigroup_apply: unstable block is a backward semigroup");

  EigenCoordinates c = decompose(split, z);
  auto evolve = [&](const std::vector<EigenModeEntry>& entries, std::vector<Complex>& coords,
                    bool active) {
    if (!active) {
      std::fill(coords.begin(), coords.end(), Complex{0.0, 0.0});
      return;
    }
    for (std::size_t i = 0; i < entries.size(); ++i) {
      if (entries[i].cls == ModeClass::CenterJordan) continue;  // handled pairwise below
      coords[i] *= std::exp(entries[i].lambda * t);
    }
  };
  evolve(split.stable, c.stable, block == Block::Stable);
  evolve(split.unstable, c.unstable, block == Block::Unstable);
  evolve(split.center, c.center, block == Block::Center);

  if (block == Block::Center && split.has_jordan) {
    // Jordan pairs evolve as u <- u + t v (entries come in (+1, -1) order).
    for (std::size_t i = 0; i + 1 < split.center.size(); ++i) {
      if (split.center[i].cls == ModeClass::CenterJordan && split.center[i].lambda_sign > 0 &&
          split.center[i + 1].cls == ModeClass::CenterJordan && split.center[i + 1].k == split.center[i].k)
        c.center[i] += t * c.center[i + 1];
    }
  }
  return reconstruct(split, c);
}

// ---------------------------------------------------------------------------
// Cut-off bump
// ---------------------------------------------------------------------------

SmoothBump::SmoothBump(int smoothness, double radius)
    : smoothness_(smoothness), radius_(radius) {
  if (smoothness < 1 || radius <= 0.0) throw std::invalid_argument("SmoothBump: bad parameters");
  // B(t) = integral_0^t s^n (1-s)^n ds expanded binomially.
  const int n = smoothness;
  poly_.assign(static_cast<std::size_t>(n) + 1, 0.0);
  double binom = 1.0;
  for (int j = 0; j <= n; ++j) {
    poly_[static_cast<std::size_t>(j)] = ((j % 2 == 0) ? 1.0 : -1.0) * binom / (n + j + 1);
    binom = binom * (n - j) / (j + 1);
  }
}

double SmoothBump::poly_at(double t) const {
  // B(t) = t^{n+1} sum_j poly_[j] t^j
  double s = 0.0;
  for (std::size_t j = poly_.size(); j-- > 0;) s = s * t + poly_[j];
  return std::pow(t, smoothness_ + 1) * s;
}

double SmoothBump::operator()(double r) const {
  const double s = std::abs(r) / radius_;
  if (s <= 0.5) return 1.0;
  if (s >= 1.0) return 0.0;
  const double t = 2.0 * (s - 0.5);
  return 1.0 - poly_at(t) / poly_at(1.0);
}

// ---------------------------------------------------------------------------
// Duhamel factors
// ---------------------------------------------------------------------------

Complex laplace_factor_closed(Complex a) {
  if (a.real() <= 0.0)
    throw std::domain_error("laplace_factor: integral diverges (spectral gap too small)");
  return 1.0 / a;
}

Complex laplace_factor_quadrature(Complex a, const QuadratureConfig& quad) {
  if (a.real() <= 0.0)
    throw std::domain_error("laplace_factor: integral diverges (spectral gap too small)");
  // Horizon with e^{-Re(a) T} <= tail_tol; panel width limited by the
  // oscillation so fixed-order Gauss stays at full accuracy.
  const double horizon = std::log(1.0 / quad.tail_tol) / a.real();
  if (horizon > quad.max_horizon)
    throw std::domain_error("laplace_factor: horizon exceeds the configured cap");
  const double scale = std::max({a.real(), std::abs(a.imag()), 1.0});
  const int panels = static_cast<int>(std::ceil(horizon * scale / 4.0));

  // 16-point Gauss-Legendre nodes on [-1, 1].
  static const double xs[8] = {0.0950125098376374, 0.2816035507792589, 0.4580167776572274,
                               0.6178762444026438, 0.7554044083550030, 0.8656312023878318,
                               0.9445750230732326, 0.9894009349916499};
  static const double ws[8] = {0.1894506104550685, 0.1826034150449236, 0.1691565193950025,
                               0.1495959888165767, 0.1246289712555339, 0.0951585116824928,
                               0.0622535239386479, 0.0271524594117541};

  Complex total{0.0, 0.0};
  const double width = horizon / panels;
  for (int p = 0; p < panels; ++p) {
    const double mid = (p + 0.5) * width;
    Complex acc{0.0, 0.0};
    for (int q = 0; q < 8; ++q) {
      const double dt = 0.5 * width * xs[q];
      acc += ws[q] * (std::exp(-a * (mid + dt)) + std::exp(-a * (mid - dt)));
    }
    total += acc * (0.5 * width);
  }
  return total;
}

// ---------------------------------------------------------------------------
// Jet container
// ---------------------------------------------------------------------------

int ManifoldJet::theta_modes() const {
  int n = 1;
  for (int a = 0; a < freq_dim; ++a) n *= 2 * theta_cutoff + 1;
  return n;
}

std::size_t ManifoldJet::index(int h, int l_flat, int mono) const {
  return (static_cast<std::size_t>(h) * static_cast<std::size_t>(theta_modes()) +
          static_cast<std::size_t>(l_flat)) *
             static_cast<std::size_t>(monomials()) +
         static_cast<std::size_t>(mono);
}

double ManifoldJet::sup() const {
  double worst = 0.0;
  for (const Complex& c : coef) worst = std::max(worst, std::abs(c));
  return worst;
}

double ManifoldJet::distance(const ManifoldJet& other) const {
  double worst = 0.0;
  for (std::size_t i = 0; i < coef.size(); ++i)
    worst = std::max(worst, std::abs(coef[i] - other.coef[i]));
  return worst;
}

namespace {

int quad_mono_index(int n_center, int i, int j) {  // i <= j
  return 1 + n_center + i * n_center - i * (i - 1) / 2 + (j - i);
}

/// Decode a flat theta index into mode components in [-L, L].
void decode_theta(int flat, int freq_dim, int theta_cutoff, std::span<int> l) {
  const int extent = 2 * theta_cutoff + 1;
  for (int a = freq_dim - 1; a >= 0; --a) {
    l[static_cast<std::size_t>(a)] = flat % extent - theta_cutoff;
    flat /= extent;
  }
}

Complex monomial_value(int n_center, int mono, std::span<const Complex> zeta) {
  if (mono == 0) return {1.0, 0.0};
  if (mono <= n_center) return zeta[static_cast<std::size_t>(mono - 1)];
  int idx = mono - 1 - n_center;
  for (int i = 0; i < n_center; ++i) {
    const int row = n_center - i;
    if (idx < row) return zeta[static_cast<std::size_t>(i)] * zeta[static_cast<std::size_t>(i + idx)];
    idx -= row;
  }
  throw std::out_of_range("monomial index");
}

}  // namespace

std::vector<Complex> ManifoldJet::evaluate(std::span<const double> theta,
                                           std::span<const Complex> zeta) const {
  std::vector<Complex> out(static_cast<std::size_t>(n_hyper), Complex{0.0, 0.0});
  const int n_l = theta_modes();
  std::array<int, SpectralField::kMaxAxes> l{};
  for (int lf = 0; lf < n_l; ++lf) {
    decode_theta(lf, freq_dim, theta_cutoff, std::span<int>(l.data(), static_cast<std::size_t>(freq_dim)));
    double phase = 0.0;
    for (int a = 0; a < freq_dim; ++a) phase += l[static_cast<std::size_t>(a)] * theta[static_cast<std::size_t>(a)];
    const Complex rot{std::cos(phase), std::sin(phase)};
    for (int m = 0; m < monomials(); ++m) {
      const Complex mv = monomial_value(n_center, m, zeta) * rot;
      for (int h = 0; h < n_hyper; ++h) out[static_cast<std::size_t>(h)] += coef[index(h, lf, m)] * mv;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Jet update
// ---------------------------------------------------------------------------

namespace {

struct JetWorkspace {
  std::vector<const EigenModeEntry*> hyper;   // stable then unstable
  std::vector<const EigenModeEntry*> center;
  std::vector<std::size_t> grid_dims;         // theta axes then x axes
  std::vector<int> hull_cutoffs;
  std::size_t grid_total = 1;
};

JetWorkspace make_workspace(const SpectralSplitting& split, const CmSetup& cfg) {
  if (cfg.f.analysis.uses_d2u)
    throw std::invalid_argument(
        "center manifold: the forcing may lose one derivative only (no second derivatives)");
  if (split.has_jordan)
    throw std::invalid_argument(
        "center manifold: exact double-zero modes are not supported by the quadratic jet");

  JetWorkspace ws;
  for (const auto& e : split.stable) ws.hyper.push_back(&e);
  for (const auto& e : split.unstable) ws.hyper.push_back(&e);
  for (const auto& e : split.center) ws.center.push_back(&e);

  const int b = static_cast<int>(cfg.omega.size());
  const int d = cfg.op.dim();
  const int p = cfg.f.analysis.u_degree;
  const int bw = std::max(cfg.f.analysis.coord_bandwidth, 0);
  for (int a = 0; a < b; ++a) {
    ws.hull_cutoffs.push_back(cfg.theta_cutoff);
    ws.grid_dims.push_back(fft::next_pow2(static_cast<std::size_t>(4 * (2 * cfg.theta_cutoff + 1) + bw)));
  }
  for (int a = 0; a < d; ++a) {
    ws.hull_cutoffs.push_back(cfg.cutoff);
    const int twoK1 = 2 * cfg.cutoff + 1;
    const std::size_t need = p >= 0
                                 ? static_cast<std::size_t>(((p + 2) / 2) * twoK1 + bw)
                                 : static_cast<std::size_t>(4 * twoK1 + bw);
    ws.grid_dims.push_back(fft::next_pow2(need));
  }
  for (std::size_t dsz : ws.grid_dims) ws.grid_total *= dsz;
  return ws;
}

}  // namespace

ManifoldJet zero_jet(const SpectralSplitting& split, const CmSetup& cfg) {
  ManifoldJet jet;
  jet.n_center = split.center_dim();
  jet.n_hyper = split.hyper_dim();
  jet.freq_dim = static_cast<int>(cfg.omega.size());
  jet.theta_cutoff = cfg.theta_cutoff;
  jet.coef.assign(static_cast<std::size_t>(jet.n_hyper) *
                      static_cast<std::size_t>(jet.theta_modes()) *
                      static_cast<std::size_t>(jet.monomials()),
                  Complex{0.0, 0.0});
  return jet;
}

ManifoldJet duhamel_update(const ManifoldJet& jet, const SpectralSplitting& split,
                           const CmSetup& cfg) {
  const JetWorkspace ws = make_workspace(split, cfg);
  const int b = static_cast<int>(cfg.omega.size());
  const int d = cfg.op.dim();
  const int n_c = jet.n_center;
  const int n_mono = jet.monomials();
  const int n_l = jet.theta_modes();

  // --- Section jets as hull fields: u and its spatial gradient, per monomial.
  std::vector<SpectralField> section(static_cast<std::size_t>(n_mono),
                                     SpectralField(ws.hull_cutoffs, b, false));
  // Hyperbolic graph content.
  std::array<int, SpectralField::kMaxAxes> mode{};
  for (int h = 0; h < jet.n_hyper; ++h) {
    const EigenModeEntry& e = *ws.hyper[static_cast<std::size_t>(h)];
    for (int lf = 0; lf < n_l; ++lf) {
      decode_theta(lf, b, jet.theta_cutoff, std::span<int>(mode.data(), static_cast<std::size_t>(b)));
      for (int a = 0; a < d; ++a)
        mode[static_cast<std::size_t>(b + a)] = e.k[static_cast<std::size_t>(a)];
      const std::span<const int> mspan(mode.data(), static_cast<std::size_t>(b + d));
      for (int m = 0; m < n_mono; ++m) {
        const Complex c = jet.coef[jet.index(h, lf, m)];
        if (c != Complex{0.0, 0.0}) section[static_cast<std::size_t>(m)].at(mspan) += c;
      }
    }
  }
  // Center directions enter linearly with unit u-component.
  for (int j = 0; j < n_c; ++j) {
    const EigenModeEntry& e = *ws.center[static_cast<std::size_t>(j)];
    std::fill(mode.begin(), mode.end(), 0);
    for (int a = 0; a < d; ++a) mode[static_cast<std::size_t>(b + a)] = e.k[static_cast<std::size_t>(a)];
    section[static_cast<std::size_t>(1 + j)].at(
        std::span<const int>(mode.data(), static_cast<std::size_t>(b + d))) += Complex{1.0, 0.0};
  }

  // --- Grids of the section and its spatial gradient.
  const bool need_du = cfg.f.analysis.uses_du;
  std::vector<std::vector<Complex>> ugrid(static_cast<std::size_t>(n_mono));
  std::vector<std::vector<std::vector<Complex>>> dugrid(
      static_cast<std::size_t>(need_du ? n_mono : 0));
  for (int m = 0; m < n_mono; ++m) {
    ugrid[static_cast<std::size_t>(m)] = fft::to_grid(section[static_cast<std::size_t>(m)], ws.grid_dims);
    if (need_du) {
      dugrid[static_cast<std::size_t>(m)].resize(static_cast<std::size_t>(d));
      for (int a = 0; a < d; ++a)
        dugrid[static_cast<std::size_t>(m)][static_cast<std::size_t>(a)] =
            fft::to_grid(derivative(section[static_cast<std::size_t>(m)], b + a, 1), ws.grid_dims);
    }
  }

  // --- Partial derivatives of f through second order in (u, Du).
  const int slots = 1 + (need_du ? d : 0);
  std::vector<expr::ExprPtr> first(static_cast<std::size_t>(slots));
  std::vector<std::vector<expr::ExprPtr>> second(
      static_cast<std::size_t>(slots), std::vector<expr::ExprPtr>(static_cast<std::size_t>(slots)));
  auto slot_diff = [&](const expr::ExprPtr& e, int s) {
    return s == 0 ? expr::diff(e, expr::VarKind::U) : expr::diff(e, expr::VarKind::DU, s - 1);
  };
  for (int s = 0; s < slots; ++s) {
    first[static_cast<std::size_t>(s)] = slot_diff(cfg.f.f, s);
    for (int t = s; t < slots; ++t)
      second[static_cast<std::size_t>(s)][static_cast<std::size_t>(t)] =
          slot_diff(first[static_cast<std::size_t>(s)], t);
  }

  // --- Pointwise composition of the degree-2 jet of f along the section.
  std::vector<std::vector<Complex>> ngrid(static_cast<std::size_t>(n_mono));
  for (auto& g : ngrid) g.assign(ws.grid_total, Complex{0.0, 0.0});

  par::parallel_for(static_cast<std::ptrdiff_t>(ws.grid_total), [&](std::ptrdiff_t gi) {
    const auto g = static_cast<std::size_t>(gi);
    std::array<double, SpectralField::kMaxAxes> coords{};
    {
      std::size_t rest = g;
      for (int a = b + d - 1; a >= 0; --a) {
        const std::size_t n = ws.grid_dims[static_cast<std::size_t>(a)];
        coords[static_cast<std::size_t>(a)] =
            2.0 * std::numbers::pi * static_cast<double>(rest % n) / static_cast<double>(n);
        rest /= n;
      }
    }
    std::array<Complex, SpectralField::kMaxAxes> du0{};
    std::array<Complex, SpectralField::kMaxAxes * SpectralField::kMaxAxes> d2u0{};
    if (need_du)
      for (int a = 0; a < d; ++a) du0[static_cast<std::size_t>(a)] = dugrid[0][static_cast<std::size_t>(a)][g];
    expr::Point pt{std::span<const double>(coords.data(), static_cast<std::size_t>(b + d)),
                   ugrid[0][g],
                   std::span<const Complex>(du0.data(), static_cast<std::size_t>(d)),
                   std::span<const Complex>(d2u0.data(), static_cast<std::size_t>(d * d))};

    const Complex f0 = expr::eval(cfg.f.f, pt);
    std::vector<Complex> df(static_cast<std::size_t>(slots));
    std::vector<std::vector<Complex>> d2f(static_cast<std::size_t>(slots),
                                          std::vector<Complex>(static_cast<std::size_t>(slots)));
    for (int s = 0; s < slots; ++s) {
      df[static_cast<std::size_t>(s)] = expr::eval(first[static_cast<std::size_t>(s)], pt);
      for (int t = s; t < slots; ++t) {
        const Complex v = expr::eval(second[static_cast<std::size_t>(s)][static_cast<std::size_t>(t)], pt);
        d2f[static_cast<std::size_t>(s)][static_cast<std::size_t>(t)] = v;
        d2f[static_cast<std::size_t>(t)][static_cast<std::size_t>(s)] = v;
      }
    }

    auto slot_value = [&](int m, int s) -> Complex {
      return s == 0 ? ugrid[static_cast<std::size_t>(m)][g]
                    : dugrid[static_cast<std::size_t>(m)][static_cast<std::size_t>(s - 1)][g];
    };

    ngrid[0][g] = f0;
    for (int j = 0; j < n_c; ++j) {
      Complex acc{0.0, 0.0};
      for (int s = 0; s < slots; ++s) acc += df[static_cast<std::size_t>(s)] * slot_value(1 + j, s);
      ngrid[static_cast<std::size_t>(1 + j)][g] = acc;
    }
    for (int i = 0; i < n_c; ++i)
      for (int j = i; j < n_c; ++j) {
        const int mono = quad_mono_index(n_c, i, j);
        Complex acc{0.0, 0.0};
        for (int s = 0; s < slots; ++s) acc += df[static_cast<std::size_t>(s)] * slot_value(mono, s);
        const double sym = (i == j) ? 0.5 : 1.0;
        for (int s = 0; s < slots; ++s)
          for (int t = 0; t < slots; ++t)
            acc += sym * d2f[static_cast<std::size_t>(s)][static_cast<std::size_t>(t)] *
                   slot_value(1 + i, s) * slot_value(1 + j, t);
        ngrid[static_cast<std::size_t>(mono)][g] = acc;
      }
  });

  // --- Back to hull coefficients, scaled by eps.
  std::vector<SpectralField> nfield;
  nfield.reserve(static_cast<std::size_t>(n_mono));
  for (int m = 0; m < n_mono; ++m)
    nfield.push_back(scaled(
        fft::from_grid(ngrid[static_cast<std::size_t>(m)], ws.grid_dims, ws.hull_cutoffs, b, false),
        cfg.epsilon));

  // --- Center projections of the forcing: the reduced drift eps N_c as a
  // theta-series of monomial coefficients, used for the flow correction.
  std::vector<Complex> drift(static_cast<std::size_t>(n_c) * static_cast<std::size_t>(n_l) *
                                 static_cast<std::size_t>(n_mono),
                             Complex{0.0, 0.0});
  auto drift_at = [&](int j, int lf, int m) -> Complex& {
    return drift[(static_cast<std::size_t>(j) * static_cast<std::size_t>(n_l) +
                  static_cast<std::size_t>(lf)) *
                     static_cast<std::size_t>(n_mono) +
                 static_cast<std::size_t>(m)];
  };
  {
    std::array<int, SpectralField::kMaxAxes> lmode{};
    for (int j = 0; j < n_c; ++j) {
      const EigenModeEntry& e = *ws.center[static_cast<std::size_t>(j)];
      for (int lf = 0; lf < n_l; ++lf) {
        decode_theta(lf, b, jet.theta_cutoff, std::span<int>(lmode.data(), static_cast<std::size_t>(b)));
        for (int a = 0; a < d; ++a)
          lmode[static_cast<std::size_t>(b + a)] = e.k[static_cast<std::size_t>(a)];
        const std::span<const int> mspan(lmode.data(), static_cast<std::size_t>(b + d));
        for (int m = 0; m < n_mono; ++m) {
          const Complex ghat = nfield[static_cast<std::size_t>(m)].coeff(mspan);
          if (ghat == Complex{0.0, 0.0}) continue;
          drift_at(j, lf, m) = forcing_projection(e, ghat);
        }
      }
    }
  }

  // --- Transport correction D_zeta(w) . (eps N_c): the first-order flow
  // correction entering the quadratic jet. Without it the graph defect picks
  // up an eps^2-weighted linear term; with it only cubic remainders are left.
  // d(monomial)/d zeta_j expands into lower monomials:
  auto mono_derivative = [&](int m, int j) -> std::vector<std::pair<int, double>> {
    if (m == 0) return {};
    if (m <= n_c) return (m - 1 == j) ? std::vector<std::pair<int, double>>{{0, 1.0}}
                                      : std::vector<std::pair<int, double>>{};
    int idx = m - 1 - n_c;
    for (int i = 0; i < n_c; ++i) {
      const int row = n_c - i;
      if (idx < row) {
        const int k2 = i + idx;
        std::vector<std::pair<int, double>> out;
        if (i == k2 && i == j) out.push_back({1 + i, 2.0});
        else {
          if (i == j) out.push_back({1 + k2, 1.0});
          if (k2 == j) out.push_back({1 + i, 1.0});
        }
        return out;
      }
      idx -= row;
    }
    return {};
  };

  std::vector<Complex> transport(jet.coef.size(), Complex{0.0, 0.0});
  std::array<int, SpectralField::kMaxAxes> l1{}, l2{};
  for (int h = 0; h < jet.n_hyper; ++h) {
    for (int lf1 = 0; lf1 < n_l; ++lf1) {
      decode_theta(lf1, b, jet.theta_cutoff, std::span<int>(l1.data(), static_cast<std::size_t>(b)));
      for (int m1 = 0; m1 < n_mono; ++m1) {
        const Complex w_coef = jet.coef[jet.index(h, lf1, m1)];
        if (w_coef == Complex{0.0, 0.0}) continue;
        for (int j = 0; j < n_c; ++j) {
          const auto dm = mono_derivative(m1, j);
          if (dm.empty()) continue;
          for (int lf2 = 0; lf2 < n_l; ++lf2) {
            decode_theta(lf2, b, jet.theta_cutoff, std::span<int>(l2.data(), static_cast<std::size_t>(b)));
            bool in_box = true;
            int lf_sum = 0;
            for (int a = 0; a < b; ++a) {
              const int ls = l1[static_cast<std::size_t>(a)] + l2[static_cast<std::size_t>(a)];
              if (std::abs(ls) > jet.theta_cutoff) {
                in_box = false;
                break;
              }
              lf_sum = lf_sum * (2 * jet.theta_cutoff + 1) + (ls + jet.theta_cutoff);
            }
            if (!in_box) continue;
            for (int m2 = 0; m2 < n_mono; ++m2) {
              const Complex nc = drift_at(j, lf2, m2);
              if (nc == Complex{0.0, 0.0}) continue;
              for (const auto& [md, factor] : dm) {
                // Combine monomials md (deg <= 1) and m2 (deg <= 2).
                int m_out = -1;
                if (md == 0) {
                  m_out = m2;
                } else if (m2 == 0) {
                  m_out = md;
                } else if (md <= n_c && m2 <= n_c) {
                  const int i = std::min(md, m2) - 1, k2 = std::max(md, m2) - 1;
                  m_out = quad_mono_index(n_c, i, k2);
                } else {
                  continue;  // degree 3: outside the quadratic jet
                }
                transport[jet.index(h, lf_sum, m_out)] += factor * w_coef * nc;
              }
            }
          }
        }
      }
    }
  }

  // --- Duhamel integrals per (hyperbolic entry, theta mode, monomial).
  ManifoldJet next = zero_jet(split, cfg);
  std::map<std::pair<double, double>, Complex> memo;
  std::array<int, SpectralField::kMaxAxes> lmode{};
  for (int h = 0; h < jet.n_hyper; ++h) {
    const EigenModeEntry& e = *ws.hyper[static_cast<std::size_t>(h)];
    const double rate = std::sqrt(e.mu);
    for (int lf = 0; lf < n_l; ++lf) {
      decode_theta(lf, b, jet.theta_cutoff, std::span<int>(lmode.data(), static_cast<std::size_t>(b)));
      double gamma = 0.0;
      for (int a = 0; a < b; ++a) gamma += lmode[static_cast<std::size_t>(a)] * cfg.omega[static_cast<std::size_t>(a)];
      for (int a = 0; a < d; ++a)
        lmode[static_cast<std::size_t>(b + a)] = e.k[static_cast<std::size_t>(a)];
      const std::span<const int> mspan(lmode.data(), static_cast<std::size_t>(b + d));
      for (int m = 0; m < n_mono; ++m) {
        const Complex ghat = nfield[static_cast<std::size_t>(m)].coeff(mspan);
        const Complex source = static_cast<double>(e.lambda_sign) * ghat / (2.0 * rate) -
                               transport[jet.index(h, lf, m)];
        if (source == Complex{0.0, 0.0}) continue;

        Complex lambda_mono{0.0, 0.0};
        if (m >= 1 && m <= n_c) {
          lambda_mono = ws.center[static_cast<std::size_t>(m - 1)]->lambda;
        } else if (m > n_c) {
          int idx = m - 1 - n_c;
          for (int i = 0; i < n_c; ++i) {
            const int row = n_c - i;
            if (idx < row) {
              lambda_mono = ws.center[static_cast<std::size_t>(i)]->lambda +
                            ws.center[static_cast<std::size_t>(i + idx)]->lambda;
              break;
            }
            idx -= row;
          }
        }

        // Stable: integral over the past; unstable: over the future (with a
        // sign). Both reduce to the Laplace factor of one complex rate.
        Complex a_param;
        double sign;
        if (e.lambda_sign < 0) {
          a_param = Complex{rate, gamma} + lambda_mono;
          sign = 1.0;
        } else {
          a_param = Complex{rate, -gamma} - lambda_mono;
          sign = -1.0;
        }
        const std::pair<double, double> key{a_param.real(), a_param.imag()};
        auto it = memo.find(key);
        if (it == memo.end())
          it = memo.emplace(key, laplace_factor_quadrature(a_param, cfg.quad)).first;
        next.coef[next.index(h, lf, m)] = sign * source * it->second;
      }
    }
  }
  return next;
}

JetResult compute_jet(const CmSetup& cfg, double tol, int max_iter) {
  JetResult result;
  result.split = split_spectrum(cfg.op, cfg.cutoff, cfg.policy);
  ManifoldJet jet = zero_jet(result.split, cfg);
  double prev_step = 0.0;
  for (int it = 1; it <= max_iter; ++it) {
    ManifoldJet next = duhamel_update(jet, result.split, cfg);
    const double step = next.distance(jet);
    jet = std::move(next);
    result.iterations = it;
    if (prev_step > 0.0) result.contraction = std::max(result.contraction, step / prev_step);
    result.final_step = step;
    if (step <= tol * std::max(1.0, jet.sup())) break;
    if (it == max_iter)
      throw SolverError(SolverError::Code::MaxIter, "compute_jet: no fixed point reached");
    prev_step = step;
  }
  result.jet = std::move(jet);
  return result;
}

// ---------------------------------------------------------------------------
// Reduced equation and invariance checks
// ---------------------------------------------------------------------------

namespace {

/// eps * f evaluated along a concrete section u(x) at fixed theta; spatial
/// coefficients of the result.
SpectralField forcing_field(const CmSetup& cfg, std::span<const double> theta,
                            const SpectralField& u) {
  const int b = static_cast<int>(cfg.omega.size());
  const int d = cfg.op.dim();
  const int p = cfg.f.analysis.u_degree;
  const int bw = std::max(cfg.f.analysis.coord_bandwidth, 0);
  std::vector<std::size_t> dims;
  for (int a = 0; a < d; ++a) {
    const int twoK1 = 2 * u.cutoff(a) + 1;
    const std::size_t need = p >= 0 ? static_cast<std::size_t>(((p + 2) / 2) * twoK1 + bw)
                                    : static_cast<std::size_t>(4 * twoK1 + bw);
    dims.push_back(fft::next_pow2(need));
  }
  const auto ug = fft::to_grid(u, dims);
  const bool need_du = cfg.f.analysis.uses_du;
  std::vector<std::vector<Complex>> dug(static_cast<std::size_t>(need_du ? d : 0));
  for (int a = 0; a < (need_du ? d : 0); ++a)
    dug[static_cast<std::size_t>(a)] = fft::to_grid(derivative(u, a, 1), dims);

  std::vector<Complex> out(ug.size());
  par::parallel_for(static_cast<std::ptrdiff_t>(ug.size()), [&](std::ptrdiff_t gi) {
    const auto g = static_cast<std::size_t>(gi);
    std::array<double, SpectralField::kMaxAxes> coords{};
    for (int a = 0; a < b; ++a) coords[static_cast<std::size_t>(a)] = theta[static_cast<std::size_t>(a)];
    std::size_t rest = g;
    for (int a = d - 1; a >= 0; --a) {
      const std::size_t n = dims[static_cast<std::size_t>(a)];
      coords[static_cast<std::size_t>(b + a)] =
          2.0 * std::numbers::pi * static_cast<double>(rest % n) / static_cast<double>(n);
      rest /= n;
    }
    std::array<Complex, SpectralField::kMaxAxes> du{};
    std::array<Complex, SpectralField::kMaxAxes * SpectralField::kMaxAxes> d2u{};
    for (int a = 0; a < (need_du ? d : 0); ++a) du[static_cast<std::size_t>(a)] = dug[static_cast<std::size_t>(a)][g];
    expr::Point pt{std::span<const double>(coords.data(), static_cast<std::size_t>(b + d)),
                   ug[g], std::span<const Complex>(du.data(), static_cast<std::size_t>(d)),
                   std::span<const Complex>(d2u.data(), static_cast<std::size_t>(d * d))};
    out[g] = expr::eval(cfg.f.f, pt);
  });
  return scaled(fft::from_grid(out, dims, u.cutoffs(), 0, false), cfg.epsilon);
}

SpectralField center_section_u(const SpectralSplitting& split, std::span<const Complex> zeta,
                               std::span<const Complex> hyper, int cutoff) {
  SpectralField u = SpectralField::spatial(split.op.dim(), cutoff, false);
  for (std::size_t j = 0; j < split.center.size(); ++j)
    u.at(std::span<const int>(split.center[j].k)) += zeta[j];
  std::size_t h = 0;
  for (const auto& e : split.stable) u.at(std::span<const int>(e.k)) += hyper[h++];
  for (const auto& e : split.unstable) u.at(std::span<const int>(e.k)) += hyper[h++];
  return u;
}

double center_radius(std::span<const Complex> zeta) {
  double s = 0.0;
  for (const Complex& c : zeta) s += std::norm(c);
  return std::sqrt(s);
}

}  // namespace

std::vector<Complex> reduced_ode_rhs(std::span<const double> theta, std::span<const Complex> zeta,
                                     const ManifoldJet& jet, const SpectralSplitting& split,
                                     const CmSetup& cfg) {
  const std::vector<Complex> hyper = jet.evaluate(theta, zeta);
  const SpectralField u = center_section_u(split, zeta, hyper, cfg.cutoff);
  const SpectralField g = forcing_field(cfg, theta, u);
  const SmoothBump bump(cfg.bump_smoothness, cfg.cutoff_radius);
  const double phi = bump(center_radius(zeta));

  std::vector<Complex> rhs(zeta.size());
  for (std::size_t j = 0; j < split.center.size(); ++j) {
    const EigenModeEntry& e = split.center[j];
    const Complex ghat = g.coeff(std::span<const int>(e.k));
    rhs[j] = e.lambda * zeta[j] + phi * forcing_projection(e, ghat);
  }
  // Jordan coupling u' = v inside a center pair.
  for (std::size_t j = 0; j + 1 < split.center.size(); ++j)
    if (split.center[j].cls == ModeClass::CenterJordan && split.center[j].lambda_sign > 0 &&
        split.center[j + 1].k == split.center[j].k)
      rhs[j] += zeta[j + 1];
  return rhs;
}

std::vector<TrajectoryPoint> reduced_ode_trajectory(std::span<const double> theta0,
                                                    std::span<const Complex> zeta0, double t_end,
                                                    double dt, const ManifoldJet& jet,
                                                    const SpectralSplitting& split,
                                                    const CmSetup& cfg) {
  const int b = static_cast<int>(cfg.omega.size());
  std::vector<TrajectoryPoint> out;
  std::vector<Complex> z(zeta0.begin(), zeta0.end());
  double t = 0.0;
  out.push_back({t, z});
  auto rhs_at = [&](double time, const std::vector<Complex>& state) {
    std::vector<double> th(static_cast<std::size_t>(b));
    for (int a = 0; a < b; ++a)
      th[static_cast<std::size_t>(a)] = theta0[static_cast<std::size_t>(a)] +
                                        cfg.omega[static_cast<std::size_t>(a)] * time;
    return reduced_ode_rhs(th, state, jet, split, cfg);
  };
  const int steps = static_cast<int>(std::ceil(t_end / dt));
  for (int s = 0; s < steps; ++s) {
    const double h = std::min(dt, t_end - t);
    const auto k1 = rhs_at(t, z);
    std::vector<Complex> tmp(z.size());
    for (std::size_t i = 0; i < z.size(); ++i) tmp[i] = z[i] + 0.5 * h * k1[i];
    const auto k2 = rhs_at(t + 0.5 * h, tmp);
    for (std::size_t i = 0; i < z.size(); ++i) tmp[i] = z[i] + 0.5 * h * k2[i];
    const auto k3 = rhs_at(t + 0.5 * h, tmp);
    for (std::size_t i = 0; i < z.size(); ++i) tmp[i] = z[i] + h * k3[i];
    const auto k4 = rhs_at(t + h, tmp);
    for (std::size_t i = 0; i < z.size(); ++i)
      z[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    t += h;
    out.push_back({t, z});
  }
  return out;
}

std::vector<Complex> random_center_point(const SpectralSplitting& split, double radius,
                                         std::uint64_t seed) {
  const auto& entries = split.center;
  std::vector<Complex> zeta(entries.size(), Complex{0.0, 0.0});
  // Reality pairing: coef at (k, Lambda) = conj(coef at (-k, -Lambda)).
  auto partner = [&](std::size_t j) -> std::size_t {
    std::vector<int> nk = entries[j].k;
    for (int& c : nk) c = -c;
    for (std::size_t i = 0; i < entries.size(); ++i)
      if (entries[i].k == nk && entries[i].lambda_sign == -entries[j].lambda_sign) return i;
    throw std::logic_error("center set is not sign-symmetric");
  };
  for (std::size_t j = 0; j < entries.size(); ++j) {
    const std::size_t p = partner(j);
    if (p < j) continue;
    const Complex draw{rng::normal(seed, j, 0), rng::normal(seed, j, 1)};
    zeta[j] = draw;
    if (p == j)
      zeta[j] = Complex{draw.real(), 0.0};  // self-paired coordinate must be real
    else
      zeta[p] = std::conj(draw);
  }
  const double r = center_radius(zeta);
  if (r > 0.0)
    for (Complex& c : zeta) c *= radius / r;
  return zeta;
}

double invariance_residual(const ManifoldJet& jet, const SpectralSplitting& split,
                           const CmSetup& cfg, double sample_radius, int samples, double h,
                           std::uint64_t seed) {
  const int b = static_cast<int>(cfg.omega.size());
  const SmoothBump bump(cfg.bump_smoothness, cfg.cutoff_radius);

  auto prepared_rhs = [&](double time, std::span<const double> theta0, const FirstOrderState& z) {
    std::vector<double> th(static_cast<std::size_t>(b));
    for (int a = 0; a < b; ++a)
      th[static_cast<std::size_t>(a)] = theta0[static_cast<std::size_t>(a)] +
                                        cfg.omega[static_cast<std::size_t>(a)] * time;
    const SpectralField g = forcing_field(cfg, th, z.u);
    FirstOrderState n{SpectralField::spatial(cfg.op.dim(), cfg.cutoff, false), g};
    EigenCoordinates nc = decompose(split, n);
    const EigenCoordinates zc = decompose(split, z);
    const double phi = bump(center_radius(zc.center));
    for (Complex& c : nc.center) c *= phi;
    FirstOrderState rhs = apply_system(cfg.op, z);
    const FirstOrderState np = reconstruct(split, nc);
    rhs.u = add(rhs.u, np.u);
    rhs.v = add(rhs.v, np.v);
    return rhs;
  };

  double worst = 0.0;
  for (int s = 0; s < samples; ++s) {
    std::vector<double> theta0(static_cast<std::size_t>(b));
    for (int a = 0; a < b; ++a)
      theta0[static_cast<std::size_t>(a)] =
          2.0 * std::numbers::pi * rng::uniform01(seed, static_cast<std::uint64_t>(s), 40 + static_cast<std::uint64_t>(a));
    const std::vector<Complex> zeta =
        random_center_point(split, sample_radius, seed + 1000 * static_cast<std::uint64_t>(s) + 1);

    // Graph point.
    EigenCoordinates coords;
    coords.center = zeta;
    const std::vector<Complex> w = jet.evaluate(theta0, zeta);
    coords.stable.assign(w.begin(), w.begin() + static_cast<std::ptrdiff_t>(split.stable.size()));
    coords.unstable.assign(w.begin() + static_cast<std::ptrdiff_t>(split.stable.size()), w.end());
    FirstOrderState z = reconstruct(split, coords);

    // RK4 over [0, h].
    const int steps = 32;
    const double dt = h / steps;
    double t = 0.0;
    for (int st = 0; st < steps; ++st) {
      const FirstOrderState k1 = prepared_rhs(t, theta0, z);
      FirstOrderState tmp{add(z.u, scaled(k1.u, 0.5 * dt)), add(z.v, scaled(k1.v, 0.5 * dt))};
      const FirstOrderState k2 = prepared_rhs(t + 0.5 * dt, theta0, tmp);
      tmp = {add(z.u, scaled(k2.u, 0.5 * dt)), add(z.v, scaled(k2.v, 0.5 * dt))};
      const FirstOrderState k3 = prepared_rhs(t + 0.5 * dt, theta0, tmp);
      tmp = {add(z.u, scaled(k3.u, dt)), add(z.v, scaled(k3.v, dt))};
      const FirstOrderState k4 = prepared_rhs(t + dt, theta0, tmp);
      z.u = add(z.u, scaled(add(add(k1.u, scaled(k2.u, 2.0)), add(scaled(k3.u, 2.0), k4.u)), dt / 6.0));
      z.v = add(z.v, scaled(add(add(k1.v, scaled(k2.v, 2.0)), add(scaled(k3.v, 2.0), k4.v)), dt / 6.0));
      t += dt;
    }

    const EigenCoordinates end = decompose(split, z);
    std::vector<double> theta_h(static_cast<std::size_t>(b));
    for (int a = 0; a < b; ++a)
      theta_h[static_cast<std::size_t>(a)] = theta0[static_cast<std::size_t>(a)] +
                                             cfg.omega[static_cast<std::size_t>(a)] * h;
    const std::vector<Complex> w_pred = jet.evaluate(theta_h, end.center);

    EigenCoordinates diff;
    diff.center.assign(split.center.size(), Complex{0.0, 0.0});
    diff.stable.resize(split.stable.size());
    diff.unstable.resize(split.unstable.size());
    for (std::size_t i = 0; i < split.stable.size(); ++i)
      diff.stable[i] = end.stable[i] - w_pred[i];
    for (std::size_t i = 0; i < split.unstable.size(); ++i)
      diff.unstable[i] = end.unstable[i] - w_pred[split.stable.size() + i];
    worst = std::max(worst, eigen_norm(split, diff, cfg.space) / h);
  }
  return worst;
}

}  // namespace torspec

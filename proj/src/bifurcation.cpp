#include "torspec/bifurcation.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <sstream>

#include "torspec/algebra.hpp"
#include "torspec/resonance.hpp"
#include "torspec/rng.hpp"
#include "torspec/solver.hpp"

namespace torspec {

// ---------------------------------------------------------------------------
// Kernel basis
// ---------------------------------------------------------------------------

KernelBasis kernel_basis(std::vector<double> nu, double m0, int kmax) {
  const int d = static_cast<int>(nu.size());
  if (d < 1 || d > 2)
    throw AssumptionError(
        "kernel_basis: only d in {1,2} is supported; for d >= 3 the kernel-orbit factorization "
        "fails (cubic terms without an alpha_l factor appear)");
  const EllipticOperatorSpec spec{nu, m0};
  const ResonanceReport scan = resonance_scan(spec, 0.0, kmax);
  if (scan.classification != SpectralClass::Resonant)
    throw AssumptionError("kernel_basis: operator is nonresonant (margin " +
                          std::to_string(scan.margin) + ")");

  const auto& kernel = scan.kernel_modes;
  const std::size_t expected = std::size_t{1} << d;
  if (kernel.size() != expected)
    throw AssumptionError("kernel_basis: kernel has " + std::to_string(kernel.size()) +
                          " modes, expected one sign-flip orbit of size " +
                          std::to_string(expected));

  // All modes must share componentwise magnitudes with every entry nonzero.
  std::vector<int> base;
  for (int c : kernel.front()) base.push_back(std::abs(c));
  for (const auto& mode : kernel)
    for (std::size_t a = 0; a < mode.size(); ++a)
      if (std::abs(mode[a]) != base[a])
        throw AssumptionError("kernel_basis: kernel is not a single sign-flip orbit");
  for (int c : base)
    if (c == 0)
      throw AssumptionError("kernel_basis: base vector has a zero component");

  KernelBasis basis;
  basis.nu = std::move(nu);
  basis.m0 = m0;
  basis.dim = d;
  basis.base = base;
  if (d == 1) {
    basis.modes = {{base[0]}, {-base[0]}};
  } else {
    basis.modes = {{base[0], base[1]},
                   {base[0], -base[1]},
                   {-base[0], base[1]},
                   {-base[0], -base[1]}};
  }
  return basis;
}

namespace {

bool is_kernel_mode(const KernelBasis& basis, std::span<const int> k) {
  for (const auto& mode : basis.modes) {
    bool same = true;
    for (std::size_t a = 0; a < mode.size(); ++a)
      if (mode[a] != k[a]) {
        same = false;
        break;
      }
    if (same) return true;
  }
  return false;
}

SpectralField mask(const KernelBasis& basis, const SpectralField& u, bool keep_kernel) {
  SpectralField out = u;
  std::array<int, SpectralField::kMaxAxes> k{};
  for (std::size_t i = 0; i < out.size(); ++i) {
    out.decode(i, std::span<int>(k.data(), static_cast<std::size_t>(out.axes())));
    const bool in_kernel =
        is_kernel_mode(basis, std::span<const int>(k.data(), static_cast<std::size_t>(out.axes())));
    if (in_kernel != keep_kernel) out[i] = Complex{0.0, 0.0};
  }
  return out;
}

EllipticOperatorSpec operator_of(const KernelBasis& basis) { return {basis.nu, basis.m0}; }

bool alpha_respects_pairing(const KernelBasis& basis, std::span<const Complex> alpha) {
  for (int j = 0; j < basis.orbit_size(); ++j) {
    const Complex gap = alpha[static_cast<std::size_t>(j)] -
                        std::conj(alpha[static_cast<std::size_t>(basis.conjugate_index(j))]);
    if (std::abs(gap) > 1e-13) return false;
  }
  return true;
}

}  // namespace

SpectralField project_kernel(const KernelBasis& basis, const SpectralField& u) {
  return mask(basis, u, true);
}

SpectralField project_range(const KernelBasis& basis, const SpectralField& u) {
  return mask(basis, u, false);
}

SpectralField kernel_field(const KernelBasis& basis, std::span<const Complex> alpha, int cutoff) {
  if (alpha.size() != static_cast<std::size_t>(basis.orbit_size()))
    throw std::invalid_argument("kernel_field: alpha must have 2^d entries");
  SpectralField v = SpectralField::spatial(basis.dim, cutoff, alpha_respects_pairing(basis, alpha));
  for (int j = 0; j < basis.orbit_size(); ++j)
    v.at(std::span<const int>(basis.modes[static_cast<std::size_t>(j)])) =
        alpha[static_cast<std::size_t>(j)];
  return v;
}

SpectralField solve_range(const KernelBasis& basis, std::span<const Complex> alpha, double eps_m,
                          int cutoff, double tol, const SpaceParams& space) {
  const EllipticOperatorSpec op = operator_of(basis);
  const SpectralField vbar = kernel_field(basis, alpha, cutoff);

  SpectralField vhat = SpectralField::spatial(basis.dim, cutoff, vbar.is_real());
  double prev_step = 0.0;
  int diverging = 0;
  for (int it = 0; it < 200; ++it) {
    SpectralField total = add(vbar, vhat);
    SpectralField rhs = multiply(total, total);
    axpy(rhs, -eps_m, vhat);
    SpectralField next = apply_inverse(op, project_range(basis, rhs), /*exclude_kernel=*/true);
    const double step = norm(sub(next, vhat), space);
    vhat = std::move(next);
    if (step <= tol) return vhat;
    if (prev_step > 0.0) {
      diverging = step >= prev_step ? diverging + 1 : 0;
      if (diverging >= 5)
        throw SolverError(SolverError::Code::Divergence,
                          "solve_range: no contraction; |alpha| too large");
    }
    prev_step = step;
  }
  throw SolverError(SolverError::Code::MaxIter, "solve_range: iteration cap reached");
}

SpectralField range_quadratic_jet(const KernelBasis& basis, std::span<const Complex> alpha,
                                  int cutoff) {
  const EllipticOperatorSpec op = operator_of(basis);
  SpectralField jet = SpectralField::spatial(basis.dim, cutoff, alpha_respects_pairing(basis, alpha));
  const int L = basis.orbit_size();
  std::array<int, SpectralField::kMaxAxes> sum{};
  for (int p = 0; p < L; ++p)
    for (int q = 0; q < L; ++q) {
      for (int a = 0; a < basis.dim; ++a)
        sum[static_cast<std::size_t>(a)] = basis.modes[static_cast<std::size_t>(p)][static_cast<std::size_t>(a)] +
                                           basis.modes[static_cast<std::size_t>(q)][static_cast<std::size_t>(a)];
      const std::span<const int> mode(sum.data(), static_cast<std::size_t>(basis.dim));
      if (!jet.in_box(mode) || is_kernel_mode(basis, mode)) continue;
      const double ev = eigenvalue(mode, op);
      jet.at(mode) += alpha[static_cast<std::size_t>(p)] * alpha[static_cast<std::size_t>(q)] / ev;
    }
  return jet;
}

// ---------------------------------------------------------------------------
// Bifurcation coefficients
// ---------------------------------------------------------------------------

namespace {

double checked_eigenvalue(const KernelBasis& basis, std::vector<int> mode) {
  const double ev = eigenvalue(mode, operator_of(basis));
  double sq = 0.0;
  for (int c : mode) sq += static_cast<double>(c) * c;
  if (std::abs(ev) <= kernel_tolerance(0.0, sq)) {
    std::string ms;
    for (int c : mode) ms += std::to_string(c) + " ";
    throw DegenerateEigenvalueError("bifurcation_coefficients: eigenvalue vanishes at mode " + ms);
  }
  return ev;
}

}  // namespace

BifurcationData bifurcation_coefficients(const KernelBasis& basis) {
  BifurcationData data;
  if (basis.dim == 1) {
    const int a = basis.base[0];
    const double y2k = checked_eigenvalue(basis, {2 * a});
    const double y0 = checked_eigenvalue(basis, {0});
    data.m_scalar = 2.0 * (1.0 / y2k + 2.0 / y0);
    data.sigma = data.m_scalar > 0.0 ? 1 : -1;
    data.det = data.m_scalar;
    if (data.m_scalar == 0.0)
      throw DegenerateEigenvalueError("bifurcation_coefficients: cubic coefficient vanishes");
    return data;
  }
  const int a = basis.base[0], b = basis.base[1];
  const double y_ab = checked_eigenvalue(basis, {2 * a, 2 * b});
  const double y_00 = checked_eigenvalue(basis, {0, 0});
  const double y_a0 = checked_eigenvalue(basis, {2 * a, 0});
  const double y_0b = checked_eigenvalue(basis, {0, 2 * b});
  data.A = 2.0 / y_ab + 4.0 / y_00;
  data.B = 4.0 / y_a0 + 4.0 / y_0b + 4.0 / y_00;
  data.det = (data.A + data.B) * (data.A - data.B);
  if (std::abs(data.det) < 1e-12)
    throw DegenerateEigenvalueError(
        "bifurcation_coefficients: det M = (A+B)(A-B) vanishes for this nu");
  data.sigma = (data.A + data.B) > 0.0 ? 1 : -1;
  return data;
}

std::vector<Complex> leading_amplitudes(const KernelBasis& basis, const BifurcationData& data,
                                        double eps_m, std::span<const double> phase) {
  if (phase.size() != static_cast<std::size_t>(basis.dim))
    throw std::invalid_argument("leading_amplitudes: phase must have d entries");
  std::vector<Complex> alpha(static_cast<std::size_t>(basis.orbit_size()), Complex{0.0, 0.0});
  if (eps_m == 0.0) return alpha;

  const double slope = basis.dim == 1 ? data.m_scalar : data.A + data.B;
  if ((eps_m > 0.0) != (data.sigma > 0))
    throw BranchSignError("leading_amplitudes: no branch for sign(m - m0) = " +
                          std::to_string(eps_m > 0 ? 1 : -1) + "; this problem bifurcates on the " +
                          std::string(data.sigma > 0 ? "positive" : "negative") + " side");
  const double z = eps_m / slope;  // > 0 by the sign check
  for (int j = 0; j < basis.orbit_size(); ++j) {
    double dot = 0.0;
    for (int a = 0; a < basis.dim; ++a)
      dot += phase[static_cast<std::size_t>(a)] *
             basis.modes[static_cast<std::size_t>(j)][static_cast<std::size_t>(a)];
    alpha[static_cast<std::size_t>(j)] = std::sqrt(z) * Complex(std::cos(dot), std::sin(dot));
  }
  return alpha;
}

// ---------------------------------------------------------------------------
// Newton refinement
// ---------------------------------------------------------------------------

namespace {

using CVec = std::vector<Complex>;

double cnorm(const CVec& v) {
  double s = 0.0;
  for (const Complex& c : v) s += std::norm(c);
  return std::sqrt(s);
}

Complex cdot(const CVec& a, const CVec& b) {  // <a, b> conjugate-linear in a
  Complex s{0.0, 0.0};
  for (std::size_t i = 0; i < a.size(); ++i) s += std::conj(a[i]) * b[i];
  return s;
}

/// Restarted GMRES with a diagonal left preconditioner; enough for the
/// diagonal-plus-convolution Jacobians here.
template <class ApplyFn>
bool gmres(ApplyFn&& apply_op, const CVec& rhs, CVec& x, const CVec& diag, int restart,
           int max_outer, double rel_tol) {
  const std::size_t n = rhs.size();
  auto precond = [&](CVec& v) {
    for (std::size_t i = 0; i < n; ++i) v[i] /= diag[i];
  };

  CVec b = rhs;
  precond(b);
  const double b_norm = cnorm(b);
  if (b_norm == 0.0) {
    x.assign(n, Complex{0.0, 0.0});
    return true;
  }

  x.assign(n, Complex{0.0, 0.0});
  for (int outer = 0; outer < max_outer; ++outer) {
    CVec r(n);
    apply_op(x, r);
    precond(r);
    for (std::size_t i = 0; i < n; ++i) r[i] = b[i] - r[i];
    const double beta = cnorm(r);
    if (beta <= rel_tol * b_norm) return true;

    std::vector<CVec> basis;
    basis.reserve(static_cast<std::size_t>(restart) + 1);
    CVec v0 = r;
    for (std::size_t i = 0; i < n; ++i) v0[i] /= beta;
    basis.push_back(std::move(v0));

    std::vector<std::vector<Complex>> h(static_cast<std::size_t>(restart) + 1,
                                        std::vector<Complex>(static_cast<std::size_t>(restart),
                                                             Complex{0.0, 0.0}));
    std::vector<Complex> cs(static_cast<std::size_t>(restart)), sn(static_cast<std::size_t>(restart));
    std::vector<Complex> g(static_cast<std::size_t>(restart) + 1, Complex{0.0, 0.0});
    g[0] = beta;

    int m = 0;
    for (int j = 0; j < restart; ++j) {
      CVec w(n);
      apply_op(basis[static_cast<std::size_t>(j)], w);
      precond(w);
      for (int i = 0; i <= j; ++i) {
        const Complex hij = cdot(basis[static_cast<std::size_t>(i)], w);
        h[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = hij;
        for (std::size_t t = 0; t < n; ++t) w[t] -= hij * basis[static_cast<std::size_t>(i)][t];
      }
      const double wn = cnorm(w);
      h[static_cast<std::size_t>(j) + 1][static_cast<std::size_t>(j)] = wn;

      // Givens rotations to keep the least-squares triangular.
      for (int i = 0; i < j; ++i) {
        const Complex t = h[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
        h[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] =
            std::conj(cs[static_cast<std::size_t>(i)]) * t +
            std::conj(sn[static_cast<std::size_t>(i)]) *
                h[static_cast<std::size_t>(i) + 1][static_cast<std::size_t>(j)];
        h[static_cast<std::size_t>(i) + 1][static_cast<std::size_t>(j)] =
            -sn[static_cast<std::size_t>(i)] * t +
            cs[static_cast<std::size_t>(i)] * h[static_cast<std::size_t>(i) + 1][static_cast<std::size_t>(j)];
      }
      const Complex h0 = h[static_cast<std::size_t>(j)][static_cast<std::size_t>(j)];
      const Complex h1 = h[static_cast<std::size_t>(j) + 1][static_cast<std::size_t>(j)];
      const double denom = std::sqrt(std::norm(h0) + std::norm(h1));
      if (denom == 0.0) {
        m = j;
        break;
      }
      cs[static_cast<std::size_t>(j)] = h0 / denom;
      sn[static_cast<std::size_t>(j)] = h1 / denom;
      h[static_cast<std::size_t>(j)][static_cast<std::size_t>(j)] =
          std::conj(cs[static_cast<std::size_t>(j)]) * h0 +
          std::conj(sn[static_cast<std::size_t>(j)]) * h1;
      h[static_cast<std::size_t>(j) + 1][static_cast<std::size_t>(j)] = Complex{0.0, 0.0};
      g[static_cast<std::size_t>(j) + 1] = -sn[static_cast<std::size_t>(j)] * g[static_cast<std::size_t>(j)];
      g[static_cast<std::size_t>(j)] = std::conj(cs[static_cast<std::size_t>(j)]) * g[static_cast<std::size_t>(j)];
      m = j + 1;

      if (std::abs(g[static_cast<std::size_t>(j) + 1]) <= rel_tol * b_norm) break;
      if (wn == 0.0) break;
      CVec vnext = w;
      for (std::size_t t = 0; t < n; ++t) vnext[t] /= wn;
      basis.push_back(std::move(vnext));
    }

    // Back substitution.
    std::vector<Complex> y(static_cast<std::size_t>(m), Complex{0.0, 0.0});
    for (int i = m - 1; i >= 0; --i) {
      Complex s = g[static_cast<std::size_t>(i)];
      for (int j2 = i + 1; j2 < m; ++j2)
        s -= h[static_cast<std::size_t>(i)][static_cast<std::size_t>(j2)] * y[static_cast<std::size_t>(j2)];
      y[static_cast<std::size_t>(i)] = s / h[static_cast<std::size_t>(i)][static_cast<std::size_t>(i)];
    }
    for (int i = 0; i < m; ++i)
      for (std::size_t t = 0; t < n; ++t)
        x[t] += y[static_cast<std::size_t>(i)] * basis[static_cast<std::size_t>(i)][t];

    if (std::abs(g[static_cast<std::size_t>(m)]) <= rel_tol * b_norm) return true;
  }
  return false;
}

SpectralField branch_equation(const KernelBasis& basis, double eps_m, const SpectralField& v,
                              const FunctionSpec* f, const SpaceParams& space) {
  SpectralField g = apply(operator_of(basis), v);
  axpy(g, eps_m, v);
  axpy(g, -1.0, f ? apply_nonlinearity(*f, v, space) : multiply(v, v));
  return g;
}

}  // namespace

double branch_residual(const KernelBasis& basis, double eps_m, const SpectralField& v,
                       const SpaceParams& space, const FunctionSpec* nonlinearity) {
  return norm(branch_equation(basis, eps_m, v, nonlinearity, space), space.spatial_shift(-2.0));
}

BranchResult branch_solve(const KernelBasis& basis, double eps_m, std::span<const double> phase,
                          int cutoff, const BranchConfig& cfg, const FunctionSpec* nonlinearity) {
  if (nonlinearity &&
      (nonlinearity->freq_axes != 0 || nonlinearity->space_axes != basis.dim))
    throw std::invalid_argument("branch_solve: composite shape mismatch");
  const BifurcationData data = bifurcation_coefficients(basis);
  const double slope = basis.dim == 1 ? data.m_scalar : data.A + data.B;

  // Seed on the predicted branch; on the empty side seed with the magnitude
  // so Newton can demonstrate the collapse.
  std::vector<Complex> alpha;
  const bool right_side = (eps_m > 0.0) == (data.sigma > 0) && eps_m != 0.0;
  if (right_side) {
    alpha = leading_amplitudes(basis, data, eps_m, phase);
  } else {
    const double z = std::abs(eps_m / slope);
    alpha.assign(static_cast<std::size_t>(basis.orbit_size()), Complex{0.0, 0.0});
    for (int j = 0; j < basis.orbit_size(); ++j) {
      double dot = 0.0;
      for (int a = 0; a < basis.dim; ++a)
        dot += phase[static_cast<std::size_t>(a)] *
               basis.modes[static_cast<std::size_t>(j)][static_cast<std::size_t>(a)];
      alpha[static_cast<std::size_t>(j)] = std::sqrt(z) * Complex(std::cos(dot), std::sin(dot));
    }
  }
  if (cfg.perturb_seed != 0) {
    const double scale = cfg.perturb_size > 0.0 ? cfg.perturb_size : 0.1;
    double amp = 0.0;
    for (const Complex& a : alpha) amp = std::max(amp, std::abs(a));
    for (int j = 0; j < basis.orbit_size() / 2; ++j) {
      const Complex bump(rng::normal(cfg.perturb_seed, static_cast<std::uint64_t>(j), 0),
                         rng::normal(cfg.perturb_seed, static_cast<std::uint64_t>(j), 1));
      alpha[static_cast<std::size_t>(j)] += scale * amp * bump;
      alpha[static_cast<std::size_t>(basis.conjugate_index(j))] +=
          scale * amp * std::conj(bump);
    }
  }

  SpectralField v = add(kernel_field(basis, alpha, cutoff),
                        right_side ? solve_range(basis, alpha, eps_m, cutoff, cfg.tol, cfg.space)
                                   : range_quadratic_jet(basis, alpha, cutoff));
  v.symmetrize_real();

  const EllipticOperatorSpec op = operator_of(basis);
  BranchResult out;

  auto newton_step = [&]() {
    SpectralField g = branch_equation(basis, eps_m, v, nonlinearity, cfg.space);
    // J delta = -g with J = L + eps_m - 2 v * (convolution).
    CVec rhs(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) rhs[i] = -g[i];
    CVec diag(v.size());
    {
      std::array<int, SpectralField::kMaxAxes> k{};
      for (std::size_t i = 0; i < v.size(); ++i) {
        v.decode(i, std::span<int>(k.data(), static_cast<std::size_t>(v.axes())));
        const double dv =
            eigenvalue(std::span<const int>(k.data(), static_cast<std::size_t>(v.axes())), op) + eps_m;
        diag[i] = std::abs(dv) > 1e-14 ? Complex{dv, 0.0} : Complex{1e-14, 0.0};
      }
    }
    auto apply_jacobian = [&](const CVec& in, CVec& result) {
      SpectralField w = v;  // borrow the box layout
      for (std::size_t i = 0; i < w.size(); ++i) w[i] = in[i];
      w.set_real_flag(false);
      SpectralField jw = apply(op, w);
      axpy(jw, eps_m, w);
      if (nonlinearity)
        axpy(jw, -1.0, apply_nonlinearity_tangent(*nonlinearity, v, w, cfg.space));
      else
        axpy(jw, -2.0, multiply(v, w));
      result.resize(in.size());
      for (std::size_t i = 0; i < jw.size(); ++i) result[i] = jw[i];
    };
    CVec delta;
    if (!gmres(apply_jacobian, rhs, delta, diag, 60, 6, 1e-10))
      throw SolverError(SolverError::Code::Divergence, "branch_solve: linear solver stagnated");
    for (std::size_t i = 0; i < v.size(); ++i) v[i] += delta[i];
    v.symmetrize_real();
  };

  for (int it = 0; it < cfg.max_newton; ++it) {
    const double gnorm =
        norm(branch_equation(basis, eps_m, v, nonlinearity, cfg.space),
             cfg.space.spatial_shift(-2.0));
    out.newton_iterations = it;
    if (gnorm <= cfg.tol) break;
    if (it + 1 == cfg.max_newton)
      throw SolverError(SolverError::Code::MaxIter, "branch_solve: Newton did not converge");
    newton_step();
  }

  // A residual below tol can still leave an iterate in the basin of the zero
  // solution but short of it (the equation scales like eps_m * v there). A
  // few more steps settle the classification either way: near zero the map
  // contracts cubically, on the branch Newton does not move.
  for (int polish = 0; polish < 6; ++polish) {
    const double vn = norm(v, cfg.space);
    if (vn < 10.0 * cfg.tol || vn > 1e-3) break;
    newton_step();
  }

  out.residual = branch_residual(basis, eps_m, v, cfg.space, nonlinearity);
  out.collapsed_to_zero = norm(v, cfg.space) < 10.0 * cfg.tol;
  out.alpha.resize(static_cast<std::size_t>(basis.orbit_size()));
  for (int j = 0; j < basis.orbit_size(); ++j)
    out.alpha[static_cast<std::size_t>(j)] =
        v.coeff(std::span<const int>(basis.modes[static_cast<std::size_t>(j)]));
  for (int j = 0; j < basis.orbit_size() / 2; ++j)
    out.z.push_back(std::norm(out.alpha[static_cast<std::size_t>(j)]));
  out.v = std::move(v);
  return out;
}

// ---------------------------------------------------------------------------
// Symbolic expansion oracle
// ---------------------------------------------------------------------------

namespace {

using Expo = std::array<int, 4>;   // exponents of alpha_1..alpha_L
using ModeKey = std::array<int, 2>;

int degree(const Expo& e) { return e[0] + e[1] + e[2] + e[3]; }

/// Polynomial in alpha with coefficients that are sparse mode vectors.
struct AlphaPoly {
  std::map<Expo, std::map<ModeKey, Complex>> terms;

  void add_term(const Expo& e, const ModeKey& mode, Complex c) {
    if (c == Complex{0.0, 0.0}) return;
    terms[e][mode] += c;
  }
};

AlphaPoly poly_add(const AlphaPoly& p, const AlphaPoly& q) {
  AlphaPoly out = p;
  for (const auto& [e, modes] : q.terms)
    for (const auto& [mode, c] : modes) out.add_term(e, mode, c);
  return out;
}

AlphaPoly poly_mul(const AlphaPoly& p, const AlphaPoly& q, int max_degree) {
  AlphaPoly out;
  for (const auto& [ep, modes_p] : p.terms)
    for (const auto& [eq, modes_q] : q.terms) {
      Expo e{ep[0] + eq[0], ep[1] + eq[1], ep[2] + eq[2], ep[3] + eq[3]};
      if (degree(e) > max_degree) continue;
      for (const auto& [mp, cp] : modes_p)
        for (const auto& [mq, cq] : modes_q)
          out.add_term(e, ModeKey{mp[0] + mq[0], mp[1] + mq[1]}, cp * cq);
    }
  return out;
}

bool mode_in_kernel(const KernelBasis& basis, const ModeKey& m) {
  for (const auto& mode : basis.modes) {
    if (basis.dim == 1 && mode[0] == m[0]) return true;
    if (basis.dim == 2 && mode[0] == m[0] && mode[1] == m[1]) return true;
  }
  return false;
}

AlphaPoly poly_project(const KernelBasis& basis, const AlphaPoly& p, bool keep_kernel) {
  AlphaPoly out;
  for (const auto& [e, modes] : p.terms)
    for (const auto& [mode, c] : modes)
      if (mode_in_kernel(basis, mode) == keep_kernel) out.add_term(e, mode, c);
  return out;
}

AlphaPoly poly_inverse_on_range(const KernelBasis& basis, const AlphaPoly& p) {
  const EllipticOperatorSpec op = operator_of(basis);
  AlphaPoly out;
  for (const auto& [e, modes] : p.terms)
    for (const auto& [mode, c] : modes) {
      if (mode_in_kernel(basis, mode)) continue;
      std::vector<int> k(mode.begin(), mode.begin() + basis.dim);
      out.add_term(e, mode, c / eigenvalue(k, op));
    }
  return out;
}

double max_abs(const AlphaPoly& p) {
  double worst = 0.0;
  for (const auto& [e, modes] : p.terms)
    for (const auto& [mode, c] : modes) worst = std::max(worst, std::abs(c));
  return worst;
}

}  // namespace

std::string VerifyReport::to_text() const {
  std::ostringstream os;
  os.precision(17);
  os << "max_even_degree_coefficient = " << max_even_degree << "\n";
  os << "factorization_defect = " << factorization_defect << "\n";
  if (m_closed != 0.0) {
    os << "m_cubic_expansion = " << m_expansion << "\n";
    os << "m_cubic_closed_form = " << m_closed << "\n";
    os << "m_cubic_quoted_5_over_3m0 = " << m_quoted << "\n";
    os << "quoted_value_consistent = " << (quoted_value_consistent ? "yes" : "no") << "\n";
    if (!quoted_value_consistent)
      os << "note = expansion arbitrates against the quoted constant (factor "
         << m_expansion / m_quoted << " apart); the expansion and the closed form agree\n";
  }
  if (a_closed != 0.0 || b_closed != 0.0) {
    os << "A_expansion = " << a_expansion << "\n";
    os << "A_closed_form = " << a_closed << "\n";
    os << "B_expansion = " << b_expansion << "\n";
    os << "B_closed_form = " << b_closed << "\n";
  }
  return os.str();
}

VerifyReport branch_verify(const KernelBasis& basis) {
  const int L = basis.orbit_size();

  // v_bar = sum_j alpha_j exp(i k^j x)
  AlphaPoly vbar;
  for (int j = 0; j < L; ++j) {
    Expo e{0, 0, 0, 0};
    e[static_cast<std::size_t>(j)] = 1;
    ModeKey mode{basis.modes[static_cast<std::size_t>(j)][0],
                 basis.dim == 2 ? basis.modes[static_cast<std::size_t>(j)][1] : 0};
    vbar.add_term(e, mode, Complex{1.0, 0.0});
  }

  // Range jet to cubic order: v_hat <- L^{-1} Pi_R (v_bar + v_hat)^2.
  AlphaPoly vhat;
  for (int it = 0; it < 3; ++it) {
    AlphaPoly total = poly_add(vbar, vhat);
    AlphaPoly square = poly_mul(total, total, 3);
    vhat = poly_inverse_on_range(basis, square);
  }

  // Bifurcation map to degree 4.
  AlphaPoly total = poly_add(vbar, vhat);
  AlphaPoly bif = poly_project(basis, poly_mul(total, total, 4), true);

  VerifyReport rep;

  AlphaPoly even;
  for (const auto& [e, modes] : bif.terms)
    if (degree(e) % 2 == 0)
      for (const auto& [mode, c] : modes) even.add_term(e, mode, c);
  rep.max_even_degree = max_abs(even);

  // Component l must factor as alpha_l times a series in the conjugate pair
  // products: after removing one alpha_l the exponents must pair up.
  for (const auto& [e, modes] : bif.terms) {
    for (const auto& [mode, c] : modes) {
      int l = -1;
      for (int j = 0; j < L; ++j) {
        const auto& km = basis.modes[static_cast<std::size_t>(j)];
        if (km[0] == mode[0] && (basis.dim == 1 || km[1] == mode[1])) l = j;
      }
      if (l < 0) continue;
      Expo r = e;
      bool ok = r[static_cast<std::size_t>(l)] >= 1;
      if (ok) {
        r[static_cast<std::size_t>(l)] -= 1;
        for (int j = 0; j < L; ++j)
          if (r[static_cast<std::size_t>(j)] !=
              r[static_cast<std::size_t>(basis.conjugate_index(j))])
            ok = false;
      }
      if (!ok) rep.factorization_defect = std::max(rep.factorization_defect, std::abs(c));
    }
  }

  const BifurcationData closed = bifurcation_coefficients(basis);
  if (basis.dim == 1) {
    rep.m_closed = closed.m_scalar;
    rep.m_quoted = 5.0 / (3.0 * basis.m0);
    const ModeKey k1{basis.modes[0][0], 0};
    const Expo cubic{2, 1, 0, 0};  // alpha_1^2 alpha_2 = alpha_1 |alpha_1|^2
    if (auto it = bif.terms.find(cubic); it != bif.terms.end())
      if (auto jt = it->second.find(k1); jt != it->second.end()) rep.m_expansion = jt->second.real();
    rep.quoted_value_consistent =
        std::abs(rep.m_expansion - rep.m_quoted) <= 1e-9 * std::abs(rep.m_quoted);
  } else {
    rep.a_closed = closed.A;
    rep.b_closed = closed.B;
    const ModeKey k1{basis.modes[0][0], basis.modes[0][1]};
    const Expo a_mono{2, 0, 0, 1};  // alpha_1 * (alpha_1 alpha_4) = alpha_1 |alpha_1|^2
    const Expo b_mono{1, 1, 1, 0};  // alpha_1 * (alpha_2 alpha_3) = alpha_1 |alpha_2|^2
    if (auto it = bif.terms.find(a_mono); it != bif.terms.end())
      if (auto jt = it->second.find(k1); jt != it->second.end()) rep.a_expansion = jt->second.real();
    if (auto it = bif.terms.find(b_mono); it != bif.terms.end())
      if (auto jt = it->second.find(k1); jt != it->second.end()) rep.b_expansion = jt->second.real();
  }
  return rep;
}

}  // namespace torspec

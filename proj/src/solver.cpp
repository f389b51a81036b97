#include "torspec/solver.hpp"

#include <cmath>

#include "torspec/algebra.hpp"
#include "torspec/fft.hpp"
#include "torspec/parallel.hpp"

namespace torspec {

namespace {

void validate_space(const SpaceParams& space, int d) {
  space.validate();
  if (space.r - 2.0 <= 0.5 * d)
    throw std::invalid_argument("solver: needs r - 2 > d/2 (got r = " + std::to_string(space.r) +
                                ", d = " + std::to_string(d) + ")");
}

template <class Spec>
EpsilonStar epsilon_star_impl(const Spec& spec, const FunctionSpec& f, double s,
                              const SpaceParams& space, const SpectralField& shape,
                              std::uint64_t seed, int pairs) {
  EpsilonStar out;
  out.inverse_gain = inverse_gain_bound(spec, shape.cutoffs());
  out.lipschitz = lipschitz_estimate(f, shape, space, s, pairs, seed);
  SpectralField zero = shape;  // same box, all-zero coefficients
  for (std::size_t i = 0; i < zero.size(); ++i) zero[i] = Complex{0.0, 0.0};
  out.forcing_norm = norm(apply_nonlinearity(f, zero, space), space.spatial_shift(-2.0));

  const double inf = std::numeric_limits<double>::infinity();
  const double lip_branch =
      out.lipschitz > 0.0 ? 1.0 / (2.0 * out.inverse_gain * out.lipschitz) : inf;
  const double forcing_branch =
      out.forcing_norm > 0.0 ? s / (2.0 * out.inverse_gain * out.forcing_norm) : inf;
  out.value = std::min(lip_branch, forcing_branch);
  return out;
}

/// The common Picard loop; Inverse applies the diagonal inverse of the
/// operator in question.
template <class Spec>
SolveResult picard_solve(const Spec& spec, const FunctionSpec& f, const SpectralField& shape,
                         const SolveConfig& cfg, const EpsilonStar& threshold) {
  const SpaceParams residual_space = cfg.space.spatial_shift(-2.0);

  SolveResult res;
  res.epsilon_star = threshold.value;
  res.outside_certified_regime = cfg.epsilon > threshold.value;
  if (res.outside_certified_regime) res.flags.push_back("outside-certified-regime");

  SpectralField u = cfg.initial ? *cfg.initial : shape;
  if (!cfg.initial)
    for (std::size_t i = 0; i < u.size(); ++i) u[i] = Complex{0.0, 0.0};

  double prev_step = 0.0;
  int diverging_streak = 0;
  for (int it = 1; it <= cfg.max_iter; ++it) {
    SpectralField next = scaled(apply_inverse(spec, apply_nonlinearity(f, u, cfg.space)), cfg.epsilon);
    const double step = norm(sub(next, u), cfg.space);
    u = std::move(next);
    res.iterations = it;

    const double u_norm = norm(u, cfg.space);
    if (u_norm > cfg.ball_radius)
      throw SolverError(SolverError::Code::BallEscape,
                        "iterate left the ball: ||u|| = " + std::to_string(u_norm) + " > s = " +
                            std::to_string(cfg.ball_radius));

    if (prev_step > 0.0) {
      const double ratio = step / prev_step;
      res.contraction_estimate = std::max(res.contraction_estimate, ratio);
      diverging_streak = ratio >= 1.0 ? diverging_streak + 1 : 0;
      if (diverging_streak >= 5)
        throw SolverError(SolverError::Code::Divergence,
                          "step ratio >= 1 for 5 consecutive iterations");
      // A-posteriori distance bound: ||u* - u|| <= kappa/(1-kappa) * step.
      const double kappa = std::min(res.contraction_estimate, 1.0 - 1e-12);
      if (step <= cfg.tol * (1.0 - kappa) / std::max(kappa, 1e-12)) break;
    } else if (step == 0.0) {
      break;  // eps = 0 or F(0) = 0: converged on the spot
    }
    prev_step = step;
    if (it == cfg.max_iter)
      throw SolverError(SolverError::Code::MaxIter, "no convergence in " +
                                                        std::to_string(cfg.max_iter) + " iterations");
  }

  res.residual = norm(sub(apply(spec, u), scaled(apply_nonlinearity(f, u, cfg.space), cfg.epsilon)),
                      residual_space);
  res.solution = std::move(u);
  return res;
}

}  // namespace

EpsilonStar epsilon_star(const EllipticOperatorSpec& spec, const FunctionSpec& f, double s,
                         const SpaceParams& space, int cutoff, std::uint64_t seed, int pairs) {
  validate_space(space, spec.dim());
  const ResonanceReport scan = resonance_scan(spec, 0.0, cutoff);
  if (scan.classification == SpectralClass::Resonant)
    throw SolverError(SolverError::Code::Resonant,
                      "epsilon_star: operator is resonant; no inverse bound");
  const SpectralField shape = SpectralField::spatial(spec.dim(), cutoff);
  return epsilon_star_impl(spec, f, s, space, shape, seed, pairs);
}

EpsilonStar epsilon_star(const EvolutionOperatorSpec& spec, const FunctionSpec& f, double s,
                         const SpaceParams& space, int theta_cutoff, int cutoff,
                         std::uint64_t seed, int pairs) {
  validate_space(space, spec.dim());
  const SpectralField shape = SpectralField::hull(spec.freq_dim(), theta_cutoff, spec.dim(), cutoff);
  return epsilon_star_impl(spec, f, s, space, shape, seed, pairs);
}

SolveResult solve_elliptic(const EllipticOperatorSpec& spec, const FunctionSpec& f, int cutoff,
                           const SolveConfig& cfg) {
  validate_space(cfg.space, spec.dim());
  if (f.freq_axes != 0 || f.space_axes != spec.dim())
    throw std::invalid_argument("solve_elliptic: composite shape mismatch");
  const ResonanceReport scan = resonance_scan(spec, cfg.scan_delta, cutoff);
  if (!scan.solvable_by_fixed_point())
    throw SolverError(SolverError::Code::Resonant,
                      "solve_elliptic: resonant operator (margin " + std::to_string(scan.margin) +
                          "); use the bifurcation route");
  const SpectralField shape = SpectralField::spatial(spec.dim(), cutoff);
  const EpsilonStar threshold =
      epsilon_star_impl(spec, f, cfg.ball_radius, cfg.space, shape, cfg.seed, cfg.lipschitz_pairs);
  return picard_solve(spec, f, shape, cfg, threshold);
}

SolveResult solve_evolution(const EvolutionOperatorSpec& spec, const FunctionSpec& f,
                            int theta_cutoff, int cutoff, const SolveConfig& cfg) {
  validate_space(cfg.space, spec.dim());
  if (f.freq_axes != spec.freq_dim() || f.space_axes != spec.dim())
    throw std::invalid_argument("solve_evolution: composite shape mismatch");
  const ResonanceReport scan = resonance_scan(spec, cfg.scan_delta, cutoff, theta_cutoff);
  if (scan.classification == SpectralClass::EvolutionCenter)
    throw SolverError(SolverError::Code::Misroute,
                      "solve_evolution: center directions present; this instance belongs to the "
                      "center-manifold reduction");
  const SpectralField shape = SpectralField::hull(spec.freq_dim(), theta_cutoff, spec.dim(), cutoff);
  const EpsilonStar threshold =
      epsilon_star_impl(spec, f, cfg.ball_radius, cfg.space, shape, cfg.seed, cfg.lipschitz_pairs);
  return picard_solve(spec, f, shape, cfg, threshold);
}

double strong_form_residual(const EllipticOperatorSpec& spec, const FunctionSpec& f,
                            const SpectralField& u, double epsilon, const SpaceParams& space) {
  const SpectralField lhs = apply(spec, u);
  const SpectralField rhs = scaled(apply_nonlinearity(f, u, space), epsilon);
  return grid_max_abs(sub(lhs, rhs), 4);
}

}  // namespace torspec

#pragma once

#include <optional>
#include <string>
#include <vector>

#include "torspec/nonlinearity.hpp"
#include "torspec/operators.hpp"
#include "torspec/resonance.hpp"

namespace torspec {

struct SolverError : std::runtime_error {
  enum class Code { Divergence, BallEscape, MaxIter, Resonant, Misroute };
  Code code;
  SolverError(Code c, const std::string& msg) : std::runtime_error(msg), code(c) {}
};

struct SolveConfig {
  double epsilon = 0.0;
  double ball_radius = 1.0;
  double tol = 1e-12;
  int max_iter = 400;
  SpaceParams space;            // needs r - 2 > d/2
  std::uint64_t seed = 0;       // Lipschitz sampling
  int lipschitz_pairs = 64;
  double scan_delta = 0.0;      // kernel band for the pre-scan
  std::optional<SpectralField> initial;  // Picard start; zero field by default
};

struct SolveResult {
  SpectralField solution;
  double residual = 0.0;              // ||L u - eps F(u)|| two derivatives down
  int iterations = 0;
  double contraction_estimate = 0.0;  // max observed step ratio
  double epsilon_star = 0.0;
  bool outside_certified_regime = false;
  std::vector<std::string> flags;
};

struct EpsilonStar {
  double value = 0.0;
  double inverse_gain = 0.0;  // C: two-derivative gain bound of the inverse
  double lipschitz = 0.0;
  double forcing_norm = 0.0;  // ||F(0)|| two derivatives down
};

/// eps_* = min{ 1/(2 C Lip F), s/(2 C ||F(0)||) } with C measured over the
/// truncation box and Lip F from sampled quotients in B_s(0).
EpsilonStar epsilon_star(const EllipticOperatorSpec& spec, const FunctionSpec& f, double s,
                         const SpaceParams& space, int cutoff, std::uint64_t seed,
                         int pairs = 64);
EpsilonStar epsilon_star(const EvolutionOperatorSpec& spec, const FunctionSpec& f, double s,
                         const SpaceParams& space, int theta_cutoff, int cutoff,
                         std::uint64_t seed, int pairs = 64);

/// Picard iteration u <- eps L^{-1} F(u) from u0 = 0, stopping on the
/// a-posteriori contraction bound. Requires a nonresonant operator.
SolveResult solve_elliptic(const EllipticOperatorSpec& spec, const FunctionSpec& f, int cutoff,
                           const SolveConfig& cfg);

/// Same loop over hull functions; requires a fixed-point-solvable
/// classification (H1 or H2), otherwise raises Misroute toward the center
/// manifold reduction.
SolveResult solve_evolution(const EvolutionOperatorSpec& spec, const FunctionSpec& f,
                            int theta_cutoff, int cutoff, const SolveConfig& cfg);

/// Pointwise residual of the strong form on a dense grid (classical-solution
/// check).
double strong_form_residual(const EllipticOperatorSpec& spec, const FunctionSpec& f,
                            const SpectralField& u, double epsilon, const SpaceParams& space);

}  // namespace torspec

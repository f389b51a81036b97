#pragma once

#include <limits>
#include <string>

#include "torspec/expr.hpp"
#include "torspec/field.hpp"
#include "torspec/space.hpp"

namespace torspec {

struct DomainError : std::runtime_error {
  explicit DomainError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Scalar composite f(theta, x, u, Du, D2u) given as an expression tree;
/// applying it left-composes u with f through a dealiased collocation grid.
struct FunctionSpec {
  expr::ExprPtr f;
  int freq_axes = 0;
  int space_axes = 1;
  double domain_radius = std::numeric_limits<double>::infinity();
  std::string source;
  expr::Analysis analysis;

  static FunctionSpec parse(std::string_view text, int freq_axes, int space_axes,
                            double domain_radius = std::numeric_limits<double>::infinity());

  bool needs_second_derivatives() const { return analysis.uses_d2u; }
  bool loses_derivatives() const { return analysis.uses_du || analysis.uses_d2u; }
};

/// F[u] = f(., u, Du, D2u), dealiased, truncated back to u's box.
SpectralField apply_nonlinearity(const FunctionSpec& spec, const SpectralField& u,
                                 const SpaceParams& params);

/// Directional derivative DF[u] v.
SpectralField apply_nonlinearity_tangent(const FunctionSpec& spec, const SpectralField& u,
                                         const SpectralField& v, const SpaceParams& params);

/// Lipschitz constant of F: B_s -> H^{rho,r-2} estimated from sampled
/// difference quotients over random pairs in the ball.
double lipschitz_estimate(const FunctionSpec& spec, const SpectralField& shape,
                          const SpaceParams& params, double ball_radius, int pairs,
                          std::uint64_t seed);

}  // namespace torspec

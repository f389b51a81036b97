#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>

#include "doctest.h"
#include "torspec/algebra.hpp"
#include "torspec/solver.hpp"

using namespace torspec;

namespace {

SolveConfig demo_config(double epsilon) {
  SolveConfig cfg;
  cfg.epsilon = epsilon;
  cfg.ball_radius = 0.5;
  cfg.tol = 1e-12;
  cfg.space = SpaceParams{0.0, 4.0};
  cfg.seed = 5;
  return cfg;
}

const EllipticOperatorSpec kDemoOp{{1.3}, 1.0};

}  // namespace

TEST_CASE("epsilon_star: constant forcing keeps only the radius branch") {
  const auto f = FunctionSpec::parse("cos(x1)", 0, 1);
  const EpsilonStar es = epsilon_star(kDemoOp, f, 0.5, {0.0, 4.0}, 16, 3u);
  CHECK(es.lipschitz == doctest::Approx(0.0));
  CHECK(es.value ==
        doctest::Approx(0.5 / (2.0 * es.inverse_gain * es.forcing_norm)).epsilon(1e-12));
  // Doubling s scales the active branch linearly.
  const EpsilonStar es2 = epsilon_star(kDemoOp, f, 1.0, {0.0, 4.0}, 16, 3u);
  CHECK(es2.value == doctest::Approx(2.0 * es.value).epsilon(1e-10));
}

TEST_CASE("epsilon_star: linear map has unit-order sampled Lipschitz constant") {
  const auto f = FunctionSpec::parse("u", 0, 1);
  const EpsilonStar es = epsilon_star(kDemoOp, f, 0.5, {0.0, 4.0}, 16, 3u);
  // ||u||_{r-2} <= ||u||_r makes the sampled quotient at most 1 (embedding).
  CHECK(es.lipschitz <= 1.0 + 1e-9);
  CHECK(es.lipschitz > 0.3);
  CHECK(es.value <= 1.0 / (2.0 * es.inverse_gain * es.lipschitz) + 1e-12);
}

TEST_CASE("epsilon_star: refuses resonant operators") {
  const auto f = FunctionSpec::parse("u^2", 0, 1);
  CHECK_THROWS_AS((void)epsilon_star(EllipticOperatorSpec{{1.0}, 1.0}, f, 0.5, {0.0, 4.0}, 16, 3u),
                  SolverError);
}

TEST_CASE("epsilon_star: evolution threshold uses the spatial derivative gain") {
  const EvolutionOperatorSpec spec{{1.29}, {1.3}, 1.0};
  const auto f = FunctionSpec::parse("u^2 + cos(th1)*cos(x1)", 1, 1);
  const EpsilonStar es = epsilon_star(spec, f, 0.5, {0.0, 4.0}, 8, 8, 3u);
  CHECK(es.value > 0.0);
  CHECK(es.inverse_gain ==
        doctest::Approx(inverse_gain_bound(spec, std::vector<int>{8, 8})).epsilon(1e-14));
  // The bound to beat: formula branches from the measured ingredients.
  const double expect = std::min(1.0 / (2.0 * es.inverse_gain * es.lipschitz),
                                 0.5 / (2.0 * es.inverse_gain * es.forcing_norm));
  CHECK(es.value == doctest::Approx(expect).epsilon(1e-14));
}

TEST_CASE("solve_elliptic: eps = 0 returns the zero solution in one step") {
  const auto f = FunctionSpec::parse("u^2 + cos(x1)", 0, 1);
  const SolveResult res = solve_elliptic(kDemoOp, f, 16, demo_config(0.0));
  CHECK(res.iterations == 1);
  CHECK(norm(res.solution, {0.0, 4.0}) == 0.0);
  CHECK(res.residual == 0.0);
}

TEST_CASE("solve_elliptic: demo problem converges with a perturbative leading mode") {
  const auto f = FunctionSpec::parse("u^2 + cos(x1)", 0, 1);
  const SolveResult res = solve_elliptic(kDemoOp, f, 32, demo_config(0.01));
  CHECK(res.residual < 1e-10);
  CHECK_FALSE(res.outside_certified_regime);
  CHECK(res.contraction_estimate <= 0.5);

  // First-order prediction: hat_u(1) ~ eps * (1/2) / Upsilon_1.
  const double y1 = eigenvalue(std::vector<int>{1}, kDemoOp);
  const double predicted = 0.01 * 0.5 / y1;
  const double actual = res.solution.coeff({1}).real();
  CHECK(std::abs(actual - predicted) <= 0.10 * std::abs(predicted));
}

TEST_CASE("solve_elliptic: cutoff refinement leaves shared modes fixed") {
  const auto f = FunctionSpec::parse("u^2 + cos(x1)", 0, 1);
  const SolveResult a = solve_elliptic(kDemoOp, f, 32, demo_config(0.01));
  const SolveResult b = solve_elliptic(kDemoOp, f, 64, demo_config(0.01));
  for (int k = -32; k <= 32; ++k) {
    const Complex ca = a.solution.coeff({k});
    const Complex cb = b.solution.coeff({k});
    CHECK(std::abs(ca - cb) <= 1e-10);
  }
}

TEST_CASE("solve_elliptic: uniqueness against random starts") {
  const auto f = FunctionSpec::parse("u^2 + cos(x1)", 0, 1);
  const SolveResult base = solve_elliptic(kDemoOp, f, 16, demo_config(0.01));
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    SolveConfig cfg = demo_config(0.01);
    SpectralField start = random_field(1, 16, 200 + seed, 4.0);
    start = scaled(start, 0.3 / norm(start, cfg.space));
    cfg.initial = start;
    const SolveResult res = solve_elliptic(kDemoOp, f, 16, cfg);
    CHECK(norm(sub(res.solution, base.solution), cfg.space) <= 10.0 * cfg.tol);
  }
}

TEST_CASE("solve_elliptic: eps-derivative matches the first correction") {
  const auto f = FunctionSpec::parse("u^2 + cos(x1)", 0, 1);
  const double eps0 = 1e-5, h = 5e-6;
  const SolveResult up = solve_elliptic(kDemoOp, f, 16, demo_config(eps0 + h));
  const SolveResult dn = solve_elliptic(kDemoOp, f, 16, demo_config(eps0 - h));
  const SpectralField fd = scaled(sub(up.solution, dn.solution), 1.0 / (2.0 * h));

  SpectralField zero = SpectralField::spatial(1, 16);
  const SpectralField first =
      apply_inverse(kDemoOp, apply_nonlinearity(f, zero, {0.0, 4.0}));
  const double rel = norm(sub(fd, first), {0.0, 4.0}) / norm(first, {0.0, 4.0});
  CHECK(rel <= 1e-4);
}

TEST_CASE("solve_elliptic: fixed-point certificate at the returned iterate") {
  const auto f = FunctionSpec::parse("u^2 + cos(x1)", 0, 1);
  SolveConfig cfg = demo_config(0.01);
  const SolveResult res = solve_elliptic(kDemoOp, f, 32, cfg);
  // ||T(u*) - u*|| in the solution norm, T(u) = eps L^{-1} F(u).
  const SpectralField tu =
      scaled(apply_inverse(kDemoOp, apply_nonlinearity(f, res.solution, cfg.space)), cfg.epsilon);
  CHECK(norm(sub(tu, res.solution), cfg.space) <= cfg.tol);
}

TEST_CASE("solve_evolution: hull refinement leaves shared modes fixed") {
  const EvolutionOperatorSpec spec{{1.29}, {1.3}, 1.0};
  const auto f = FunctionSpec::parse("u^2 + cos(th1)*cos(x1)", 1, 1);
  SolveConfig cfg;
  cfg.epsilon = 0.01;
  cfg.ball_radius = 0.5;
  cfg.tol = 1e-12;
  cfg.space = SpaceParams{0.0, 4.0};
  const SolveResult coarse = solve_evolution(spec, f, 8, 8, cfg);
  const SolveResult fine = solve_evolution(spec, f, 12, 12, cfg);
  for (int l = -8; l <= 8; ++l)
    for (int k = -8; k <= 8; ++k)
      CHECK(std::abs(coarse.solution.coeff({l, k}) - fine.solution.coeff({l, k})) <= 1e-10);
}

TEST_CASE("solve_elliptic: strong form holds pointwise on a dense grid") {
  const auto f = FunctionSpec::parse("u^2 + cos(x1)", 0, 1);
  SolveConfig cfg = demo_config(0.01);
  const SolveResult res = solve_elliptic(kDemoOp, f, 32, cfg);
  const double pointwise = strong_form_residual(kDemoOp, f, res.solution, 0.01, cfg.space);
  CHECK(pointwise <= 10.0 * cfg.tol * (1.0 + norm(res.solution, cfg.space)));
}

TEST_CASE("solve_elliptic: resonant operators are refused") {
  const auto f = FunctionSpec::parse("u^2 + cos(x1)", 0, 1);
  try {
    (void)solve_elliptic(EllipticOperatorSpec{{1.0}, 1.0}, f, 16, demo_config(0.01));
    CHECK(false);
  } catch (const SolverError& e) {
    CHECK(e.code == SolverError::Code::Resonant);
  }
}

TEST_CASE("solve_elliptic: r - 2 > d/2 is enforced") {
  const auto f = FunctionSpec::parse("u^2", 0, 1);
  SolveConfig cfg = demo_config(0.01);
  cfg.space = SpaceParams{0.0, 2.4};
  CHECK_THROWS_AS((void)solve_elliptic(kDemoOp, f, 8, cfg), std::invalid_argument);
}

TEST_CASE("solve_evolution: eps = 0 and the H1 instance") {
  const EvolutionOperatorSpec spec{{1.0, std::sqrt(2.0)}, {1.0}, -0.5};
  const auto f = FunctionSpec::parse("u^2 + cos(th1)*cos(x1)", 2, 1);

  SolveConfig cfg;
  cfg.epsilon = 0.0;
  cfg.ball_radius = 0.5;
  cfg.tol = 1e-12;
  cfg.space = SpaceParams{0.0, 4.0};
  const SolveResult z = solve_evolution(spec, f, 6, 8, cfg);
  CHECK(norm(z.solution, cfg.space) == 0.0);

  cfg.epsilon = 0.01;
  const SolveResult res = solve_evolution(spec, f, 6, 8, cfg);
  CHECK(res.residual < 1e-10);
  const Complex lead = res.solution.coeff({1, 0, 1});
  CHECK(std::abs(lead) > 1e-5);  // forcing mode responds at first order
}

TEST_CASE("solve_evolution: H2 margin instance converges; resonant omega misroutes") {
  const auto f = FunctionSpec::parse("u^2 + cos(th1)*cos(x1)", 1, 1);
  SolveConfig cfg;
  cfg.epsilon = 0.01;
  cfg.ball_radius = 0.5;
  cfg.tol = 1e-12;
  cfg.space = SpaceParams{0.0, 4.0};

  const EvolutionOperatorSpec h2{{1.29}, {1.3}, 1.0};
  const SolveResult res = solve_evolution(h2, f, 10, 10, cfg);
  CHECK(res.residual < 1e-10);

  const EvolutionOperatorSpec resonant{{1.0}, {1.3}, 1.0};
  try {
    (void)solve_evolution(resonant, f, 10, 10, cfg);
    CHECK(false);
  } catch (const SolverError& e) {
    CHECK(e.code == SolverError::Code::Misroute);
  }
}

TEST_CASE("solve_elliptic: warn-and-proceed beyond the certified threshold") {
  const auto f = FunctionSpec::parse("u^2 + cos(x1)", 0, 1);
  SolveConfig cfg = demo_config(0.2);  // far above eps_*
  cfg.ball_radius = 1.0;
  const SolveResult res = solve_elliptic(kDemoOp, f, 16, cfg);
  CHECK(res.outside_certified_regime);
  CHECK(res.residual < 1e-9);
  CHECK(std::find(res.flags.begin(), res.flags.end(), "outside-certified-regime") !=
        res.flags.end());
}

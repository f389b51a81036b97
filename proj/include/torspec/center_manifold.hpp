#pragma once

#include <complex>
#include <cstdint>
#include <string>
#include <vector>

#include "torspec/nonlinearity.hpp"
#include "torspec/operators.hpp"
#include "torspec/space.hpp"

namespace torspec {

/// First-order state z = (u, u_t) for u_tt + sum nu_i^2 u_{x_i x_i} + m u =
/// eps f(omega t, x, u, D_x u).
struct FirstOrderState {
  SpectralField u;
  SpectralField v;
};

/// z' = A z with the block action (u, v) -> (v, mu u) per mode,
/// mu_k = sum nu_i^2 k_i^2 - m.
FirstOrderState apply_system(const EllipticOperatorSpec& op, const FirstOrderState& z);

double mode_mu(std::span<const int> k, const EllipticOperatorSpec& op);

enum class ModeClass { Hyperbolic, CenterOscillatory, CenterJordan, CenterSlow };

/// One eigendirection (k, Lambda) with lambda = Lambda sqrt(mu) (real mu > 0)
/// or Lambda i sqrt(-mu) (oscillatory). Exact double zeros keep a Jordan
/// block and carry both state components.
struct EigenModeEntry {
  std::vector<int> k;
  int lambda_sign = 1;
  Complex lambda{0.0, 0.0};
  double mu = 0.0;
  ModeClass cls = ModeClass::Hyperbolic;
};

struct SplitPolicy {
  double slow_threshold = 0.0;  // widen sigma_c with |Re lambda| <= threshold
};

struct SpectralSplitting {
  EllipticOperatorSpec op;
  int cutoff = 0;
  std::vector<EigenModeEntry> stable;    // Lambda = -1, mu > 0
  std::vector<EigenModeEntry> unstable;  // Lambda = +1, mu > 0
  std::vector<EigenModeEntry> center;    // oscillatory, Jordan, or slow pairs
  double beta1 = 0.0, beta2 = 0.0;
  double beta3_minus = 0.0, beta3_plus = 0.0;
  bool has_jordan = false;

  int center_dim() const { return static_cast<int>(center.size()); }
  int hyper_dim() const { return static_cast<int>(stable.size() + unstable.size()); }
};

/// Partition of Spec(A) over the truncation box into stable / center /
/// unstable with certified rates. Throws when no hyperbolic modes remain.
SpectralSplitting split_spectrum(const EllipticOperatorSpec& op, int cutoff,
                                 const SplitPolicy& policy = {});

/// Eigen-coordinate view of a state: coefficients along every entry of the
/// splitting, plus raw (u,v) pairs on Jordan modes.
struct EigenCoordinates {
  std::vector<Complex> stable;
  std::vector<Complex> unstable;
  std::vector<Complex> center;   // per center entry; Jordan entries store u for
                                 // Lambda=+1 and v for Lambda=-1
};

EigenCoordinates decompose(const SpectralSplitting& split, const FirstOrderState& z);
FirstOrderState reconstruct(const SpectralSplitting& split, const EigenCoordinates& c);

/// Weighted l2 norm of eigen coordinates (the norm the semigroup rates are
/// stated in).
double eigen_norm(const SpectralSplitting& split, const EigenCoordinates& c,
                  const SpaceParams& p);

enum class Block { Stable, Unstable, Center };

/// e^{tA} restricted to one block of the splitting. t >= 0 on the stable
/// block, t <= 0 on the unstable block, unrestricted on the center.
FirstOrderState semigroup_apply(const SpectralSplitting& split, Block block, double t,
                                const FirstOrderState& z);

/// C^smoothness radial plateau function: identically 1 inside radius/2,
/// identically 0 outside radius.
class SmoothBump {
 public:
  SmoothBump(int smoothness, double radius);
  double operator()(double r) const;
  int smoothness() const { return smoothness_; }
  double radius() const { return radius_; }

 private:
  int smoothness_;
  double radius_;
  std::vector<double> poly_;  // transition polynomial coefficients
  double poly_at(double t) const;
};

struct QuadratureConfig {
  double tail_tol = 1e-12;
  int gauss_points = 16;
  double max_horizon = 1e5;
};

/// Integral of e^{-a tau} over [0, infinity), Re a > 0: closed form and the
/// panel-quadrature route used by the jet update.
Complex laplace_factor_closed(Complex a);
Complex laplace_factor_quadrature(Complex a, const QuadratureConfig& quad);

/// Graph map of the invariant manifold truncated at quadratic order: for each
/// hyperbolic entry h, theta mode l and center monomial (degree <= 2), one
/// complex coefficient.
struct ManifoldJet {
  int n_center = 0;
  int n_hyper = 0;  // stable entries first, then unstable
  int freq_dim = 0;
  int theta_cutoff = 0;
  std::vector<Complex> coef;

  static int monomial_count(int n_center) {
    return 1 + n_center + n_center * (n_center + 1) / 2;
  }
  int monomials() const { return monomial_count(n_center); }
  int theta_modes() const;
  std::size_t index(int h, int l_flat, int mono) const;
  double sup() const;
  double distance(const ManifoldJet& other) const;

  /// Evaluate the hyperbolic coefficients at a concrete (theta, zeta).
  std::vector<Complex> evaluate(std::span<const double> theta,
                                std::span<const Complex> zeta) const;
};

struct CmSetup {
  EllipticOperatorSpec op;
  std::vector<double> omega;
  FunctionSpec f;             // f(theta, x, u, D_x u); second derivatives rejected
  double epsilon = 0.0;
  int cutoff = 16;
  int theta_cutoff = 8;
  SpaceParams space{0.0, 3.0};
  SplitPolicy policy;
  QuadratureConfig quad;
  double cutoff_radius = 1.0;  // prepared-equation plateau radius in z_c
  int bump_smoothness = 4;
};

ManifoldJet zero_jet(const SpectralSplitting& split, const CmSetup& cfg);

/// One pass of the graph-transform integral equations: evaluate the
/// nonlinearity along the current graph, then push it through the stable /
/// unstable Duhamel integrals with the linear center flow in the integrand.
ManifoldJet duhamel_update(const ManifoldJet& jet, const SpectralSplitting& split,
                           const CmSetup& cfg);

struct JetResult {
  ManifoldJet jet;
  SpectralSplitting split;
  int iterations = 0;
  double contraction = 0.0;  // observed update ratio
  double final_step = 0.0;
};

/// Iterate duhamel_update to its fixed point.
JetResult compute_jet(const CmSetup& cfg, double tol = 1e-13, int max_iter = 60);

/// Right side of the reduced equation on the center coordinates:
/// d zeta/dt = Lambda zeta + eps phi(|zeta|) N_c(theta, graph section).
std::vector<Complex> reduced_ode_rhs(std::span<const double> theta, std::span<const Complex> zeta,
                                     const ManifoldJet& jet, const SpectralSplitting& split,
                                     const CmSetup& cfg);

struct TrajectoryPoint {
  double t;
  std::vector<Complex> zeta;
};

/// RK4 trajectory of the reduced equation with theta(t) = theta0 + omega t.
std::vector<TrajectoryPoint> reduced_ode_trajectory(std::span<const double> theta0,
                                                    std::span<const Complex> zeta0, double t_end,
                                                    double dt, const ManifoldJet& jet,
                                                    const SpectralSplitting& split,
                                                    const CmSetup& cfg);

/// Center point with the conjugation pairing of real states, |zeta| = radius.
std::vector<Complex> random_center_point(const SpectralSplitting& split, double radius,
                                         std::uint64_t seed);

/// Integrate the full truncated prepared system a short time from graph
/// points and compare the endpoint's hyperbolic part against the jet;
/// max over samples of distance / h.
double invariance_residual(const ManifoldJet& jet, const SpectralSplitting& split,
                           const CmSetup& cfg, double sample_radius, int samples, double h,
                           std::uint64_t seed);

}  // namespace torspec

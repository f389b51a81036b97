#pragma once

#include <complex>
#include <optional>
#include <string>
#include <vector>

#include "torspec/nonlinearity.hpp"
#include "torspec/operators.hpp"
#include "torspec/space.hpp"

namespace torspec {

struct AssumptionError : std::runtime_error {
  explicit AssumptionError(const std::string& msg) : std::runtime_error(msg) {}
};
struct BranchSignError : std::runtime_error {
  explicit BranchSignError(const std::string& msg) : std::runtime_error(msg) {}
};
struct DegenerateEigenvalueError : std::runtime_error {
  explicit DegenerateEigenvalueError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Kernel of the resonant operator: a single sign-flip orbit of one base
/// vector with all components nonzero, so exactly 2^d wave vectors.
///
/// Mode order fixes the conjugation pairing used everywhere downstream:
///   d = 1:  k1 = (a),     k2 = (-a)             alpha2 = conj(alpha1)
///   d = 2:  k1 = (a,b), k2 = (a,-b), k3 = (-a,b), k4 = (-a,-b)
///           alpha4 = conj(alpha1), alpha3 = conj(alpha2)
struct KernelBasis {
  std::vector<double> nu;
  double m0 = 0.0;
  int dim = 0;
  std::vector<int> base;
  std::vector<std::vector<int>> modes;

  int orbit_size() const { return 1 << dim; }
  int conjugate_index(int j) const { return orbit_size() - 1 - j; }
};

KernelBasis kernel_basis(std::vector<double> nu, double m0, int kmax);

SpectralField project_kernel(const KernelBasis& basis, const SpectralField& u);
SpectralField project_range(const KernelBasis& basis, const SpectralField& u);

/// v_bar(alpha) = sum_j alpha_j exp(i k^j . x) on the given box.
SpectralField kernel_field(const KernelBasis& basis, std::span<const Complex> alpha, int cutoff);

/// Contraction solve of the range equation at fixed kernel data:
/// v_hat = L^{-1} Pi_R( -eps_m v_hat + (v_bar + v_hat)^2 ).
SpectralField solve_range(const KernelBasis& basis, std::span<const Complex> alpha, double eps_m,
                          int cutoff, double tol, const SpaceParams& space);

/// Closed-form quadratic jet of the range solution (degree-2 terms only).
SpectralField range_quadratic_jet(const KernelBasis& basis, std::span<const Complex> alpha,
                                  int cutoff);

struct BifurcationData {
  double A = 0.0;        // d = 2 diagonal entry
  double B = 0.0;        // d = 2 off-diagonal entry
  double m_scalar = 0.0; // d = 1 cubic coefficient
  double det = 0.0;      // (A+B)(A-B) for d = 2
  int sigma = 0;         // branch side: sign(A+B) resp. sign(m_scalar)
};

/// Exact eigenvalue arithmetic on the doubled/summed kernel modes.
BifurcationData bifurcation_coefficients(const KernelBasis& basis);

/// Leading kernel amplitudes alpha_j = sqrt(z_j) e^{i k^j . x*} with
/// z = eps_m * M^{-1} (1,..,1)^T; throws BranchSignError when eps_m lies on
/// the empty side.
std::vector<Complex> leading_amplitudes(const KernelBasis& basis, const BifurcationData& data,
                                        double eps_m, std::span<const double> phase);

struct BranchResult {
  SpectralField v;
  double residual = 0.0;
  int newton_iterations = 0;
  bool collapsed_to_zero = false;
  std::vector<Complex> alpha;  // kernel-mode coefficients of the refined branch
  std::vector<double> z;       // |alpha_j|^2 for the independent pairs
};

struct BranchConfig {
  double tol = 1e-12;
  int max_newton = 40;
  SpaceParams space{0.0, 4.0};
  std::uint64_t perturb_seed = 0;  // 0: seed exactly on the predicted branch
  double perturb_size = 0.0;
};

/// Newton refinement of L v + eps_m v - F(v) = 0 seeded from the
/// kernel-amplitude prediction plus the range solution. F defaults to v^2;
/// any analytic composite vanishing to second order is accepted, though the
/// seed coefficients are computed from the quadratic part only. A wrong-sign
/// eps_m is allowed here: the expected (and tested) outcome is collapse to
/// zero, reported via collapsed_to_zero rather than an error.
BranchResult branch_solve(const KernelBasis& basis, double eps_m, std::span<const double> phase,
                          int cutoff, const BranchConfig& cfg,
                          const FunctionSpec* nonlinearity = nullptr);

/// Residual of the truncated branch equation in the two-derivatives-down norm.
double branch_residual(const KernelBasis& basis, double eps_m, const SpectralField& v,
                       const SpaceParams& space, const FunctionSpec* nonlinearity = nullptr);

struct VerifyReport {
  double max_even_degree = 0.0;        // coefficients of total degree 2 and 4
  double factorization_defect = 0.0;   // terms outside alpha_l * series(|a1|^2, |a2|^2)
  double a_expansion = 0.0, b_expansion = 0.0;  // d = 2 cubic coefficients
  double m_expansion = 0.0;                     // d = 1 cubic coefficient
  double a_closed = 0.0, b_closed = 0.0, m_closed = 0.0;
  double m_quoted = 0.0;               // the 5/(3 m0) value in circulation
  bool quoted_value_consistent = false;
  std::string to_text() const;
};

/// Brute-force expansion of Pi_K (v_bar + v_hat)^2 to degree 4 in alpha by
/// small polynomial algebra over the kernel modes. Arbitrates the d = 1 cubic
/// coefficient against the commonly quoted closed form.
VerifyReport branch_verify(const KernelBasis& basis);

}  // namespace torspec

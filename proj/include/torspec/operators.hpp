#pragma once

#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "torspec/field.hpp"

namespace torspec {

/// Constant-coefficient operator sum_i nu_i^2 d^2/dx_i^2 + m, diagonal in the
/// Fourier basis with eigenvalues Upsilon_k = -sum nu_i^2 k_i^2 + m.
struct EllipticOperatorSpec {
  std::vector<double> nu;  // entries in [1, 2] in the calibrated regime
  double m = 0.0;

  int dim() const { return static_cast<int>(nu.size()); }
};

/// Hull-function operator (omega . d_theta)^2 + sum_i nu_i^2 d^2/dx_i^2 + m
/// with eigenvalues Upsilon_{l,k} = -<omega,l>^2 - sum nu_i^2 k_i^2 + m.
struct EvolutionOperatorSpec {
  std::vector<double> omega;
  std::vector<double> nu;
  double m = 0.0;

  int freq_dim() const { return static_cast<int>(omega.size()); }
  int dim() const { return static_cast<int>(nu.size()); }
};

double eigenvalue(std::span<const int> k, const EllipticOperatorSpec& spec);
double evolution_eigenvalue(std::span<const int> l, std::span<const int> k,
                            const EvolutionOperatorSpec& spec);

/// Eigenvalue at a combined (l,k) mode of a field with matching axes.
double multiplier(std::span<const int> mode, int freq_axes, const EvolutionOperatorSpec& spec);
double multiplier(std::span<const int> mode, const EllipticOperatorSpec& spec);

/// Near-zero threshold for kernel detection: |Upsilon| <= max(delta,
/// 1e-9 * (1 + |k|^2)). Floating-point nu cannot produce exact zeros; the
/// relative part tracks eigenvalue growth.
double kernel_tolerance(double delta, double mode_sq);

struct ZeroDivisorError : std::runtime_error {
  explicit ZeroDivisorError(const std::string& msg) : std::runtime_error(msg) {}
};

SpectralField apply(const EllipticOperatorSpec& spec, const SpectralField& u);
SpectralField apply(const EvolutionOperatorSpec& spec, const SpectralField& u);

/// Coefficient-wise division by the eigenvalues. With exclude_kernel the
/// near-zero modes are zeroed out (the inverse restricted to the range);
/// otherwise a near-zero divisor raises ZeroDivisorError.
SpectralField apply_inverse(const EllipticOperatorSpec& spec, const SpectralField& u,
                            bool exclude_kernel = false, double delta = 0.0);
SpectralField apply_inverse(const EvolutionOperatorSpec& spec, const SpectralField& u,
                            bool exclude_kernel = false, double delta = 0.0);

/// sup over the box of 1/|Upsilon| (operator norm of the inverse, same index).
double inverse_norm_bound(const EllipticOperatorSpec& spec, std::span<const int> cutoffs);
double inverse_norm_bound(const EvolutionOperatorSpec& spec, std::span<const int> cutoffs);

/// sup over the box of (1 + |k|^2)/|Upsilon|: the two-spatial-derivative gain
/// of the inverse, exact over the truncation.
double inverse_gain_bound(const EllipticOperatorSpec& spec, std::span<const int> cutoffs);
double inverse_gain_bound(const EvolutionOperatorSpec& spec, std::span<const int> cutoffs);

}  // namespace torspec

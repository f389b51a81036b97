#pragma once

#include <cmath>
#include <stdexcept>

#include "torspec/field.hpp"

namespace torspec {

/// Weight parameters of the analytic Sobolev family: exponential width rho
/// and regularity exponent r. r_freq overrides r on the frequency axes when
/// nonnegative. The per-mode weight is
///   exp(2 rho sum_a |k_a|) * (1 + |l|_2^2)^r_freq * (1 + |k|_2^2)^r .
struct SpaceParams {
  double rho = 0.0;
  double r = 0.0;
  double r_freq = -1.0;

  double freq_exponent() const { return r_freq >= 0.0 ? r_freq : r; }

  /// Same weights with the spatial exponent shifted (e.g. residual norms two
  /// derivatives down). The frequency exponent is pinned first.
  SpaceParams spatial_shift(double dr) const {
    SpaceParams p = *this;
    p.r_freq = freq_exponent();
    p.r = r + dr;
    return p;
  }

  void validate() const {
    if (rho < 0.0) throw std::invalid_argument("SpaceParams: rho must be >= 0");
  }
};

/// Per-mode squared-norm weight.
double mode_weight(const SpectralField& shape, std::span<const int> mode, const SpaceParams& p);

/// Weighted l2 norm read off the coefficients; no grid round trip.
double norm(const SpectralField& u, const SpaceParams& p);

/// Variant with the combined weight (1 + |l|^2 + |k|^2)^r; equivalent to the
/// product form within fixed constant factors.
double norm_combined(const SpectralField& u, const SpaceParams& p);

/// Weighted coefficient inner product <u, v> (conjugate-linear in v).
Complex inner(const SpectralField& u, const SpectralField& v, const SpaceParams& p);

struct SupBound {
  double bound;               // sum_k |hat_u_k| e^{rho |k|_1}, certified sup bound
  double embedding_constant;  // (sum_box (1+|k|^2)^-r (1+|l|^2)^-r)^{1/2}
};

/// Certified bound for sup |u| over the width-rho strip; requires r > d/2
/// (and r_freq > b/2 for hull fields).
SupBound sup_bound(const SpectralField& u, const SpaceParams& p);

/// L2 norm computed on a collocation grid (for Parseval cross-checks).
double grid_l2_norm(const SpectralField& u, int oversample = 2);

/// Max of |u| sampled on a dense grid over the real torus.
double grid_max_abs(const SpectralField& u, int oversample = 4);

}  // namespace torspec

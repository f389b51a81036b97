#pragma once

#include <span>

#include "torspec/field.hpp"

namespace torspec {

SpectralField add(const SpectralField& u, const SpectralField& v);
SpectralField sub(const SpectralField& u, const SpectralField& v);
SpectralField scaled(const SpectralField& u, Complex c);
void axpy(SpectralField& y, Complex a, const SpectralField& x);  // y += a x

inline SpectralField operator+(const SpectralField& u, const SpectralField& v) { return add(u, v); }
inline SpectralField operator-(const SpectralField& u, const SpectralField& v) { return sub(u, v); }
inline SpectralField operator*(double c, const SpectralField& u) { return scaled(u, c); }

/// Pointwise product as a truncated Fourier convolution. Output modes beyond
/// out_cutoffs are dropped (Galerkin truncation); the grid is sized so the
/// retained modes are alias-free.
SpectralField multiply_cutoff(const SpectralField& u, const SpectralField& v,
                              std::span<const int> out_cutoffs);

/// Product truncated at the common cutoff box.
SpectralField multiply(const SpectralField& u, const SpectralField& v);

/// Product on the doubled box (for truncation-error probes).
SpectralField multiply_widened(const SpectralField& u, const SpectralField& v);

/// Coefficient-wise multiplier (i k_axis)^order; axis is absolute (frequency
/// axes included), order 1 or 2.
SpectralField derivative(const SpectralField& u, int axis, int order);

/// u(. + shift) via phase factors e^{i k . shift} on the spatial axes.
SpectralField translate(const SpectralField& u, std::span<const double> shift);

namespace ref {
/// Direct O(M^2) convolution over stored modes, serial. Oracle for the
/// grid-based product.
SpectralField multiply_direct(const SpectralField& u, const SpectralField& v,
                              std::span<const int> out_cutoffs);
}  // namespace ref

}  // namespace torspec

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "torspec/operators.hpp"

namespace torspec {

enum class SpectralClass {
  Nonresonant,      // all |Upsilon_k| > delta over the box
  Resonant,         // near-zero eigenvalues found (elliptic)
  EvolutionH1,      // -sum nu^2 k^2 + m < 0 for every spatial mode
  EvolutionH2,      // one forcing frequency, margin certified by enumeration
  EvolutionCenter,  // center directions present; fixed point route fails
};

std::string to_string(SpectralClass c);

struct ResonanceReport {
  SpectralClass classification = SpectralClass::Nonresonant;
  double delta = 0.0;
  double margin = 0.0;                        // min |Upsilon| over non-kernel modes
  std::vector<std::vector<int>> kernel_modes; // closed under componentwise sign flips
  int freq_axes = 0;

  bool solvable_by_fixed_point() const {
    return classification == SpectralClass::Nonresonant ||
           classification == SpectralClass::EvolutionH1 ||
           classification == SpectralClass::EvolutionH2;
  }

  /// Flat key-value block, one `key = value` per line.
  std::string to_text() const;
};

/// Enumerates |k_i| <= kmax and classifies the operator spectrum.
ResonanceReport resonance_scan(const EllipticOperatorSpec& spec, double delta, int kmax);

/// Evolution variant; the frequency box is |l_i| <= lmax.
ResonanceReport resonance_scan(const EvolutionOperatorSpec& spec, double delta, int kmax,
                               int lmax);

struct MeasureEstimate {
  double delta = 0.0;
  double analytic_bound = 0.0;  // sum over candidate shells of 2 delta / inf |grad F_k|
  double mc_estimate = 0.0;     // sampled Lebesgue measure of I in [1,2]^d
  double mc_stderr = 0.0;
  int samples = 0;
  std::uint64_t seed = 0;
};

/// Measure of the excluded parameter set I = {nu in [1,2]^d : some
/// |Upsilon_k(nu)| <= delta}: analytic shell bound plus Monte Carlo estimate.
MeasureEstimate excluded_measure_estimate(int dim, double m, double delta, int kmax, int samples,
                                          std::uint64_t seed);

}  // namespace torspec

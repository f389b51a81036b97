#pragma once

#include <array>
#include <complex>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

namespace torspec {

using Complex = std::complex<double>;

/// Truncated Fourier coefficient array on the mode box prod_a [-K_a, K_a].
///
/// The leading `freq_axes` axes index forcing-frequency modes (l), the rest
/// index spatial modes (k). A purely spatial field has freq_axes == 0.
/// Coefficients outside the box are identically zero. A field flagged real
/// satisfies hat_u(-k) == conj(hat_u(k)); symmetrize_real() restores that
/// exactly and reality_defect() measures the violation.
class SpectralField {
 public:
  static constexpr int kMaxAxes = 4;

  SpectralField() = default;

  SpectralField(std::span<const int> cutoffs, int freq_axes = 0, bool is_real = true)
      : freq_axes_(freq_axes), is_real_(is_real) {
    if (cutoffs.empty() || cutoffs.size() > kMaxAxes)
      throw std::invalid_argument("SpectralField: axis count must be in [1, 4]");
    if (freq_axes < 0 || freq_axes >= static_cast<int>(cutoffs.size()) + 1)
      throw std::invalid_argument("SpectralField: bad freq_axes");
    std::size_t total = 1;
    for (int c : cutoffs) {
      if (c < 0) throw std::invalid_argument("SpectralField: negative cutoff");
      cutoff_.push_back(c);
      extent_.push_back(2 * c + 1);
      total *= static_cast<std::size_t>(2 * c + 1);
    }
    stride_.assign(cutoff_.size(), 1);
    for (int a = static_cast<int>(cutoff_.size()) - 2; a >= 0; --a)
      stride_[a] = stride_[a + 1] * static_cast<std::size_t>(extent_[a + 1]);
    coef_.assign(total, Complex{0.0, 0.0});
  }

  /// Spatial field on Z^dim with uniform per-axis bound.
  static SpectralField spatial(int dim, int cutoff, bool is_real = true) {
    std::vector<int> c(static_cast<std::size_t>(dim), cutoff);
    return SpectralField(c, 0, is_real);
  }

  /// Hull-function field on Z^b x Z^dim.
  static SpectralField hull(int freq_dim, int theta_cutoff, int dim, int cutoff,
                            bool is_real = true) {
    std::vector<int> c;
    for (int a = 0; a < freq_dim; ++a) c.push_back(theta_cutoff);
    for (int a = 0; a < dim; ++a) c.push_back(cutoff);
    return SpectralField(c, freq_dim, is_real);
  }

  int axes() const { return static_cast<int>(cutoff_.size()); }
  int freq_axes() const { return freq_axes_; }
  int space_axes() const { return axes() - freq_axes_; }
  int cutoff(int axis) const { return cutoff_[static_cast<std::size_t>(axis)]; }
  const std::vector<int>& cutoffs() const { return cutoff_; }
  bool is_real() const { return is_real_; }
  void set_real_flag(bool v) { is_real_ = v; }
  std::size_t size() const { return coef_.size(); }
  bool same_shape(const SpectralField& o) const {
    return cutoff_ == o.cutoff_ && freq_axes_ == o.freq_axes_;
  }

  bool in_box(std::span<const int> k) const {
    for (int a = 0; a < axes(); ++a)
      if (k[static_cast<std::size_t>(a)] < -cutoff_[static_cast<std::size_t>(a)] ||
          k[static_cast<std::size_t>(a)] > cutoff_[static_cast<std::size_t>(a)])
        return false;
    return true;
  }

  std::size_t index_of(std::span<const int> k) const {
    std::size_t idx = 0;
    for (int a = 0; a < axes(); ++a) {
      const auto ua = static_cast<std::size_t>(a);
      idx += stride_[ua] * static_cast<std::size_t>(k[ua] + cutoff_[ua]);
    }
    return idx;
  }

  /// Flat index -> mode vector (writes axes() entries).
  void decode(std::size_t flat, std::span<int> k) const {
    for (int a = 0; a < axes(); ++a) {
      const auto ua = static_cast<std::size_t>(a);
      k[ua] = static_cast<int>(flat / stride_[ua]) % extent_[ua] - cutoff_[ua];
    }
  }

  Complex coeff(std::span<const int> k) const {
    return in_box(k) ? coef_[index_of(k)] : Complex{0.0, 0.0};
  }
  Complex& at(std::span<const int> k) {
    if (!in_box(k)) throw std::out_of_range("SpectralField::at outside box");
    return coef_[index_of(k)];
  }
  Complex& at(std::initializer_list<int> k) { return at(std::span<const int>(k.begin(), k.size())); }
  Complex coeff(std::initializer_list<int> k) const {
    return coeff(std::span<const int>(k.begin(), k.size()));
  }

  Complex& operator[](std::size_t flat) { return coef_[flat]; }
  Complex operator[](std::size_t flat) const { return coef_[flat]; }
  std::span<Complex> data() { return coef_; }
  std::span<const Complex> data() const { return coef_; }

  std::size_t mirror_index(std::size_t flat) const {
    std::array<int, kMaxAxes> k{};
    decode(flat, std::span<int>(k.data(), static_cast<std::size_t>(axes())));
    for (int a = 0; a < axes(); ++a) k[static_cast<std::size_t>(a)] = -k[static_cast<std::size_t>(a)];
    return index_of(std::span<const int>(k.data(), static_cast<std::size_t>(axes())));
  }

  double reality_defect() const {
    double worst = 0.0;
    for (std::size_t i = 0; i < coef_.size(); ++i) {
      const Complex d = coef_[i] - std::conj(coef_[mirror_index(i)]);
      worst = std::max(worst, std::abs(d));
    }
    return worst;
  }

  /// Orthogonal projection onto the real subspace hat_u(-k) = conj(hat_u(k)).
  void symmetrize_real() {
    for (std::size_t i = 0; i < coef_.size(); ++i) {
      const std::size_t j = mirror_index(i);
      if (j < i) continue;
      const Complex avg = 0.5 * (coef_[i] + std::conj(coef_[j]));
      coef_[i] = avg;
      coef_[j] = std::conj(avg);
    }
    is_real_ = true;
  }

  /// Copy into a box with different cutoffs; modes shared by both boxes are
  /// kept, everything else is zero.
  SpectralField resized(std::span<const int> new_cutoffs) const {
    SpectralField out(new_cutoffs, freq_axes_, is_real_);
    std::array<int, kMaxAxes> k{};
    const auto n = static_cast<std::size_t>(axes());
    for (std::size_t i = 0; i < out.size(); ++i) {
      out.decode(i, std::span<int>(k.data(), n));
      if (in_box(std::span<const int>(k.data(), n)))
        out[i] = coef_[index_of(std::span<const int>(k.data(), n))];
    }
    return out;
  }

 private:
  std::vector<int> cutoff_;
  std::vector<int> extent_;
  std::vector<std::size_t> stride_;
  int freq_axes_ = 0;
  bool is_real_ = true;
  std::vector<Complex> coef_;
};

/// Random real field with coefficient magnitudes decaying like the
/// (rho, decay_r) weight, deterministic in (seed, mode).
SpectralField random_field(std::span<const int> cutoffs, int freq_axes, std::uint64_t seed,
                           double decay_r = 2.0, double rho = 0.0);

inline SpectralField random_field(int dim, int cutoff, std::uint64_t seed, double decay_r = 2.0,
                                  double rho = 0.0) {
  std::vector<int> c(static_cast<std::size_t>(dim), cutoff);
  return random_field(c, 0, seed, decay_r, rho);
}

}  // namespace torspec

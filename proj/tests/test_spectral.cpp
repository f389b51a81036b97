#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <numbers>

#include "doctest.h"
#include "torspec/algebra.hpp"
#include "torspec/fft.hpp"
#include "torspec/field.hpp"
#include "torspec/space.hpp"

using namespace torspec;

namespace {

SpectralField single_mode(int dim, int cutoff, std::vector<int> k, Complex c) {
  SpectralField u = SpectralField::spatial(dim, cutoff, false);
  u.at(std::span<const int>(k)) = c;
  return u;
}

SpectralField cosine(int cutoff, int k) {
  SpectralField u = SpectralField::spatial(1, cutoff);
  u.at({k}) = 0.5;
  u.at({-k}) = 0.5;
  return u;
}

}  // namespace

TEST_CASE("norm: zero field and single modes") {
  SpectralField z = SpectralField::spatial(1, 8);
  CHECK(norm(z, {0.3, 2.0}) == 0.0);

  // One exponential: the sum collapses to a single weight.
  for (int k : {0, 1, 3, 7}) {
    auto u = single_mode(1, 8, {k}, {1.0, 0.0});
    CHECK(norm(u, {0.0, 2.0}) == doctest::Approx(std::pow(1.0 + k * k, 1.0)).epsilon(1e-14));
    CHECK(norm(u, {0.0, 3.0}) == doctest::Approx(std::pow(1.0 + k * k, 1.5)).epsilon(1e-14));
  }
}

TEST_CASE("norm: three-term hand summation") {
  SpectralField u = SpectralField::spatial(1, 4);
  u.at({0}) = 1.0;
  u.at({1}) = 0.5;
  u.at({-1}) = 0.5;
  // |u0|^2 + 2 * |u1|^2 e^{2*0.1} (1+1)^2, summed by hand.
  const double expected = std::sqrt(1.0 + 2.0 * 0.25 * std::exp(0.2) * 4.0);
  CHECK(norm(u, {0.1, 2.0}) == doctest::Approx(expected).epsilon(1e-15));
}

TEST_CASE("norm: Parseval against the collocation grid") {
  for (std::uint64_t seed : {11u, 12u, 13u}) {
    const SpectralField u = random_field(1, 16, seed);
    CHECK(norm(u, {0.0, 0.0}) == doctest::Approx(grid_l2_norm(u)).epsilon(1e-10));
  }
  const SpectralField u2 = random_field(2, 6, 21u);
  CHECK(norm(u2, {0.0, 0.0}) == doctest::Approx(grid_l2_norm(u2)).epsilon(1e-10));
}

TEST_CASE("norm is deterministic across repeated evaluation") {
  const SpectralField u = random_field(2, 12, 5u);
  const double a = norm(u, {0.1, 2.5});
  const double b = norm(u, {0.1, 2.5});
  CHECK(a == b);
}

TEST_CASE("reality: random fields and closure under operations") {
  const SpectralField u = random_field(1, 12, 3u);
  const SpectralField v = random_field(1, 12, 4u);
  CHECK(u.reality_defect() == 0.0);
  CHECK(add(u, v).reality_defect() <= 1e-15);
  CHECK(multiply(u, v).reality_defect() <= 1e-12);
  CHECK(derivative(u, 0, 2).reality_defect() <= 1e-15);
}

TEST_CASE("multiply: constant is the identity element") {
  SpectralField one = SpectralField::spatial(1, 10);
  one.at({0}) = 1.0;
  const SpectralField v = random_field(1, 10, 17u);
  const SpectralField prod = multiply(one, v);
  for (std::size_t i = 0; i < v.size(); ++i)
    CHECK(std::abs(prod[i] - v[i]) <= 1e-13);
}

TEST_CASE("multiply: cos * cos = (1 + cos 2x)/2") {
  const SpectralField c = cosine(8, 1);
  const SpectralField p = multiply(c, c);
  CHECK(p.coeff({0}).real() == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(p.coeff({2}).real() == doctest::Approx(0.25).epsilon(1e-14));
  CHECK(p.coeff({-2}).real() == doctest::Approx(0.25).epsilon(1e-14));
  CHECK(std::abs(p.coeff({1})) <= 1e-15);
}

TEST_CASE("multiply: grid path matches the direct convolution oracle") {
  auto check_match = [](const SpectralField& u, const SpectralField& v,
                        std::span<const int> out) {
    const SpectralField fast = multiply_cutoff(u, v, out);
    const SpectralField slow = ref::multiply_direct(u, v, out);
    double scale = 0.0, worst = 0.0;
    for (std::size_t i = 0; i < fast.size(); ++i) {
      scale = std::max(scale, std::abs(slow[i]));
      worst = std::max(worst, std::abs(fast[i] - slow[i]));
    }
    CHECK(worst <= 1e-13 * std::max(scale, 1.0));
  };

  const SpectralField u1 = random_field(1, 8, 31u);
  const SpectralField v1 = random_field(1, 8, 32u);
  std::vector<int> same{8}, wide{16};
  check_match(u1, v1, same);
  check_match(u1, v1, wide);

  const SpectralField u2 = random_field(2, 4, 33u);
  const SpectralField v2 = random_field(2, 4, 34u);
  std::vector<int> same2{4, 4}, wide2{8, 8};
  check_match(u2, v2, same2);
  check_match(u2, v2, wide2);
}

TEST_CASE("multiply: algebra ratio stays bounded as the cutoff doubles") {
  // d = 1 at the sharpened regularity r = d/2 + 0.6.
  const SpaceParams p{0.0, 1.1};
  auto max_ratio = [&](int cutoff) {
    double worst = 0.0;
    for (std::uint64_t t = 0; t < 200; ++t) {
      const SpectralField u = random_field(1, cutoff, 1000 + 2 * t, 1.6);
      const SpectralField v = random_field(1, cutoff, 1000 + 2 * t + 1, 1.6);
      worst = std::max(worst, norm(multiply(u, v), p) / (norm(u, p) * norm(v, p)));
    }
    return worst;
  };
  const double r16 = max_ratio(16);
  const double r32 = max_ratio(32);
  CHECK(r32 <= 1.10 * r16);
}

TEST_CASE("derivative: eigenfunctions and trigonometric identities") {
  SpectralField c = SpectralField::spatial(1, 8);
  c.at({0}) = 3.0;
  const SpectralField dc = derivative(c, 0, 1);
  CHECK(norm(dc, {0.0, 0.0}) == 0.0);

  const auto e3 = single_mode(1, 8, {3}, {1.0, 0.0});
  const SpectralField d2 = derivative(e3, 0, 2);
  CHECK(d2.coeff({3}).real() == doctest::Approx(-9.0));

  // sin(2x) -> 2 cos(2x)
  SpectralField s = SpectralField::spatial(1, 8);
  s.at({2}) = Complex(0.0, -0.5);
  s.at({-2}) = Complex(0.0, 0.5);
  const SpectralField ds = derivative(s, 0, 1);
  CHECK(ds.coeff({2}).real() == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(ds.coeff({-2}).real() == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(std::abs(ds.coeff({2}).imag()) <= 1e-16);
}

TEST_CASE("sup_bound: exact cases and soundness against the grid") {
  SpectralField c = SpectralField::spatial(1, 6);
  c.at({0}) = -2.5;
  CHECK(sup_bound(c, {0.2, 1.0}).bound == doctest::Approx(2.5));

  const auto e = single_mode(1, 6, {4}, {1.0, 0.0});
  CHECK(sup_bound(e, {0.0, 1.0}).bound == doctest::Approx(1.0));

  for (std::uint64_t seed = 100; seed < 120; ++seed) {
    const SpectralField u = random_field(1, 12, seed, 1.4);
    CHECK(sup_bound(u, {0.0, 1.0}).bound >= grid_max_abs(u) * (1.0 - 1e-12));
  }
  const SpectralField u2 = random_field(2, 6, 9u, 2.2);
  CHECK(sup_bound(u2, {0.0, 1.5}).bound >= grid_max_abs(u2) * (1.0 - 1e-12));

  CHECK_THROWS_AS((void)sup_bound(u2, {0.0, 0.9}), std::domain_error);  // r <= d/2

  // Embedding constant over the truncation box by direct summation.
  const SpectralField w = SpectralField::spatial(1, 6);
  double direct = 0.0;
  for (int k = -6; k <= 6; ++k) direct += std::pow(1.0 + k * k, -1.5);
  CHECK(sup_bound(w, {0.0, 1.5}).embedding_constant ==
        doctest::Approx(std::sqrt(direct)).epsilon(1e-14));
}

TEST_CASE("hull-function norm: product and combined weights are equivalent") {
  const std::vector<int> cutoffs{6, 8};
  const SpectralField u = random_field(cutoffs, 1, 77u);
  const SpaceParams p{0.1, 2.0};
  const double prod = norm(u, p);
  const double comb = norm_combined(u, p);
  // Per-mode weight ratio lies in [1, ((1+L^2)(1+K^2)/(1+L^2+K^2))^r].
  const double cap = std::pow((1.0 + 36.0) * (1.0 + 64.0) / (1.0 + 36.0 + 64.0), p.r / 2.0);
  CHECK(prod >= comb * (1.0 - 1e-12));
  CHECK(prod <= comb * cap * (1.0 + 1e-12));
}

TEST_CASE("translate: phase factors and equivariance of values") {
  const SpectralField u = random_field(1, 10, 55u);
  const double shift = 0.7;
  const SpectralField t = translate(u, std::vector<double>{shift});
  // Compare values on a common grid: t(x) should equal u(x + shift).
  const std::vector<std::size_t> dims{64};
  const auto gu = fft::to_grid(u, dims);
  const auto gt = fft::to_grid(t, dims);
  // x_j + shift is not a grid point, so check one Fourier mode directly.
  for (int k : {-3, 1, 5}) {
    const Complex expect =
        u.coeff({k}) * Complex(std::cos(k * shift), std::sin(k * shift));
    CHECK(std::abs(t.coeff({k}) - expect) <= 1e-15);
  }
  CHECK(gu.size() == gt.size());
}

TEST_CASE("fft: fast transform matches the reference DFT") {
  for (std::size_t n : {2u, 8u, 32u, 128u}) {
    std::vector<Complex> a(n), fast, slow(n);
    for (std::size_t i = 0; i < n; ++i)
      a[i] = Complex(std::sin(0.7 * static_cast<double>(i) + 0.2),
                     std::cos(1.3 * static_cast<double>(i)));
    fast = a;
    fft::transform(fast.data(), n, false);
    ref::dft(a.data(), slow.data(), n, false);
    for (std::size_t i = 0; i < n; ++i)
      CHECK(std::abs(fast[i] - slow[i]) <= 1e-11 * static_cast<double>(n));
  }
}

TEST_CASE("fft: grid round trip is the identity on the box") {
  const SpectralField u = random_field(2, 5, 91u);
  const std::vector<std::size_t> dims{16, 32};
  const auto grid = fft::to_grid(u, dims);
  const SpectralField back = fft::from_grid(grid, dims, u.cutoffs(), 0, true);
  for (std::size_t i = 0; i < u.size(); ++i)
    CHECK(std::abs(back[i] - u[i]) <= 1e-13);
}

TEST_CASE("resized: embeds and restricts shared modes") {
  const SpectralField u = random_field(1, 8, 14u);
  const std::vector<int> big{16};
  const SpectralField e = u.resized(big);
  CHECK(e.coeff({7}) == u.coeff({7}));
  CHECK(e.coeff({12}) == Complex{0.0, 0.0});
  const SpectralField back = e.resized(u.cutoffs());
  for (std::size_t i = 0; i < u.size(); ++i) CHECK(back[i] == u[i]);
}

TEST_CASE("cutoff zero: constants-only fields are legal everywhere") {
  SpectralField a = SpectralField::spatial(1, 0);
  a.at({0}) = 2.0;
  SpectralField b = SpectralField::spatial(1, 0);
  b.at({0}) = -1.5;
  const SpectralField p = multiply(a, b);
  CHECK(p.coeff({0}).real() == doctest::Approx(-3.0));
  CHECK(norm(a, {0.5, 3.0}) == doctest::Approx(2.0));
  CHECK(sup_bound(a, {0.0, 1.0}).bound == doctest::Approx(2.0));
}

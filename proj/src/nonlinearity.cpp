#include "torspec/nonlinearity.hpp"

#include <cmath>
#include <numbers>

#include "torspec/algebra.hpp"
#include "torspec/fft.hpp"
#include "torspec/parallel.hpp"
#include "torspec/rng.hpp"

namespace torspec {

FunctionSpec FunctionSpec::parse(std::string_view text, int freq_axes, int space_axes,
                                 double domain_radius) {
  FunctionSpec spec;
  spec.f = expr::parse(text, freq_axes, space_axes);
  spec.freq_axes = freq_axes;
  spec.space_axes = space_axes;
  spec.domain_radius = domain_radius;
  spec.source = std::string(text);
  spec.analysis = expr::analyze(spec.f);
  if (spec.analysis.bare_coords)
    throw expr::ParseError(
        "coordinate variables must appear inside sin/cos to stay torus-periodic");
  return spec;
}

namespace {

struct GridSetup {
  std::vector<std::size_t> dims;
  std::size_t total = 1;
};

/// Collocation sizes for an alias-free evaluation: at least
/// ceil((p+1)/2)*(2K+1) points per axis for polynomial degree p and 4*(2K+1)
/// for transcendental composites, rounded up to a power of two.
GridSetup collocation_dims(const FunctionSpec& spec, const SpectralField& u) {
  const int p = spec.analysis.u_degree;
  const int bw = spec.analysis.coord_bandwidth;
  GridSetup g;
  for (int a = 0; a < u.axes(); ++a) {
    const int twoK1 = 2 * u.cutoff(a) + 1;
    std::size_t need;
    if (p >= 0) {
      const int blocks = (p + 2) / 2;  // ceil((p+1)/2)
      need = static_cast<std::size_t>(blocks * twoK1);
      if (bw > 0) need += static_cast<std::size_t>(bw);
    } else {
      need = static_cast<std::size_t>(4 * twoK1 + std::max(bw, 0));
    }
    const std::size_t n = fft::next_pow2(std::max<std::size_t>(need, 2));
    g.dims.push_back(n);
    g.total *= n;
  }
  return g;
}

struct SectionGrids {
  GridSetup setup;
  std::vector<Complex> u;
  std::vector<std::vector<Complex>> du;   // spatial gradient grids
  std::vector<std::vector<Complex>> d2u;  // row-major d*d (upper entries mirrored)
};

SectionGrids evaluate_section(const FunctionSpec& spec, const SpectralField& u) {
  SectionGrids s;
  s.setup = collocation_dims(spec, u);
  s.u = fft::to_grid(u, s.setup.dims);
  const int d = u.space_axes();
  if (spec.analysis.uses_du || spec.analysis.uses_d2u) {
    s.du.resize(static_cast<std::size_t>(d));
    for (int i = 0; i < d; ++i)
      s.du[static_cast<std::size_t>(i)] = fft::to_grid(derivative(u, u.freq_axes() + i, 1), s.setup.dims);
  }
  if (spec.analysis.uses_d2u) {
    s.d2u.resize(static_cast<std::size_t>(d) * static_cast<std::size_t>(d));
    for (int i = 0; i < d; ++i)
      for (int j = i; j < d; ++j) {
        SpectralField dij = derivative(derivative(u, u.freq_axes() + i, 1), u.freq_axes() + j, 1);
        auto grid = fft::to_grid(dij, s.setup.dims);
        s.d2u[static_cast<std::size_t>(i * d + j)] = grid;
        if (i != j) s.d2u[static_cast<std::size_t>(j * d + i)] = std::move(grid);
      }
  }
  return s;
}

void grid_coords(std::span<const std::size_t> dims, std::size_t flat, std::span<double> coords) {
  for (int a = static_cast<int>(dims.size()) - 1; a >= 0; --a) {
    const std::size_t n = dims[static_cast<std::size_t>(a)];
    coords[static_cast<std::size_t>(a)] =
        2.0 * std::numbers::pi * static_cast<double>(flat % n) / static_cast<double>(n);
    flat /= n;
  }
}

void check_domain(const FunctionSpec& spec, const SpectralField& u, const SpaceParams& params) {
  if (!std::isfinite(spec.domain_radius)) return;
  const double sup = sup_bound(u, params).bound;
  if (sup > spec.domain_radius)
    throw DomainError("composition argument leaves the domain ball: sup bound " +
                      std::to_string(sup) + " > radius " + std::to_string(spec.domain_radius));
}

}  // namespace

SpectralField apply_nonlinearity(const FunctionSpec& spec, const SpectralField& u,
                                 const SpaceParams& params) {
  if (u.freq_axes() != spec.freq_axes || u.space_axes() != spec.space_axes)
    throw std::invalid_argument("apply_nonlinearity: field shape does not match the composite");
  check_domain(spec, u, params);

  const SectionGrids s = evaluate_section(spec, u);
  const int d = u.space_axes();
  std::vector<Complex> out(s.setup.total);
  par::parallel_for(static_cast<std::ptrdiff_t>(s.setup.total), [&](std::ptrdiff_t ii) {
    const auto i = static_cast<std::size_t>(ii);
    std::array<double, SpectralField::kMaxAxes> coords{};
    grid_coords(s.setup.dims, i, std::span<double>(coords.data(), static_cast<std::size_t>(u.axes())));
    std::array<Complex, SpectralField::kMaxAxes> du{};
    std::array<Complex, SpectralField::kMaxAxes * SpectralField::kMaxAxes> d2u{};
    for (std::size_t a = 0; a < s.du.size(); ++a) du[a] = s.du[a][i];
    for (std::size_t a = 0; a < s.d2u.size(); ++a) d2u[a] = s.d2u[a][i];
    expr::Point pt{std::span<const double>(coords.data(), static_cast<std::size_t>(u.axes())),
                   s.u[i],
                   std::span<const Complex>(du.data(), static_cast<std::size_t>(d)),
                   std::span<const Complex>(d2u.data(), static_cast<std::size_t>(d * d))};
    out[i] = expr::eval(spec.f, pt);
  });
  return fft::from_grid(out, s.setup.dims, u.cutoffs(), u.freq_axes(), u.is_real());
}

SpectralField apply_nonlinearity_tangent(const FunctionSpec& spec, const SpectralField& u,
                                         const SpectralField& v, const SpaceParams& params) {
  if (!u.same_shape(v)) throw std::invalid_argument("tangent: field shapes differ");
  check_domain(spec, u, params);

  const SectionGrids s = evaluate_section(spec, u);
  const int d = u.space_axes();

  // Partial derivatives of f with respect to each u-family slot.
  std::vector<expr::ExprPtr> partials;
  std::vector<std::vector<Complex>> direction;  // matching grids of v
  partials.push_back(expr::diff(spec.f, expr::VarKind::U));
  direction.push_back(fft::to_grid(v, s.setup.dims));
  if (spec.analysis.uses_du || spec.analysis.uses_d2u) {
    for (int i = 0; i < d; ++i) {
      partials.push_back(expr::diff(spec.f, expr::VarKind::DU, i));
      direction.push_back(fft::to_grid(derivative(v, v.freq_axes() + i, 1), s.setup.dims));
    }
  }
  if (spec.analysis.uses_d2u) {
    for (int i = 0; i < d; ++i)
      for (int j = i; j < d; ++j) {
        partials.push_back(expr::diff(spec.f, expr::VarKind::D2U, i, j));
        direction.push_back(fft::to_grid(
            derivative(derivative(v, v.freq_axes() + i, 1), v.freq_axes() + j, 1), s.setup.dims));
      }
  }

  std::vector<Complex> out(s.setup.total);
  par::parallel_for(static_cast<std::ptrdiff_t>(s.setup.total), [&](std::ptrdiff_t ii) {
    const auto i = static_cast<std::size_t>(ii);
    std::array<double, SpectralField::kMaxAxes> coords{};
    grid_coords(s.setup.dims, i, std::span<double>(coords.data(), static_cast<std::size_t>(u.axes())));
    std::array<Complex, SpectralField::kMaxAxes> du{};
    std::array<Complex, SpectralField::kMaxAxes * SpectralField::kMaxAxes> d2u{};
    for (std::size_t a = 0; a < s.du.size(); ++a) du[a] = s.du[a][i];
    for (std::size_t a = 0; a < s.d2u.size(); ++a) d2u[a] = s.d2u[a][i];
    expr::Point pt{std::span<const double>(coords.data(), static_cast<std::size_t>(u.axes())),
                   s.u[i],
                   std::span<const Complex>(du.data(), static_cast<std::size_t>(d)),
                   std::span<const Complex>(d2u.data(), static_cast<std::size_t>(d * d))};
    Complex acc{0.0, 0.0};
    for (std::size_t p = 0; p < partials.size(); ++p)
      acc += expr::eval(partials[p], pt) * direction[p][i];
    out[i] = acc;
  });
  return fft::from_grid(out, s.setup.dims, u.cutoffs(), u.freq_axes(), u.is_real() && v.is_real());
}

double lipschitz_estimate(const FunctionSpec& spec, const SpectralField& shape,
                          const SpaceParams& params, double ball_radius, int pairs,
                          std::uint64_t seed) {
  const SpaceParams target = params.spatial_shift(-2.0);
  double worst = 0.0;
  for (int p = 0; p < pairs; ++p) {
    SpectralField u1 = random_field(shape.cutoffs(), shape.freq_axes(),
                                    seed + 2 * static_cast<std::uint64_t>(p), params.r + 1.0, params.rho);
    SpectralField u2 = random_field(shape.cutoffs(), shape.freq_axes(),
                                    seed + 2 * static_cast<std::uint64_t>(p) + 1, params.r + 1.0, params.rho);
    const double n1 = norm(u1, params);
    const double n2 = norm(u2, params);
    if (n1 == 0.0 || n2 == 0.0) continue;
    // Scale both into the ball, at staggered radii.
    const double r1 = ball_radius * (0.15 + 0.8 * rng::uniform01(seed, static_cast<std::uint64_t>(p), 7));
    const double r2 = ball_radius * (0.15 + 0.8 * rng::uniform01(seed, static_cast<std::uint64_t>(p), 8));
    u1 = scaled(u1, r1 / n1);
    u2 = scaled(u2, r2 / n2);
    const double gap = norm(sub(u1, u2), params);
    if (gap < 1e-14) continue;
    const double image_gap =
        norm(sub(apply_nonlinearity(spec, u1, params), apply_nonlinearity(spec, u2, params)), target);
    worst = std::max(worst, image_gap / gap);
  }
  return worst;
}

}  // namespace torspec

// Kernel benchmark: times the data-parallel inner loops against their serial
// reference implementations and against a single OpenMP thread, and checks
// that results are bit-identical across thread counts (the reductions use a
// fixed pairwise order).
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "torspec/algebra.hpp"
#include "torspec/fft.hpp"
#include "torspec/nonlinearity.hpp"
#include "torspec/resonance.hpp"
#include "torspec/space.hpp"

using namespace torspec;

namespace {

double time_ms(const std::function<void()>& fn, int reps) {
  fn();  // warm up
  const auto t0 = std::chrono::steady_clock::now();
  for (int i = 0; i < reps; ++i) fn();
  const auto t1 = std::chrono::steady_clock::now();
  return std::chrono::duration<double, std::milli>(t1 - t0).count() / reps;
}

void set_threads(int n) {
#ifdef _OPENMP
  omp_set_num_threads(n);
#else
  (void)n;
#endif
}

int max_threads() {
#ifdef _OPENMP
  return omp_get_num_procs();
#else
  return 1;
#endif
}

struct Row {
  std::string name;
  double serial_ms;
  double parallel_ms;
  bool identical;
};

}  // namespace

int main() {
  std::vector<Row> rows;
  const int threads = max_threads();

  // --- Weighted norm reduction, d = 2, K = 48.
  {
    const SpectralField u = random_field(2, 48, 1u);
    const SpaceParams p{0.1, 3.0};
    set_threads(1);
    const double serial = time_ms([&] { (void)norm(u, p); }, 20);
    const double v1 = norm(u, p);
    set_threads(threads);
    const double parallel = time_ms([&] { (void)norm(u, p); }, 20);
    const double vn = norm(u, p);
    rows.push_back({"norm (d=2, K=48)", serial, parallel, v1 == vn});
  }

  // --- Dealiased product via the grid, d = 2, K = 32.
  {
    const SpectralField u = random_field(2, 32, 2u);
    const SpectralField v = random_field(2, 32, 3u);
    set_threads(1);
    SpectralField r1 = multiply(u, v);
    const double serial = time_ms([&] { (void)multiply(u, v); }, 5);
    set_threads(threads);
    SpectralField rn = multiply(u, v);
    const double parallel = time_ms([&] { (void)multiply(u, v); }, 5);
    bool same = true;
    for (std::size_t i = 0; i < r1.size(); ++i) same &= r1[i] == rn[i];
    rows.push_back({"multiply/grid (d=2, K=32)", serial, parallel, same});
  }

  // --- Grid product against the direct convolution reference, d = 2, K = 12.
  {
    const SpectralField u = random_field(2, 12, 4u);
    const SpectralField v = random_field(2, 12, 5u);
    set_threads(threads);
    const double fast = time_ms([&] { (void)multiply(u, v); }, 5);
    const double slow = time_ms([&] { (void)ref::multiply_direct(u, v, u.cutoffs()); }, 2);
    const SpectralField a = multiply(u, v);
    const SpectralField b = ref::multiply_direct(u, v, u.cutoffs());
    double gap = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) gap = std::max(gap, std::abs(a[i] - b[i]));
    rows.push_back({"multiply grid vs direct ref (K=12)", slow, fast, gap < 1e-12});
  }

  // --- Tensor transform against the naive DFT reference, 256 x 256.
  {
    const std::vector<std::size_t> dims{256, 256};
    std::vector<Complex> data(dims[0] * dims[1]);
    for (std::size_t i = 0; i < data.size(); ++i)
      data[i] = Complex(std::sin(0.37 * static_cast<double>(i)),
                        std::cos(0.11 * static_cast<double>(i)));
    set_threads(threads);
    auto fast_copy = data;
    const double fast = time_ms(
        [&] {
          auto w = data;
          fft::transform_tensor(w.data(), dims, false);
          fast_copy = w;
        },
        3);
    auto slow_copy = data;
    const double slow = time_ms(
        [&] {
          auto w = data;
          ref::transform_tensor(w.data(), dims, false);
          slow_copy = w;
        },
        1);
    double gap = 0.0, scale = 0.0;
    for (std::size_t i = 0; i < data.size(); ++i) {
      gap = std::max(gap, std::abs(fast_copy[i] - slow_copy[i]));
      scale = std::max(scale, std::abs(slow_copy[i]));
    }
    rows.push_back({"transform fft vs dft ref (256^2)", slow, fast, gap < 1e-9 * scale});
  }

  // --- Left composition sin(u), d = 1, K = 64.
  {
    const FunctionSpec f = FunctionSpec::parse("sin(u)", 0, 1);
    SpectralField u = random_field(1, 64, 6u);
    u = scaled(u, 0.3 / norm(u, {0.0, 2.0}));
    set_threads(1);
    SpectralField r1 = apply_nonlinearity(f, u, {0.0, 2.0});
    const double serial = time_ms([&] { (void)apply_nonlinearity(f, u, {0.0, 2.0}); }, 10);
    set_threads(threads);
    SpectralField rn = apply_nonlinearity(f, u, {0.0, 2.0});
    const double parallel = time_ms([&] { (void)apply_nonlinearity(f, u, {0.0, 2.0}); }, 10);
    bool same = true;
    for (std::size_t i = 0; i < r1.size(); ++i) same &= r1[i] == rn[i];
    rows.push_back({"composition sin(u) (d=1, K=64)", serial, parallel, same});
  }

  // --- Monte Carlo measure of the excluded set, d = 2, 2e5 samples.
  {
    set_threads(1);
    const MeasureEstimate e1 = excluded_measure_estimate(2, 2.5, 0.03, 8, 200000, 9u);
    const double serial =
        time_ms([&] { (void)excluded_measure_estimate(2, 2.5, 0.03, 8, 200000, 9u); }, 3);
    set_threads(threads);
    const MeasureEstimate en = excluded_measure_estimate(2, 2.5, 0.03, 8, 200000, 9u);
    const double parallel =
        time_ms([&] { (void)excluded_measure_estimate(2, 2.5, 0.03, 8, 200000, 9u); }, 3);
    rows.push_back({"measure MC (d=2, 2e5 samples)", serial, parallel,
                    e1.mc_estimate == en.mc_estimate});
  }

  std::printf("threads: 1 vs %d\n", threads);
  std::printf("%-36s %12s %12s %9s %10s\n", "kernel", "serial ms", "parallel ms", "speedup",
              "identical");
  bool all_identical = true;
  for (const Row& r : rows) {
    std::printf("%-36s %12.3f %12.3f %8.2fx %10s\n", r.name.c_str(), r.serial_ms, r.parallel_ms,
                r.serial_ms / r.parallel_ms, r.identical ? "yes" : "NO");
    all_identical &= r.identical;
  }
  if (!all_identical) {
    std::printf("mismatch between serial and parallel results\n");
    return 1;
  }
  return 0;
}

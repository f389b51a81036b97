#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace torspec::harness {

struct ValidationError : std::runtime_error {
  explicit ValidationError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Every run is fully determined by (config, seed); reports embed the
/// resolved configuration as leading comment lines.
struct ExperimentConfig {
  std::string scenario;
  std::map<std::string, std::string> kv;
  std::filesystem::path out_dir = ".";
  bool verbose = false;

  bool has(const std::string& key) const { return kv.count(key) != 0; }
  void set(const std::string& key, const std::string& value) { kv[key] = value; }
};

/// `key = value` lines with # comments; the `scenario` key selects the run.
ExperimentConfig load_config_file(const std::filesystem::path& path);

/// Exit codes: 0 success, 2 validation, 3 divergence/ball/domain, 4
/// resonance misroute (wrong solver for the spectrum), 5 I/O.
enum ExitCode : int {
  kOk = 0,
  kValidation = 2,
  kDivergence = 3,
  kMisroute = 4,
  kIo = 5,
};

/// Dispatch a scenario; writes artifacts, prints a short summary to stdout,
/// reports errors on stderr, returns the exit code.
int run(const ExperimentConfig& cfg);

/// Branch-norm vs bifurcation-parameter diagram from a `bifurcate` CSV;
/// collapsed rows are left out of the point set.
void emit_bifurcation_diagram(const std::filesystem::path& csv_in,
                              const std::filesystem::path& svg_out);

/// log-log measure sweep: Monte Carlo points with the analytic shell bound.
void emit_measure_diagram(const std::filesystem::path& csv_in,
                          const std::filesystem::path& svg_out);

}  // namespace torspec::harness

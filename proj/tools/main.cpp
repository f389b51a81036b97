// Command-line front end: every subcommand maps its flags onto the harness
// key-value configuration, with --config supplying defaults.
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "torspec/harness.hpp"

namespace {

using torspec::harness::ExperimentConfig;

struct FlagSpec {
  std::string key;
  std::string description;
};

/// Register string-typed options that land in the kv map only when given.
void add_kv_options(CLI::App* cmd, std::vector<std::pair<std::string, std::string>>& sink,
                    const std::vector<FlagSpec>& flags) {
  for (const auto& f : flags) {
    const std::string name = "--" + f.key;
    cmd->add_option_function<std::string>(
        name, [&sink, key = f.key](const std::string& v) { sink.emplace_back(key, v); },
        f.description);
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"spectral solver for nonlinear elliptic problems on tori"};
  app.require_subcommand(1);
  app.fallthrough();  // global flags may follow the subcommand

  std::string config_path;
  std::string out_dir = ".";
  std::string seed;
  bool verbose = false;
  app.add_option("--config", config_path, "configuration file (key = value lines)");
  app.add_option("--out-dir", out_dir, "directory for relative output paths");
  app.add_option("--seed", seed, "random seed (overrides the config file)");
  app.add_flag("--verbose", verbose, "chattier stderr logging");

  std::vector<std::pair<std::string, std::string>> overrides;
  bool verify_flag = false;

  CLI::App* solve = app.add_subcommand("solve", "nonresonant fixed point solve");
  add_kv_options(solve, overrides,
                 {{"dim", "spatial dimension"},
                  {"nu", "comma list of stiffness parameters"},
                  {"m", "mass parameter"},
                  {"omega", "forcing frequencies (switches to the evolution problem)"},
                  {"f", "nonlinearity expression"},
                  {"epsilon", "perturbation size"},
                  {"radius", "contraction ball radius"},
                  {"rho", "analyticity width"},
                  {"r", "regularity exponent"},
                  {"cutoff", "modes per axis"},
                  {"theta-cutoff", "frequency modes per axis"},
                  {"tol", "residual tolerance"},
                  {"out", "solution field file"},
                  {"report", "CSV report path"}});

  CLI::App* evolution = app.add_subcommand("evolution", "quasi-periodic response solve");
  add_kv_options(evolution, overrides,
                 {{"dim", "spatial dimension"},
                  {"nu", "comma list of stiffness parameters"},
                  {"m", "mass parameter"},
                  {"omega", "forcing frequencies"},
                  {"f", "nonlinearity expression"},
                  {"epsilon", "perturbation size"},
                  {"radius", "contraction ball radius"},
                  {"rho", "analyticity width"},
                  {"r", "regularity exponent"},
                  {"cutoff", "spatial modes per axis"},
                  {"theta-cutoff", "frequency modes per axis"},
                  {"tol", "residual tolerance"},
                  {"out", "solution field file"},
                  {"report", "CSV report path"}});

  CLI::App* scan = app.add_subcommand("scan", "resonance classification of the spectrum");
  add_kv_options(scan, overrides,
                 {{"dim", "spatial dimension"},
                  {"nu", "comma list of stiffness parameters"},
                  {"m", "mass parameter"},
                  {"omega", "forcing frequencies (optional)"},
                  {"delta", "near-zero band"},
                  {"kmax", "spatial enumeration box"},
                  {"lmax", "frequency enumeration box"},
                  {"out", "report text file"}});

  CLI::App* bifurcate = app.add_subcommand("bifurcate", "resonant branch computation");
  add_kv_options(bifurcate, overrides,
                 {{"dim", "spatial dimension (1 or 2)"},
                  {"nu", "comma list of stiffness parameters"},
                  {"m0", "resonant mass"},
                  {"eps-range", "comma list of m - m0 values"},
                  {"phase", "translation phases (d entries)"},
                  {"cutoff", "modes per axis"},
                  {"r", "regularity exponent"},
                  {"tol", "Newton tolerance"},
                  {"out-csv", "branch CSV path"}});
  bifurcate->add_flag("--verify", verify_flag, "run the expansion oracle and print its report");

  CLI::App* measure = app.add_subcommand("measure-sweep", "excluded-set measure estimates");
  add_kv_options(measure, overrides,
                 {{"dim", "parameter dimension"},
                  {"m", "mass parameter"},
                  {"delta-list", "comma list of delta values"},
                  {"kmax", "enumeration box"},
                  {"samples", "Monte Carlo samples"},
                  {"out-csv", "sweep CSV path"}});

  CLI::App* cm = app.add_subcommand("center-manifold", "quadratic jet of the invariant graph");
  add_kv_options(cm, overrides,
                 {{"dim", "spatial dimension"},
                  {"nu", "comma list of stiffness parameters"},
                  {"m", "mass parameter"},
                  {"omega", "forcing frequencies"},
                  {"f", "forcing expression (may use u and first derivatives)"},
                  {"epsilon", "perturbation size"},
                  {"rho", "analyticity width"},
                  {"r", "regularity exponent"},
                  {"cutoff", "spatial modes per axis"},
                  {"theta-modes", "frequency modes per axis"},
                  {"quad-tail", "Duhamel quadrature tail tolerance"},
                  {"cutoff-radius", "prepared-equation plateau radius"},
                  {"slow-threshold", "widen the center block up to this rate"},
                  {"jet-out", "jet coefficient file"},
                  {"ode-out", "reduced trajectory CSV"},
                  {"ode-t-end", "trajectory length"},
                  {"ode-dt", "trajectory step"},
                  {"ode-z0", "initial center amplitude"},
                  {"residual-report", "invariance residual CSV"},
                  {"residual-radii", "comma list of sampling radii"},
                  {"residual-samples", "samples per radius"},
                  {"residual-h", "integration horizon"}});

  CLI::App* plot = app.add_subcommand("plot", "static SVG diagrams from CSV reports");
  add_kv_options(plot, overrides,
                 {{"in-csv", "input CSV"},
                  {"out-svg", "output SVG"},
                  {"kind", "bifurcation|measure"}});

  CLI11_PARSE(app, argc, argv);

  ExperimentConfig cfg;
  try {
    if (!config_path.empty()) cfg = torspec::harness::load_config_file(config_path);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return torspec::harness::kIo;
  }

  for (CLI::App* sub : {solve, evolution, scan, bifurcate, measure, cm, plot})
    if (sub->parsed()) cfg.scenario = sub->get_name();
  for (const auto& [k, v] : overrides) cfg.set(k, v);
  if (verify_flag) cfg.set("verify", "1");
  if (!seed.empty()) cfg.set("seed", seed);
  cfg.out_dir = out_dir;
  cfg.verbose = verbose;

  std::error_code ec;
  std::filesystem::create_directories(cfg.out_dir, ec);

  return torspec::harness::run(cfg);
}

#include "torspec/harness.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <sstream>

#include "torspec/algebra.hpp"
#include "torspec/bifurcation.hpp"
#include "torspec/center_manifold.hpp"
#include "torspec/io.hpp"
#include "torspec/resonance.hpp"
#include "torspec/solver.hpp"

namespace torspec::harness {

namespace {

// ---------------------------------------------------------------------------
// Typed config access with violation collection
// ---------------------------------------------------------------------------

class Reader {
 public:
  explicit Reader(const ExperimentConfig& cfg) : cfg_(cfg) {}

  std::string require_string(const std::string& key) {
    auto it = cfg_.kv.find(key);
    if (it == cfg_.kv.end()) {
      problems_.push_back("missing required key '" + key + "'");
      return {};
    }
    return it->second;
  }

  double require_double(const std::string& key) {
    const std::string s = require_string(key);
    if (s.empty()) return 0.0;
    return parse_double(key, s);
  }

  int require_int(const std::string& key) { return static_cast<int>(require_double(key)); }

  std::vector<double> require_vector(const std::string& key, int expected_len = -1) {
    const std::string s = require_string(key);
    if (s.empty()) return {};
    auto v = parse_vector(key, s);
    if (expected_len >= 0 && static_cast<int>(v.size()) != expected_len)
      problems_.push_back("key '" + key + "' needs " + std::to_string(expected_len) +
                          " comma-separated entries, got " + std::to_string(v.size()));
    return v;
  }

  double get_double(const std::string& key, double fallback) {
    auto it = cfg_.kv.find(key);
    return it == cfg_.kv.end() ? fallback : parse_double(key, it->second);
  }

  int get_int(const std::string& key, int fallback) {
    return static_cast<int>(get_double(key, fallback));
  }

  std::string get_string(const std::string& key, const std::string& fallback) {
    auto it = cfg_.kv.find(key);
    return it == cfg_.kv.end() ? fallback : it->second;
  }

  std::vector<double> get_vector(const std::string& key) {
    auto it = cfg_.kv.find(key);
    return it == cfg_.kv.end() ? std::vector<double>{} : parse_vector(key, it->second);
  }

  bool get_flag(const std::string& key) {
    auto it = cfg_.kv.find(key);
    return it != cfg_.kv.end() && it->second != "0" && it->second != "false";
  }

  std::uint64_t seed() { return static_cast<std::uint64_t>(get_double("seed", 0.0)); }

  void constraint(bool ok, const std::string& message) {
    if (!ok) problems_.push_back(message);
  }

  void finish() const {
    if (problems_.empty()) return;
    std::string msg = "configuration invalid:";
    for (const auto& p : problems_) msg += "\n  - " + p;
    throw ValidationError(msg);
  }

 private:
  double parse_double(const std::string& key, const std::string& s) {
    try {
      std::size_t used = 0;
      const double v = std::stod(s, &used);
      if (used != s.size()) throw std::invalid_argument(s);
      return v;
    } catch (...) {
      problems_.push_back("key '" + key + "' is not a number: '" + s + "'");
      return 0.0;
    }
  }

  std::vector<double> parse_vector(const std::string& key, const std::string& s) {
    std::vector<double> out;
    std::istringstream is(s);
    std::string piece;
    while (std::getline(is, piece, ',')) out.push_back(parse_double(key, piece));
    return out;
  }

  const ExperimentConfig& cfg_;
  std::vector<std::string> problems_;
};

std::filesystem::path resolve(const ExperimentConfig& cfg, const std::string& path) {
  const std::filesystem::path p(path);
  return p.is_absolute() ? p : cfg.out_dir / p;
}

std::vector<std::string> config_comments(const ExperimentConfig& cfg) {
  std::vector<std::string> out{"scenario = " + cfg.scenario};
  for (const auto& [k, v] : cfg.kv) out.push_back(k + " = " + v);
  return out;
}

std::string join_flags(const std::vector<std::string>& flags) {
  if (flags.empty()) return "ok";
  std::string s;
  for (const auto& f : flags) s += (s.empty() ? "" : "|") + f;
  return s;
}

// ---------------------------------------------------------------------------
// Scenarios
// ---------------------------------------------------------------------------

int run_solve(const ExperimentConfig& cfg, bool force_evolution) {
  Reader rd(cfg);
  const int dim = rd.require_int("dim");
  const std::vector<double> nu = rd.require_vector("nu", dim);
  const double m = rd.require_double("m");
  const std::string f_text = rd.require_string("f");
  const double epsilon = rd.require_double("epsilon");
  const double radius = rd.get_double("radius", 1.0);
  const double rho = rd.get_double("rho", 0.0);
  const double r = rd.require_double("r");
  const int cutoff = rd.get_int("cutoff", 32);
  const double tol = rd.get_double("tol", 1e-12);
  const int theta_cutoff = rd.get_int("theta-cutoff", 8);
  const std::vector<double> omega = rd.get_vector("omega");
  const bool evolution = force_evolution || !omega.empty();
  rd.constraint(dim >= 1, "dim must be >= 1");
  rd.constraint(!(force_evolution && omega.empty()), "evolution runs need a nonempty omega");
  rd.constraint(epsilon >= 0.0, "epsilon must be >= 0");
  rd.constraint(radius > 0.0, "radius must be > 0");
  rd.constraint(r - 2.0 > 0.5 * dim, "needs r - 2 > dim/2");
  rd.constraint(cutoff >= 0, "cutoff must be >= 0");
  rd.finish();

  SolveConfig scfg;
  scfg.epsilon = epsilon;
  scfg.ball_radius = radius;
  scfg.tol = tol;
  scfg.space = SpaceParams{rho, r};
  scfg.seed = rd.seed();

  SolveResult res;
  if (evolution) {
    const EvolutionOperatorSpec spec{omega, nu, m};
    const FunctionSpec f = FunctionSpec::parse(f_text, spec.freq_dim(), dim);
    res = solve_evolution(spec, f, theta_cutoff, cutoff, scfg);
  } else {
    const EllipticOperatorSpec spec{nu, m};
    const FunctionSpec f = FunctionSpec::parse(f_text, 0, dim);
    res = solve_elliptic(spec, f, cutoff, scfg);
  }

  std::cout << (evolution ? "evolution" : "solve") << ": converged in " << res.iterations
            << " iterations, residual = " << fmt17(res.residual)
            << ", contraction = " << fmt17(res.contraction_estimate)
            << ", epsilon_star = " << fmt17(res.epsilon_star) << "\n";

  if (cfg.has("out")) write_field(resolve(cfg, cfg.kv.at("out")), res.solution, scfg.space);
  if (cfg.has("report")) {
    CsvWriter csv(resolve(cfg, cfg.kv.at("report")),
                  {"scenario", "dim", "epsilon", "radius", "rho", "r", "cutoff", "tol", "seed",
                   "iterations", "residual", "contraction", "epsilon_star", "flags"},
                  config_comments(cfg));
    csv.row({evolution ? "evolution" : "solve", std::to_string(dim), fmt17(epsilon), fmt17(radius),
             fmt17(rho), fmt17(r), std::to_string(cutoff), fmt17(tol),
             std::to_string(rd.seed()), std::to_string(res.iterations), fmt17(res.residual),
             fmt17(res.contraction_estimate), fmt17(res.epsilon_star), join_flags(res.flags)});
  }
  return kOk;
}

int run_scan(const ExperimentConfig& cfg) {
  Reader rd(cfg);
  const int dim = rd.require_int("dim");
  const std::vector<double> nu = rd.require_vector("nu", dim);
  const double m = rd.require_double("m");
  const double delta = rd.get_double("delta", 1e-9);
  const int kmax = rd.get_int("kmax", 64);
  const int lmax = rd.get_int("lmax", 16);
  const std::vector<double> omega = rd.get_vector("omega");
  rd.constraint(delta >= 0.0, "delta must be >= 0");
  rd.finish();

  ResonanceReport rep;
  if (omega.empty())
    rep = resonance_scan(EllipticOperatorSpec{nu, m}, delta, kmax);
  else
    rep = resonance_scan(EvolutionOperatorSpec{omega, nu, m}, delta, kmax, lmax);

  const std::string text = rep.to_text();
  std::cout << text;
  if (cfg.has("out")) {
    std::ofstream out(resolve(cfg, cfg.kv.at("out")));
    if (!out) throw IoError("scan: cannot open output file");
    out << text;
  }
  return kOk;
}

int run_bifurcate(const ExperimentConfig& cfg) {
  Reader rd(cfg);
  const int dim = rd.require_int("dim");
  const std::vector<double> nu = rd.require_vector("nu", dim);
  const double m0 = rd.require_double("m0");
  const std::vector<double> eps_range = rd.get_vector("eps-range");
  std::vector<double> phase = rd.get_vector("phase");
  const int cutoff = rd.get_int("cutoff", 32);
  const double tol = rd.get_double("tol", 1e-12);
  const double r = rd.get_double("r", 4.0);
  const bool verify = rd.get_flag("verify");
  rd.constraint(dim == 1 || dim == 2, "bifurcation supports dim 1 and 2 only");
  if (phase.empty()) phase.assign(static_cast<std::size_t>(std::max(dim, 1)), 0.0);
  rd.constraint(static_cast<int>(phase.size()) == dim, "phase needs dim entries");
  rd.constraint(verify || !eps_range.empty(), "need eps-range (or --verify)");
  rd.finish();

  const KernelBasis basis = kernel_basis(nu, m0, std::max(cutoff, 16));
  const BifurcationData data = bifurcation_coefficients(basis);

  if (verify) {
    const VerifyReport rep = branch_verify(basis);
    std::cout << rep.to_text();
  }

  if (!eps_range.empty()) {
    BranchConfig bcfg;
    bcfg.tol = tol;
    bcfg.space = SpaceParams{0.0, r};
    bcfg.perturb_seed = 0;

    CsvWriter csv(resolve(cfg, rd.require_string("out-csv")),
                  {"eps_m", "z1", "z2", "branch_norm", "residual", "sigma", "A", "B", "collapsed"},
                  config_comments(cfg));
    for (const double eps_m : eps_range) {
      bool collapsed;
      double z1 = 0.0, z2 = 0.0, bnorm = 0.0, resid = 0.0;
      try {
        const BranchResult res = branch_solve(basis, eps_m, phase, cutoff, bcfg);
        collapsed = res.collapsed_to_zero;
        z1 = res.z[0];
        z2 = res.z.size() > 1 ? res.z[1] : 0.0;
        bnorm = norm(res.v, {0.0, 0.0});
        resid = res.residual;
      } catch (const SolverError&) {
        collapsed = true;  // no branch reachable on this side
      }
      csv.row({fmt17(eps_m), fmt17(z1), fmt17(z2), fmt17(bnorm), fmt17(resid),
               std::to_string(data.sigma),
               fmt17(dim == 1 ? data.m_scalar : data.A), fmt17(dim == 1 ? 0.0 : data.B),
               collapsed ? "1" : "0"});
      std::cout << "bifurcate: eps_m = " << fmt17(eps_m)
                << (collapsed ? " collapsed to zero" : " branch found, |v|_L2 = " + fmt17(bnorm))
                << "\n";
    }
  }
  return kOk;
}

int run_measure_sweep(const ExperimentConfig& cfg) {
  Reader rd(cfg);
  const int dim = rd.require_int("dim");
  const double m = rd.require_double("m");
  const std::vector<double> deltas = rd.require_vector("delta-list");
  const int kmax = rd.get_int("kmax", 64);
  const int samples = rd.get_int("samples", 100000);
  rd.constraint(dim >= 1, "dim must be >= 1");
  rd.constraint(samples > 0, "samples must be > 0");
  for (double d : deltas) rd.constraint(d >= 0.0, "delta values must be >= 0");
  rd.finish();

  CsvWriter csv(resolve(cfg, rd.require_string("out-csv")),
                {"delta", "analytic_bound", "mc_estimate", "mc_stderr", "seed"},
                config_comments(cfg));
  for (const double delta : deltas) {
    const MeasureEstimate est = excluded_measure_estimate(dim, m, delta, kmax, samples, rd.seed());
    csv.row({fmt17(delta), fmt17(est.analytic_bound), fmt17(est.mc_estimate),
             fmt17(est.mc_stderr), std::to_string(est.seed)});
    std::cout << "measure-sweep: delta = " << fmt17(delta) << " mc = " << fmt17(est.mc_estimate)
              << " bound = " << fmt17(est.analytic_bound) << "\n";
  }
  return kOk;
}

int run_center_manifold(const ExperimentConfig& cfg) {
  Reader rd(cfg);
  CmSetup setup;
  const int dim = rd.require_int("dim");
  setup.op.nu = rd.require_vector("nu", dim);
  setup.op.m = rd.require_double("m");
  setup.omega = rd.require_vector("omega");
  const std::string f_text = rd.require_string("f");
  setup.epsilon = rd.require_double("epsilon");
  setup.cutoff = rd.get_int("cutoff", 16);
  setup.theta_cutoff = rd.get_int("theta-modes", 8);
  setup.space = SpaceParams{rd.get_double("rho", 0.0), rd.get_double("r", 3.0)};
  setup.quad.tail_tol = rd.get_double("quad-tail", 1e-12);
  setup.cutoff_radius = rd.get_double("cutoff-radius", 1.0);
  setup.policy.slow_threshold = rd.get_double("slow-threshold", 0.0);
  rd.constraint(!setup.omega.empty(), "omega must be nonempty");
  rd.constraint(setup.epsilon >= 0.0, "epsilon must be >= 0");
  rd.finish();
  setup.f = FunctionSpec::parse(f_text, static_cast<int>(setup.omega.size()), dim);

  const JetResult res = compute_jet(setup);
  std::cout << "center-manifold: center dimension " << res.split.center_dim() << ", rates beta1 = "
            << fmt17(res.split.beta1) << ", beta2 = " << fmt17(res.split.beta2)
            << ", jet fixed point in " << res.iterations
            << " updates, contraction = " << fmt17(res.contraction)
            << ", sup = " << fmt17(res.jet.sup()) << "\n";

  if (cfg.has("jet-out")) {
    const auto path = resolve(cfg, cfg.kv.at("jet-out"));
    std::ofstream out(path);
    if (!out) throw IoError("center-manifold: cannot open " + path.string());
    out << "torspec-jet n_center=" << res.jet.n_center << " n_hyper=" << res.jet.n_hyper
        << " freq_dim=" << res.jet.freq_dim << " theta_cutoff=" << res.jet.theta_cutoff << "\n";
    auto dump_entry = [&](const char* tag, const EigenModeEntry& e, std::size_t idx) {
      out << tag << " " << idx;
      for (int c : e.k) out << " " << c;
      out << " " << e.lambda_sign << "\n";
    };
    std::size_t h = 0;
    for (const auto& e : res.split.stable) dump_entry("hyper", e, h++);
    for (const auto& e : res.split.unstable) dump_entry("hyper", e, h++);
    for (std::size_t j = 0; j < res.split.center.size(); ++j)
      dump_entry("center", res.split.center[j], j);
    for (int hh = 0; hh < res.jet.n_hyper; ++hh)
      for (int lf = 0; lf < res.jet.theta_modes(); ++lf)
        for (int mm = 0; mm < res.jet.monomials(); ++mm) {
          const Complex c = res.jet.coef[res.jet.index(hh, lf, mm)];
          out << "coef " << hh << " " << lf << " " << mm << " " << fmt17(c.real()) << " "
              << fmt17(c.imag()) << "\n";
        }
  }

  if (cfg.has("ode-out")) {
    const double t_end = rd.get_double("ode-t-end", 10.0);
    const double dt = rd.get_double("ode-dt", 0.01);
    const double amp = rd.get_double("ode-z0", 0.1);
    const std::vector<Complex> z0 = random_center_point(res.split, amp, rd.seed() + 1);
    std::vector<double> theta0(setup.omega.size(), 0.0);
    const auto traj =
        reduced_ode_trajectory(theta0, z0, t_end, dt, res.jet, res.split, setup);
    std::vector<std::string> header{"t"};
    for (int j = 0; j < res.split.center_dim(); ++j) {
      header.push_back("z" + std::to_string(j + 1) + "_re");
      header.push_back("z" + std::to_string(j + 1) + "_im");
    }
    CsvWriter csv(resolve(cfg, cfg.kv.at("ode-out")), header, config_comments(cfg));
    for (const auto& pt : traj) {
      std::vector<std::string> cells{fmt17(pt.t)};
      for (const Complex& z : pt.zeta) {
        cells.push_back(fmt17(z.real()));
        cells.push_back(fmt17(z.imag()));
      }
      csv.row(cells);
    }
  }

  if (cfg.has("residual-report")) {
    std::vector<double> radii = rd.get_vector("residual-radii");
    if (radii.empty()) radii = {0.05, 0.1, 0.2};
    const int samples = rd.get_int("residual-samples", 4);
    const double h = rd.get_double("residual-h", 0.05);
    CsvWriter csv(resolve(cfg, cfg.kv.at("residual-report")),
                  {"radius", "residual", "samples", "h", "seed"}, config_comments(cfg));
    for (const double radius : radii) {
      const double v =
          invariance_residual(res.jet, res.split, setup, radius, samples, h, rd.seed());
      csv.row({fmt17(radius), fmt17(v), std::to_string(samples), fmt17(h),
               std::to_string(rd.seed())});
      std::cout << "center-manifold: radius = " << fmt17(radius) << " invariance residual = "
                << fmt17(v) << "\n";
    }
  }
  return kOk;
}

int run_plot(const ExperimentConfig& cfg) {
  Reader rd(cfg);
  const std::string in = rd.require_string("in-csv");
  const std::string out = rd.require_string("out-svg");
  const std::string kind = rd.get_string("kind", "bifurcation");
  rd.constraint(kind == "bifurcation" || kind == "measure", "kind must be bifurcation|measure");
  rd.finish();
  if (kind == "bifurcation")
    emit_bifurcation_diagram(resolve(cfg, in), resolve(cfg, out));
  else
    emit_measure_diagram(resolve(cfg, in), resolve(cfg, out));
  std::cout << "plot: wrote " << resolve(cfg, out).string() << "\n";
  return kOk;
}

}  // namespace

ExperimentConfig load_config_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("config: cannot open " + path.string());
  ExperimentConfig cfg;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto first = line.find_first_not_of(" \t");
    if (first == std::string::npos || line[first] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ValidationError("config: line " + std::to_string(lineno) + " is not 'key = value'");
    auto trim = [](std::string s) {
      const auto a = s.find_first_not_of(" \t");
      const auto b = s.find_last_not_of(" \t\r");
      return a == std::string::npos ? std::string{} : s.substr(a, b - a + 1);
    };
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key == "scenario")
      cfg.scenario = value;
    else
      cfg.kv[key] = value;
  }
  return cfg;
}

int run(const ExperimentConfig& cfg) {
  try {
    if (cfg.scenario == "solve") return run_solve(cfg, false);
    if (cfg.scenario == "evolution") return run_solve(cfg, true);
    if (cfg.scenario == "scan") return run_scan(cfg);
    if (cfg.scenario == "bifurcate") return run_bifurcate(cfg);
    if (cfg.scenario == "measure-sweep") return run_measure_sweep(cfg);
    if (cfg.scenario == "center-manifold") return run_center_manifold(cfg);
    if (cfg.scenario == "plot") return run_plot(cfg);
    throw ValidationError("unknown scenario '" + cfg.scenario +
                          "' (expected solve|evolution|scan|bifurcate|measure-sweep|"
                          "center-manifold|plot)");
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kValidation;
  } catch (const expr::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kValidation;
  } catch (const SolverError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return (e.code == SolverError::Code::Resonant || e.code == SolverError::Code::Misroute)
               ? kMisroute
               : kDivergence;
  } catch (const AssumptionError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kMisroute;
  } catch (const BranchSignError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kValidation;
  } catch (const DegenerateEigenvalueError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kMisroute;
  } catch (const DomainError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kDivergence;
  } catch (const ZeroDivisorError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kMisroute;
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kIo;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kIo;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kValidation;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kDivergence;
  }
}

// ---------------------------------------------------------------------------
// SVG output
// ---------------------------------------------------------------------------

namespace {

struct SvgCanvas {
  static constexpr double kWidth = 720, kHeight = 480;
  static constexpr double kLeft = 80, kRight = 30, kTop = 30, kBottom = 60;
  double x0 = 0, x1 = 1, y0 = 0, y1 = 1;
  std::ostringstream body;

  double px(double x) const {
    return kLeft + (x - x0) / (x1 - x0) * (kWidth - kLeft - kRight);
  }
  double py(double y) const {
    return kHeight - kBottom - (y - y0) / (y1 - y0) * (kHeight - kTop - kBottom);
  }

  void set_ranges(double ax, double bx, double ay, double by) {
    const double padx = (bx - ax) * 0.08 + 1e-300;
    const double pady = (by - ay) * 0.08 + 1e-300;
    x0 = ax - padx;
    x1 = bx + padx;
    y0 = ay - pady;
    y1 = by + pady;
    if (x0 == x1) {
      x0 -= 1;
      x1 += 1;
    }
    if (y0 == y1) {
      y0 -= 1;
      y1 += 1;
    }
  }

  void circle(double x, double y, const char* color) {
    body << "<circle cx=\"" << px(x) << "\" cy=\"" << py(y) << "\" r=\"3.5\" fill=\"" << color
         << "\"/>\n";
  }

  void line_raw(double ax, double ay, double bx, double by, const char* style) {
    body << "<line x1=\"" << ax << "\" y1=\"" << ay << "\" x2=\"" << bx << "\" y2=\"" << by
         << "\" " << style << "/>\n";
  }

  void text(double x, double y, const std::string& s, const char* anchor = "middle") {
    body << "<text x=\"" << x << "\" y=\"" << y << "\" font-size=\"13\" font-family=\"monospace\""
         << " text-anchor=\"" << anchor << "\">" << s << "</text>\n";
  }

  void axes(const std::string& xlabel, const std::string& ylabel) {
    const char* style = "stroke=\"black\" stroke-width=\"1\"";
    line_raw(kLeft, kHeight - kBottom, kWidth - kRight, kHeight - kBottom, style);
    line_raw(kLeft, kTop, kLeft, kHeight - kBottom, style);
    for (int i = 0; i <= 4; ++i) {
      const double fx = x0 + (x1 - x0) * i / 4.0;
      const double fy = y0 + (y1 - y0) * i / 4.0;
      char buf[32];
      std::snprintf(buf, sizeof(buf), "%.3g", fx);
      text(px(fx), kHeight - kBottom + 20, buf);
      std::snprintf(buf, sizeof(buf), "%.3g", fy);
      text(kLeft - 10, py(fy) + 4, buf, "end");
      line_raw(px(fx), kHeight - kBottom, px(fx), kHeight - kBottom + 4, style);
      line_raw(kLeft - 4, py(fy), kLeft, py(fy), style);
    }
    text((kLeft + kWidth - kRight) / 2, kHeight - 18, xlabel);
    body << "<text x=\"18\" y=\"" << (kTop + kHeight - kBottom) / 2
         << "\" font-size=\"13\" font-family=\"monospace\" text-anchor=\"middle\""
         << " transform=\"rotate(-90 18 " << (kTop + kHeight - kBottom) / 2 << ")\">" << ylabel
         << "</text>\n";
  }

  void save(const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw IoError("svg: cannot open " + path.string());
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\""
        << kHeight << "\" viewBox=\"0 0 " << kWidth << " " << kHeight << "\">\n"
        << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
        << body.str() << "</svg>\n";
  }
};

double cell_as_double(const std::string& s) {
  try {
    return std::stod(s);
  } catch (...) {
    throw IoError("plot: malformed numeric cell '" + s + "'");
  }
}

int column_index(const CsvTable& table, const std::string& name) {
  for (std::size_t i = 0; i < table.header.size(); ++i)
    if (table.header[i] == name) return static_cast<int>(i);
  throw IoError("plot: column '" + name + "' not found");
}

}  // namespace

void emit_bifurcation_diagram(const std::filesystem::path& csv_in,
                              const std::filesystem::path& svg_out) {
  const CsvTable table = read_csv(csv_in);
  SvgCanvas canvas;
  if (table.rows.empty()) {
    canvas.set_ranges(0, 1, 0, 1);
    canvas.axes("m - m0", "|v|_L2");
    canvas.text(360, 240, "no branch data");
    canvas.save(svg_out);
    return;
  }
  const int c_eps = column_index(table, "eps_m");
  const int c_norm = column_index(table, "branch_norm");
  const int c_sigma = column_index(table, "sigma");
  const int c_collapsed = column_index(table, "collapsed");

  std::vector<std::pair<double, double>> pts;
  double max_x = 0, min_x = 0, max_y = 0;
  int sigma = 0;
  for (const auto& row : table.rows) {
    sigma = static_cast<int>(cell_as_double(row[static_cast<std::size_t>(c_sigma)]));
    const double eps = cell_as_double(row[static_cast<std::size_t>(c_eps)]);
    min_x = std::min(min_x, eps);
    max_x = std::max(max_x, eps);
    if (row[static_cast<std::size_t>(c_collapsed)] == "1") continue;
    const double bn = cell_as_double(row[static_cast<std::size_t>(c_norm)]);
    pts.emplace_back(eps, bn);
    max_y = std::max(max_y, bn);
  }
  canvas.set_ranges(min_x, max_x, 0.0, max_y > 0 ? max_y : 1.0);
  canvas.axes("m - m0", "|v|_L2");
  for (const auto& [x, y] : pts) canvas.circle(x, y, "#1f5fbf");
  canvas.text(360, 20, sigma > 0 ? "branches on the m - m0 > 0 side (sigma = +1)"
                                 : "branches on the m - m0 < 0 side (sigma = -1)");
  canvas.save(svg_out);
}

void emit_measure_diagram(const std::filesystem::path& csv_in,
                          const std::filesystem::path& svg_out) {
  const CsvTable table = read_csv(csv_in);
  SvgCanvas canvas;
  if (table.rows.empty()) {
    canvas.set_ranges(0, 1, 0, 1);
    canvas.axes("log10 delta", "log10 measure");
    canvas.text(360, 240, "no sweep data");
    canvas.save(svg_out);
    return;
  }
  const int c_delta = column_index(table, "delta");
  const int c_bound = column_index(table, "analytic_bound");
  const int c_mc = column_index(table, "mc_estimate");
  double lo = 1e300, hi = -1e300, ylo = 1e300, yhi = -1e300;
  std::vector<std::array<double, 3>> pts;
  for (const auto& row : table.rows) {
    const double d = cell_as_double(row[static_cast<std::size_t>(c_delta)]);
    const double b = cell_as_double(row[static_cast<std::size_t>(c_bound)]);
    const double mc = cell_as_double(row[static_cast<std::size_t>(c_mc)]);
    if (d <= 0 || mc <= 0) continue;
    const double lx = std::log10(d);
    pts.push_back({lx, std::log10(mc), b > 0 ? std::log10(b) : -300.0});
    lo = std::min(lo, lx);
    hi = std::max(hi, lx);
    ylo = std::min({ylo, pts.back()[1], pts.back()[2]});
    yhi = std::max({yhi, pts.back()[1], pts.back()[2]});
  }
  if (pts.empty()) {
    canvas.set_ranges(0, 1, 0, 1);
    canvas.axes("log10 delta", "log10 measure");
    canvas.text(360, 240, "no positive data");
    canvas.save(svg_out);
    return;
  }
  canvas.set_ranges(lo, hi, ylo, yhi);
  canvas.axes("log10 delta", "log10 measure");
  for (const auto& p : pts) {
    canvas.circle(p[0], p[1], "#1f5fbf");
    canvas.circle(p[0], p[2], "#bf3f1f");
  }
  canvas.text(360, 20, "blue: Monte Carlo, red: shell bound");
  canvas.save(svg_out);
}

}  // namespace torspec::harness

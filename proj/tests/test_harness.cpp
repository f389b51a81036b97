#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "torspec/harness.hpp"
#include "torspec/io.hpp"

using namespace torspec;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "torspec_tests" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  REQUIRE(in.good());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

harness::ExperimentConfig base_solve_config(const fs::path& dir) {
  harness::ExperimentConfig cfg;
  cfg.scenario = "solve";
  cfg.out_dir = dir;
  cfg.kv = {{"dim", "1"},     {"nu", "1.3"},      {"m", "1"},   {"f", "u^2 + cos(x1)"},
            {"epsilon", "0.01"}, {"radius", "0.5"}, {"r", "4"},   {"cutoff", "16"},
            {"tol", "1e-12"},    {"seed", "5"},     {"out", "u.field"}, {"report", "run.csv"}};
  return cfg;
}

}  // namespace

TEST_CASE("field files: exact decimal round trip") {
  const fs::path dir = fresh_dir("field_io");
  const SpectralField u = random_field(2, 5, 42u);
  const SpaceParams p{0.25, 3.5};
  write_field(dir / "u.field", u, p);
  const FieldFile back = read_field(dir / "u.field");
  CHECK(back.space.rho == p.rho);
  CHECK(back.space.r == p.r);
  CHECK(back.field.is_real() == u.is_real());
  REQUIRE(back.field.size() == u.size());
  for (std::size_t i = 0; i < u.size(); ++i) CHECK(back.field[i] == u[i]);  // bitwise

  CHECK_THROWS_AS((void)read_field(dir / "missing.field"), IoError);
  std::ofstream(dir / "bad.field") << "not a field\n";
  CHECK_THROWS_AS((void)read_field(dir / "bad.field"), IoError);
}

TEST_CASE("csv: header once, append rows, comment passthrough") {
  const fs::path dir = fresh_dir("csv");
  const fs::path p = dir / "t.csv";
  {
    CsvWriter w(p, {"a", "b"}, {"note = hello"});
    w.row({"1", "2"});
  }
  {
    CsvWriter w(p, {"a", "b"});  // reopening must not duplicate the header
    w.row({"3", "4"});
    CHECK_THROWS_AS(w.row({"only-one"}), IoError);
  }
  const CsvTable t = read_csv(p);
  CHECK(t.header == std::vector<std::string>{"a", "b"});
  REQUIRE(t.rows.size() == 2);
  CHECK(t.rows[1][1] == "4");
  CHECK(slurp(p).find("# note = hello") == 0);
}

TEST_CASE("run: empty config enumerates every violated constraint") {
  harness::ExperimentConfig cfg;
  cfg.scenario = "solve";
  cfg.out_dir = fresh_dir("empty");
  CHECK(harness::run(cfg) == harness::kValidation);
}

TEST_CASE("run: unknown scenario is a validation error") {
  harness::ExperimentConfig cfg;
  cfg.scenario = "frobnicate";
  CHECK(harness::run(cfg) == harness::kValidation);
}

TEST_CASE("run: the nonresonant demo writes a solution and one report row") {
  const fs::path dir = fresh_dir("solve_demo");
  const harness::ExperimentConfig cfg = base_solve_config(dir);
  CHECK(harness::run(cfg) == harness::kOk);

  const FieldFile sol = read_field(dir / "u.field");
  CHECK(sol.field.space_axes() == 1);
  const CsvTable rep = read_csv(dir / "run.csv");
  REQUIRE(rep.rows.size() == 1);
  CHECK(std::stod(rep.rows[0][10]) < 1e-10);  // residual column
}

TEST_CASE("run: determinism - identical (config, seed) gives byte-identical reports") {
  const fs::path dir1 = fresh_dir("det1");
  const fs::path dir2 = fresh_dir("det2");

  harness::ExperimentConfig sweep;
  sweep.scenario = "measure-sweep";
  sweep.kv = {{"dim", "2"},     {"m", "2.5"},      {"delta-list", "1e-1,3e-2,1e-2"},
              {"kmax", "8"},    {"samples", "20000"}, {"seed", "11"},
              {"out-csv", "sweep.csv"}};
  sweep.out_dir = dir1;
  CHECK(harness::run(sweep) == harness::kOk);
  sweep.out_dir = dir2;
  CHECK(harness::run(sweep) == harness::kOk);
  CHECK(slurp(dir1 / "sweep.csv") == slurp(dir2 / "sweep.csv"));

  harness::ExperimentConfig solve = base_solve_config(dir1);
  solve.kv["report"] = "solve.csv";
  CHECK(harness::run(solve) == harness::kOk);
  harness::ExperimentConfig solve2 = base_solve_config(dir2);
  solve2.kv["report"] = "solve.csv";
  CHECK(harness::run(solve2) == harness::kOk);
  CHECK(slurp(dir1 / "solve.csv") == slurp(dir2 / "solve.csv"));
  CHECK(slurp(dir1 / "u.field") == slurp(dir2 / "u.field"));
}

TEST_CASE("run: misroute exit code for a resonant evolution instance") {
  harness::ExperimentConfig cfg;
  cfg.scenario = "evolution";
  cfg.out_dir = fresh_dir("misroute");
  cfg.kv = {{"dim", "1"}, {"nu", "1.3"},      {"m", "1"},       {"omega", "1"},
            {"f", "u^2"}, {"epsilon", "0.01"}, {"r", "4"},       {"cutoff", "8"},
            {"theta-cutoff", "8"}};
  CHECK(harness::run(cfg) == harness::kMisroute);
}

TEST_CASE("run: bifurcate sweep then diagram, one-sided points only") {
  const fs::path dir = fresh_dir("bif");
  harness::ExperimentConfig cfg;
  cfg.scenario = "bifurcate";
  cfg.out_dir = dir;
  cfg.kv = {{"dim", "1"},
            {"nu", "1"},
            {"m0", "1"},
            {"eps-range", "1e-3,3e-4,-3e-4"},
            {"cutoff", "16"},
            {"out-csv", "branch.csv"}};
  CHECK(harness::run(cfg) == harness::kOk);

  const CsvTable t = read_csv(dir / "branch.csv");
  REQUIRE(t.rows.size() == 3);
  int live = 0, collapsed = 0;
  for (const auto& row : t.rows) {
    const double eps = std::stod(row[0]);
    if (row[8] == "1") {
      ++collapsed;
      CHECK(eps < 0.0);  // only the empty side collapses
    } else {
      ++live;
      CHECK(eps > 0.0);
    }
  }
  CHECK(live == 2);
  CHECK(collapsed == 1);

  harness::emit_bifurcation_diagram(dir / "branch.csv", dir / "branch.svg");
  const std::string svg = slurp(dir / "branch.svg");
  CHECK(svg.find("<svg") == 0);
  // Two live points drawn, the collapsed row skipped.
  std::size_t circles = 0;
  for (std::size_t pos = svg.find("<circle"); pos != std::string::npos;
       pos = svg.find("<circle", pos + 1))
    ++circles;
  CHECK(circles == 2);
  CHECK(svg.find("sigma = +1") != std::string::npos);
}

TEST_CASE("plot: empty CSV still produces valid axes") {
  const fs::path dir = fresh_dir("plot_empty");
  {
    CsvWriter w(dir / "empty.csv",
                {"eps_m", "z1", "z2", "branch_norm", "residual", "sigma", "A", "B", "collapsed"});
  }
  harness::emit_bifurcation_diagram(dir / "empty.csv", dir / "empty.svg");
  const std::string svg = slurp(dir / "empty.svg");
  CHECK(svg.find("<svg") == 0);
  CHECK(svg.find("no branch data") != std::string::npos);
}

TEST_CASE("config files: key-value parsing with overrides") {
  const fs::path dir = fresh_dir("cfg");
  std::ofstream(dir / "run.conf") << "# demo configuration\n"
                                  << "scenario = scan\n"
                                  << "dim = 1\n"
                                  << "nu = 1.37\n"
                                  << "m = 1\n"
                                  << "kmax = 16\n";
  harness::ExperimentConfig cfg = harness::load_config_file(dir / "run.conf");
  CHECK(cfg.scenario == "scan");
  CHECK(cfg.kv.at("nu") == "1.37");
  cfg.set("kmax", "32");  // CLI-style override
  CHECK(cfg.kv.at("kmax") == "32");
  cfg.out_dir = dir;
  CHECK(harness::run(cfg) == harness::kOk);

  std::ofstream(dir / "bad.conf") << "this line has no equals sign\n";
  CHECK_THROWS_AS((void)harness::load_config_file(dir / "bad.conf"), harness::ValidationError);
}

TEST_CASE("run: scan report lands in the requested file") {
  const fs::path dir = fresh_dir("scan_out");
  harness::ExperimentConfig cfg;
  cfg.scenario = "scan";
  cfg.out_dir = dir;
  cfg.kv = {{"dim", "1"}, {"nu", "1"}, {"m", "1"}, {"kmax", "8"}, {"out", "scan.txt"}};
  CHECK(harness::run(cfg) == harness::kOk);
  const std::string text = slurp(dir / "scan.txt");
  CHECK(text.find("classification = resonant") != std::string::npos);
  CHECK(text.find("kernel_count = 2") != std::string::npos);
}

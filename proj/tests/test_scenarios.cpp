#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "evap/config.hpp"
#include "evap/scenarios.hpp"

using namespace evap;
namespace fs = std::filesystem;

namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string temp_dir(const std::string& tag) {
  const fs::path p = fs::temp_directory_path() / ("evap_test_" + tag);
  fs::remove_all(p);
  fs::create_directories(p);
  return p.string();
}

const char* kFreeSimulateConfig = R"(
[model]
type = lattice
d = 6
spacing = 1.0
potential = soft-coulomb
softening = 1.0
lambda = 0.0

[run]
scenario = simulate
N = 2
initial = slater
seed = 3

[time]
t_max = 0.2
dt = 1e-3
stride = 50
fd_substeps = 16

[weight]
theta = 0.3333333333333333
)";

}  // namespace

TEST_CASE("config parsing") {
  SECTION("well-formed file round-trips") {
    const RunConfig cfg = RunConfig::from_string(kFreeSimulateConfig);
    CHECK(cfg.d == 6);
    CHECK(cfg.N == 2);
    CHECK(cfg.lambda == 0.0);
    CHECK(cfg.scenario == "simulate");
    CHECK(cfg.stride == 50);
    CHECK_NOTHROW(cfg.validate());
  }

  SECTION("unknown keys are errors") {
    CHECK_THROWS_AS(RunConfig::from_string("[model]\nbogus = 1\n"), Error);
    CHECK_THROWS_AS(RunConfig::from_string("[nonsense]\nd = 3\n"), Error);
    CHECK_THROWS_AS(RunConfig::from_string("d = 3\n"), Error);  // outside a section
  }

  SECTION("invariants enforced") {
    RunConfig cfg = RunConfig::from_string(kFreeSimulateConfig);
    cfg.t_max = -1.0;
    CHECK_THROWS_AS(cfg.validate(), Error);
    cfg = RunConfig::from_string(kFreeSimulateConfig);
    cfg.theta = 1.5;
    CHECK_THROWS_AS(cfg.validate(), Error);
    cfg = RunConfig::from_string(kFreeSimulateConfig);
    cfg.scenario = "explode";
    CHECK_THROWS_AS(cfg.validate(), Error);
    cfg = RunConfig::from_string(kFreeSimulateConfig);
    cfg.d = 40;
    cfg.N = 20;
    CHECK_THROWS_AS(cfg.validate(), Error);  // Fock cap
  }

  SECTION("numbers and lists are parsed strictly") {
    CHECK_THROWS_AS(RunConfig::from_string("[model]\nd = 3x\n"), Error);
    CHECK_THROWS_AS(RunConfig::from_string("[model]\nlambda = twelve\n"), Error);
    const RunConfig cfg =
        RunConfig::from_string("[model]\nexternal = 0.5, -1, 2e-1\nd = 3\n");
    REQUIRE(cfg.external.size() == 3);
    CHECK(cfg.external[1] == -1.0);
  }
}

TEST_CASE("simulate scenario") {
  RunConfig cfg = RunConfig::from_string(kFreeSimulateConfig);
  cfg.out_dir = temp_dir("simulate");
  const ScenarioResult res = run_scenario(cfg);
  CHECK(res.exit_code == 0);
  CHECK(res.failures.empty());

  const std::string csv = slurp(cfg.out_dir + "/diagnostics.csv");
  SECTION("output schema is stable") {
    std::istringstream in(csv);
    std::string header;
    std::getline(in, header);
    CHECK(header ==
          "t,S_g,dSdt_fd,T1,T2,T3,trace_dist,hs_dist,K_hf,E_hf,E_exact,"
          "bound_main_rhs,bound_S_rhs,momentum_drift");
  }

  SECTION("non-interacting equivalence and Slater start") {
    std::istringstream in(csv);
    std::string line;
    std::getline(in, line);  // header
    bool first = true;
    int rows = 0;
    while (std::getline(in, line)) {
      ++rows;
      std::istringstream ls(line);
      std::string cell;
      std::vector<double> vals;
      while (std::getline(ls, cell, ',')) vals.push_back(std::stod(cell));
      REQUIRE(vals.size() == 14);
      if (first) {
        CHECK(vals[1] >= 0.0);  // S_g starts at zero from a Slater start
        CHECK(vals[1] <= 1e-12);
        first = false;
      }
      CHECK(vals[6] <= 1e-8);  // trace_dist column
    }
    CHECK(rows == 5);  // t = 0 plus 4 strides over 200 steps
  }

  SECTION("summary reports K as the K_hf maximum") {
    const ordered_json summary = ordered_json::parse(slurp(cfg.out_dir + "/summary.json"));
    double k_max = 0.0;
    std::istringstream in(csv);
    std::string line;
    std::getline(in, line);
    while (std::getline(in, line)) {
      std::istringstream ls(line);
      std::string cell;
      std::vector<double> vals;
      while (std::getline(ls, cell, ',')) vals.push_back(std::stod(cell));
      k_max = std::max(k_max, vals[8]);
    }
    CHECK(summary["K"].get<double>() == k_max);
    CHECK(summary["exit_code"].get<int>() == 0);
  }

  SECTION("plot files exist with two columns") {
    const std::string dat = slurp(cfg.out_dir + "/plots/trace_dist.dat");
    std::istringstream in(dat);
    double t = -1.0, v = -1.0;
    in >> t >> v;
    CHECK(t == 0.0);
    CHECK(v >= 0.0);
  }
}

TEST_CASE("CSV round-trips at 15 significant digits") {
  RunConfig cfg = RunConfig::from_string(kFreeSimulateConfig);
  cfg.lambda = 0.5;  // nontrivial values in every column
  cfg.initial = "perturbed";
  cfg.out_dir = temp_dir("roundtrip");
  cfg.t_max = 0.05;
  cfg.stride = 10;
  const ScenarioResult res = run_scenario(cfg);
  REQUIRE(res.exit_code == 0);

  const std::string csv = slurp(cfg.out_dir + "/diagnostics.csv");
  std::istringstream in(csv);
  std::string line;
  std::getline(in, line);
  while (std::getline(in, line)) {
    std::istringstream ls(line);
    std::string cell;
    std::vector<double> vals;
    while (std::getline(ls, cell, ',')) vals.push_back(std::stod(cell));
    // re-serialize and parse again: %.17g is lossless for doubles
    for (double v : vals) {
      char buf[40];
      std::snprintf(buf, sizeof(buf), "%.17g", v);
      CHECK(std::stod(buf) == v);
    }
  }
}

TEST_CASE("determinism: identical config and seed give identical bytes") {
  RunConfig cfg = RunConfig::from_string(kFreeSimulateConfig);
  cfg.lambda = 0.4;
  cfg.initial = "perturbed";
  cfg.t_max = 0.05;
  cfg.stride = 25;

  RunConfig a = cfg, b = cfg;
  a.out_dir = temp_dir("det_a");
  b.out_dir = temp_dir("det_b");
  REQUIRE(run_scenario(a).exit_code == 0);
  REQUIRE(run_scenario(b).exit_code == 0);
  CHECK(slurp(a.out_dir + "/diagnostics.csv") == slurp(b.out_dir + "/diagnostics.csv"));
  CHECK(slurp(a.out_dir + "/summary.json") == slurp(b.out_dir + "/summary.json"));
}

TEST_CASE("audit scenario") {
  RunConfig cfg;
  cfg.scenario = "audit";
  cfg.instances = 20;
  cfg.seed = 11;
  cfg.out_dir = temp_dir("audit1");

  const ScenarioResult res = run_scenario(cfg);
  CHECK(res.exit_code == 0);
  CHECK(res.summary["min_slack"]["evaporation_properties"].get<double>() >= -1e-10);
  CHECK(res.summary["min_slack"]["fermionic_form_bound"].get<double>() >= -1e-10);
  CHECK(res.summary["min_slack"]["weighted_state_bounds"].get<double>() >= -1e-10);
  CHECK(res.summary["max_commutation_defect"].get<double>() <= 1e-12);

  SECTION("worker count does not change the bytes") {
    RunConfig par = cfg;
    par.workers = 3;
    par.out_dir = temp_dir("audit3");
    REQUIRE(run_scenario(par).exit_code == 0);
    CHECK(slurp(cfg.out_dir + "/audit.csv") == slurp(par.out_dir + "/audit.csv"));
  }
}

TEST_CASE("fdll-check scenario") {
  RunConfig cfg;
  cfg.scenario = "fdll-check";
  cfg.out_dir = temp_dir("fdll");
  const ScenarioResult res = run_scenario(cfg);
  CHECK(res.exit_code == 0);
  CHECK(res.summary["max_coulomb_reconstruction_rel_error"].get<double>() <= 1e-6);
  CHECK(fs::exists(cfg.out_dir + "/fdll_weights.csv"));
  CHECK(fs::exists(cfg.out_dir + "/fdll_reconstruction.csv"));
}

TEST_CASE("bounds scenario") {
  RunConfig cfg;
  cfg.scenario = "bounds";
  cfg.bounds_delta0 = 0.0;
  cfg.out_dir = temp_dir("bounds");
  const ScenarioResult res = run_scenario(cfg);
  CHECK(res.exit_code == 0);
  const std::string csv = slurp(cfg.out_dir + "/bounds.csv");
  CHECK(csv.find("lambda,K,N,t,C,bound_main_rhs,bound_S_rhs,overflow") == 0);
}

TEST_CASE("Hartree-only simulate run passes its suite") {
  RunConfig cfg = RunConfig::from_string(kFreeSimulateConfig);
  cfg.lambda = 0.5;
  cfg.include_exchange = false;
  cfg.initial = "perturbed";
  cfg.t_max = 0.1;
  cfg.stride = 25;
  cfg.out_dir = temp_dir("hartree_only");
  const ScenarioResult res = run_scenario(cfg);
  CHECK(res.exit_code == 0);
  CHECK(res.summary["max_identity_residual"].get<double>() <= 1e-6);
}

TEST_CASE("config exchange flag is parsed") {
  const RunConfig cfg = RunConfig::from_string("[model]\nexchange = false\nd = 4\n");
  CHECK(!cfg.include_exchange);
  CHECK_THROWS_AS(RunConfig::from_string("[model]\nexchange = maybe\n"), Error);
}

TEST_CASE("unwritable output paths are reported") {
  RunConfig cfg = RunConfig::from_string(kFreeSimulateConfig);
  cfg.t_max = 0.01;
  cfg.stride = 10;
  cfg.out_dir = "/dev/null/nested";  // cannot create a directory under a file
  CHECK_THROWS(run_scenario(cfg));
}

TEST_CASE("failing checks produce a nonzero exit that names the check") {
  RunConfig cfg = RunConfig::from_string(kFreeSimulateConfig);
  cfg.lambda = 0.9;
  cfg.initial = "perturbed";
  cfg.dt = 0.05;  // far too coarse: the energy self-test must fail
  cfg.stride = 2;
  cfg.t_max = 0.4;
  cfg.out_dir = temp_dir("failing");
  const ScenarioResult res = run_scenario(cfg);
  CHECK(res.exit_code == 1);
  bool found = false;
  for (const auto& f : res.failures) {
    if (f.find("energy drift") != std::string::npos) found = true;
  }
  CHECK(found);
}

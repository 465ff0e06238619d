#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "ppsd/config.hpp"
#include "ppsd/io.hpp"

using namespace ppsd;
namespace fs = std::filesystem;

namespace {

nlohmann::json base_config() {
  return nlohmann::json{
      {"problem", {{"kind", "rendezvous"}, {"n", 5}, {"d", 1}, {"seed", 3}}},
      {"graph",
       {{"kind", "edge_list"},
        {"n", 5},
        {"edges", {{2, 1}, {4, 1}, {5, 1}, {1, 2}, {3, 2}, {1, 3}, {3, 4}, {4, 5}}}}},
      {"gamma", 0.1},
      {"epsilon", 1e-8},
      {"k_max", 4000},
      {"seed", 17}};
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path fresh_dir(const std::string& name) {
  fs::path dir = fs::temp_directory_path() / ("ppsd_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

}  // namespace

TEST_CASE("config validation names the offending field") {
  CHECK_NOTHROW(parse_config(base_config()));

  auto no_gamma = base_config();
  no_gamma.erase("gamma");
  try {
    parse_config(no_gamma);
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("gamma") != std::string::npos);
  }

  auto bad_gamma = base_config();
  bad_gamma["gamma"] = -1.0;
  CHECK_THROWS_AS(parse_config(bad_gamma), ConfigError);

  auto auto_gamma = base_config();
  auto_gamma["gamma"] = "auto";
  CHECK(parse_config(auto_gamma).gamma_auto);

  auto no_problem = base_config();
  no_problem.erase("problem");
  CHECK_THROWS_AS(parse_config(no_problem), ConfigError);

  auto bad_algo = base_config();
  bad_algo["algorithm"] = "sgd";
  CHECK_THROWS_AS(parse_config(bad_algo), ConfigError);

  auto bad_case = base_config();
  bad_case["audit"] = {{"target", 1}, {"case", "III"}};
  CHECK_THROWS_AS(parse_config(bad_case), ConfigError);
}

TEST_CASE("graph and instance builders cover the config surface") {
  ExperimentConfig cfg = parse_config(base_config());
  Digraph g = build_graph(cfg);
  CHECK(g.n() == 5);
  CHECK(is_strongly_connected(g));
  ProblemInstance inst = build_instance(cfg);
  CHECK(inst.n == 5);

  auto ring_cfg = base_config();
  ring_cfg["graph"] = {{"kind", "ring"}, {"n", 7}};
  CHECK(build_graph(parse_config(ring_cfg)).edge_count() == 7);

  auto rand_cfg = base_config();
  rand_cfg["graph"] = {{"kind", "random"}, {"n", 30}, {"p", 0.1}, {"seed", 4}};
  CHECK(is_strongly_connected(build_graph(parse_config(rand_cfg))));

  auto reg_cfg = base_config();
  reg_cfg["problem"] = {{"kind", "linear_regression"}, {"n", 5}, {"d", 6}, {"rows", 6}, {"seed", 5}};
  CHECK(build_instance(parse_config(reg_cfg)).d == 6);
}

TEST_CASE("run artifacts are byte-identical across reruns") {
  ExperimentConfig cfg = parse_config(base_config());
  fs::path dir1 = fresh_dir("run1");
  fs::path dir2 = fresh_dir("run2");
  RunArtifacts a = run_experiment(cfg, dir1.string(), true);
  RunArtifacts b = run_experiment(cfg, dir2.string(), true);
  CHECK(a.record.stop_reason == "converged");
  CHECK(slurp(a.csv_path) == slurp(b.csv_path));
  CHECK(slurp(a.sidecar_path) == slurp(b.sidecar_path));

  // The residual column trends to the stop threshold.
  std::string csv = slurp(a.csv_path);
  CHECK(csv.rfind("k,residual,", 0) == 0);

  // The sidecar embeds the resolved config; re-running from it reproduces
  // the artifact byte for byte.
  nlohmann::json sidecar = nlohmann::json::parse(slurp(a.sidecar_path));
  ExperimentConfig from_sidecar = parse_config(sidecar.at("config"));
  fs::path dir3 = fresh_dir("run3");
  RunArtifacts c = run_experiment(from_sidecar, dir3.string(), true);
  CHECK(slurp(a.csv_path) == slurp(c.csv_path));
}

TEST_CASE("compare emits both residual columns") {
  ExperimentConfig cfg = parse_config(base_config());
  fs::path dir = fresh_dir("compare");
  compare_experiment(cfg, dir.string(), true);
  std::string csv = slurp((dir / "compare.csv").string());
  CHECK(csv.rfind("k,residual_ppsd,residual_pushpull", 0) == 0);
  nlohmann::json sidecar = nlohmann::json::parse(slurp((dir / "compare.json").string()));
  CHECK(sidecar["ppsd"]["stop_reason"] == "converged");
  CHECK(sidecar["pushpull"]["stop_reason"] == "converged");
}

TEST_CASE("privacy audit experiment produces a passing report") {
  auto doc = base_config();
  doc["k_max"] = 201;
  doc["epsilon"] = 0.0;
  doc["audit"] = {{"mode", "indistinguishability"},
                  {"adversaries", {4, 5}},
                  {"target", 1},
                  {"accomplice", 2},
                  {"kappa", 200},
                  {"delta_range", {0.0, 5000.0}}};
  ExperimentConfig cfg = parse_config(doc);
  fs::path dir = fresh_dir("audit");
  const int failures = privacy_audit_experiment(cfg, dir.string(), true);
  CHECK(failures == 0);
  nlohmann::json report = nlohmann::json::parse(slurp((dir / "audit.json").string()));
  CHECK(report["audits"][0]["verdict"] == "pass");
  // The two attacker logs agree structurally; values agree to the audit
  // tolerance (exact byte equality is not expected, the shadow reorders
  // arithmetic).
  std::istringstream a(slurp((dir / "attacker_original.csv").string()));
  std::istringstream b(slurp((dir / "attacker_shadow.csv").string()));
  std::string la, lb;
  size_t lines = 0;
  while (std::getline(a, la)) {
    REQUIRE(std::getline(b, lb));
    CHECK(la.substr(0, la.rfind(',')) == lb.substr(0, lb.rfind(',')));
    ++lines;
  }
  CHECK_FALSE(std::getline(b, lb));
  CHECK(lines > 1000);
}

TEST_CASE("output directory resolution order") {
  CHECK(resolve_out_dir("explicit") == "explicit");
  setenv("PPSD_OUT_DIR", "/tmp/ppsd_env_out", 1);
  CHECK(resolve_out_dir("") == "/tmp/ppsd_env_out");
  unsetenv("PPSD_OUT_DIR");
  CHECK(resolve_out_dir("") == "out");
}

TEST_CASE("optional weight-history export") {
  auto doc = base_config();
  doc["k_max"] = 30;
  doc["epsilon"] = 0.0;
  doc["export_weights"] = true;
  ExperimentConfig cfg = parse_config(doc);
  fs::path dir = fresh_dir("weights");
  run_experiment(cfg, dir.string(), true);
  REQUIRE(fs::exists(dir / "weights.json"));
  nlohmann::json dump = nlohmann::json::parse(slurp((dir / "weights.json").string()));
  CHECK(dump.size() == 30);
  WeightHistory h = weight_history_from_json(dump);
  CHECK(h.at(0).k == 0);
  CHECK(h.at(29).k == 29);
}

TEST_CASE("advise experiment reports constants") {
  auto doc = base_config();
  doc["problem"] = {{"kind", "rendezvous"}, {"n", 2}, {"d", 1}, {"seed", 1}};
  doc["graph"] = {{"kind", "ring"}, {"n", 2}};
  doc["eta"] = 0.25;
  ExperimentConfig cfg = parse_config(doc);
  fs::path dir = fresh_dir("advise");
  advise_experiment(cfg, dir.string(), true);
  nlohmann::json report = nlohmann::json::parse(slurp((dir / "advice.json").string()));
  CHECK(report["constants"]["N_R"] == 13);
}

#ifdef PPSD_CLI_PATH
TEST_CASE("binary exit codes: 0 on success, 2 on config errors") {
  fs::path dir = fresh_dir("cli");
  fs::path cfg_path = dir / "cfg.json";
  {
    std::ofstream out(cfg_path);
    out << base_config().dump(2);
  }
  std::string cmd = std::string(PPSD_CLI_PATH) + " run --config " + cfg_path.string() +
                    " --out " + (dir / "out").string() + " --quiet";
  CHECK(std::system(cmd.c_str()) == 0);

  auto broken = base_config();
  broken.erase("gamma");
  fs::path bad_path = dir / "bad.json";
  {
    std::ofstream out(bad_path);
    out << broken.dump(2);
  }
  std::string bad_cmd = std::string(PPSD_CLI_PATH) + " run --config " + bad_path.string() +
                        " --out " + (dir / "out").string() + " --quiet 2>/dev/null";
  const int status = std::system(bad_cmd.c_str());
  CHECK(WIFEXITED(status));
  CHECK(WEXITSTATUS(status) == 2);

  std::string missing_cmd = std::string(PPSD_CLI_PATH) + " run --config /nonexistent.json 2>/dev/null";
  const int status2 = std::system(missing_cmd.c_str());
  CHECK(WEXITSTATUS(status2) == 2);

  // Runtime failures (here: a graph file that cannot be opened) exit with 1.
  auto ghost = base_config();
  ghost["graph"] = {{"kind", "file"}, {"path", (dir / "missing_graph.txt").string()}};
  fs::path ghost_path = dir / "ghost.json";
  {
    std::ofstream out(ghost_path);
    out << ghost.dump(2);
  }
  std::string ghost_cmd = std::string(PPSD_CLI_PATH) + " run --config " + ghost_path.string() +
                          " --out " + (dir / "out").string() + " --quiet 2>/dev/null";
  const int status3 = std::system(ghost_cmd.c_str());
  CHECK(WEXITSTATUS(status3) == 1);
}
#endif

#pragma once

#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ppsd/engine.hpp"

namespace ppsd {

// Raised on schema problems; the message names the offending field and the
// CLI maps it to exit code 2.
class ConfigError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

struct AuditSpec {
  std::string mode = "indistinguishability";  // | sweep | attack | eavesdropper
  std::vector<int> adversaries;
  int target = 0;
  int accomplice = 0;
  std::string case_tag = "auto";  // auto | I | II
  int kappa = 500;
  double tolerance = 1e-9;
  std::vector<double> delta_magnitudes;       // sweep ladder
  std::pair<double, double> delta_range{0.0, 0.0};
  std::pair<int, int> hidden_channel{0, 0};
};

struct ExperimentConfig {
  nlohmann::json problem;
  nlohmann::json graph;
  EngineConfig engine;
  bool gamma_auto = false;
  bool eta_auto = false;
  std::optional<AuditSpec> audit;
  nlohmann::json raw;  // the validated document, echoed into sidecars
};

ExperimentConfig parse_config(const nlohmann::json& doc);
ExperimentConfig load_config_file(const std::string& path);

Digraph build_graph(const ExperimentConfig& cfg);
ProblemInstance build_instance(const ExperimentConfig& cfg);

// Output root: --out flag beats PPSD_OUT_DIR beats ./out.
std::string resolve_out_dir(const std::string& flag_value);

struct RunArtifacts {
  RunRecord record;
  std::string csv_path;
  std::string sidecar_path;
};

RunArtifacts run_experiment(const ExperimentConfig& cfg, const std::string& out_dir,
                            bool quiet);
void compare_experiment(const ExperimentConfig& cfg, const std::string& out_dir, bool quiet);
int privacy_audit_experiment(const ExperimentConfig& cfg, const std::string& out_dir,
                             bool quiet);
void advise_experiment(const ExperimentConfig& cfg, const std::string& out_dir, bool quiet);

}  // namespace ppsd

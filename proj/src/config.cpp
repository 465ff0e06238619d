#include "ppsd/config.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "ppsd/analysis.hpp"
#include "ppsd/io.hpp"
#include "ppsd/privacy.hpp"

namespace ppsd {

namespace {

const nlohmann::json& require_field(const nlohmann::json& doc, const std::string& field) {
  if (!doc.contains(field)) throw ConfigError("config is missing required field \"" + field + "\"");
  return doc.at(field);
}

double require_number(const nlohmann::json& doc, const std::string& field) {
  const auto& v = require_field(doc, field);
  if (!v.is_number()) throw ConfigError("field \"" + field + "\" must be a number");
  return v.get<double>();
}

int require_int(const nlohmann::json& doc, const std::string& field) {
  const auto& v = require_field(doc, field);
  if (!v.is_number_integer()) throw ConfigError("field \"" + field + "\" must be an integer");
  return v.get<int>();
}

}  // namespace

ExperimentConfig parse_config(const nlohmann::json& doc) {
  ExperimentConfig cfg;
  cfg.raw = doc;
  cfg.problem = require_field(doc, "problem");
  cfg.graph = require_field(doc, "graph");
  require_field(cfg.problem, "kind");
  require_field(cfg.graph, "kind");

  const auto& gamma = require_field(doc, "gamma");
  if (gamma.is_string() && gamma.get<std::string>() == "auto") {
    cfg.gamma_auto = true;
  } else if (gamma.is_number() && gamma.get<double>() > 0.0) {
    cfg.engine.gamma = gamma.get<double>();
  } else {
    throw ConfigError("field \"gamma\" must be a positive number or \"auto\"");
  }
  if (doc.contains("eta")) {
    const auto& eta = doc.at("eta");
    if (eta.is_string() && eta.get<std::string>() == "auto") {
      cfg.eta_auto = true;
    } else if (eta.is_number() && eta.get<double>() > 0.0 && eta.get<double>() < 1.0) {
      cfg.engine.eta = eta.get<double>();
    } else {
      throw ConfigError("field \"eta\" must lie in (0, 1) or be \"auto\"");
    }
  } else {
    cfg.eta_auto = true;
  }

  cfg.engine.epsilon = require_number(doc, "epsilon");
  cfg.engine.k_max = require_int(doc, "k_max");
  if (cfg.engine.k_max < 1) throw ConfigError("field \"k_max\" must be positive");
  cfg.engine.seed = static_cast<std::uint64_t>(require_int(doc, "seed"));

  const std::string algo = doc.value("algorithm", std::string("ppsd"));
  if (algo == "ppsd") cfg.engine.algorithm = Algorithm::ppsd;
  else if (algo == "pushpull") cfg.engine.algorithm = Algorithm::pushpull;
  else throw ConfigError("field \"algorithm\" must be \"ppsd\" or \"pushpull\"");

  if (doc.contains("init")) {
    const auto& init = doc.at("init");
    cfg.engine.x0_policy = init.value("x0", std::string("gaussian"));
    if (cfg.engine.x0_policy != "zeros" && cfg.engine.x0_policy != "gaussian") {
      throw ConfigError("field \"init.x0\" must be \"zeros\" or \"gaussian\"");
    }
    cfg.engine.x0_scale = init.value("x0_scale", 1.0);
    cfg.engine.y_alpha_magnitude = init.value("y_alpha_magnitude", 1.0);
    cfg.engine.k0_magnitude = init.value("k0_magnitude", 10.0);
  }
  cfg.engine.record_trajectory = doc.value("record_trajectory", true);

  if (doc.contains("audit")) {
    const auto& a = doc.at("audit");
    AuditSpec spec;
    spec.mode = a.value("mode", std::string("indistinguishability"));
    if (spec.mode != "indistinguishability" && spec.mode != "sweep" && spec.mode != "attack" &&
        spec.mode != "eavesdropper") {
      throw ConfigError("field \"audit.mode\" must be one of indistinguishability|sweep|attack|eavesdropper");
    }
    if (a.contains("adversaries")) spec.adversaries = a.at("adversaries").get<std::vector<int>>();
    spec.target = require_int(a, "target");
    spec.accomplice = a.value("accomplice", 0);
    spec.case_tag = a.value("case", std::string("auto"));
    if (spec.case_tag != "auto" && spec.case_tag != "I" && spec.case_tag != "II") {
      throw ConfigError("field \"audit.case\" must be auto, I, or II");
    }
    spec.kappa = a.value("kappa", 500);
    spec.tolerance = a.value("tolerance", 1e-9);
    if (a.contains("delta_magnitudes")) {
      spec.delta_magnitudes = a.at("delta_magnitudes").get<std::vector<double>>();
    }
    if (a.contains("delta_range")) {
      auto r = a.at("delta_range").get<std::vector<double>>();
      if (r.size() != 2) throw ConfigError("field \"audit.delta_range\" must be [lo, hi]");
      spec.delta_range = {r[0], r[1]};
    }
    if (a.contains("hidden_channel")) {
      auto ch = a.at("hidden_channel").get<std::vector<int>>();
      if (ch.size() != 2) throw ConfigError("field \"audit.hidden_channel\" must be [i, m]");
      spec.hidden_channel = {ch[0], ch[1]};
    }
    cfg.audit = std::move(spec);
  }
  return cfg;
}

ExperimentConfig load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  return parse_config(doc);
}

Digraph build_graph(const ExperimentConfig& cfg) {
  const std::string kind = cfg.graph.at("kind").get<std::string>();
  if (kind == "ring") return ring(require_int(cfg.graph, "n"));
  if (kind == "random") {
    return random_strongly_connected(require_int(cfg.graph, "n"),
                                     require_number(cfg.graph, "p"),
                                     static_cast<std::uint64_t>(require_int(cfg.graph, "seed")));
  }
  if (kind == "edge_list") {
    const int n = require_int(cfg.graph, "n");
    std::vector<std::pair<int, int>> edges;
    for (const auto& e : require_field(cfg.graph, "edges")) {
      auto pair = e.get<std::vector<int>>();
      if (pair.size() != 2) throw ConfigError("graph edges must be [j, i] pairs");
      edges.push_back({pair[0], pair[1]});
    }
    return Digraph::from_edge_list(n, edges);
  }
  if (kind == "file") return load_edge_list_file(require_field(cfg.graph, "path").get<std::string>());
  throw ConfigError("field \"graph.kind\" must be ring, random, edge_list, or file");
}

ProblemInstance build_instance(const ExperimentConfig& cfg) {
  const std::string kind = cfg.problem.at("kind").get<std::string>();
  if (kind == "rendezvous") {
    if (cfg.problem.contains("points")) return instance_from_json(cfg.problem);
    return generate_rendezvous(require_int(cfg.problem, "n"), require_int(cfg.problem, "d"),
                               cfg.problem.value("spread", 5.0),
                               static_cast<std::uint64_t>(require_int(cfg.problem, "seed")));
  }
  if (kind == "linear_regression") {
    if (cfg.problem.contains("Q")) return instance_from_json(cfg.problem);
    return generate_linear_regression(require_int(cfg.problem, "n"), require_int(cfg.problem, "d"),
                                      require_int(cfg.problem, "rows"),
                                      cfg.problem.value("noise", 0.2),
                                      static_cast<std::uint64_t>(require_int(cfg.problem, "seed")));
  }
  throw ConfigError("field \"problem.kind\" must be rendezvous or linear_regression");
}

std::string resolve_out_dir(const std::string& flag_value) {
  if (!flag_value.empty()) return flag_value;
  if (const char* env = std::getenv("PPSD_OUT_DIR")) return env;
  return "out";
}

RunArtifacts run_experiment(const ExperimentConfig& cfg, const std::string& out_dir, bool quiet) {
  Digraph g = build_graph(cfg);
  ProblemInstance inst = build_instance(cfg);
  RunRecord rec = run(g, inst, cfg.engine);

  namespace fs = std::filesystem;
  RunArtifacts art{std::move(rec), (fs::path(out_dir) / "run.csv").string(),
                   (fs::path(out_dir) / "run.json").string()};
  write_file_atomic(art.csv_path, run_csv(art.record));
  nlohmann::json sidecar = run_sidecar(art.record, cfg.raw);
  write_file_atomic(art.sidecar_path, sidecar.dump(2) + "\n");
  if (cfg.raw.value("export_weights", false)) {
    write_file_atomic((fs::path(out_dir) / "weights.json").string(),
                      weight_history_to_json(art.record.weights).dump() + "\n");
  }
  if (!quiet) {
    std::cout << "stop: " << art.record.stop_reason
              << "  final residual: " << format_double(art.record.diagnostics.back().residual);
    if (!sidecar.at("rate_fit").is_null()) {
      std::cout << "  fitted lambda: " << sidecar["rate_fit"]["lambda"].get<double>();
    }
    std::cout << "\n";
  }
  return art;
}

void compare_experiment(const ExperimentConfig& cfg, const std::string& out_dir, bool quiet) {
  Digraph g = build_graph(cfg);
  ProblemInstance inst = build_instance(cfg);
  EngineConfig a = cfg.engine;
  a.algorithm = Algorithm::ppsd;
  EngineConfig b = cfg.engine;
  b.algorithm = Algorithm::pushpull;
  RunRecord ra = run(g, inst, a);
  RunRecord rb = run(g, inst, b);
  namespace fs = std::filesystem;
  write_file_atomic((fs::path(out_dir) / "compare.csv").string(), compare_csv(ra, rb));
  nlohmann::json sidecar;
  sidecar["config"] = cfg.raw;
  sidecar["ppsd"] = run_sidecar(ra, cfg.raw);
  sidecar["pushpull"] = run_sidecar(rb, cfg.raw);
  write_file_atomic((fs::path(out_dir) / "compare.json").string(), sidecar.dump(2) + "\n");
  if (!quiet) {
    std::cout << "ppsd: " << ra.stop_reason << " at " << ra.iterations
              << "  pushpull: " << rb.stop_reason << " at " << rb.iterations << "\n";
  }
}

namespace {

std::optional<ShadowCase> case_from_tag(const std::string& tag) {
  if (tag == "I") return ShadowCase::I;
  if (tag == "II") return ShadowCase::II;
  return std::nullopt;
}

nlohmann::json audit_to_json(const AuditResult& a, const std::string& case_name,
                             const Eigen::VectorXd& delta) {
  nlohmann::json j;
  j["case"] = case_name;
  j["delta"] = std::vector<double>(delta.data(), delta.data() + delta.size());
  j["verdict"] = a.pass ? "pass" : "fail";
  j["max_deviation"] = a.max_deviation;
  j["worst_label"] = a.worst_label;
  j["absorption_deviation"] = a.absorption_deviation;
  j["final_state_deviation"] = a.final_state_deviation;
  j["per_iteration_max"] = a.per_iteration_max;
  return j;
}

}  // namespace

int privacy_audit_experiment(const ExperimentConfig& cfg, const std::string& out_dir,
                             bool quiet) {
  if (!cfg.audit) throw ConfigError("config is missing required field \"audit\"");
  const AuditSpec& spec = *cfg.audit;
  Digraph g = build_graph(cfg);
  ProblemInstance inst = build_instance(cfg);
  EngineConfig ecfg = cfg.engine;
  ecfg.record_trajectory = true;
  RunRecord rec = run(g, inst, ecfg);

  std::mt19937_64 rng(cfg.engine.seed ^ 0x5eedull);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  auto draw_delta = [&](double lo, double hi) {
    Eigen::VectorXd delta(inst.d);
    for (int l = 0; l < inst.d; ++l) delta(l) = lo + (hi - lo) * unit(rng);
    return delta;
  };

  nlohmann::json report;
  report["config"] = cfg.raw;
  report["mode"] = spec.mode;
  nlohmann::json items = nlohmann::json::array();
  int failures = 0;
  namespace fs = std::filesystem;

  try {
    if (spec.mode == "indistinguishability" || spec.mode == "sweep") {
      std::vector<Eigen::VectorXd> deltas;
      if (spec.delta_range.second > spec.delta_range.first) {
        deltas.push_back(draw_delta(spec.delta_range.first, spec.delta_range.second));
      }
      for (double mag : spec.delta_magnitudes) deltas.push_back(draw_delta(0.0, mag));
      if (deltas.empty()) deltas.push_back(draw_delta(0.0, 5000.0));

      for (const auto& delta : deltas) {
        ShadowSpec sspec = make_shadow_spec(rec, spec.target, spec.accomplice, delta, rng,
                                            case_from_tag(spec.case_tag));
        AuditResult audit =
            verify_indistinguishable(rec, sspec, spec.adversaries, spec.kappa, spec.tolerance);
        const std::string case_name = sspec.case_tag == ShadowCase::I ? "I" : "II";
        items.push_back(audit_to_json(audit, case_name, delta));
        failures += audit.pass ? 0 : 1;

        if (items.size() == 1) {
          ShadowRun shadow = construct_shadow(rec, sspec);
          EngineConfig rcfg = rec.config;
          rcfg.k_max = rec.iterations;
          rcfg.epsilon = 0.0;
          ReplaySchedule replay(shadow.weights);
          RunRecord shadow_rec = run_with(g, shadow.instance, rcfg, shadow.initial, replay);
          const int kap = std::min(spec.kappa, rec.weights.size() - 1);
          write_file_atomic((fs::path(out_dir) / "attacker_original.csv").string(),
                            attacker_log_csv(record_view(rec, spec.adversaries, kap)));
          write_file_atomic((fs::path(out_dir) / "attacker_shadow.csv").string(),
                            attacker_log_csv(record_view(shadow_rec, spec.adversaries, kap)));
        }
      }
    } else if (spec.mode == "attack") {
      const int kap = std::min(spec.kappa, rec.weights.size() - 1);
      AttackerLog log = record_view(rec, spec.adversaries, kap);
      Eigen::VectorXd estimate = inference_attack(log, g, spec.target);
      nlohmann::json item;
      item["estimate"] = std::vector<double>(estimate.data(), estimate.data() + estimate.size());
      item["residual_at_truncation"] = rec.diagnostics.at(kap).residual;
      if (inst.minimizer) {
        Eigen::VectorXd truth = inst.locals[spec.target - 1].gradient(*inst.minimizer);
        item["true_gradient_at_optimum"] =
            std::vector<double>(truth.data(), truth.data() + truth.size());
        item["attack_error"] = (estimate - truth).norm();
      }
      items.push_back(std::move(item));
    } else if (spec.mode == "eavesdropper") {
      const auto [ci, cm] = spec.hidden_channel;
      std::vector<Eigen::VectorXd> deltas;
      for (double mag : spec.delta_magnitudes) deltas.push_back(draw_delta(0.0, mag));
      if (deltas.empty()) deltas.push_back(draw_delta(0.0, 5000.0));
      for (const auto& delta : deltas) {
        AuditResult audit =
            verify_eavesdropper(rec, ci, cm, delta, spec.kappa, spec.tolerance, rng);
        items.push_back(audit_to_json(audit, "eavesdropper", delta));
        failures += audit.pass ? 0 : 1;
      }
    }
  } catch (const std::invalid_argument& e) {
    nlohmann::json item;
    item["precondition_rejected"] = e.what();
    items.push_back(std::move(item));
    failures += 1;
  }

  report["audits"] = items;
  report["failures"] = failures;
  write_file_atomic((fs::path(out_dir) / "audit.json").string(), report.dump(2) + "\n");
  if (!quiet) {
    std::cout << "audit mode " << spec.mode << ": " << items.size() << " item(s), " << failures
              << " failure(s)\n";
  }
  return failures;
}

void advise_experiment(const ExperimentConfig& cfg, const std::string& out_dir, bool quiet) {
  Digraph g = build_graph(cfg);
  ProblemInstance inst = build_instance(cfg);
  EngineConfig ecfg = resolve_defaults(cfg.engine, g, inst);
  nlohmann::json report;
  report["config"] = cfg.raw;
  TheoryConstants c = theoretical_constants(inst.n, ecfg.eta, inst.L, inst.mu);
  report["constants"] = {{"n", c.n},       {"eta", c.eta},   {"L", c.L},
                         {"mu", c.mu},     {"log_QR", c.log_QR}, {"log_QP", c.log_QP},
                         {"N_R", c.N_R},   {"N_P", c.N_P},   {"N_bar", c.N_bar},
                         {"r_R", c.r_R},   {"r_P", c.r_P},   {"tractable", c.tractable}};
  if (c.tractable && c.N_bar <= 256) {
    StepSizeAdvice advice = step_size_advisor(c);
    report["advice"] = {{"feasible", advice.feasible},
                        {"gamma", advice.gamma},
                        {"rho", advice.rho}};
  } else {
    report["advice"] = {{"feasible", false},
                        {"reason", c.tractable ? "companion matrix beyond the evaluation cap"
                                               : "constants intractable at this eta"}};
  }
  namespace fs = std::filesystem;
  write_file_atomic((fs::path(out_dir) / "advice.json").string(), report.dump(2) + "\n");
  if (!quiet) std::cout << report["advice"].dump() << "\n";
}

}  // namespace ppsd

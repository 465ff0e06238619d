#include "ppsd/privacy.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>
#include <stdexcept>

namespace ppsd {

namespace {

std::string fmt(const char* pattern, int a, int b = -1, int c = -1) {
  char buf[96];
  if (c >= 0) std::snprintf(buf, sizeof buf, pattern, a, b, c);
  else if (b >= 0) std::snprintf(buf, sizeof buf, pattern, a, b);
  else std::snprintf(buf, sizeof buf, pattern, a);
  return buf;
}

void push_vector(std::vector<LogEntry>& out, int k, const std::string& label,
                 const Eigen::VectorXd& v) {
  for (int l = 0; l < v.size(); ++l) {
    out.push_back({k, label + "/l=" + std::to_string(l), v(l)});
  }
}

void push_diag(std::vector<LogEntry>& out, int k, const std::string& label, const DiagWeight& w) {
  for (int l = 0; l < w.dim(); ++l) {
    out.push_back({k, label + "/l=" + std::to_string(l), w(l)});
  }
}

Eigen::VectorXd diag_times(const DiagWeight& w, const Eigen::VectorXd& v) {
  Eigen::VectorXd out(v.size());
  for (int l = 0; l < v.size(); ++l) out(l) = w(l) * v(l);
  return out;
}

void require_trajectory(const RunRecord& run) {
  if (run.states.empty() || run.weights.size() == 0) {
    throw std::invalid_argument("run was recorded without trajectory or weight history");
  }
}

}  // namespace

AttackerLog record_view(const RunRecord& run, const std::vector<int>& adversaries, int kappa) {
  require_trajectory(run);
  const Digraph& g = run.graph;
  if (kappa < 0 || kappa >= run.weights.size()) {
    throw std::invalid_argument("kappa must stay within the recorded weight history");
  }
  std::vector<int> A = adversaries;
  std::sort(A.begin(), A.end());
  for (int j : A) {
    if (j < 1 || j > g.n()) throw std::invalid_argument("adversary id out of range");
  }

  AttackerLog log;
  log.adversaries = A;
  log.kappa = kappa;
  for (int k = 0; k <= kappa; ++k) {
    const NetworkState& s = run.states.at(k);
    const IterationWeights& w = run.weights.at(k);
    for (int j : A) {
      const std::string base = fmt("k=%d/agent=%d", k, j);
      const auto& self = s.agents[j - 1];
      push_vector(log.entries, k, base + "/state/x", self.x);
      push_vector(log.entries, k, base + "/state/y_alpha", self.y_alpha);
      push_vector(log.entries, k, base + "/state/Ly_alpha", diag_times(w.Lambda_of(j), self.y_alpha));
      push_vector(log.entries, k, base + "/state/Cy_self", diag_times(w.C_at(j, j), self.y_alpha));
      for (int m : g.out_neighbors(j)) {
        push_vector(log.entries, k, base + fmt("/send/to=%d/Cy", m),
                    diag_times(w.C_at(m, j), self.y_alpha));
      }
      for (int l : g.in_neighbors(j)) {
        const auto& other = s.agents[l - 1];
        push_vector(log.entries, k, base + fmt("/recv/from=%d/x", l), other.x);
        push_vector(log.entries, k, base + fmt("/recv/from=%d/Ly", l),
                    diag_times(w.Lambda_of(l), other.y_alpha));
        push_vector(log.entries, k, base + fmt("/recv/from=%d/Cy", l),
                    diag_times(w.C_at(j, l), other.y_alpha));
      }
      push_diag(log.entries, k, base + "/weight/Lambda", w.Lambda_of(j));
      push_diag(log.entries, k, base + fmt("/weight/R_%d_%d", j, j), w.R_at(j, j));
      push_diag(log.entries, k, base + fmt("/weight/A_%d_%d", j, j), w.A_at(j, j));
      push_diag(log.entries, k, base + fmt("/weight/C_%d_%d", j, j), w.C_at(j, j));
      push_diag(log.entries, k, base + "/weight/PhiAlpha", w.PhiAlpha_of(j));
      push_diag(log.entries, k, base + "/weight/PhiBeta", w.PhiBeta_of(j));
      for (int l : g.in_neighbors(j)) {
        push_diag(log.entries, k, base + fmt("/weight/R_%d_%d", j, l), w.R_at(j, l));
        push_diag(log.entries, k, base + fmt("/weight/A_%d_%d", j, l), w.A_at(j, l));
      }
      for (int m : g.out_neighbors(j)) {
        push_diag(log.entries, k, base + fmt("/weight/C_%d_%d", m, j), w.C_at(m, j));
      }
      if (k >= 1) {
        // From iteration 1 on, every other agent's weight set is public to the
        // adversary, except the beta-side interior weights.
        for (int l = 1; l <= g.n(); ++l) {
          if (l == j) continue;
          push_diag(log.entries, k, base + fmt("/public/Lambda_%d", l), w.Lambda_of(l));
          push_diag(log.entries, k, base + fmt("/public/PhiAlpha_%d", l), w.PhiAlpha_of(l));
        }
        for (const auto& [key, dw] : w.R) {
          if (key.first == j || key.second == j) continue;
          push_diag(log.entries, k, base + fmt("/public/R_%d_%d", key.first, key.second), dw);
        }
        for (const auto& [key, dw] : w.A) {
          if (key.first == j || key.second == j) continue;
          push_diag(log.entries, k, base + fmt("/public/A_%d_%d", key.first, key.second), dw);
        }
        for (const auto& [key, dw] : w.C) {
          if (key.first == j || key.second == j) continue;
          push_diag(log.entries, k, base + fmt("/public/C_%d_%d", key.first, key.second), dw);
        }
      }
    }
  }
  return log;
}

namespace {

constexpr double kDenominatorFloor = 1e-6;

bool floor_ok(double denom, double reference) {
  return std::abs(denom) >= kDenominatorFloor * (1.0 + std::abs(reference));
}

}  // namespace

ShadowSpec make_shadow_spec(const RunRecord& run, int target_i, int accomplice_m,
                            const Eigen::VectorXd& delta, std::mt19937_64& rng,
                            std::optional<ShadowCase> force_case, bool eavesdropper_restricted) {
  require_trajectory(run);
  const Digraph& g = run.graph;
  const auto& in = g.in_neighbors(target_i);
  const auto& out = g.out_neighbors(target_i);
  const bool is_out = std::binary_search(out.begin(), out.end(), accomplice_m);
  const bool is_in = std::binary_search(in.begin(), in.end(), accomplice_m);
  if (!is_out && !is_in) {
    throw std::invalid_argument("accomplice must neighbor the target agent");
  }
  ShadowSpec spec;
  spec.target_i = target_i;
  spec.accomplice_m = accomplice_m;
  if (force_case) {
    if ((*force_case == ShadowCase::I && !is_out) || (*force_case == ShadowCase::II && !is_in)) {
      throw std::invalid_argument("forced case is inconsistent with the accomplice's position");
    }
    spec.case_tag = *force_case;
  } else {
    spec.case_tag = is_out ? ShadowCase::I : ShadowCase::II;  // Case I preferred when both hold
  }
  const int d = static_cast<int>(delta.size());
  if (d != run.instance.d) throw std::invalid_argument("delta dimension mismatch");

  const auto& yi = run.states.front().agents[target_i - 1];
  const auto& ym = run.states.front().agents[accomplice_m - 1];
  spec.delta = delta;
  spec.delta_alpha = Eigen::VectorXd::Zero(d);
  spec.delta_beta = delta;

  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int l = 0; l < d; ++l) {
    if (delta(l) == 0.0) {
      spec.delta_alpha(l) = 0.0;
      spec.delta_beta(l) = 0.0;
      continue;
    }
    if (eavesdropper_restricted) {
      // Channel products pin the alpha substates, so the whole perturbation
      // lives on the beta side; the alpha values themselves become divisors.
      if (!floor_ok(yi.y_alpha(l), yi.y_alpha(l)) || !floor_ok(ym.y_alpha(l), ym.y_alpha(l)) ||
          !floor_ok(yi.y_beta(l) + delta(l), yi.y_beta(l)) ||
          !floor_ok(ym.y_beta(l) - delta(l), ym.y_beta(l))) {
        throw std::runtime_error("resample required: degenerate initial substates for the restricted shadow");
      }
      continue;
    }
    bool found = false;
    for (int attempt = 0; attempt < 4096 && !found; ++attempt) {
      const double da = delta(l) * unit(rng);
      const double db = delta(l) - da;
      if (floor_ok(yi.y_alpha(l) + da, yi.y_alpha(l)) && floor_ok(ym.y_alpha(l) - da, ym.y_alpha(l)) &&
          floor_ok(yi.y_beta(l) + db, yi.y_beta(l)) && floor_ok(ym.y_beta(l) - db, ym.y_beta(l))) {
        spec.delta_alpha(l) = da;
        spec.delta_beta(l) = db;
        found = true;
      }
    }
    if (!found) {
      throw std::runtime_error("resample required: no delta split clears the denominator floor");
    }
  }
  return spec;
}

ProblemInstance shadow_instance(const ProblemInstance& inst, const ShadowSpec& spec) {
  ProblemInstance out = inst;
  const Eigen::VectorXd delta = spec.delta;
  const GradientOracle base_i = inst.locals[spec.target_i - 1].gradient;
  const GradientOracle base_m = inst.locals[spec.accomplice_m - 1].gradient;
  out.locals[spec.target_i - 1].gradient = [base_i, delta](const Eigen::VectorXd& x) {
    return Eigen::VectorXd(base_i(x) + delta);
  };
  out.locals[spec.accomplice_m - 1].gradient = [base_m, delta](const Eigen::VectorXd& x) {
    return Eigen::VectorXd(base_m(x) - delta);
  };
  out.meta["shadow"] = true;
  return out;
}

ShadowRun construct_shadow(const RunRecord& run, const ShadowSpec& spec) {
  require_trajectory(run);
  const Digraph& g = run.graph;
  const int i = spec.target_i;
  const int m = spec.accomplice_m;
  const int d = run.instance.d;

  ShadowRun shadow;
  shadow.instance = shadow_instance(run.instance, spec);
  shadow.initial = run.states.front();
  auto& ai = shadow.initial.agents[i - 1];
  auto& am = shadow.initial.agents[m - 1];
  const Eigen::VectorXd yi_a = ai.y_alpha, yi_b = ai.y_beta;
  const Eigen::VectorXd ym_a = am.y_alpha, ym_b = am.y_beta;
  ai.y_alpha = yi_a + spec.delta_alpha;
  ai.y_beta = yi_b + spec.delta_beta;
  am.y_alpha = ym_a - spec.delta_alpha;
  am.y_beta = ym_b - spec.delta_beta;
  for (int p = 1; p <= g.n(); ++p) {
    shadow.initial.grads[p - 1] = shadow.instance.locals[p - 1].gradient(shadow.initial.agents[p - 1].x);
  }

  for (int l = 0; l < d; ++l) {
    if (spec.delta_alpha(l) == 0.0 && spec.delta_beta(l) == 0.0) continue;
    if (!floor_ok(ai.y_alpha(l), yi_a(l)) || !floor_ok(am.y_alpha(l), ym_a(l)) ||
        !floor_ok(ai.y_beta(l), yi_b(l)) || !floor_ok(am.y_beta(l), ym_b(l))) {
      throw std::runtime_error("resample required: shadow denominators below the floor");
    }
  }

  shadow.weights = run.weights;
  IterationWeights& w0 = shadow.weights.iterations.front();
  const IterationWeights& orig = run.weights.at(0);

  // Per-coordinate scale of an iteration-0 block: value * y_old / y_new, with
  // a bit-exact copy when this coordinate's split vanishes.
  auto scaled = [&](const DiagWeight& w, const Eigen::VectorXd& y_old,
                    const Eigen::VectorXd& y_new) {
    std::vector<double> e(d);
    for (int l = 0; l < d; ++l) {
      e[l] = spec.delta_alpha(l) == 0.0 ? w(l) : w(l) * y_old(l) / y_new(l);
    }
    return DiagWeight::diagonal(std::move(e));
  };
  // Additive correction: (value * y_old + shift) / y_new.
  auto corrected = [&](const DiagWeight& w, const Eigen::VectorXd& y_old,
                       const Eigen::VectorXd& y_new, const Eigen::VectorXd& shift, double sign) {
    std::vector<double> e(d);
    for (int l = 0; l < d; ++l) {
      if (spec.delta_alpha(l) == 0.0 && spec.delta(l) == 0.0) e[l] = w(l);
      else e[l] = (w(l) * y_old(l) + sign * shift(l)) / y_new(l);
    }
    return DiagWeight::diagonal(std::move(e));
  };

  // Step sizes of i and m: the transmitted Lambda * y_alpha products must not move.
  w0.Lambda[i - 1] = scaled(orig.Lambda_of(i), yi_a, ai.y_alpha);
  w0.Lambda[m - 1] = scaled(orig.Lambda_of(m), ym_a, am.y_alpha);

  // Column of agent i: every product C_pi y_i,alpha is preserved except on the
  // channel that carries the +delta compensation.
  const int plus_row = spec.case_tag == ShadowCase::I ? m : i;
  {
    std::vector<int> rows = g.out_neighbors(i);
    rows.push_back(i);
    for (int p : rows) {
      const DiagWeight& c = orig.C_at(p, i);
      w0.C[{p, i}] = (p == plus_row) ? corrected(c, yi_a, ai.y_alpha, spec.delta, +1.0)
                                     : scaled(c, yi_a, ai.y_alpha);
    }
  }
  // Column of agent m: mirrored with the -delta compensation.
  const int minus_row = spec.case_tag == ShadowCase::I ? m : i;
  {
    std::vector<int> rows = g.out_neighbors(m);
    rows.push_back(m);
    for (int p : rows) {
      const DiagWeight& c = orig.C_at(p, m);
      w0.C[{p, m}] = (p == minus_row) ? corrected(c, ym_a, am.y_alpha, spec.delta, -1.0)
                                      : scaled(c, ym_a, am.y_alpha);
    }
  }

  // Interior weights of i and m absorb the beta-side shift.
  auto phi_alpha = [&](const DiagWeight& w, const Eigen::VectorXd& y_old,
                       const Eigen::VectorXd& y_new, double sign) {
    std::vector<double> e(d);
    for (int l = 0; l < d; ++l) {
      if (spec.delta_alpha(l) == 0.0 && spec.delta_beta(l) == 0.0) e[l] = w(l);
      else e[l] = (w(l) * y_old(l) + sign * spec.delta_beta(l)) / y_new(l);
    }
    return DiagWeight::diagonal(std::move(e));
  };
  auto phi_beta = [&](const DiagWeight& w, const Eigen::VectorXd& y_old,
                      const Eigen::VectorXd& y_new, double sign) {
    std::vector<double> e(d);
    for (int l = 0; l < d; ++l) {
      if (spec.delta_beta(l) == 0.0) e[l] = w(l);
      else e[l] = (w(l) * y_old(l) + sign * spec.delta_beta(l)) / y_new(l);
    }
    return DiagWeight::diagonal(std::move(e));
  };
  w0.PhiAlpha[i - 1] = phi_alpha(orig.PhiAlpha_of(i), yi_a, ai.y_alpha, -1.0);
  w0.PhiAlpha[m - 1] = phi_alpha(orig.PhiAlpha_of(m), ym_a, am.y_alpha, +1.0);
  w0.PhiBeta[i - 1] = phi_beta(orig.PhiBeta_of(i), yi_b, ai.y_beta, +1.0);
  w0.PhiBeta[m - 1] = phi_beta(orig.PhiBeta_of(m), ym_b, am.y_beta, -1.0);
  return shadow;
}

namespace {

double relative_deviation(double a, double b) {
  return std::abs(a - b) / std::max({1.0, std::abs(a), std::abs(b)});
}

double state_deviation(const NetworkState& a, const NetworkState& b) {
  double worst = 0.0;
  for (size_t i = 0; i < a.agents.size(); ++i) {
    for (int l = 0; l < a.agents[i].x.size(); ++l) {
      worst = std::max(worst, relative_deviation(a.agents[i].x(l), b.agents[i].x(l)));
      worst = std::max(worst, relative_deviation(a.agents[i].y_alpha(l), b.agents[i].y_alpha(l)));
      worst = std::max(worst, relative_deviation(a.agents[i].y_beta(l), b.agents[i].y_beta(l)));
    }
  }
  return worst;
}

RunRecord replay_shadow(const RunRecord& run, const ShadowRun& shadow) {
  EngineConfig cfg = run.config;
  cfg.k_max = run.iterations;
  cfg.epsilon = 0.0;  // replay the exact same number of iterations
  cfg.record_trajectory = true;
  ReplaySchedule schedule(shadow.weights);
  RunRecord rec = run_with(run.graph, shadow.instance, cfg, shadow.initial, schedule);
  if (rec.stop_reason == "diverged") {
    throw std::runtime_error("audit inconclusive: shadow run diverged");
  }
  return rec;
}

}  // namespace

AuditResult audit_with_shadow(const RunRecord& run, const ShadowRun& shadow,
                              const ShadowSpec& spec, const std::vector<int>& adversaries,
                              int kappa, double tolerance) {
  for (int j : adversaries) {
    if (j == spec.target_i || j == spec.accomplice_m) {
      throw std::invalid_argument("target and accomplice must stay uncorrupted");
    }
  }
  RunRecord shadow_rec = replay_shadow(run, shadow);
  kappa = std::min(kappa, run.weights.size() - 1);

  AttackerLog la = record_view(run, adversaries, kappa);
  AttackerLog lb = record_view(shadow_rec, adversaries, kappa);
  if (la.entries.size() != lb.entries.size()) {
    throw std::logic_error("attacker logs are structurally different");
  }

  AuditResult result;
  result.per_iteration_max.assign(kappa + 1, 0.0);
  for (size_t idx = 0; idx < la.entries.size(); ++idx) {
    const LogEntry& ea = la.entries[idx];
    const LogEntry& eb = lb.entries[idx];
    if (ea.label != eb.label) throw std::logic_error("attacker logs are structurally different");
    const double dev = relative_deviation(ea.value, eb.value);
    result.per_iteration_max[ea.k] = std::max(result.per_iteration_max[ea.k], dev);
    if (dev > result.max_deviation) {
      result.max_deviation = dev;
      result.worst_label = ea.label;
    }
  }

  result.absorption_deviation = run.states.size() > 1
      ? state_deviation(run.states.at(1), shadow_rec.states.at(1))
      : 0.0;
  result.final_state_deviation = state_deviation(run.final_state, shadow_rec.final_state);

  // The two worlds must differ by exactly delta in the target's gradient.
  const auto& orig_grad = run.instance.locals[spec.target_i - 1].gradient;
  const auto& shad_grad = shadow.instance.locals[spec.target_i - 1].gradient;
  Eigen::VectorXd probe = run.states.front().agents[spec.target_i - 1].x;
  double gerr = (shad_grad(probe) - orig_grad(probe) - spec.delta).norm();
  if (run.instance.minimizer) {
    gerr = std::max(gerr, (shad_grad(*run.instance.minimizer) - orig_grad(*run.instance.minimizer) -
                           spec.delta).norm());
  }
  result.gradient_shift_error = gerr;

  const double gtol = 1e-12 * (1.0 + spec.delta.norm());
  result.pass = result.max_deviation <= tolerance && result.final_state_deviation <= tolerance &&
                result.gradient_shift_error <= gtol;
  if (!result.pass) {
    result.note = "max deviation " + std::to_string(result.max_deviation) + " at " +
                  result.worst_label;
  }
  return result;
}

AuditResult verify_indistinguishable(const RunRecord& run, const ShadowSpec& spec,
                                     const std::vector<int>& adversaries, int kappa,
                                     double tolerance) {
  ShadowRun shadow = construct_shadow(run, spec);
  return audit_with_shadow(run, shadow, spec, adversaries, kappa, tolerance);
}

SweepResult privacy_sweep(const RunRecord& run, int target_i, int accomplice_m,
                          const std::vector<Eigen::VectorXd>& deltas,
                          const std::vector<int>& adversaries, int kappa, double tolerance,
                          std::mt19937_64& rng) {
  const Digraph& g = run.graph;
  std::set<int> A(adversaries.begin(), adversaries.end());
  bool has_free_neighbor = false;
  for (int j : g.in_neighbors(target_i)) has_free_neighbor |= !A.count(j);
  for (int j : g.out_neighbors(target_i)) has_free_neighbor |= !A.count(j);
  if (!has_free_neighbor) {
    throw std::invalid_argument(
        "sweep rejected: every neighbor of the target is corrupted, no accomplice exists");
  }
  SweepResult result;
  result.total = static_cast<int>(deltas.size());
  for (const auto& delta : deltas) {
    ShadowSpec spec = make_shadow_spec(run, target_i, accomplice_m, delta, rng);
    AuditResult audit = verify_indistinguishable(run, spec, adversaries, kappa, tolerance);
    result.passes += audit.pass ? 1 : 0;
    result.audits.push_back(std::move(audit));
  }
  return result;
}

Eigen::VectorXd inference_attack(const AttackerLog& log, const Digraph& g, int target_i) {
  std::set<int> A(log.adversaries.begin(), log.adversaries.end());
  const auto& in = g.in_neighbors(target_i);
  const auto& out = g.out_neighbors(target_i);
  for (int j : in) {
    if (!A.count(j)) {
      throw std::invalid_argument("insufficient information: in-neighbor " + std::to_string(j) +
                                  " is not corrupted");
    }
  }
  for (int j : out) {
    if (!A.count(j)) {
      throw std::invalid_argument("insufficient information: out-neighbor " + std::to_string(j) +
                                  " is not corrupted");
    }
  }

  // Index the logged C products by their label prefix once.
  std::map<std::string, double> products;
  for (const auto& e : log.entries) products[e.label] = e.value;
  auto lookup = [&](int k, int owner, const std::string& field, int l) {
    const std::string label =
        fmt("k=%d/agent=%d", k, owner) + field + "/l=" + std::to_string(l);
    auto it = products.find(label);
    if (it == products.end()) {
      throw std::invalid_argument("insufficient information: missing log entry " + label);
    }
    return it->second;
  };

  if (log.adversaries.empty()) throw std::invalid_argument("empty attacker log");
  int d = 0;  // dimension, read off the first agent's x block
  const std::string prefix = fmt("k=%d/agent=%d", 0, log.adversaries.front()) + "/state/x/l=";
  for (const auto& e : log.entries) {
    if (e.label.rfind(prefix, 0) == 0) ++d;
  }
  if (d == 0) throw std::invalid_argument("attacker log carries no state entries");

  Eigen::VectorXd acc = Eigen::VectorXd::Zero(d);
  for (int k = 0; k <= log.kappa; ++k) {
    for (int l = 0; l < d; ++l) {
      double net = 0.0;
      // Inflow to the target: products its in-neighbors sent toward it.
      for (int j : in) net += lookup(k, j, fmt("/send/to=%d/Cy", target_i), l);
      // Outflow: products the target sent, seen by its corrupted out-neighbors.
      for (int j : out) net -= lookup(k, j, fmt("/recv/from=%d/Cy", target_i), l);
      acc(l) += net;
    }
  }
  return -acc;
}

AttackerLog eavesdropper_view(const RunRecord& run, int i, int m, int kappa) {
  require_trajectory(run);
  const Digraph& g = run.graph;
  if (kappa < 0 || kappa >= run.weights.size()) {
    throw std::invalid_argument("kappa must stay within the recorded weight history");
  }
  const auto& out = g.out_neighbors(i);
  const auto& in = g.in_neighbors(i);
  const bool is_out = std::binary_search(out.begin(), out.end(), m);
  const bool is_in = std::binary_search(in.begin(), in.end(), m);
  if (!is_out && !is_in) {
    throw std::invalid_argument("no channel between the chosen agents: the hidden-channel "
                                "assumption is violated");
  }
  // Hidden direction: i -> m when m is an out-neighbor, otherwise m -> i.
  const int hidden_recv = is_out ? m : i;
  const int hidden_send = is_out ? i : m;

  AttackerLog log;
  log.kappa = kappa;
  for (int k = 0; k <= kappa; ++k) {
    const NetworkState& s = run.states.at(k);
    const IterationWeights& w = run.weights.at(k);
    for (const auto& [r, snd] : g.edges()) {
      const std::string base = fmt("k=%d/ch=%d<-%d", k, r, snd);
      const auto& sender = s.agents[snd - 1];
      push_vector(log.entries, k, base + "/x", sender.x);
      push_vector(log.entries, k, base + "/Ly", diag_times(w.Lambda_of(snd), sender.y_alpha));
      if (k == 0 && r == hidden_recv && snd == hidden_send) continue;  // wiretap gap
      push_vector(log.entries, k, base + "/Cy", diag_times(w.C_at(r, snd), sender.y_alpha));
    }
  }
  return log;
}

AuditResult verify_eavesdropper(const RunRecord& run, int target_i, int accomplice_m,
                                const Eigen::VectorXd& delta, int kappa, double tolerance,
                                std::mt19937_64& rng) {
  ShadowSpec spec = make_shadow_spec(run, target_i, accomplice_m, delta, rng, std::nullopt,
                                     /*eavesdropper_restricted=*/true);
  ShadowRun shadow = construct_shadow(run, spec);
  RunRecord shadow_rec = replay_shadow(run, shadow);
  kappa = std::min(kappa, run.weights.size() - 1);

  AttackerLog la = eavesdropper_view(run, target_i, accomplice_m, kappa);
  AttackerLog lb = eavesdropper_view(shadow_rec, target_i, accomplice_m, kappa);
  if (la.entries.size() != lb.entries.size()) {
    throw std::logic_error("eavesdropper logs are structurally different");
  }
  AuditResult result;
  result.per_iteration_max.assign(kappa + 1, 0.0);
  for (size_t idx = 0; idx < la.entries.size(); ++idx) {
    if (la.entries[idx].label != lb.entries[idx].label) {
      throw std::logic_error("eavesdropper logs are structurally different");
    }
    const double dev = relative_deviation(la.entries[idx].value, lb.entries[idx].value);
    result.per_iteration_max[la.entries[idx].k] =
        std::max(result.per_iteration_max[la.entries[idx].k], dev);
    if (dev > result.max_deviation) {
      result.max_deviation = dev;
      result.worst_label = la.entries[idx].label;
    }
  }
  result.absorption_deviation = run.states.size() > 1
      ? state_deviation(run.states.at(1), shadow_rec.states.at(1))
      : 0.0;
  result.final_state_deviation = state_deviation(run.final_state, shadow_rec.final_state);
  result.pass = result.max_deviation <= tolerance && result.final_state_deviation <= tolerance;
  if (!result.pass) {
    result.note = "max deviation " + std::to_string(result.max_deviation) + " at " +
                  result.worst_label;
  }
  return result;
}

}  // namespace ppsd

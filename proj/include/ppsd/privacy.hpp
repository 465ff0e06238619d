#pragma once

#include <Eigen/Core>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "ppsd/engine.hpp"

namespace ppsd {

// One adversary-visible scalar. Labels encode (iteration, owner, field, ids,
// coordinate) and fix the canonical flattening order: agent id, then field,
// then coordinate, within each iteration.
struct LogEntry {
  int k = 0;
  std::string label;
  double value = 0.0;
};

struct AttackerLog {
  std::vector<int> adversaries;  // sorted; empty for an eavesdropper log
  int kappa = 0;
  std::vector<LogEntry> entries;
};

// Exact extraction of every information-set field visible to the corrupted
// agents over iterations 0..kappa: own states, sent and received values, own
// weights, in-row and out-column weights, and (for k >= 1) the weight sets of
// all other agents. Never touches any normal agent's y_beta.
AttackerLog record_view(const RunRecord& run, const std::vector<int>& adversaries, int kappa);

enum class ShadowCase { I, II };  // I: accomplice is an out-neighbor, II: in-neighbor

struct ShadowSpec {
  int target_i = 0;
  int accomplice_m = 0;
  ShadowCase case_tag = ShadowCase::I;
  Eigen::VectorXd delta;        // gradient perturbation of the target
  Eigen::VectorXd delta_alpha;  // split delta = delta_alpha + delta_beta
  Eigen::VectorXd delta_beta;
};

// Draws the delta split, resampling until every division in the shadow
// formulas stays away from zero. eavesdropper_restricted forces
// delta_alpha = 0 so only channel-invisible parameters change.
ShadowSpec make_shadow_spec(const RunRecord& run, int target_i, int accomplice_m,
                            const Eigen::VectorXd& delta, std::mt19937_64& rng,
                            std::optional<ShadowCase> force_case = std::nullopt,
                            bool eavesdropper_restricted = false);

struct ShadowRun {
  NetworkState initial;      // perturbed initial values, gradients re-cached
  WeightHistory weights;     // iteration 0 substituted, k >= 1 copied verbatim
  ProblemInstance instance;  // gradients shifted by +delta at i, -delta at m
};

// The full substitution from the indistinguishability construction: modified
// Lambda, C columns of i and m, and Phi weights at iteration 0; everything
// else copied. Coordinates with a zero split are copied bit-exactly.
ShadowRun construct_shadow(const RunRecord& run, const ShadowSpec& spec);

ProblemInstance shadow_instance(const ProblemInstance& inst, const ShadowSpec& spec);

struct AuditResult {
  bool pass = false;
  double max_deviation = 0.0;  // |a-b| / max(1, |a|, |b|) over all log entries
  std::string worst_label;
  std::vector<double> per_iteration_max;
  double absorption_deviation = 0.0;   // state mismatch right after iteration 0
  double final_state_deviation = 0.0;
  double gradient_shift_error = 0.0;   // how far grad~_i - grad_i is from delta
  std::string note;
};

// Replays the shadow end to end and compares the two attacker logs
// element-wise. Exposed separately so negative controls can tamper with the
// shadow before comparison.
AuditResult audit_with_shadow(const RunRecord& run, const ShadowRun& shadow,
                              const ShadowSpec& spec, const std::vector<int>& adversaries,
                              int kappa, double tolerance);

AuditResult verify_indistinguishable(const RunRecord& run, const ShadowSpec& spec,
                                     const std::vector<int>& adversaries, int kappa,
                                     double tolerance);

struct SweepResult {
  int passes = 0;
  int total = 0;
  std::vector<AuditResult> audits;
};

// Requires some neighbor of the target to remain uncorrupted. Each delta gets
// a fresh split draw; all passing witnesses an unbounded perturbation range.
SweepResult privacy_sweep(const RunRecord& run, int target_i, int accomplice_m,
                          const std::vector<Eigen::VectorXd>& deltas,
                          const std::vector<int>& adversaries, int kappa, double tolerance,
                          std::mt19937_64& rng);

// Gradient estimate at the consensus point, accumulated from the logged C
// products: minus the running sum of in-flow minus out-flow around agent i.
// Requires every neighbor of i corrupted; otherwise throws.
Eigen::VectorXd inference_attack(const AttackerLog& log, const Digraph& g, int target_i);

// All transmitted values on all channels over 0..kappa, except the iteration-0
// C product on the single hidden channel between i and m.
AttackerLog eavesdropper_view(const RunRecord& run, int i, int m, int kappa);

// Indistinguishability against the wiretapper: shadow restricted to
// parameters the eavesdropper never sees (delta_alpha = 0 split).
AuditResult verify_eavesdropper(const RunRecord& run, int target_i, int accomplice_m,
                                const Eigen::VectorXd& delta, int kappa, double tolerance,
                                std::mt19937_64& rng);

}  // namespace ppsd

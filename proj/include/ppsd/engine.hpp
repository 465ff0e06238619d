#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "ppsd/objective.hpp"
#include "ppsd/schedule.hpp"
#include "ppsd/topology.hpp"

namespace ppsd {

struct AgentState {
  Eigen::VectorXd x;
  Eigen::VectorXd y_alpha;
  Eigen::VectorXd y_beta;
};

// Stacked network state at one iteration. grads caches nabla f_i(x_i^k) so
// each gradient is evaluated exactly once per agent per step. v is the
// absolute-probability vector of the augmented chain, active from k = 1.
struct NetworkState {
  int k = 0;
  std::vector<AgentState> agents;       // [agent-1]
  std::vector<Eigen::VectorXd> grads;   // [agent-1]
  Eigen::VectorXd v;                    // length 2n
  bool v_active = false;
};

struct DiagnosticsRow {
  int k = 0;
  double residual = 0.0;        // ||x^k - 1 (x) x*||
  double tracking = 0.0;        // ||sum_i (y_alpha + y_beta) - sum_i grad f_i||
  double consensus_err = 0.0;   // ||x^k - 1 (x) xbar_w||
  double opt_gap = 0.0;         // ||1 (x) xbar_w - 1 (x) x*||
  double grad_est_err = 0.0;    // ||s - 1 v^T s||, zero until v activates
};

enum class Algorithm { ppsd, pushpull };

struct EngineConfig {
  double gamma = 0.0;  // 0 resolves to 1 / (2 n L)
  double eta = 0.0;    // 0 resolves to default_eta(graph)
  int k_max = 5000;
  double epsilon = 1e-8;  // stop once the stacked residual drops below; 0 disables
  std::uint64_t seed = 0;
  Algorithm algorithm = Algorithm::ppsd;
  std::string x0_policy = "gaussian";  // "zeros" | "gaussian"
  double x0_scale = 1.0;
  double y_alpha_magnitude = 1.0;  // initial y_alpha ~ U[-m, m]^d
  double k0_magnitude = 10.0;      // iteration-0 free weights ~ U[-m, m]
  bool record_trajectory = true;
  double divergence_threshold = 1e12;
};

struct RunRecord {
  EngineConfig config;  // resolved values
  Digraph graph;
  ProblemInstance instance;
  std::string algorithm;
  WeightHistory weights;             // empty when not recorded
  std::vector<NetworkState> states;  // k = 0..iterations when recorded
  std::vector<DiagnosticsRow> diagnostics;
  NetworkState final_state;
  std::string stop_reason;  // converged | max_iterations | diverged
  int iterations = 0;
};

// Supplies the weight set for each iteration. get(k) must be called with
// nondecreasing k; sources append to their history as they generate.
class ScheduleSource {
public:
  virtual ~ScheduleSource() = default;
  virtual const IterationWeights& get(int k) = 0;
  virtual const WeightHistory& history() const = 0;
};

class RandomSchedule : public ScheduleSource {
public:
  RandomSchedule(Digraph g, int d, double eta, double gamma, double k0_magnitude,
                 std::uint64_t seed);
  const IterationWeights& get(int k) override;
  const WeightHistory& history() const override { return history_; }

private:
  Digraph g_;
  int d_;
  double eta_, gamma_, k0_magnitude_;
  std::mt19937_64 rng_;
  WeightHistory history_;
};

class ReplaySchedule : public ScheduleSource {
public:
  explicit ReplaySchedule(WeightHistory history) : history_(std::move(history)) {}
  const IterationWeights& get(int k) override { return history_.at(k); }
  const WeightHistory& history() const override { return history_; }

private:
  WeightHistory history_;
};

// x per policy; y_alpha uniform in [-magnitude, magnitude]^d; y_beta chosen so
// y_alpha + y_beta equals the cached gradient bit-exactly.
NetworkState init_state(const ProblemInstance& inst, const EngineConfig& cfg,
                        std::mt19937_64& rng);

// One PPSD iteration. Requires w.k == s.k. The step size block Lambda_j is
// applied at the sender j inside the x update.
NetworkState ppsd_step(const NetworkState& s, const IterationWeights& w, const Digraph& g,
                       const ProblemInstance& inst);

double tracking_residual(const NetworkState& s, const ProblemInstance& inst);

struct ErrorTriplet {
  double consensus_err = 0.0;
  double opt_gap = 0.0;
  double grad_est_err = 0.0;
};

// The three weighted error norms with phi replaced by the supplied estimate.
// The s-term needs k >= 1 and reports zero before the v-sequence activates.
ErrorTriplet error_triplet(const NetworkState& s, const ProblemInstance& inst,
                           const Eigen::VectorXd& phi);

double residual_norm(const NetworkState& s, const ProblemInstance& inst);

// Full PPSD run with a generated schedule; fully reproducible from config+seed.
RunRecord run(const Digraph& g, const ProblemInstance& inst, const EngineConfig& cfg);

// Core loop against an externally supplied schedule and initial state; the
// privacy auditor uses this for shadow replays.
RunRecord run_with(const Digraph& g, const ProblemInstance& inst, const EngineConfig& cfg,
                   NetworkState initial, ScheduleSource& schedule);

// Baseline method: single tracker y, fixed uniform weights
// r_ij = 1/(|N_i^in|+1) and c_ij = 1/(|N_j^out|+1), step size at the receiver.
struct PushPullState {
  int k = 0;
  std::vector<Eigen::VectorXd> x, y, grads;  // [agent-1]
};
PushPullState pushpull_init(const ProblemInstance& inst, const EngineConfig& cfg,
                            std::mt19937_64& rng);
PushPullState pushpull_step(const PushPullState& s, const Digraph& g,
                            const ProblemInstance& inst, double gamma);

// Resolves gamma = 1/(2 n L) and eta = default_eta(g) when left at zero.
EngineConfig resolve_defaults(EngineConfig cfg, const Digraph& g, const ProblemInstance& inst);

}  // namespace ppsd

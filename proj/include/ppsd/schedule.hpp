#pragma once

#include <Eigen/Core>
#include <map>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "ppsd/topology.hpp"

namespace ppsd {

// Diagonal of one d x d weight block. Two representations behind one
// accessor: a full per-coordinate diagonal (iteration 0) or a single scalar
// times identity (iterations k >= 1).
class DiagWeight {
public:
  DiagWeight() = default;
  static DiagWeight constant(double value, int d);
  static DiagWeight diagonal(std::vector<double> entries);

  double operator()(int coord) const;  // 0-based coordinate
  int dim() const { return d_; }
  bool is_scalar() const { return scalar_; }
  double scalar_value() const;  // throws unless is_scalar()

private:
  bool scalar_ = true;
  double value_ = 0.0;
  std::vector<double> entries_;
  int d_ = 0;
};

// One iteration's full weight set. Matrix entries are keyed (row, col):
// R and A hold (i, j) for j in N_i^in u {i}; C holds (j, i) for
// j in N_i^out u {i}. Absent pairs are implicitly zero.
struct IterationWeights {
  int k = 0;
  int n = 0;
  int d = 0;
  double eta = 0.0;    // lower weight bound, meaningful for k >= 1
  double gamma = 0.0;  // Lambda scalar for k >= 1

  std::map<std::pair<int, int>, DiagWeight> R;
  std::map<std::pair<int, int>, DiagWeight> A;
  std::map<std::pair<int, int>, DiagWeight> C;
  std::vector<DiagWeight> Lambda;     // [agent-1]
  std::vector<DiagWeight> PhiAlpha;   // [agent-1]
  std::vector<DiagWeight> PhiBeta;    // [agent-1]

  const DiagWeight& R_at(int i, int j) const;
  const DiagWeight& A_at(int i, int j) const;
  const DiagWeight& C_at(int j, int i) const;
  const DiagWeight& Lambda_of(int i) const { return Lambda.at(i - 1); }
  const DiagWeight& PhiAlpha_of(int i) const { return PhiAlpha.at(i - 1); }
  const DiagWeight& PhiBeta_of(int i) const { return PhiBeta.at(i - 1); }
};

// Ordered weight sets from k = 0 upward; append-only by the engine.
struct WeightHistory {
  std::vector<IterationWeights> iterations;

  int size() const { return static_cast<int>(iterations.size()); }
  const IterationWeights& at(int k) const;
};

// w_q = (1 - m*eta) * ((1-eta) p_q + eta) / ((1-eta) sum(p) + m*eta) + eta.
// Outputs lie in [eta, 1] and sum to exactly one (up to rounding). Requires
// p_q in [0, 1] and m*eta <= 1.
std::vector<double> normalize_eta(const std::vector<double>& raw, double eta);

// 1 / (2 (maxdeg + 2)) with maxdeg = max_i max(|N_i^in|, |N_i^out|). Keeps the
// [eta, 1] simplex feasible for every agent including the decomposed sub-agent.
double default_eta(const Digraph& g);

// Iteration-0 regime: every free entry drawn uniformly from
// [-magnitude, magnitude] per coordinate; C_ii fixed by the closure rule
// C_ii = I - sum_j C_ji - PhiAlpha_i so augmented columns sum to one.
IterationWeights init_weights_k0(const Digraph& g, int d, double magnitude,
                                 std::mt19937_64& rng);

// Regime for k >= 1: R and A rows eta-normalized over N_i^in u {i}; the
// augmented C column eta-normalized over the decomposed out-neighborhood
// (out-neighbors, self, and the beta sub-agent); PhiBeta uniform in [eta, 1];
// Lambda = gamma * I.
IterationWeights weights_k(const Digraph& g, int k, int d, double eta, double gamma,
                           std::mt19937_64& rng);

// Empty result means all invariants for w.k hold within 1e-10.
std::vector<std::string> validate(const Digraph& g, const IterationWeights& w);

// Dense 2n x 2n augmented matrix [[C, I-PhiBeta], [PhiAlpha, PhiBeta]] for one
// coordinate. Validates first and throws std::invalid_argument on violations.
Eigen::MatrixXd assemble_augmented(const Digraph& g, const IterationWeights& w, int coord);

// Scalar-weight variant used for the v-sequence; requires k >= 1 weights.
Eigen::MatrixXd augmented_scalar(const Digraph& g, const IterationWeights& w);

nlohmann::json weight_history_to_json(const WeightHistory& h);
WeightHistory weight_history_from_json(const nlohmann::json& j);

}  // namespace ppsd

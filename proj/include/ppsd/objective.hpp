#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace ppsd {

using GradientOracle = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;

struct LocalObjective {
  int d = 0;
  GradientOracle gradient;
  double smoothness = 0.0;        // L_i
  double strong_convexity = 0.0;  // mu_i, may be zero locally
};

// Sum objective F(x) = sum_i f_i(x). Objectives are immutable; gradient
// oracles are pure functions, callable concurrently.
struct ProblemInstance {
  std::string kind;
  int n = 0;
  int d = 0;
  std::vector<LocalObjective> locals;  // [agent-1]
  double mu = 0.0;                     // global strong convexity of F
  double L = 0.0;                      // max_i L_i
  double Lbar = 0.0;                   // sum_i L_i
  std::optional<Eigen::VectorXd> minimizer;
  nlohmann::json meta;  // parameters and seeds, enough to rebuild

  const GradientOracle& gradient_of(int i) const { return locals.at(i - 1).gradient; }
};

// f_i(x) = 1/2 ||x - p_i||^2. Minimizer is the mean of the points.
ProblemInstance rendezvous(const std::vector<Eigen::VectorXd>& points);

// f_i(x) = ||Q_i x - m_i||^2 with gradient 2 Q_i^T (Q_i x - m_i). Minimizer
// solves the stacked normal equations; throws if they are singular.
ProblemInstance linear_regression(const std::vector<Eigen::MatrixXd>& Q,
                                  const std::vector<Eigen::VectorXd>& m);

ProblemInstance generate_rendezvous(int n, int d, double spread, std::uint64_t seed);

// Measurement model m_i = Q_i s0 + zeta_i: standard-normal s0 and Q entries,
// Q normalized by its spectral norm, noise N(0, noise^2).
ProblemInstance generate_linear_regression(int n, int d, int rows, double noise,
                                           std::uint64_t seed);

Eigen::VectorXd global_gradient_at(const ProblemInstance& inst, const Eigen::VectorXd& x);

struct SmoothnessConstants { double mu, L, Lbar; };
SmoothnessConstants smoothness_constants(const ProblemInstance& inst);

nlohmann::json instance_to_json(const ProblemInstance& inst);
ProblemInstance instance_from_json(const nlohmann::json& j);

}  // namespace ppsd

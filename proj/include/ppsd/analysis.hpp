#pragma once

#include <Eigen/Core>
#include <optional>
#include <vector>

#include "ppsd/schedule.hpp"

namespace ppsd {

struct RateFit {
  double lambda = 0.0;  // fitted geometric ratio exp(slope)
  double c = 0.0;       // prefactor exp(intercept)
  int window_begin = 0;
  int window_end = 0;   // exclusive
  double rmse = 0.0;    // residual of the log-linear fit
};

// Least-squares fit of log(residual) against k over [burn_in, end). Burn-in
// defaults to the first 10% of the series; iteration-0 randomness pollutes
// early residuals. Throws std::invalid_argument when the window is shorter
// than 10 points or contains nonpositive values.
RateFit fit_linear_rate(const std::vector<double>& residuals, double burn_in_fraction = 0.1);

// Ergodicity constants of the two weight chains plus the scalars feeding the
// small-gain matrix. Computation runs in log space; N values beyond the cap
// mark the instance intractable instead of overflowing.
struct TheoryConstants {
  int n = 0;
  int ntilde = 0;  // 2n
  double eta = 0.0, L = 0.0, mu = 0.0;
  double log_QR = 0.0, log_QP = 0.0;
  int N_R = 0, N_P = 0, N_bar = 0;
  double r_R = 0.0, r_P = 0.0;  // contraction factors at the returned N values
  double q1 = 0.0, q2 = 0.0, q3 = 0.0;
  double log_q1 = 0.0;
  bool tractable = false;
};

TheoryConstants theoretical_constants(int n, double eta, double L, double mu, int cap = 5000);

// Hand-assembled constants for synthetic experiments with the U machinery.
TheoryConstants synthetic_constants(double r_R, double r_P, double q1, double q2, double q3,
                                    int N_bar, int n, double eta, double L, double mu);

// Companion-block small-gain matrix of size 3*N_bar: top block row
// [U_a, U_b, ..., U_b, U_c], identities on the subdiagonal.
Eigen::MatrixXd build_U(double gamma, const TheoryConstants& c, int cap = 256);

// Largest eigenvalue modulus of a nonnegative matrix: power iteration from the
// all-ones vector, dense eigensolver fallback if the iteration stalls.
double spectral_radius(const Eigen::MatrixXd& M, double tol = 1e-10, int max_iter = 200000);

struct StepSizeAdvice {
  bool feasible = false;
  double gamma = 0.0;  // largest step size found with rho < 1
  double rho = 0.0;    // spectral radius at that step size
};

// Log-spaced scan plus bisection for the largest gamma with rho(U(gamma)) < 1.
StepSizeAdvice step_size_advisor(const TheoryConstants& c, double gamma_lo = 1e-12,
                                 double gamma_hi = 1.0);

// Absolute-probability estimate for the row-stochastic chain: backward
// recursion phi^k = (R^k)^T phi^{k+1} from a terminal uniform guess. Entry 0
// of the result corresponds to iteration k_from.
std::vector<Eigen::VectorXd> estimate_phi_backward(const Digraph& g, const WeightHistory& h,
                                                   int k_from, int k_to);

}  // namespace ppsd

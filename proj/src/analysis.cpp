#include "ppsd/analysis.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <stdexcept>

namespace ppsd {

RateFit fit_linear_rate(const std::vector<double>& residuals, double burn_in_fraction) {
  const int len = static_cast<int>(residuals.size());
  const int begin = static_cast<int>(std::floor(burn_in_fraction * len));
  const int count = len - begin;
  if (count < 10) throw std::invalid_argument("rate fit needs at least 10 points after burn-in");
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (int k = begin; k < len; ++k) {
    if (!(residuals[k] > 0.0)) {
      throw std::invalid_argument("rate fit undefined: nonpositive residual at k = " +
                                  std::to_string(k));
    }
    const double x = k;
    const double y = std::log(residuals[k]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  const double m = count;
  const double slope = (m * sxy - sx * sy) / (m * sxx - sx * sx);
  const double intercept = (sy - slope * sx) / m;
  double sq = 0.0;
  for (int k = begin; k < len; ++k) {
    const double e = std::log(residuals[k]) - (slope * k + intercept);
    sq += e * e;
  }
  RateFit fit;
  fit.lambda = std::exp(slope);
  fit.c = std::exp(intercept);
  fit.window_begin = begin;
  fit.window_end = len;
  fit.rmse = std::sqrt(sq / m);
  return fit;
}

namespace {

// Smallest integer N with log(Q) + (N-1)/(denom) * log_contraction < 0,
// where log_contraction < 0. Returns 0 if it exceeds the cap.
int smallest_N(double log_Q, double log_contraction, int denom, int cap) {
  if (!(log_contraction < 0.0)) return 0;
  const double need = 1.0 + denom * (log_Q / (-log_contraction));
  int N = std::max(1, static_cast<int>(std::ceil(need)));
  while (N <= cap && log_Q + (static_cast<double>(N - 1) / denom) * log_contraction >= 0.0) ++N;
  return N <= cap ? N : 0;
}

}  // namespace

TheoryConstants theoretical_constants(int n, double eta, double L, double mu, int cap) {
  if (n < 2) throw std::invalid_argument("constants need n >= 2");
  if (eta <= 0.0 || eta >= 1.0) throw std::invalid_argument("eta must lie in (0, 1)");
  TheoryConstants c;
  c.n = n;
  c.ntilde = 2 * n;
  c.eta = eta;
  c.L = L;
  c.mu = mu;
  const double nt = c.ntilde;
  const double log_eta = std::log(eta);

  // Q_R = 2n (1 + eta^{-(n-1)}) / (1 - eta^{n-1})
  const double a_R = -(n - 1) * log_eta;  // log eta^{-(n-1)}
  const double log_1p_aR = a_R > 700.0 ? a_R : std::log1p(std::exp(a_R));
  const double log_den_R = std::log1p(-std::exp((n - 1) * log_eta));
  c.log_QR = std::log(2.0 * n) + log_1p_aR - log_den_R;

  // Q_P = 2*ntilde (1 + (ntilde eta^{-ntilde})^{ntilde-1}) / (1 - (eta^{ntilde}/ntilde)^{n-1})
  const double a_P = (nt - 1.0) * (std::log(nt) - nt * log_eta);
  const double log_1p_aP = a_P > 700.0 ? a_P : std::log1p(std::exp(a_P));
  const double log_contr_P = nt * log_eta - std::log(nt);  // log(eta^nt / ntilde), < 0
  const double log_den_P = std::log1p(-std::exp((n - 1) * log_contr_P));
  c.log_QP = std::log(2.0 * nt) + log_1p_aP - log_den_P;

  const double log_shrink_R = std::log1p(-std::exp((n - 1) * log_eta));       // log(1 - eta^{n-1})
  const double log_shrink_P = std::log1p(-std::exp((nt - 1) * log_contr_P));  // log(1 - (eta^nt/nt)^{nt-1})
  c.N_R = smallest_N(c.log_QR, log_shrink_R, n - 1, cap);
  c.N_P = smallest_N(c.log_QP, log_shrink_P, static_cast<int>(nt) - 1, cap);
  if (c.N_R > 0) {
    c.r_R = std::exp(c.log_QR + (static_cast<double>(c.N_R - 1) / (n - 1)) * log_shrink_R);
  }
  if (c.N_P > 0) {
    c.r_P = std::exp(c.log_QP + (static_cast<double>(c.N_P - 1) / (nt - 1)) * log_shrink_P);
  }
  c.log_q1 = std::log(nt) + 0.5 * std::log(static_cast<double>(n)) + std::log(L) + c.log_QP -
             (nt - 1.0) * log_eta;
  c.q1 = std::exp(c.log_q1);  // may overflow to inf; build_U guards
  c.q2 = std::exp(c.log_QR) * std::sqrt(static_cast<double>(n));
  c.q3 = mu / n;
  c.tractable = (c.N_R > 0 && c.N_P > 0);
  if (c.tractable) c.N_bar = std::max(c.N_R, c.N_P);
  return c;
}

TheoryConstants synthetic_constants(double r_R, double r_P, double q1, double q2, double q3,
                                    int N_bar, int n, double eta, double L, double mu) {
  TheoryConstants c;
  c.n = n;
  c.ntilde = 2 * n;
  c.eta = eta;
  c.L = L;
  c.mu = mu;
  c.r_R = r_R;
  c.r_P = r_P;
  c.q1 = q1;
  c.q2 = q2;
  c.q3 = q3;
  c.log_q1 = std::log(q1);
  c.N_R = c.N_P = c.N_bar = N_bar;
  c.tractable = true;
  return c;
}

Eigen::MatrixXd build_U(double gamma, const TheoryConstants& c, int cap) {
  if (!c.tractable) throw std::invalid_argument("constants are intractable");
  if (c.N_bar < 2) throw std::invalid_argument("companion form needs N_bar >= 2");
  if (c.N_bar > cap) throw std::invalid_argument("N_bar = " + std::to_string(c.N_bar) +
                                                 " exceeds the cap " + std::to_string(cap));
  const double n = c.n;
  const double L = c.L;
  const double q1 = c.q1, q2 = c.q2, q3 = c.q3;
  const double eta_pow = std::pow(c.eta, n - 1.0);

  Eigen::Matrix3d Ua, Ub, Uc;
  Ua << gamma * n * L * q2, gamma * n * L * q2, gamma * q2,
        gamma * n * L,      1.0 - gamma * eta_pow * q3, gamma * n,
        2 * q1 + gamma * n * L * q1, gamma * n * L * q1, gamma * q1;
  Ub << gamma * n * L * q2, gamma * n * L * q2, gamma * q2,
        0, 0, 0,
        2 * q1 + gamma * n * L * q1, gamma * n * L * q1, gamma * q1;
  Uc << c.r_R + gamma * n * L * q2, gamma * n * L * q2, gamma * q2,
        0, 0, 0,
        2 * q1 + gamma * n * L * q1, gamma * n * L * q1, c.r_P + gamma * q1;

  if (!Ua.allFinite() || !Ub.allFinite() || !Uc.allFinite()) {
    throw std::invalid_argument("small-gain blocks overflow; constants too large for this gamma");
  }

  const int N = c.N_bar;
  Eigen::MatrixXd U = Eigen::MatrixXd::Zero(3 * N, 3 * N);
  U.block<3, 3>(0, 0) = Ua;
  for (int b = 1; b + 1 < N; ++b) U.block<3, 3>(0, 3 * b) = Ub;
  U.block<3, 3>(0, 3 * (N - 1)) = Uc;
  for (int b = 1; b < N; ++b) U.block<3, 3>(3 * b, 3 * (b - 1)) = Eigen::Matrix3d::Identity();
  return U;
}

double spectral_radius(const Eigen::MatrixXd& M, double tol, int max_iter) {
  if (M.rows() != M.cols() || M.rows() == 0) throw std::invalid_argument("matrix must be square");
  Eigen::VectorXd x = Eigen::VectorXd::Ones(M.rows());
  x.normalize();
  double est = 0.0;
  for (int it = 0; it < max_iter; ++it) {
    Eigen::VectorXd y = M * x;
    const double norm = y.norm();
    if (norm == 0.0) return 0.0;
    const double prev = est;
    est = norm;
    x = y / norm;
    if (it > 0 && std::abs(est - prev) <= tol * std::max(1.0, std::abs(est))) return est;
  }
  // Stalled: dominant pair too close or complex. Dense QR is exact and only
  // hit on small or ill-separated problems.
  Eigen::EigenSolver<Eigen::MatrixXd> es(M, /*computeEigenvectors=*/false);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

StepSizeAdvice step_size_advisor(const TheoryConstants& c, double gamma_lo, double gamma_hi) {
  if (!c.tractable) throw std::invalid_argument("constants are intractable");
  auto rho_at = [&](double gamma) -> double {
    try {
      return spectral_radius(build_U(gamma, c));
    } catch (const std::invalid_argument&) {
      return std::numeric_limits<double>::infinity();  // overflow counts as infeasible
    }
  };

  StepSizeAdvice advice;
  const int kGridPoints = 60;
  double last_ok = 0.0, first_bad = 0.0;
  const double log_lo = std::log(gamma_lo), log_hi = std::log(gamma_hi);
  for (int t = 0; t < kGridPoints; ++t) {
    const double gamma = std::exp(log_lo + (log_hi - log_lo) * t / (kGridPoints - 1));
    const double rho = rho_at(gamma);
    if (rho < 1.0) {
      last_ok = gamma;
      advice.feasible = true;
      advice.gamma = gamma;
      advice.rho = rho;
    } else if (advice.feasible && first_bad == 0.0) {
      first_bad = gamma;
    }
  }
  if (!advice.feasible) return advice;
  if (first_bad == 0.0) return advice;  // feasible through the whole range
  double lo = last_ok, hi = first_bad;
  for (int it = 0; it < 48; ++it) {
    const double mid = std::sqrt(lo * hi);
    if (rho_at(mid) < 1.0) lo = mid; else hi = mid;
  }
  advice.gamma = lo;
  advice.rho = rho_at(lo);
  return advice;
}

std::vector<Eigen::VectorXd> estimate_phi_backward(const Digraph& g, const WeightHistory& h,
                                                   int k_from, int k_to) {
  if (k_from < 1 || k_to < k_from || k_to >= h.size()) {
    throw std::invalid_argument("phi estimation needs 1 <= k_from <= k_to < history length");
  }
  const int n = g.n();
  std::vector<Eigen::VectorXd> phis(k_to - k_from + 1);
  Eigen::VectorXd phi = Eigen::VectorXd::Constant(n, 1.0 / n);
  for (int k = k_to; k >= k_from; --k) {
    const IterationWeights& w = h.at(k);
    Eigen::VectorXd prev = Eigen::VectorXd::Zero(n);
    for (const auto& [key, dw] : w.R) {
      prev(key.second - 1) += dw(0) * phi(key.first - 1);  // phi^k = (R^k)^T phi^{k+1}
    }
    phi = prev;
    phis[k - k_from] = phi;
  }
  return phis;
}

}  // namespace ppsd

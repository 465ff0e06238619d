#include "ppsd/engine.hpp"

#include <cmath>
#include <stdexcept>

namespace ppsd {

RandomSchedule::RandomSchedule(Digraph g, int d, double eta, double gamma, double k0_magnitude,
                               std::uint64_t seed)
    : g_(std::move(g)), d_(d), eta_(eta), gamma_(gamma), k0_magnitude_(k0_magnitude), rng_(seed) {}

const IterationWeights& RandomSchedule::get(int k) {
  if (k < history_.size()) return history_.at(k);
  if (k != history_.size()) throw std::logic_error("schedule must be generated in order");
  IterationWeights w = (k == 0) ? init_weights_k0(g_, d_, k0_magnitude_, rng_)
                                : weights_k(g_, k, d_, eta_, gamma_, rng_);
  history_.iterations.push_back(std::move(w));
  return history_.iterations.back();
}

EngineConfig resolve_defaults(EngineConfig cfg, const Digraph& g, const ProblemInstance& inst) {
  if (cfg.gamma <= 0.0) cfg.gamma = 1.0 / (2.0 * inst.n * inst.L);
  if (cfg.eta <= 0.0) cfg.eta = default_eta(g);
  return cfg;
}

namespace {

// Splits g into (a, b) with a + b == g bit-exactly. Tries the drawn value
// first, falls back to exact halving (g/2 is exact in binary).
std::pair<double, double> exact_split(double g, double a_raw) {
  double a = a_raw;
  for (int tries = 0; tries < 4; ++tries) {
    const double b = g - a;
    if (a + b == g) return {a, b};
    a = g - b;
  }
  const double half = 0.5 * g;
  return {half, g - half};
}

}  // namespace

NetworkState init_state(const ProblemInstance& inst, const EngineConfig& cfg,
                        std::mt19937_64& rng) {
  const int n = inst.n;
  const int d = inst.d;
  NetworkState s;
  s.k = 0;
  s.agents.resize(n);
  s.grads.resize(n);
  std::normal_distribution<double> gauss(0.0, cfg.x0_scale);
  std::uniform_real_distribution<double> ymag(-cfg.y_alpha_magnitude, cfg.y_alpha_magnitude);
  for (int i = 0; i < n; ++i) {
    Eigen::VectorXd x(d);
    if (cfg.x0_policy == "zeros") {
      x.setZero();
    } else if (cfg.x0_policy == "gaussian") {
      for (int l = 0; l < d; ++l) x(l) = gauss(rng);
    } else {
      throw std::invalid_argument("unknown x0 policy: " + cfg.x0_policy);
    }
    Eigen::VectorXd grad = inst.locals[i].gradient(x);
    Eigen::VectorXd ya(d), yb(d);
    for (int l = 0; l < d; ++l) {
      auto [a, b] = exact_split(grad(l), ymag(rng));
      ya(l) = a;
      yb(l) = b;
    }
    s.agents[i] = {std::move(x), std::move(ya), std::move(yb)};
    s.grads[i] = std::move(grad);
  }
  s.v = Eigen::VectorXd::Zero(2 * n);
  s.v_active = false;
  return s;
}

NetworkState ppsd_step(const NetworkState& s, const IterationWeights& w, const Digraph& g,
                       const ProblemInstance& inst) {
  if (w.k != s.k) {
    throw std::invalid_argument("weight set is for iteration " + std::to_string(w.k) +
                                ", state is at iteration " + std::to_string(s.k));
  }
  const int n = inst.n;
  const int d = inst.d;
  NetworkState next;
  next.k = s.k + 1;
  next.agents.resize(n);
  next.grads.resize(n);

  // x_i' = sum_j R_ij x_j - A_ij Lambda_j y_{j,alpha}, Lambda applied at the sender.
  for (int i = 1; i <= n; ++i) {
    Eigen::VectorXd x = Eigen::VectorXd::Zero(d);
    std::vector<int> support = g.in_neighbors(i);
    support.push_back(i);
    for (int j : support) {
      const auto& Rij = w.R_at(i, j);
      const auto& Aij = w.A_at(i, j);
      const auto& Lj = w.Lambda_of(j);
      const auto& xj = s.agents[j - 1].x;
      const auto& yaj = s.agents[j - 1].y_alpha;
      for (int l = 0; l < d; ++l) {
        x(l) += Rij(l) * xj(l) - Aij(l) * (Lj(l) * yaj(l));
      }
    }
    next.agents[i - 1].x = std::move(x);
    next.grads[i - 1] = inst.locals[i - 1].gradient(next.agents[i - 1].x);
  }

  for (int i = 1; i <= n; ++i) {
    const auto& self = s.agents[i - 1];
    const auto& phi_a = w.PhiAlpha_of(i);
    const auto& phi_b = w.PhiBeta_of(i);

    Eigen::VectorXd ya = Eigen::VectorXd::Zero(d);
    std::vector<int> support = g.in_neighbors(i);
    support.push_back(i);
    for (int j : support) {
      const auto& Cij = w.C_at(i, j);
      const auto& yaj = s.agents[j - 1].y_alpha;
      for (int l = 0; l < d; ++l) ya(l) += Cij(l) * yaj(l);
    }
    for (int l = 0; l < d; ++l) ya(l) += (1.0 - phi_b(l)) * self.y_beta(l);

    Eigen::VectorXd yb(d);
    for (int l = 0; l < d; ++l) {
      yb(l) = phi_a(l) * self.y_alpha(l) + phi_b(l) * self.y_beta(l) +
              (next.grads[i - 1](l) - s.grads[i - 1](l));
    }
    next.agents[i - 1].y_alpha = std::move(ya);
    next.agents[i - 1].y_beta = std::move(yb);
  }

  if (s.k == 0) {
    next.v = Eigen::VectorXd::Constant(2 * n, 1.0 / (2.0 * n));
    next.v_active = true;
  } else {
    if (!s.v_active) throw std::logic_error("v-sequence inactive past iteration 1");
    next.v = augmented_scalar(g, w) * s.v;
    next.v_active = true;
  }
  return next;
}

double tracking_residual(const NetworkState& s, const ProblemInstance& inst) {
  Eigen::VectorXd ysum = Eigen::VectorXd::Zero(inst.d);
  Eigen::VectorXd gsum = Eigen::VectorXd::Zero(inst.d);
  for (int i = 0; i < inst.n; ++i) {
    ysum += s.agents[i].y_alpha + s.agents[i].y_beta;
    gsum += s.grads[i];
  }
  return (ysum - gsum).norm();
}

double residual_norm(const NetworkState& s, const ProblemInstance& inst) {
  if (!inst.minimizer) return std::numeric_limits<double>::quiet_NaN();
  double sq = 0.0;
  for (int i = 0; i < inst.n; ++i) sq += (s.agents[i].x - *inst.minimizer).squaredNorm();
  return std::sqrt(sq);
}

ErrorTriplet error_triplet(const NetworkState& s, const ProblemInstance& inst,
                           const Eigen::VectorXd& phi) {
  const int n = inst.n;
  const int d = inst.d;
  if (phi.size() != n) throw std::invalid_argument("phi estimate must have length n");
  ErrorTriplet out;

  Eigen::VectorXd xbar = Eigen::VectorXd::Zero(d);
  for (int i = 0; i < n; ++i) xbar += phi(i) * s.agents[i].x;
  double consensus_sq = 0.0;
  for (int i = 0; i < n; ++i) consensus_sq += (s.agents[i].x - xbar).squaredNorm();
  out.consensus_err = std::sqrt(consensus_sq);
  if (inst.minimizer) {
    out.opt_gap = std::sqrt(static_cast<double>(n)) * (xbar - *inst.minimizer).norm();
  } else {
    out.opt_gap = std::numeric_limits<double>::quiet_NaN();
  }

  if (s.v_active) {
    // s = V^{-1} y over the 2n sub-agents (alpha block first), then remove
    // the rank-one weighted average 1 v^T s.
    Eigen::MatrixXd svec(2 * n, d);
    for (int i = 0; i < n; ++i) {
      svec.row(i) = s.agents[i].y_alpha.transpose() / s.v(i);
      svec.row(n + i) = s.agents[i].y_beta.transpose() / s.v(n + i);
    }
    Eigen::RowVectorXd avg = Eigen::RowVectorXd::Zero(d);
    for (int r = 0; r < 2 * n; ++r) avg += s.v(r) * svec.row(r);
    double sq = 0.0;
    for (int r = 0; r < 2 * n; ++r) sq += (svec.row(r) - avg).squaredNorm();
    out.grad_est_err = std::sqrt(sq);
  }
  return out;
}

namespace {

DiagnosticsRow make_diagnostics(const NetworkState& s, const ProblemInstance& inst) {
  DiagnosticsRow row;
  row.k = s.k;
  row.residual = residual_norm(s, inst);
  row.tracking = tracking_residual(s, inst);
  const Eigen::VectorXd phi = Eigen::VectorXd::Constant(inst.n, 1.0 / inst.n);
  ErrorTriplet t = error_triplet(s, inst, phi);
  row.consensus_err = t.consensus_err;
  row.opt_gap = t.opt_gap;
  row.grad_est_err = t.grad_est_err;
  return row;
}

RunRecord run_pushpull(const Digraph& g, const ProblemInstance& inst, const EngineConfig& cfg) {
  std::mt19937_64 rng(cfg.seed);
  PushPullState s = pushpull_init(inst, cfg, rng);
  RunRecord rec;
  rec.config = cfg;
  rec.graph = g;
  rec.instance = inst;
  rec.algorithm = "pushpull";

  auto to_network = [&](const PushPullState& ps) {
    NetworkState ns;
    ns.k = ps.k;
    ns.agents.resize(inst.n);
    ns.grads = ps.grads;
    for (int i = 0; i < inst.n; ++i) {
      ns.agents[i].x = ps.x[i];
      ns.agents[i].y_alpha = ps.y[i];
      ns.agents[i].y_beta = Eigen::VectorXd::Zero(inst.d);
    }
    ns.v = Eigen::VectorXd::Zero(2 * inst.n);
    return ns;
  };

  std::string stop = "max_iterations";
  NetworkState view = to_network(s);
  if (cfg.record_trajectory) rec.states.push_back(view);
  rec.diagnostics.push_back(make_diagnostics(view, inst));
  for (int k = 0; k < cfg.k_max; ++k) {
    s = pushpull_step(s, g, inst, cfg.gamma);
    view = to_network(s);
    if (cfg.record_trajectory) rec.states.push_back(view);
    rec.diagnostics.push_back(make_diagnostics(view, inst));
    const double res = rec.diagnostics.back().residual;
    if (std::isfinite(res) && res > cfg.divergence_threshold) {
      stop = "diverged";
      break;
    }
    if (cfg.epsilon > 0.0 && std::isfinite(res) && res < cfg.epsilon) {
      stop = "converged";
      break;
    }
  }
  rec.final_state = std::move(view);
  rec.stop_reason = stop;
  rec.iterations = rec.final_state.k;
  return rec;
}

}  // namespace

RunRecord run_with(const Digraph& g, const ProblemInstance& inst, const EngineConfig& cfg,
                   NetworkState initial, ScheduleSource& schedule) {
  RunRecord rec;
  rec.config = cfg;
  rec.graph = g;
  rec.instance = inst;
  rec.algorithm = "ppsd";

  NetworkState s = std::move(initial);
  if (cfg.record_trajectory) rec.states.push_back(s);
  rec.diagnostics.push_back(make_diagnostics(s, inst));
  std::string stop = "max_iterations";
  for (int k = 0; k < cfg.k_max; ++k) {
    const IterationWeights& w = schedule.get(k);
    s = ppsd_step(s, w, g, inst);
    if (cfg.record_trajectory) rec.states.push_back(s);
    rec.diagnostics.push_back(make_diagnostics(s, inst));
    const double res = rec.diagnostics.back().residual;
    if (std::isfinite(res) && res > cfg.divergence_threshold) {
      stop = "diverged";
      break;
    }
    if (cfg.epsilon > 0.0 && std::isfinite(res) && res < cfg.epsilon) {
      stop = "converged";
      break;
    }
  }
  if (cfg.record_trajectory) {
    // Keep only the weights actually consumed.
    rec.weights = schedule.history();
    rec.weights.iterations.resize(s.k);
  }
  rec.final_state = std::move(s);
  rec.stop_reason = stop;
  rec.iterations = rec.final_state.k;
  return rec;
}

RunRecord run(const Digraph& g, const ProblemInstance& inst, const EngineConfig& raw_cfg) {
  if (!is_strongly_connected(g)) {
    throw std::invalid_argument("run requires a strongly connected digraph");
  }
  if (g.n() != inst.n) throw std::invalid_argument("graph and problem sizes differ");
  EngineConfig cfg = resolve_defaults(raw_cfg, g, inst);
  if (cfg.algorithm == Algorithm::pushpull) return run_pushpull(g, inst, cfg);

  std::mt19937_64 rng(cfg.seed);
  NetworkState s0 = init_state(inst, cfg, rng);
  // Weight draws continue on the same stream after the state draws.
  RandomSchedule schedule(g, inst.d, cfg.eta, cfg.gamma, cfg.k0_magnitude, rng());
  return run_with(g, inst, cfg, std::move(s0), schedule);
}

PushPullState pushpull_init(const ProblemInstance& inst, const EngineConfig& cfg,
                            std::mt19937_64& rng) {
  PushPullState s;
  s.k = 0;
  s.x.resize(inst.n);
  s.y.resize(inst.n);
  s.grads.resize(inst.n);
  std::normal_distribution<double> gauss(0.0, cfg.x0_scale);
  for (int i = 0; i < inst.n; ++i) {
    Eigen::VectorXd x(inst.d);
    if (cfg.x0_policy == "zeros") {
      x.setZero();
    } else {
      for (int l = 0; l < inst.d; ++l) x(l) = gauss(rng);
    }
    s.grads[i] = inst.locals[i].gradient(x);
    s.y[i] = s.grads[i];
    s.x[i] = std::move(x);
  }
  return s;
}

PushPullState pushpull_step(const PushPullState& s, const Digraph& g,
                            const ProblemInstance& inst, double gamma) {
  const int n = inst.n;
  PushPullState next;
  next.k = s.k + 1;
  next.x.resize(n);
  next.y.resize(n);
  next.grads.resize(n);
  for (int i = 1; i <= n; ++i) {
    const double r = 1.0 / (g.in_degree(i) + 1);
    Eigen::VectorXd x = r * s.x[i - 1];
    for (int j : g.in_neighbors(i)) x += r * s.x[j - 1];
    x -= gamma * s.y[i - 1];
    next.grads[i - 1] = inst.locals[i - 1].gradient(x);
    next.x[i - 1] = std::move(x);
  }
  for (int i = 1; i <= n; ++i) {
    // c_ij = 1/(|N_j^out| + 1), set by the sender j.
    Eigen::VectorXd y = (1.0 / (g.out_degree(i) + 1)) * s.y[i - 1];
    for (int j : g.in_neighbors(i)) y += (1.0 / (g.out_degree(j) + 1)) * s.y[j - 1];
    y += next.grads[i - 1] - s.grads[i - 1];
    next.y[i - 1] = std::move(y);
  }
  return next;
}

}  // namespace ppsd

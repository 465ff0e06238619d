#include "ppsd/objective.hpp"

#include <Eigen/Dense>
#include <random>
#include <stdexcept>

namespace ppsd {

ProblemInstance rendezvous(const std::vector<Eigen::VectorXd>& points) {
  if (points.empty()) throw std::invalid_argument("rendezvous needs at least one point");
  const int d = static_cast<int>(points.front().size());
  ProblemInstance inst;
  inst.kind = "rendezvous";
  inst.n = static_cast<int>(points.size());
  inst.d = d;
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(d);
  nlohmann::json pts = nlohmann::json::array();
  for (const auto& p : points) {
    if (p.size() != d) throw std::invalid_argument("rendezvous points have mismatched dimensions");
    LocalObjective f;
    f.d = d;
    f.gradient = [p](const Eigen::VectorXd& x) -> Eigen::VectorXd { return x - p; };
    f.smoothness = 1.0;
    f.strong_convexity = 1.0;
    inst.locals.push_back(std::move(f));
    mean += p;
    pts.push_back(std::vector<double>(p.data(), p.data() + d));
  }
  mean /= static_cast<double>(inst.n);
  inst.minimizer = mean;
  inst.mu = static_cast<double>(inst.n);
  inst.L = 1.0;
  inst.Lbar = static_cast<double>(inst.n);
  inst.meta = {{"kind", "rendezvous"}, {"points", pts}};
  return inst;
}

ProblemInstance linear_regression(const std::vector<Eigen::MatrixXd>& Q,
                                  const std::vector<Eigen::VectorXd>& m) {
  if (Q.empty() || Q.size() != m.size()) {
    throw std::invalid_argument("linear_regression needs matching Q and m lists");
  }
  const int d = static_cast<int>(Q.front().cols());
  ProblemInstance inst;
  inst.kind = "linear_regression";
  inst.n = static_cast<int>(Q.size());
  inst.d = d;

  Eigen::MatrixXd normal = Eigen::MatrixXd::Zero(d, d);
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(d);
  nlohmann::json qj = nlohmann::json::array(), mj = nlohmann::json::array();
  for (int i = 0; i < inst.n; ++i) {
    if (Q[i].cols() != d || Q[i].rows() != m[i].size()) {
      throw std::invalid_argument("Q/m shapes are not conformable at agent " + std::to_string(i + 1));
    }
    const Eigen::MatrixXd Qi = Q[i];
    const Eigen::VectorXd mi = m[i];
    LocalObjective f;
    f.d = d;
    f.gradient = [Qi, mi](const Eigen::VectorXd& x) -> Eigen::VectorXd {
      return 2.0 * Qi.transpose() * (Qi * x - mi);
    };
    const double sigma_max = Qi.jacobiSvd().singularValues()(0);
    f.smoothness = 2.0 * sigma_max * sigma_max;
    const Eigen::MatrixXd QtQ = Qi.transpose() * Qi;
    f.strong_convexity =
        2.0 * Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(QtQ).eigenvalues().minCoeff();
    inst.locals.push_back(std::move(f));
    normal += QtQ;
    rhs += Qi.transpose() * mi;

    nlohmann::json rows = nlohmann::json::array();
    for (int r = 0; r < Qi.rows(); ++r) {
      std::vector<double> row(d);
      for (int c = 0; c < d; ++c) row[c] = Qi(r, c);
      rows.push_back(row);
    }
    qj.push_back(rows);
    mj.push_back(std::vector<double>(mi.data(), mi.data() + mi.size()));
  }

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(normal);
  const double lmin = es.eigenvalues().minCoeff();
  const double lmax = es.eigenvalues().maxCoeff();
  if (lmin <= 1e-12 * std::max(1.0, lmax)) {
    throw std::runtime_error("degenerate problem: stacked normal matrix is singular");
  }
  inst.minimizer = normal.ldlt().solve(rhs);
  inst.mu = 2.0 * lmin;
  inst.L = 0.0;
  inst.Lbar = 0.0;
  for (const auto& f : inst.locals) {
    inst.L = std::max(inst.L, f.smoothness);
    inst.Lbar += f.smoothness;
  }
  inst.meta = {{"kind", "linear_regression"}, {"Q", qj}, {"m", mj}};
  return inst;
}

ProblemInstance generate_rendezvous(int n, int d, double spread, std::uint64_t seed) {
  if (n < 1 || d < 1) throw std::invalid_argument("need n >= 1 and d >= 1");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> draw(-spread, spread);
  std::vector<Eigen::VectorXd> points;
  for (int i = 0; i < n; ++i) {
    Eigen::VectorXd p(d);
    for (int l = 0; l < d; ++l) p(l) = draw(rng);
    points.push_back(std::move(p));
  }
  ProblemInstance inst = rendezvous(points);
  inst.meta["seed"] = seed;
  inst.meta["spread"] = spread;
  return inst;
}

ProblemInstance generate_linear_regression(int n, int d, int rows, double noise,
                                           std::uint64_t seed) {
  if (n < 1 || d < 1 || rows < 1) throw std::invalid_argument("need n, d, rows >= 1");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> stdnormal(0.0, 1.0);
  std::normal_distribution<double> noisy(0.0, noise);
  Eigen::VectorXd s0(d);
  for (int l = 0; l < d; ++l) s0(l) = stdnormal(rng);
  std::vector<Eigen::MatrixXd> Q;
  std::vector<Eigen::VectorXd> m;
  for (int i = 0; i < n; ++i) {
    Eigen::MatrixXd Qi(rows, d);
    for (int r = 0; r < rows; ++r) {
      for (int c = 0; c < d; ++c) Qi(r, c) = stdnormal(rng);
    }
    Qi /= Qi.jacobiSvd().singularValues()(0);  // spectral-norm normalization
    Eigen::VectorXd zeta(rows);
    for (int r = 0; r < rows; ++r) zeta(r) = noisy(rng);
    m.push_back(Qi * s0 + zeta);
    Q.push_back(std::move(Qi));
  }
  ProblemInstance inst = linear_regression(Q, m);
  inst.meta["seed"] = seed;
  inst.meta["rows"] = rows;
  inst.meta["noise"] = noise;
  return inst;
}

Eigen::VectorXd global_gradient_at(const ProblemInstance& inst, const Eigen::VectorXd& x) {
  if (x.size() != inst.d) throw std::invalid_argument("point dimension mismatch");
  Eigen::VectorXd g = Eigen::VectorXd::Zero(inst.d);
  for (const auto& f : inst.locals) g += f.gradient(x);
  return g;
}

SmoothnessConstants smoothness_constants(const ProblemInstance& inst) {
  return {inst.mu, inst.L, inst.Lbar};
}

nlohmann::json instance_to_json(const ProblemInstance& inst) { return inst.meta; }

ProblemInstance instance_from_json(const nlohmann::json& j) {
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "rendezvous") {
    std::vector<Eigen::VectorXd> points;
    for (const auto& pj : j.at("points")) {
      auto v = pj.get<std::vector<double>>();
      points.push_back(Eigen::Map<Eigen::VectorXd>(v.data(), static_cast<int>(v.size())));
    }
    ProblemInstance inst = rendezvous(points);
    if (j.contains("seed")) inst.meta["seed"] = j.at("seed");
    return inst;
  }
  if (kind == "linear_regression") {
    std::vector<Eigen::MatrixXd> Q;
    std::vector<Eigen::VectorXd> m;
    for (const auto& rows : j.at("Q")) {
      const int r = static_cast<int>(rows.size());
      const int d = static_cast<int>(rows.at(0).size());
      Eigen::MatrixXd Qi(r, d);
      for (int a = 0; a < r; ++a) {
        auto row = rows.at(a).get<std::vector<double>>();
        for (int b = 0; b < d; ++b) Qi(a, b) = row[b];
      }
      Q.push_back(std::move(Qi));
    }
    for (const auto& mj : j.at("m")) {
      auto v = mj.get<std::vector<double>>();
      m.push_back(Eigen::Map<Eigen::VectorXd>(v.data(), static_cast<int>(v.size())));
    }
    return linear_regression(Q, m);
  }
  throw std::invalid_argument("unknown problem kind: " + kind);
}

}  // namespace ppsd

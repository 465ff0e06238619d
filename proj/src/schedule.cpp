#include "ppsd/schedule.hpp"

#include <nlohmann/json.hpp>

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace ppsd {

DiagWeight DiagWeight::constant(double value, int d) {
  DiagWeight w;
  w.scalar_ = true;
  w.value_ = value;
  w.d_ = d;
  return w;
}

DiagWeight DiagWeight::diagonal(std::vector<double> entries) {
  DiagWeight w;
  w.scalar_ = false;
  w.d_ = static_cast<int>(entries.size());
  w.entries_ = std::move(entries);
  return w;
}

double DiagWeight::operator()(int coord) const {
  if (coord < 0 || coord >= d_) throw std::out_of_range("coordinate out of range");
  return scalar_ ? value_ : entries_[coord];
}

double DiagWeight::scalar_value() const {
  if (!scalar_) throw std::logic_error("DiagWeight holds a per-coordinate diagonal");
  return value_;
}

namespace {

const DiagWeight& map_at(const std::map<std::pair<int, int>, DiagWeight>& m, int r, int c,
                         const char* name) {
  auto it = m.find({r, c});
  if (it == m.end()) {
    std::ostringstream os;
    os << name << " has no entry (" << r << ", " << c << ")";
    throw std::out_of_range(os.str());
  }
  return it->second;
}

}  // namespace

const DiagWeight& IterationWeights::R_at(int i, int j) const { return map_at(R, i, j, "R"); }
const DiagWeight& IterationWeights::A_at(int i, int j) const { return map_at(A, i, j, "A"); }
const DiagWeight& IterationWeights::C_at(int j, int i) const { return map_at(C, j, i, "C"); }

const IterationWeights& WeightHistory::at(int k) const {
  if (k < 0 || k >= size()) throw std::out_of_range("no weights recorded for iteration " + std::to_string(k));
  return iterations[k];
}

std::vector<double> normalize_eta(const std::vector<double>& raw, double eta) {
  const int m = static_cast<int>(raw.size());
  if (m < 1) throw std::invalid_argument("normalize_eta needs at least one entry");
  if (eta < 0.0) throw std::invalid_argument("eta must be nonnegative");
  if (m * eta > 1.0 + 1e-15) {
    throw std::invalid_argument("infeasible eta: m*eta = " + std::to_string(m * eta) + " > 1");
  }
  double sum = 0.0;
  for (double p : raw) {
    if (p < 0.0 || p > 1.0) throw std::invalid_argument("raw values must lie in [0, 1]");
    sum += p;
  }
  const double denom = (1.0 - eta) * sum + m * eta;
  if (denom <= 0.0) throw std::invalid_argument("degenerate normalization: all raw values zero with eta = 0");
  std::vector<double> out(m);
  for (int q = 0; q < m; ++q) {
    out[q] = (1.0 - m * eta) * ((1.0 - eta) * raw[q] + eta) / denom + eta;
  }
  return out;
}

double default_eta(const Digraph& g) {
  const int maxdeg = std::max(g.max_in_degree(), g.max_out_degree());
  return 1.0 / (2.0 * (maxdeg + 2));
}

IterationWeights init_weights_k0(const Digraph& g, int d, double magnitude,
                                 std::mt19937_64& rng) {
  if (d < 1) throw std::invalid_argument("dimension must be positive");
  if (magnitude <= 0.0) throw std::invalid_argument("magnitude must be positive");
  std::uniform_real_distribution<double> draw(-magnitude, magnitude);
  auto random_diag = [&] {
    std::vector<double> e(d);
    for (double& v : e) v = draw(rng);
    return DiagWeight::diagonal(std::move(e));
  };

  IterationWeights w;
  w.k = 0;
  w.n = g.n();
  w.d = d;
  for (int i = 1; i <= g.n(); ++i) {
    w.Lambda.push_back(random_diag());
    w.PhiAlpha.push_back(random_diag());
    w.PhiBeta.push_back(random_diag());
  }
  for (int i = 1; i <= g.n(); ++i) {
    w.R[{i, i}] = random_diag();
    w.A[{i, i}] = random_diag();
    for (int j : g.in_neighbors(i)) {
      w.R[{i, j}] = random_diag();
      w.A[{i, j}] = random_diag();
    }
  }
  for (int i = 1; i <= g.n(); ++i) {
    // Free draws for out-neighbors, then the closure C_ii = I - sum C_ji - PhiAlpha_i.
    std::vector<double> colsum(d, 0.0);
    for (int j : g.out_neighbors(i)) {
      std::vector<double> e(d);
      for (double& v : e) v = draw(rng);
      for (int l = 0; l < d; ++l) colsum[l] += e[l];
      w.C[{j, i}] = DiagWeight::diagonal(std::move(e));
    }
    std::vector<double> cii(d);
    for (int l = 0; l < d; ++l) cii[l] = 1.0 - colsum[l] - w.PhiAlpha_of(i)(l);
    w.C[{i, i}] = DiagWeight::diagonal(std::move(cii));
  }
  return w;
}

IterationWeights weights_k(const Digraph& g, int k, int d, double eta, double gamma,
                           std::mt19937_64& rng) {
  if (k < 1) throw std::invalid_argument("weights_k is the regime for k >= 1");
  if (d < 1) throw std::invalid_argument("dimension must be positive");
  if (gamma <= 0.0) throw std::invalid_argument("gamma must be positive");
  if (eta <= 0.0 || eta >= 1.0) throw std::invalid_argument("eta must lie in (0, 1)");
  for (int i = 1; i <= g.n(); ++i) {
    const int row_m = g.in_degree(i) + 1;
    const int col_m = g.out_degree(i) + 2;  // out-neighbors + self + beta sub-agent
    if (std::max(row_m, col_m) * eta > 1.0 + 1e-15) {
      throw std::invalid_argument("eta = " + std::to_string(eta) +
                                  " infeasible for agent " + std::to_string(i) +
                                  " (needs eta <= 1/" + std::to_string(std::max(row_m, col_m)) + ")");
    }
  }

  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_real_distribution<double> in_eta_one(eta, 1.0);
  auto draw_raw = [&](int m) {
    std::vector<double> p(m);
    for (double& v : p) v = unit(rng);
    return p;
  };

  IterationWeights w;
  w.k = k;
  w.n = g.n();
  w.d = d;
  w.eta = eta;
  w.gamma = gamma;
  for (int i = 1; i <= g.n(); ++i) {
    w.Lambda.push_back(DiagWeight::constant(gamma, d));
    w.PhiBeta.push_back(DiagWeight::constant(in_eta_one(rng), d));
    w.PhiAlpha.push_back(DiagWeight::constant(0.0, d));  // filled by the C column below
  }
  for (int i = 1; i <= g.n(); ++i) {
    // Row of R and row of A over N_i^in u {i}; support order: neighbors
    // ascending, then self.
    std::vector<int> support = g.in_neighbors(i);
    support.push_back(i);
    for (auto* target : {&w.R, &w.A}) {
      std::vector<double> weights = normalize_eta(draw_raw(static_cast<int>(support.size())), eta);
      for (size_t q = 0; q < support.size(); ++q) {
        (*target)[{i, support[q]}] = DiagWeight::constant(weights[q], d);
      }
    }
  }
  for (int i = 1; i <= g.n(); ++i) {
    // Augmented column of agent i: out-neighbors ascending, then self, then
    // the alpha weight toward the beta sub-agent.
    std::vector<int> support = g.out_neighbors(i);
    const int m = static_cast<int>(support.size()) + 2;
    std::vector<double> weights = normalize_eta(draw_raw(m), eta);
    for (size_t q = 0; q < support.size(); ++q) {
      w.C[{support[q], i}] = DiagWeight::constant(weights[q], d);
    }
    w.C[{i, i}] = DiagWeight::constant(weights[m - 2], d);
    w.PhiAlpha[i - 1] = DiagWeight::constant(weights[m - 1], d);
  }
  return w;
}

namespace {

constexpr double kStochasticTol = 1e-10;

void check_support(const Digraph& g, const IterationWeights& w, std::vector<std::string>& out) {
  for (int i = 1; i <= g.n(); ++i) {
    std::vector<int> in = g.in_neighbors(i);
    in.push_back(i);
    for (int j : in) {
      if (!w.R.count({i, j})) out.push_back("missing R(" + std::to_string(i) + "," + std::to_string(j) + ")");
      if (!w.A.count({i, j})) out.push_back("missing A(" + std::to_string(i) + "," + std::to_string(j) + ")");
    }
    std::vector<int> outn = g.out_neighbors(i);
    outn.push_back(i);
    for (int j : outn) {
      if (!w.C.count({j, i})) out.push_back("missing C(" + std::to_string(j) + "," + std::to_string(i) + ")");
    }
  }
  auto in_support = [&](const std::map<std::pair<int, int>, DiagWeight>& m, auto pred,
                        const char* name) {
    for (const auto& [key, unused] : m) {
      (void)unused;
      if (!pred(key.first, key.second)) {
        out.push_back(std::string(name) + "(" + std::to_string(key.first) + "," +
                      std::to_string(key.second) + ") lies outside the neighbor support");
      }
    }
  };
  in_support(w.R, [&](int i, int j) { return i == j || g.has_edge(i, j); }, "R");
  in_support(w.A, [&](int i, int j) { return i == j || g.has_edge(i, j); }, "A");
  in_support(w.C, [&](int j, int i) { return i == j || g.has_edge(j, i); }, "C");
}

}  // namespace

std::vector<std::string> validate(const Digraph& g, const IterationWeights& w) {
  std::vector<std::string> out;
  const int n = g.n();
  const int d = w.d;
  if (w.n != n) {
    out.push_back("weight set built for n = " + std::to_string(w.n) + ", graph has n = " +
                  std::to_string(n));
    return out;
  }
  if (static_cast<int>(w.Lambda.size()) != n || static_cast<int>(w.PhiAlpha.size()) != n ||
      static_cast<int>(w.PhiBeta.size()) != n) {
    out.push_back("per-agent weight vectors have wrong length");
    return out;
  }
  check_support(g, w, out);
  if (!out.empty()) return out;

  // Augmented column stochasticity holds for every k >= 0.
  for (int i = 1; i <= n; ++i) {
    for (int l = 0; l < d; ++l) {
      double sum = 0.0;
      for (int j : g.out_neighbors(i)) sum += w.C_at(j, i)(l);
      sum += w.C_at(i, i)(l);
      sum += w.PhiAlpha_of(i)(l);
      if (std::abs(sum - 1.0) > kStochasticTol) {
        out.push_back("augmented column of agent " + std::to_string(i) + " sums to " +
                      std::to_string(sum) + " at coordinate " + std::to_string(l));
      }
    }
  }
  if (w.k == 0) return out;

  // k >= 1 regime: scalar weights, [eta, 1] ranges, unit row sums, common gamma.
  const double eta = w.eta;
  auto check_range = [&](double v, const std::string& what) {
    if (v < eta - kStochasticTol || v > 1.0 + kStochasticTol) {
      out.push_back(what + " = " + std::to_string(v) + " outside [eta, 1] with eta = " +
                    std::to_string(eta));
    }
  };
  for (const auto& [key, dw] : w.R) {
    if (!dw.is_scalar()) out.push_back("R entry is not scalar at k >= 1");
    else check_range(dw.scalar_value(), "R(" + std::to_string(key.first) + "," + std::to_string(key.second) + ")");
  }
  for (const auto& [key, dw] : w.A) {
    if (!dw.is_scalar()) out.push_back("A entry is not scalar at k >= 1");
    else check_range(dw.scalar_value(), "A(" + std::to_string(key.first) + "," + std::to_string(key.second) + ")");
  }
  for (const auto& [key, dw] : w.C) {
    if (!dw.is_scalar()) out.push_back("C entry is not scalar at k >= 1");
    else check_range(dw.scalar_value(), "C(" + std::to_string(key.first) + "," + std::to_string(key.second) + ")");
  }
  for (int i = 1; i <= n; ++i) {
    if (!w.PhiAlpha_of(i).is_scalar() || !w.PhiBeta_of(i).is_scalar() || !w.Lambda_of(i).is_scalar()) {
      out.push_back("per-agent weights of agent " + std::to_string(i) + " are not scalar at k >= 1");
      continue;
    }
    check_range(w.PhiAlpha_of(i).scalar_value(), "PhiAlpha(" + std::to_string(i) + ")");
    check_range(w.PhiBeta_of(i).scalar_value(), "PhiBeta(" + std::to_string(i) + ")");
    const double lam = w.Lambda_of(i).scalar_value();
    if (lam <= 0.0) out.push_back("Lambda(" + std::to_string(i) + ") is not positive");
    if (std::abs(lam - w.gamma) > kStochasticTol) {
      out.push_back("Lambda(" + std::to_string(i) + ") deviates from the common step size");
    }
  }
  for (int i = 1; i <= n; ++i) {
    double rsum = w.R_at(i, i).scalar_value();
    double asum = w.A_at(i, i).scalar_value();
    for (int j : g.in_neighbors(i)) {
      rsum += w.R_at(i, j).scalar_value();
      asum += w.A_at(i, j).scalar_value();
    }
    if (std::abs(rsum - 1.0) > kStochasticTol) {
      out.push_back("R row of agent " + std::to_string(i) + " sums to " + std::to_string(rsum));
    }
    if (std::abs(asum - 1.0) > kStochasticTol) {
      out.push_back("A row of agent " + std::to_string(i) + " sums to " + std::to_string(asum));
    }
  }
  return out;
}

Eigen::MatrixXd assemble_augmented(const Digraph& g, const IterationWeights& w, int coord) {
  auto violations = validate(g, w);
  if (!violations.empty()) {
    throw std::invalid_argument("weight set fails validation: " + violations.front());
  }
  if (coord < 0 || coord >= w.d) throw std::invalid_argument("coordinate out of range");
  const int n = g.n();
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(2 * n, 2 * n);
  for (const auto& [key, dw] : w.C) m(key.first - 1, key.second - 1) = dw(coord);
  for (int i = 1; i <= n; ++i) {
    const double alpha = w.PhiAlpha_of(i)(coord);
    const double beta = w.PhiBeta_of(i)(coord);
    m(i - 1, n + i - 1) = 1.0 - beta;
    m(n + i - 1, i - 1) = alpha;
    m(n + i - 1, n + i - 1) = beta;
  }
  return m;
}

Eigen::MatrixXd augmented_scalar(const Digraph& g, const IterationWeights& w) {
  if (w.k < 1) throw std::invalid_argument("scalar augmented matrix requires k >= 1 weights");
  return assemble_augmented(g, w, 0);
}

namespace {

nlohmann::json diag_to_json(const DiagWeight& w) {
  if (w.is_scalar()) return w.scalar_value();
  std::vector<double> e(w.dim());
  for (int l = 0; l < w.dim(); ++l) e[l] = w(l);
  return e;
}

DiagWeight diag_from_json(const nlohmann::json& j, int d) {
  if (j.is_number()) return DiagWeight::constant(j.get<double>(), d);
  return DiagWeight::diagonal(j.get<std::vector<double>>());
}

nlohmann::json matrix_to_json(const std::map<std::pair<int, int>, DiagWeight>& m) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& [key, dw] : m) {
    arr.push_back({{"row", key.first}, {"col", key.second}, {"w", diag_to_json(dw)}});
  }
  return arr;
}

void matrix_from_json(const nlohmann::json& arr, int d,
                      std::map<std::pair<int, int>, DiagWeight>& out) {
  for (const auto& e : arr) {
    out[{e.at("row").get<int>(), e.at("col").get<int>()}] = diag_from_json(e.at("w"), d);
  }
}

}  // namespace

nlohmann::json weight_history_to_json(const WeightHistory& h) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& w : h.iterations) {
    nlohmann::json it;
    it["k"] = w.k;
    it["n"] = w.n;
    it["d"] = w.d;
    it["eta"] = w.eta;
    it["gamma"] = w.gamma;
    it["R"] = matrix_to_json(w.R);
    it["A"] = matrix_to_json(w.A);
    it["C"] = matrix_to_json(w.C);
    nlohmann::json lam = nlohmann::json::array(), pa = nlohmann::json::array(),
                   pb = nlohmann::json::array();
    for (int i = 0; i < w.n; ++i) {
      lam.push_back(diag_to_json(w.Lambda[i]));
      pa.push_back(diag_to_json(w.PhiAlpha[i]));
      pb.push_back(diag_to_json(w.PhiBeta[i]));
    }
    it["Lambda"] = lam;
    it["PhiAlpha"] = pa;
    it["PhiBeta"] = pb;
    arr.push_back(std::move(it));
  }
  return arr;
}

WeightHistory weight_history_from_json(const nlohmann::json& j) {
  WeightHistory h;
  for (const auto& it : j) {
    IterationWeights w;
    w.k = it.at("k").get<int>();
    w.n = it.at("n").get<int>();
    w.d = it.at("d").get<int>();
    w.eta = it.at("eta").get<double>();
    w.gamma = it.at("gamma").get<double>();
    matrix_from_json(it.at("R"), w.d, w.R);
    matrix_from_json(it.at("A"), w.d, w.A);
    matrix_from_json(it.at("C"), w.d, w.C);
    for (const auto& e : it.at("Lambda")) w.Lambda.push_back(diag_from_json(e, w.d));
    for (const auto& e : it.at("PhiAlpha")) w.PhiAlpha.push_back(diag_from_json(e, w.d));
    for (const auto& e : it.at("PhiBeta")) w.PhiBeta.push_back(diag_from_json(e, w.d));
    h.iterations.push_back(std::move(w));
  }
  return h;
}

}  // namespace ppsd

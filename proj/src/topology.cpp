#include "ppsd/topology.hpp"

#include <algorithm>
#include <fstream>
#include <istream>
#include <numeric>
#include <ostream>
#include <random>
#include <set>
#include <sstream>
#include <stdexcept>

namespace ppsd {

void Digraph::check_agent(int i) const {
  if (i < 1 || i > n_) {
    throw std::invalid_argument("agent id " + std::to_string(i) + " out of range [1, " +
                                std::to_string(n_) + "]");
  }
}

Digraph Digraph::from_edge_list(int n, const std::vector<std::pair<int, int>>& edges) {
  if (n < 1) throw std::invalid_argument("agent count must be positive");
  std::set<std::pair<int, int>> uniq;
  for (const auto& [j, i] : edges) {
    if (j < 1 || j > n || i < 1 || i > n) {
      throw std::invalid_argument("edge (" + std::to_string(j) + ", " + std::to_string(i) +
                                  ") references an agent outside [1, " + std::to_string(n) + "]");
    }
    if (j == i) {
      throw std::invalid_argument("self-loop (" + std::to_string(i) + ", " + std::to_string(i) +
                                  ") is not allowed");
    }
    uniq.insert({j, i});
  }
  Digraph g;
  g.n_ = n;
  g.edges_.assign(uniq.begin(), uniq.end());
  g.in_.assign(n + 1, {});
  g.out_.assign(n + 1, {});
  for (const auto& [j, i] : g.edges_) {
    g.in_[j].push_back(i);   // j receives from i
    g.out_[i].push_back(j);  // i sends to j
  }
  for (int v = 1; v <= n; ++v) {
    std::sort(g.in_[v].begin(), g.in_[v].end());
    std::sort(g.out_[v].begin(), g.out_[v].end());
  }
  return g;
}

bool Digraph::has_edge(int j, int i) const {
  check_agent(j);
  check_agent(i);
  const auto& outs = out_[i];
  return std::binary_search(outs.begin(), outs.end(), j);
}

const std::vector<int>& Digraph::in_neighbors(int i) const {
  check_agent(i);
  return in_[i];
}

const std::vector<int>& Digraph::out_neighbors(int i) const {
  check_agent(i);
  return out_[i];
}

int Digraph::max_in_degree() const {
  int m = 0;
  for (int i = 1; i <= n_; ++i) m = std::max(m, in_degree(i));
  return m;
}

int Digraph::max_out_degree() const {
  int m = 0;
  for (int i = 1; i <= n_; ++i) m = std::max(m, out_degree(i));
  return m;
}

namespace {

// Iterative DFS over the chosen adjacency; returns number of reached nodes.
int reach_count(const Digraph& g, bool forward) {
  const int n = g.n();
  std::vector<char> seen(n + 1, 0);
  std::vector<int> stack{1};
  seen[1] = 1;
  int count = 1;
  while (!stack.empty()) {
    int u = stack.back();
    stack.pop_back();
    const auto& next = forward ? g.out_neighbors(u) : g.in_neighbors(u);
    for (int w : next) {
      if (!seen[w]) {
        seen[w] = 1;
        ++count;
        stack.push_back(w);
      }
    }
  }
  return count;
}

}  // namespace

bool is_strongly_connected(const Digraph& g) {
  if (g.n() == 0) return false;
  if (g.n() == 1) return true;
  return reach_count(g, true) == g.n() && reach_count(g, false) == g.n();
}

Digraph ring(int n) {
  if (n < 2) throw std::invalid_argument("ring requires n >= 2");
  std::vector<std::pair<int, int>> edges;
  edges.reserve(n);
  for (int i = 1; i <= n; ++i) {
    int j = (i % n) + 1;  // i sends to its successor
    edges.push_back({j, i});
  }
  return Digraph::from_edge_list(n, edges);
}

Digraph random_strongly_connected(int n, double edge_probability, std::uint64_t seed) {
  if (n < 2) throw std::invalid_argument("random_strongly_connected requires n >= 2");
  if (edge_probability < 0.0 || edge_probability > 1.0) {
    throw std::invalid_argument("edge probability must lie in [0, 1]");
  }
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  constexpr int kRetryBudget = 64;
  for (int attempt = 0; attempt < kRetryBudget; ++attempt) {
    // Hidden Hamiltonian cycle on a random permutation guarantees Assumption-1
    // connectivity without rejection sampling.
    std::vector<int> perm(n);
    std::iota(perm.begin(), perm.end(), 1);
    std::shuffle(perm.begin(), perm.end(), rng);
    std::set<std::pair<int, int>> edges;
    for (int t = 0; t < n; ++t) {
      int s = perm[t];
      int r = perm[(t + 1) % n];
      edges.insert({r, s});
    }
    for (int i = 1; i <= n; ++i) {
      for (int j = 1; j <= n; ++j) {
        if (i == j) continue;
        if (unit(rng) < edge_probability) edges.insert({j, i});
      }
    }
    Digraph g = Digraph::from_edge_list(n, {edges.begin(), edges.end()});
    if (is_strongly_connected(g)) return g;
  }
  throw std::runtime_error("digraph generation failed: retry budget exhausted");
}

Digraph load_edge_list(std::istream& in) {
  std::string header;
  if (!std::getline(in, header)) throw std::invalid_argument("edge-list stream is empty");
  int n = 0;
  if (std::sscanf(header.c_str(), "digraph n=%d", &n) != 1) {
    throw std::invalid_argument("edge-list header must be \"digraph n=<n>\", got: " + header);
  }
  std::vector<std::pair<int, int>> edges;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    int j = 0, i = 0;
    if (!(ls >> j >> i)) throw std::invalid_argument("malformed edge line: " + line);
    edges.push_back({j, i});
  }
  return Digraph::from_edge_list(n, edges);
}

void save_edge_list(const Digraph& g, std::ostream& out) {
  out << "digraph n=" << g.n() << "\n";
  for (const auto& [j, i] : g.edges()) out << j << " " << i << "\n";
}

Digraph load_edge_list_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open edge-list file: " + path);
  return load_edge_list(in);
}

void save_edge_list_file(const Digraph& g, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write edge-list file: " + path);
  save_edge_list(g, out);
}

}  // namespace ppsd

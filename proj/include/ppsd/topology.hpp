#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

namespace ppsd {

// Directed communication graph. An edge is stored as the ordered pair (j, i),
// meaning agent i sends information to agent j. Agent ids are 1-based.
// Immutable after construction; safe to share read-only across threads.
class Digraph {
public:
  Digraph() = default;

  // Builds from a list of (j, i) pairs. Rejects self-loops, out-of-range ids
  // and n < 1. Duplicate edges collapse.
  static Digraph from_edge_list(int n, const std::vector<std::pair<int, int>>& edges);

  int n() const { return n_; }
  int edge_count() const { return static_cast<int>(edges_.size()); }
  const std::vector<std::pair<int, int>>& edges() const { return edges_; }

  // true iff agent i sends to agent j, i.e. (j, i) is an edge.
  bool has_edge(int j, int i) const;

  // N_i^in = { j | (i, j) in E }: agents that send to i. Sorted ascending.
  const std::vector<int>& in_neighbors(int i) const;
  // N_i^out = { j | (j, i) in E }: agents that i sends to. Sorted ascending.
  const std::vector<int>& out_neighbors(int i) const;

  int in_degree(int i) const { return static_cast<int>(in_neighbors(i).size()); }
  int out_degree(int i) const { return static_cast<int>(out_neighbors(i).size()); }
  int max_in_degree() const;
  int max_out_degree() const;

private:
  void check_agent(int i) const;

  int n_ = 0;
  std::vector<std::pair<int, int>> edges_;
  std::vector<std::vector<int>> in_;   // index 0 unused, agents are 1-based
  std::vector<std::vector<int>> out_;
};

// Every ordered pair of agents connected by a directed path.
bool is_strongly_connected(const Digraph& g);

// Directed cycle 1 -> 2 -> ... -> n -> 1. Requires n >= 2.
Digraph ring(int n);

// Random digraph guaranteed strongly connected: a hidden Hamiltonian cycle on
// a seeded random permutation, plus every other ordered pair independently
// with probability edge_probability. Deterministic under seed. Requires n >= 2.
Digraph random_strongly_connected(int n, double edge_probability, std::uint64_t seed);

// Text format: header "digraph n=<n>", then one "j i" pair per line.
Digraph load_edge_list(std::istream& in);
void save_edge_list(const Digraph& g, std::ostream& out);
Digraph load_edge_list_file(const std::string& path);
void save_edge_list_file(const Digraph& g, const std::string& path);

}  // namespace ppsd

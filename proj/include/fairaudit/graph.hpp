#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

namespace fairaudit {

// Directed acyclic graph over named nodes. Edges are (parent, child)
// index pairs into `nodes`.
struct Dag {
  std::vector<std::string> nodes;
  std::set<std::pair<int, int>> edges;

  bool has_edge(int a, int b) const { return edges.count({a, b}) > 0; }
  std::vector<int> parents_of(int v) const;
  // Kahn's algorithm, lowest index first; throws on a cycle.
  std::vector<int> topo_order() const;

  bool operator==(const Dag&) const = default;
};

// Completed partially directed graph: the equivalence-class
// representative produced by structure discovery. Undirected pairs are
// normalized to (low, high).
struct Cpdag {
  std::vector<std::string> nodes;
  std::set<std::pair<int, int>> directed;
  std::set<std::pair<int, int>> undirected;

  bool adjacent(int a, int b) const;

  bool operator==(const Cpdag&) const = default;
};

// Working representation shared by the discovery algorithms.
struct MixedGraph {
  int n = 0;
  std::vector<std::vector<std::uint8_t>> dir;  // dir[a][b]: a -> b
  std::vector<std::vector<std::uint8_t>> und;  // symmetric

  explicit MixedGraph(int n_nodes);
  bool adjacent(int a, int b) const { return dir[a][b] || dir[b][a] || und[a][b]; }
  void set_directed(int a, int b);
  void set_undirected(int a, int b);
  void clear_edge(int a, int b);
  // True when b is reachable from a over directed edges only.
  bool directed_path(int a, int b) const;
  // True when b is reachable from a over directed or undirected edges,
  // never traversing a directed edge backwards.
  bool semi_directed_path(int a, int b, const std::vector<std::uint8_t>& blocked) const;
};

// Meek orientation rules applied to a fixpoint.
void meek_closure(MixedGraph& g);

// Dor-Tarsi: orient all undirected edges without creating a cycle or a
// new v-structure; nullopt when impossible.
std::optional<std::vector<std::pair<int, int>>> consistent_extension(const MixedGraph& g);

Cpdag cpdag_from_mixed(const MixedGraph& g, const std::vector<std::string>& nodes);
MixedGraph mixed_from_cpdag(const Cpdag& c);

// Equivalence-class representative of a single DAG: skeleton plus
// v-structures closed under the orientation rules.
Cpdag cpdag_from_dag(const Dag& d);

// All DAGs whose skeleton, directed edges and v-structures agree with
// the CPDAG, in lexicographic orientation order. Throws NoExtension when
// empty and TooManyExtensions past the cap.
std::vector<Dag> enumerate_dags(const Cpdag& c, std::size_t cap = 256);

// Structural distance: a pure reversal counts one, an edge present in
// only one graph counts one.
int edge_diff(const Dag& a, const Dag& b);

std::string to_dot(const Dag& d);
std::string to_dot(const Cpdag& c);
Cpdag cpdag_from_dot(const std::string& text);
Dag dag_from_dot(const std::string& text);

}  // namespace fairaudit

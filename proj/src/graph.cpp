#include "fairaudit/graph.hpp"

#include <algorithm>
#include <cctype>
#include <deque>
#include <functional>
#include <sstream>
#include <tuple>

#include "fairaudit/errors.hpp"

namespace fairaudit {

namespace {

std::pair<int, int> norm(int a, int b) { return a < b ? std::make_pair(a, b) : std::make_pair(b, a); }

// V-structures (p, q, c) with p < q, p -> c <- q, p and q non-adjacent.
std::set<std::tuple<int, int, int>> dag_v_structures(const Dag& d) {
  std::set<std::tuple<int, int, int>> out;
  const int n = static_cast<int>(d.nodes.size());
  for (int c = 0; c < n; ++c) {
    std::vector<int> ps = d.parents_of(c);
    for (std::size_t i = 0; i < ps.size(); ++i) {
      for (std::size_t j = i + 1; j < ps.size(); ++j) {
        const int p = std::min(ps[i], ps[j]);
        const int q = std::max(ps[i], ps[j]);
        if (!d.has_edge(p, q) && !d.has_edge(q, p)) out.insert({p, q, c});
      }
    }
  }
  return out;
}

std::string dot_escape(const std::string& s) {
  bool plain = !s.empty() && (std::isalpha(static_cast<unsigned char>(s[0])) || s[0] == '_');
  for (char c : s) {
    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_')) plain = false;
  }
  if (plain) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"' || c == '\\') out.push_back('\\');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

struct DotGraph {
  std::vector<std::string> nodes;
  std::vector<std::pair<int, int>> directed;
  std::vector<std::pair<int, int>> undirected;
};

DotGraph parse_dot(const std::string& text) {
  const auto open = text.find('{');
  const auto close = text.rfind('}');
  if (open == std::string::npos || close == std::string::npos || close < open) {
    throw Error(Errc::Io, "malformed dot text");
  }
  DotGraph g;
  std::vector<std::string> names;
  auto intern = [&](const std::string& name) {
    for (std::size_t i = 0; i < names.size(); ++i) {
      if (names[i] == name) return static_cast<int>(i);
    }
    names.push_back(name);
    return static_cast<int>(names.size() - 1);
  };
  std::string body = text.substr(open + 1, close - open - 1);
  std::string stmt;
  auto tokenize = [](const std::string& s) {
    std::vector<std::string> toks;
    std::size_t i = 0;
    while (i < s.size()) {
      if (std::isspace(static_cast<unsigned char>(s[i]))) {
        ++i;
      } else if (s[i] == '"') {
        std::string t;
        ++i;
        while (i < s.size() && s[i] != '"') {
          if (s[i] == '\\' && i + 1 < s.size()) ++i;
          t.push_back(s[i]);
          ++i;
        }
        ++i;
        toks.push_back(t);
      } else if (s.compare(i, 2, "->") == 0 || s.compare(i, 2, "--") == 0) {
        toks.push_back(s.substr(i, 2));
        i += 2;
      } else {
        std::string t;
        while (i < s.size() && !std::isspace(static_cast<unsigned char>(s[i])) && s[i] != '"' &&
               s.compare(i, 2, "->") != 0 && s.compare(i, 2, "--") != 0) {
          t.push_back(s[i]);
          ++i;
        }
        toks.push_back(t);
      }
    }
    return toks;
  };
  for (char c : body) {
    if (c == ';' || c == '\n') {
      auto toks = tokenize(stmt);
      stmt.clear();
      if (toks.empty()) continue;
      if (toks.size() == 1) {
        intern(toks[0]);
      } else if (toks.size() == 3 && (toks[1] == "->" || toks[1] == "--")) {
        const int a = intern(toks[0]);
        const int b = intern(toks[2]);
        if (toks[1] == "->") {
          g.directed.emplace_back(a, b);
        } else {
          g.undirected.emplace_back(a, b);
        }
      } else {
        throw Error(Errc::Io, "unsupported dot statement");
      }
    } else {
      stmt.push_back(c);
    }
  }
  if (!stmt.empty() && stmt.find_first_not_of(" \t\r") != std::string::npos) {
    throw Error(Errc::Io, "missing ';' before '}'");
  }
  g.nodes = std::move(names);
  return g;
}

}  // namespace

std::vector<int> Dag::parents_of(int v) const {
  std::vector<int> out;
  for (const auto& [a, b] : edges) {
    if (b == v) out.push_back(a);
  }
  return out;
}

std::vector<int> Dag::topo_order() const {
  const int n = static_cast<int>(nodes.size());
  std::vector<int> indeg(static_cast<std::size_t>(n), 0);
  for (const auto& [a, b] : edges) {
    (void)a;
    ++indeg[static_cast<std::size_t>(b)];
  }
  std::vector<int> order;
  std::set<int> ready;
  for (int v = 0; v < n; ++v) {
    if (indeg[static_cast<std::size_t>(v)] == 0) ready.insert(v);
  }
  while (!ready.empty()) {
    const int v = *ready.begin();
    ready.erase(ready.begin());
    order.push_back(v);
    for (const auto& [a, b] : edges) {
      if (a == v && --indeg[static_cast<std::size_t>(b)] == 0) ready.insert(b);
    }
  }
  if (static_cast<int>(order.size()) != n) {
    throw Error(Errc::InvalidArgument, "graph has a directed cycle");
  }
  return order;
}

bool Cpdag::adjacent(int a, int b) const {
  return directed.count({a, b}) || directed.count({b, a}) || undirected.count(norm(a, b));
}

MixedGraph::MixedGraph(int n_nodes)
    : n(n_nodes),
      dir(static_cast<std::size_t>(n_nodes), std::vector<std::uint8_t>(static_cast<std::size_t>(n_nodes), 0)),
      und(static_cast<std::size_t>(n_nodes), std::vector<std::uint8_t>(static_cast<std::size_t>(n_nodes), 0)) {}

void MixedGraph::set_directed(int a, int b) {
  und[a][b] = und[b][a] = 0;
  dir[b][a] = 0;
  dir[a][b] = 1;
}

void MixedGraph::set_undirected(int a, int b) {
  dir[a][b] = dir[b][a] = 0;
  und[a][b] = und[b][a] = 1;
}

void MixedGraph::clear_edge(int a, int b) {
  dir[a][b] = dir[b][a] = 0;
  und[a][b] = und[b][a] = 0;
}

bool MixedGraph::directed_path(int a, int b) const {
  std::vector<std::uint8_t> seen(static_cast<std::size_t>(n), 0);
  std::deque<int> queue{a};
  seen[a] = 1;
  while (!queue.empty()) {
    const int v = queue.front();
    queue.pop_front();
    if (v == b) return true;
    for (int w = 0; w < n; ++w) {
      if (dir[v][w] && !seen[w]) {
        seen[w] = 1;
        queue.push_back(w);
      }
    }
  }
  return false;
}

bool MixedGraph::semi_directed_path(int a, int b, const std::vector<std::uint8_t>& blocked) const {
  if (a == b) return true;
  std::vector<std::uint8_t> seen(static_cast<std::size_t>(n), 0);
  std::deque<int> queue{a};
  seen[a] = 1;
  if (blocked[a]) return false;
  while (!queue.empty()) {
    const int v = queue.front();
    queue.pop_front();
    for (int w = 0; w < n; ++w) {
      if (!(dir[v][w] || und[v][w]) || seen[w]) continue;
      if (w == b) return true;
      if (blocked[w]) continue;
      seen[w] = 1;
      queue.push_back(w);
    }
  }
  return false;
}

void meek_closure(MixedGraph& g) {
  const int n = g.n;
  bool changed = true;
  while (changed) {
    changed = false;
    for (int a = 0; a < n; ++a) {
      for (int b = 0; b < n; ++b) {
        if (!g.und[a][b]) continue;
        bool orient = false;
        // R1: c -> a, a - b, c and b non-adjacent.
        for (int c = 0; c < n && !orient; ++c) {
          if (g.dir[c][a] && !g.adjacent(c, b)) orient = true;
        }
        // R2: a -> c -> b and a - b.
        for (int c = 0; c < n && !orient; ++c) {
          if (g.dir[a][c] && g.dir[c][b]) orient = true;
        }
        // R3: a - c -> b, a - d -> b, c and d non-adjacent.
        for (int c = 0; c < n && !orient; ++c) {
          if (!(g.und[a][c] && g.dir[c][b])) continue;
          for (int d = c + 1; d < n && !orient; ++d) {
            if (g.und[a][d] && g.dir[d][b] && !g.adjacent(c, d)) orient = true;
          }
        }
        // R4: a - d, d -> c, c -> b, b and d non-adjacent, a and c adjacent.
        for (int d = 0; d < n && !orient; ++d) {
          if (!g.und[a][d] || g.adjacent(b, d)) continue;
          for (int c = 0; c < n && !orient; ++c) {
            if (g.dir[d][c] && g.dir[c][b] && g.adjacent(a, c)) orient = true;
          }
        }
        if (orient) {
          g.set_directed(a, b);
          changed = true;
        }
      }
    }
  }
}

std::optional<std::vector<std::pair<int, int>>> consistent_extension(const MixedGraph& g) {
  MixedGraph work = g;
  const int n = g.n;
  std::vector<std::pair<int, int>> oriented;
  std::vector<std::uint8_t> removed(static_cast<std::size_t>(n), 0);
  int remaining = n;
  while (remaining > 0) {
    int found = -1;
    for (int x = 0; x < n && found < 0; ++x) {
      if (removed[x]) continue;
      bool sink = true;
      for (int w = 0; w < n && sink; ++w) {
        if (!removed[w] && work.dir[x][w]) sink = false;
      }
      if (!sink) continue;
      // Every undirected neighbor of x must be adjacent to all other
      // vertices adjacent to x.
      bool ok = true;
      for (int y = 0; y < n && ok; ++y) {
        if (removed[y] || !work.und[x][y]) continue;
        for (int z = 0; z < n && ok; ++z) {
          if (removed[z] || z == y || z == x) continue;
          if (work.adjacent(x, z) && !work.adjacent(y, z)) ok = false;
        }
      }
      if (ok) found = x;
    }
    if (found < 0) return std::nullopt;
    for (int y = 0; y < n; ++y) {
      if (!removed[y] && work.und[found][y]) {
        oriented.emplace_back(y, found);
        work.clear_edge(found, y);
      }
    }
    removed[found] = 1;
    --remaining;
  }
  for (int a = 0; a < n; ++a) {
    for (int b = 0; b < n; ++b) {
      if (g.dir[a][b]) oriented.emplace_back(a, b);
    }
  }
  return oriented;
}

Cpdag cpdag_from_mixed(const MixedGraph& g, const std::vector<std::string>& nodes) {
  Cpdag out;
  out.nodes = nodes;
  for (int a = 0; a < g.n; ++a) {
    for (int b = 0; b < g.n; ++b) {
      if (g.dir[a][b]) out.directed.insert({a, b});
      if (a < b && g.und[a][b]) out.undirected.insert({a, b});
    }
  }
  return out;
}

MixedGraph mixed_from_cpdag(const Cpdag& c) {
  MixedGraph g(static_cast<int>(c.nodes.size()));
  for (const auto& [a, b] : c.directed) g.set_directed(a, b);
  for (const auto& [a, b] : c.undirected) g.set_undirected(a, b);
  return g;
}

Cpdag cpdag_from_dag(const Dag& d) {
  const int n = static_cast<int>(d.nodes.size());
  d.topo_order();  // validates acyclicity
  MixedGraph g(n);
  for (const auto& [a, b] : d.edges) g.set_undirected(a, b);
  for (const auto& [p, q, c] : dag_v_structures(d)) {
    g.set_directed(p, c);
    g.set_directed(q, c);
  }
  meek_closure(g);
  return cpdag_from_mixed(g, d.nodes);
}

std::vector<Dag> enumerate_dags(const Cpdag& c, std::size_t cap) {
  const int n = static_cast<int>(c.nodes.size());
  std::vector<std::pair<int, int>> free_edges(c.undirected.begin(), c.undirected.end());
  std::sort(free_edges.begin(), free_edges.end());

  // Adjacency of the full skeleton, fixed across the recursion.
  MixedGraph skel(n);
  for (const auto& [a, b] : c.directed) skel.set_undirected(a, b);
  for (const auto& [a, b] : c.undirected) skel.set_undirected(a, b);

  MixedGraph work(n);
  for (const auto& [a, b] : c.directed) work.set_directed(a, b);

  std::vector<Dag> out;
  std::function<void(std::size_t)> recurse = [&](std::size_t i) {
    if (i == free_edges.size()) {
      Dag d;
      d.nodes = c.nodes;
      for (int a = 0; a < n; ++a) {
        for (int b = 0; b < n; ++b) {
          if (work.dir[a][b]) d.edges.insert({a, b});
        }
      }
      d.topo_order();
      if (out.size() >= cap) {
        throw Error(Errc::TooManyExtensions,
                    "equivalence class exceeds " + std::to_string(cap) + " members");
      }
      out.push_back(std::move(d));
      return;
    }
    const auto [u, v] = free_edges[i];
    for (const auto& [from, to] : {std::make_pair(u, v), std::make_pair(v, u)}) {
      // Orienting from -> to may not close a directed cycle nor create a
      // v-structure absent from the class representative.
      if (work.directed_path(to, from)) continue;
      bool new_collider = false;
      for (int w = 0; w < n && !new_collider; ++w) {
        if (w != from && work.dir[w][to] && !skel.adjacent(w, from)) new_collider = true;
      }
      if (new_collider) continue;
      work.dir[from][to] = 1;
      recurse(i + 1);
      work.dir[from][to] = 0;
    }
  };
  recurse(0);
  if (out.empty()) {
    throw Error(Errc::NoExtension, "graph admits no consistent extension");
  }
  return out;
}

int edge_diff(const Dag& a, const Dag& b) {
  if (a.nodes != b.nodes) {
    throw Error(Errc::NodeSetMismatch, "edge_diff requires identical node lists");
  }
  int diff = 0;
  // An edge of `a` that `b` lacks counts once whether it is absent or
  // reversed; the reversed partner is skipped in the second loop, so a
  // reversal never counts twice.
  for (const auto& [x, y] : a.edges) {
    if (!b.has_edge(x, y)) ++diff;
  }
  for (const auto& [x, y] : b.edges) {
    if (!a.has_edge(x, y) && !a.has_edge(y, x)) ++diff;
  }
  return diff;
}

std::string to_dot(const Dag& d) {
  std::ostringstream os;
  os << "digraph g {\n";
  for (const auto& name : d.nodes) os << "  " << dot_escape(name) << ";\n";
  for (const auto& [a, b] : d.edges) {
    os << "  " << dot_escape(d.nodes[a]) << " -> " << dot_escape(d.nodes[b]) << ";\n";
  }
  os << "}\n";
  return os.str();
}

std::string to_dot(const Cpdag& c) {
  std::ostringstream os;
  os << "digraph g {\n";
  for (const auto& name : c.nodes) os << "  " << dot_escape(name) << ";\n";
  for (const auto& [a, b] : c.directed) {
    os << "  " << dot_escape(c.nodes[a]) << " -> " << dot_escape(c.nodes[b]) << ";\n";
  }
  for (const auto& [a, b] : c.undirected) {
    os << "  " << dot_escape(c.nodes[a]) << " -- " << dot_escape(c.nodes[b]) << ";\n";
  }
  os << "}\n";
  return os.str();
}

Cpdag cpdag_from_dot(const std::string& text) {
  const DotGraph g = parse_dot(text);
  Cpdag out;
  out.nodes = g.nodes;
  for (const auto& [a, b] : g.directed) out.directed.insert({a, b});
  for (const auto& [a, b] : g.undirected) out.undirected.insert(norm(a, b));
  return out;
}

Dag dag_from_dot(const std::string& text) {
  const DotGraph g = parse_dot(text);
  if (!g.undirected.empty()) {
    throw Error(Errc::InvalidArgument, "undirected edge in dag dot text");
  }
  Dag out;
  out.nodes = g.nodes;
  for (const auto& [a, b] : g.directed) out.edges.insert({a, b});
  out.topo_order();
  return out;
}

}  // namespace fairaudit

#include "fairaudit/discovery.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <set>

#include "fairaudit/errors.hpp"

namespace fairaudit {

namespace {

constexpr double kScoreEps = 1e-9;
constexpr double kRssFloor = 1e-12;
constexpr int kMaxSubsetNodes = 16;

std::vector<std::string> node_names(const Dataset& d) {
  std::vector<std::string> out;
  for (const auto& f : d.schema().features()) out.push_back(f.name);
  return out;
}

// Lexicographic size-k subsets of a sorted pool, visited via callback;
// returns true when the callback stops the enumeration.
bool for_each_subset(const std::vector<int>& pool, int k,
                     const std::function<bool(const std::vector<int>&)>& fn) {
  std::vector<int> pick;
  std::function<bool(std::size_t)> rec = [&](std::size_t start) {
    if (static_cast<int>(pick.size()) == k) return fn(pick);
    if (pool.size() - start < static_cast<std::size_t>(k) - pick.size()) return false;
    for (std::size_t i = start; i < pool.size(); ++i) {
      pick.push_back(pool[i]);
      if (rec(i + 1)) return true;
      pick.pop_back();
    }
    return false;
  };
  return rec(0);
}

class BicScorer {
 public:
  explicit BicScorer(const Dataset& d) : data_(d.values()), n_(d.n()) {}

  double local(int node, std::vector<int> parents) const {
    std::sort(parents.begin(), parents.end());
    const auto key = std::make_pair(node, parents);
    auto it = cache_.find(key);
    if (it != cache_.end()) return it->second;

    const long n = n_;
    const int k = static_cast<int>(parents.size());
    Eigen::MatrixXd x(n, k + 1);
    x.col(0).setOnes();
    for (int c = 0; c < k; ++c) x.col(c + 1) = data_.col(parents[static_cast<std::size_t>(c)]);
    const Eigen::VectorXd y = data_.col(node);
    const Eigen::VectorXd beta = (x.transpose() * x).ldlt().solve(x.transpose() * y);
    const double rss = (y - x * beta).squaredNorm();
    const double sigma2 = std::max(rss / static_cast<double>(n), kRssFloor);
    const double score = -static_cast<double>(n) * std::log(sigma2) -
                         std::log(static_cast<double>(n)) * (k + 1);
    cache_.emplace(key, score);
    return score;
  }

 private:
  Eigen::MatrixXd data_;
  long n_;
  mutable std::map<std::pair<int, std::vector<int>>, double> cache_;
};

std::vector<int> directed_parents(const MixedGraph& g, int y) {
  std::vector<int> out;
  for (int w = 0; w < g.n; ++w) {
    if (g.dir[w][y]) out.push_back(w);
  }
  return out;
}

bool is_clique(const MixedGraph& g, const std::vector<int>& vs) {
  for (std::size_t i = 0; i < vs.size(); ++i) {
    for (std::size_t j = i + 1; j < vs.size(); ++j) {
      if (!g.adjacent(vs[i], vs[j])) return false;
    }
  }
  return true;
}

// Convert the working PDAG back to a CPDAG after an operator has been
// applied. Returns false if the PDAG admits no consistent extension.
bool rebuild_cpdag(MixedGraph& g) {
  auto ext = consistent_extension(g);
  if (!ext) return false;
  Dag d;
  d.nodes.resize(static_cast<std::size_t>(g.n));
  for (auto& [a, b] : *ext) d.edges.insert({a, b});
  MixedGraph rebuilt(g.n);
  for (const auto& [a, b] : d.edges) rebuilt.set_undirected(a, b);
  for (int c = 0; c < g.n; ++c) {
    std::vector<int> ps = d.parents_of(c);
    for (std::size_t i = 0; i < ps.size(); ++i) {
      for (std::size_t j = i + 1; j < ps.size(); ++j) {
        if (!d.has_edge(ps[i], ps[j]) && !d.has_edge(ps[j], ps[i])) {
          rebuilt.set_directed(ps[i], c);
          rebuilt.set_directed(ps[j], c);
        }
      }
    }
  }
  meek_closure(rebuilt);
  g = rebuilt;
  return true;
}

struct Insert {
  int x = -1, y = -1;
  std::vector<int> t;
  double delta = 0.0;
};

struct Delete {
  int x = -1, y = -1;
  std::vector<int> h;
  double delta = 0.0;
};

// Undirected neighbors of y that are adjacent to x.
std::vector<int> na_yx(const MixedGraph& g, int y, int x) {
  std::vector<int> out;
  for (int w = 0; w < g.n; ++w) {
    if (g.und[y][w] && g.adjacent(w, x)) out.push_back(w);
  }
  return out;
}

bool best_insert(const MixedGraph& g, const BicScorer& score, Insert& best) {
  const int n = g.n;
  best = Insert{};
  for (int x = 0; x < n; ++x) {
    for (int y = 0; y < n; ++y) {
      if (x == y || g.adjacent(x, y)) continue;
      const std::vector<int> na = na_yx(g, y, x);
      std::vector<int> t0;
      for (int w = 0; w < n; ++w) {
        if (g.und[y][w] && !g.adjacent(w, x)) t0.push_back(w);
      }
      if (static_cast<int>(t0.size()) > kMaxSubsetNodes) {
        throw Error(Errc::InvalidArgument, "insertion neighborhood too large");
      }
      const std::vector<int> pa = directed_parents(g, y);
      for (std::uint32_t mask = 0; mask < (1u << t0.size()); ++mask) {
        std::vector<int> c = na;
        for (std::size_t b = 0; b < t0.size(); ++b) {
          if (mask & (1u << b)) c.push_back(t0[b]);
        }
        if (!is_clique(g, c)) continue;
        std::vector<std::uint8_t> blocked(static_cast<std::size_t>(n), 0);
        for (int w : c) blocked[static_cast<std::size_t>(w)] = 1;
        if (g.semi_directed_path(y, x, blocked)) continue;
        std::vector<int> after = pa;
        after.insert(after.end(), c.begin(), c.end());
        std::sort(after.begin(), after.end());
        after.erase(std::unique(after.begin(), after.end()), after.end());
        const double s_before = score.local(y, after);
        after.push_back(x);
        const double s_after = score.local(y, after);
        const double delta = s_after - s_before;
        if (delta > best.delta + kScoreEps) {
          best.x = x;
          best.y = y;
          best.t.clear();
          for (std::size_t b = 0; b < t0.size(); ++b) {
            if (mask & (1u << b)) best.t.push_back(t0[b]);
          }
          best.delta = delta;
        }
      }
    }
  }
  return best.x >= 0 && best.delta > kScoreEps;
}

bool best_delete(const MixedGraph& g, const BicScorer& score, Delete& best) {
  const int n = g.n;
  best = Delete{};
  for (int x = 0; x < n; ++x) {
    for (int y = 0; y < n; ++y) {
      if (x == y) continue;
      if (!g.dir[x][y] && !(g.und[x][y] && x < y)) continue;
      const std::vector<int> na = na_yx(g, y, x);
      if (static_cast<int>(na.size()) > kMaxSubsetNodes) {
        throw Error(Errc::InvalidArgument, "deletion neighborhood too large");
      }
      std::vector<int> pa = directed_parents(g, y);
      for (std::uint32_t mask = 0; mask < (1u << na.size()); ++mask) {
        std::vector<int> c;
        for (std::size_t b = 0; b < na.size(); ++b) {
          if (!(mask & (1u << b))) c.push_back(na[b]);  // C = NA \ H
        }
        if (!is_clique(g, c)) continue;
        std::vector<int> base = pa;
        base.insert(base.end(), c.begin(), c.end());
        std::sort(base.begin(), base.end());
        base.erase(std::unique(base.begin(), base.end()), base.end());
        base.erase(std::remove(base.begin(), base.end(), x), base.end());
        const double s_after = score.local(y, base);
        std::vector<int> with_x = base;
        with_x.push_back(x);
        const double s_before = score.local(y, with_x);
        const double delta = s_after - s_before;
        if (delta > best.delta + kScoreEps) {
          best.x = x;
          best.y = y;
          best.h.clear();
          for (std::size_t b = 0; b < na.size(); ++b) {
            if (mask & (1u << b)) best.h.push_back(na[b]);
          }
          best.delta = delta;
        }
      }
    }
  }
  return best.x >= 0 && best.delta > kScoreEps;
}

}  // namespace

double gaussian_bic_local(const Dataset& d, int node, const std::vector<int>& parents) {
  return BicScorer(d).local(node, parents);
}

Cpdag pc_discover(const Dataset& d, double alpha) {
  if (alpha <= 0.0 || alpha >= 1.0) {
    throw Error(Errc::InvalidArgument, "alpha must lie in (0, 1)");
  }
  const int n = d.dim();
  CorrelationCache cache(d);
  MixedGraph g(n);
  for (int a = 0; a < n; ++a) {
    for (int b = a + 1; b < n; ++b) g.set_undirected(a, b);
  }
  std::map<std::pair<int, int>, std::vector<int>> sepset;

  for (int level = 0;; ++level) {
    bool any_candidate = false;
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        if (i == j || !g.und[i][j]) continue;
        std::vector<int> adj;
        for (int w = 0; w < n; ++w) {
          if (w != j && g.und[i][w]) adj.push_back(w);
        }
        if (static_cast<int>(adj.size()) < level) continue;
        any_candidate = true;
        for_each_subset(adj, level, [&](const std::vector<int>& cond) {
          const CiResult res = cache.test(i, j, cond);
          if (res.p_value > alpha) {
            g.clear_edge(i, j);
            sepset[{std::min(i, j), std::max(i, j)}] = cond;
            return true;
          }
          return false;
        });
      }
    }
    if (!any_candidate) break;
  }

  // Orient unshielded triples i - k - j with non-adjacent i, j as
  // colliders when k is outside the recorded separating set.
  for (int k = 0; k < n; ++k) {
    for (int i = 0; i < n; ++i) {
      if (i == k || !g.adjacent(i, k)) continue;
      for (int j = i + 1; j < n; ++j) {
        if (j == k || !g.adjacent(j, k) || g.adjacent(i, j)) continue;
        auto it = sepset.find({i, j});
        if (it == sepset.end()) continue;
        const auto& s = it->second;
        if (std::find(s.begin(), s.end(), k) != s.end()) continue;
        if (g.und[i][k]) g.set_directed(i, k);
        if (g.und[j][k]) g.set_directed(j, k);
      }
    }
  }
  meek_closure(g);
  return cpdag_from_mixed(g, node_names(d));
}

Cpdag ges_discover(const Dataset& d) {
  const int n = d.dim();
  if (d.n() < 2) throw Error(Errc::DatasetTooSmall, "need at least two rows");
  BicScorer score(d);
  MixedGraph g(n);

  Insert ins;
  while (best_insert(g, score, ins)) {
    g.set_directed(ins.x, ins.y);
    for (int t : ins.t) g.set_directed(t, ins.y);
    if (!rebuild_cpdag(g)) {
      throw Error(Errc::NoExtension, "insert produced an inextensible graph");
    }
  }
  Delete del;
  while (best_delete(g, score, del)) {
    g.clear_edge(del.x, del.y);
    for (int h : del.h) {
      if (g.und[del.y][h]) g.set_directed(del.y, h);
      if (g.und[del.x][h]) g.set_directed(del.x, h);
    }
    if (!rebuild_cpdag(g)) {
      throw Error(Errc::NoExtension, "delete produced an inextensible graph");
    }
  }
  return cpdag_from_mixed(g, node_names(d));
}

}  // namespace fairaudit

#include "fairaudit/hp_search.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include <Eigen/Dense>

#include "fairaudit/errors.hpp"
#include "fairaudit/stats.hpp"

namespace fairaudit {

namespace {

constexpr double kSurrogateRidge = 1e-3;
constexpr double kLowFitR2 = 0.1;
constexpr double kMutateSd = 0.5;
constexpr int kMutateRetries = 16;

struct NumericRange {
  double lo = 0.0;
  double hi = 0.0;
  bool log_scale = false;
  bool integer = false;
};

constexpr NumericRange kRangeC{1e-4, 1e4, true, false};
constexpr NumericRange kRangeTol{1e-6, 1e-1, true, false};
constexpr NumericRange kRangeInterceptScaling{0.1, 10.0, true, false};
constexpr NumericRange kRangeMaxIter{50, 500, false, true};
constexpr NumericRange kRangeL1Ratio{0.0, 1.0, false, false};
constexpr NumericRange kRangeMaxDepth{1, 20, false, true};
constexpr NumericRange kRangeMinLeaf{1, 20, false, true};

double mutate_numeric(double value, const NumericRange& range, Rng& rng) {
  for (int attempt = 0; attempt < kMutateRetries; ++attempt) {
    double next = value * std::exp(rng.normal(0.0, kMutateSd));
    next = std::clamp(next, range.lo, range.hi);
    if (range.integer) next = std::round(next);
    if (next != value) return next;
  }
  // Multiplicative steps cannot leave 0 or a clamped boundary; fall back
  // to the range midpoint, or the far end when already there.
  double fallback = range.log_scale ? std::sqrt(range.lo * range.hi)
                                    : 0.5 * (range.lo + range.hi);
  if (range.integer) fallback = std::round(fallback);
  if (fallback == value) {
    fallback = std::fabs(value - range.lo) > std::fabs(value - range.hi) ? range.lo : range.hi;
  }
  return fallback;
}

double random_numeric(const NumericRange& range, Rng& rng) {
  if (range.integer) {
    return static_cast<double>(rng.uniform_int(static_cast<std::int64_t>(range.lo),
                                               static_cast<std::int64_t>(range.hi)));
  }
  if (range.log_scale) {
    return std::exp(rng.uniform(std::log(range.lo), std::log(range.hi)));
  }
  return rng.uniform(range.lo, range.hi);
}

// The encoded surrogate design: each hyperparameter owns a contiguous
// block of columns (one-hot for categoricals, log or linear scalars).
struct Encoding {
  std::vector<std::string> players;
  std::vector<std::vector<int>> blocks;  // columns per player
  int width = 0;

  void add(const std::string& name, int cols) {
    players.push_back(name);
    std::vector<int> block;
    for (int c = 0; c < cols; ++c) block.push_back(width + c);
    blocks.push_back(std::move(block));
    width += cols;
  }
};

Encoding make_encoding(LearnerKind kind) {
  Encoding e;
  switch (kind) {
    case LearnerKind::LogisticRegression:
      e.add("penalty", 4);
      e.add("C", 1);
      e.add("tol", 1);
      e.add("fit_intercept", 1);
      e.add("intercept_scaling", 1);
      e.add("max_iter", 1);
      e.add("l1_ratio", 1);
      e.add("solver", 1);
      break;
    case LearnerKind::DecisionTree:
      e.add("criterion", 1);
      e.add("max_depth", 1);
      e.add("min_samples_leaf", 1);
      break;
    case LearnerKind::LinearSvm:
      e.add("C", 1);
      e.add("tol", 1);
      e.add("max_iter", 1);
      break;
  }
  return e;
}

Eigen::RowVectorXd encode(const Encoding& e, LearnerKind kind, const HpConfig& hp) {
  Eigen::RowVectorXd row = Eigen::RowVectorXd::Zero(e.width);
  auto block = [&](const std::string& name) -> const std::vector<int>& {
    for (std::size_t i = 0; i < e.players.size(); ++i) {
      if (e.players[i] == name) return e.blocks[i];
    }
    throw Error(Errc::InvalidArgument, "unknown hyperparameter '" + name + "'");
  };
  switch (kind) {
    case LearnerKind::LogisticRegression:
      row(block("penalty")[static_cast<std::size_t>(hp.penalty)]) = 1.0;
      row(block("C")[0]) = std::log10(hp.c);
      row(block("tol")[0]) = std::log10(hp.tol);
      row(block("fit_intercept")[0]) = hp.fit_intercept ? 1.0 : 0.0;
      row(block("intercept_scaling")[0]) = std::log10(hp.intercept_scaling);
      row(block("max_iter")[0]) = static_cast<double>(hp.max_iter);
      row(block("l1_ratio")[0]) = hp.l1_ratio;
      row(block("solver")[0]) = hp.solver == Solver::Newton ? 1.0 : 0.0;
      break;
    case LearnerKind::DecisionTree:
      row(block("criterion")[0]) = hp.criterion == SplitCriterion::Entropy ? 1.0 : 0.0;
      row(block("max_depth")[0]) = static_cast<double>(hp.max_depth);
      row(block("min_samples_leaf")[0]) = static_cast<double>(hp.min_samples_leaf);
      break;
    case LearnerKind::LinearSvm:
      row(block("C")[0]) = std::log10(hp.c);
      row(block("tol")[0]) = std::log10(hp.tol);
      row(block("max_iter")[0]) = static_cast<double>(hp.max_iter);
      break;
  }
  return row;
}

double factorial(int k) {
  double f = 1.0;
  for (int i = 2; i <= k; ++i) f *= i;
  return f;
}

}  // namespace

std::vector<std::string> hyperparameter_names(LearnerKind kind) {
  return make_encoding(kind).players;
}

HpConfig mutate(const HpConfig& cfg, LearnerKind kind, std::uint64_t seed) {
  Rng rng(seed);
  HpConfig out = cfg;
  const auto names = hyperparameter_names(kind);
  const auto& pick = names[static_cast<std::size_t>(
      rng.uniform_int(0, static_cast<std::int64_t>(names.size()) - 1))];
  if (pick == "penalty") {
    const Penalty all[] = {Penalty::None, Penalty::L2, Penalty::L1, Penalty::ElasticNet};
    Penalty next;
    do {
      next = all[rng.uniform_int(0, 3)];
    } while (next == cfg.penalty);
    out.penalty = next;
  } else if (pick == "C") {
    out.c = mutate_numeric(cfg.c, kRangeC, rng);
  } else if (pick == "tol") {
    out.tol = mutate_numeric(cfg.tol, kRangeTol, rng);
  } else if (pick == "fit_intercept") {
    out.fit_intercept = !cfg.fit_intercept;
  } else if (pick == "intercept_scaling") {
    out.intercept_scaling = mutate_numeric(cfg.intercept_scaling, kRangeInterceptScaling, rng);
  } else if (pick == "max_iter") {
    out.max_iter = static_cast<int>(mutate_numeric(cfg.max_iter, kRangeMaxIter, rng));
  } else if (pick == "l1_ratio") {
    out.l1_ratio = mutate_numeric(cfg.l1_ratio, kRangeL1Ratio, rng);
  } else if (pick == "solver") {
    out.solver = cfg.solver == Solver::Newton ? Solver::Gradient : Solver::Newton;
  } else if (pick == "criterion") {
    out.criterion = cfg.criterion == SplitCriterion::Gini ? SplitCriterion::Entropy
                                                          : SplitCriterion::Gini;
  } else if (pick == "max_depth") {
    out.max_depth = static_cast<int>(mutate_numeric(cfg.max_depth, kRangeMaxDepth, rng));
  } else if (pick == "min_samples_leaf") {
    out.min_samples_leaf = static_cast<int>(mutate_numeric(cfg.min_samples_leaf, kRangeMinLeaf, rng));
  }
  return out;
}

HpConfig random_config(LearnerKind kind, std::uint64_t seed) {
  Rng rng(seed);
  HpConfig out;
  switch (kind) {
    case LearnerKind::LogisticRegression: {
      const Penalty all[] = {Penalty::None, Penalty::L2, Penalty::L1, Penalty::ElasticNet};
      out.penalty = all[rng.uniform_int(0, 3)];
      out.c = random_numeric(kRangeC, rng);
      out.tol = random_numeric(kRangeTol, rng);
      out.fit_intercept = rng.uniform() < 0.5;
      out.intercept_scaling = random_numeric(kRangeInterceptScaling, rng);
      out.max_iter = static_cast<int>(random_numeric(kRangeMaxIter, rng));
      out.l1_ratio = random_numeric(kRangeL1Ratio, rng);
      out.solver = rng.uniform() < 0.5 ? Solver::Gradient : Solver::Newton;
      break;
    }
    case LearnerKind::DecisionTree:
      out.criterion = rng.uniform() < 0.5 ? SplitCriterion::Gini : SplitCriterion::Entropy;
      out.max_depth = static_cast<int>(random_numeric(kRangeMaxDepth, rng));
      out.min_samples_leaf = static_cast<int>(random_numeric(kRangeMinLeaf, rng));
      break;
    case LearnerKind::LinearSvm:
      out.c = random_numeric(kRangeC, rng);
      out.tol = random_numeric(kRangeTol, rng);
      out.max_iter = static_cast<int>(random_numeric(kRangeMaxIter, rng));
      break;
  }
  return out;
}

std::vector<HpSample> evolve(const DataSplit& data, LearnerKind kind, int budget,
                             std::uint64_t seed) {
  if (budget < 1) throw Error(Errc::InvalidArgument, "budget must be positive");
  std::vector<HpSample> samples;
  std::vector<HpConfig> frontier;

  auto evaluate_cfg = [&](const HpConfig& hp, std::uint64_t eval_seed) {
    ParamConfig cfg;
    cfg.hp = hp;
    const BiasResult res = bias_fn(data, kind, cfg, eval_seed);
    HpSample s;
    s.hp = hp;
    s.eod = res.eod;
    s.perf = res.perf;
    s.perf_ok = res.perf_ok;
    samples.push_back(s);
    return s;
  };

  const HpSample first = evaluate_cfg(HpConfig{}, mix_seed(seed, 0));
  frontier.push_back(first.hp);
  double best_eod = first.eod;
  for (int step = 1; step < budget; ++step) {
    const HpConfig& parent = frontier[static_cast<std::size_t>(step) % frontier.size()];
    const HpConfig mutant = mutate(parent, kind, mix_seed(seed, static_cast<std::uint64_t>(step)));
    const HpSample s = evaluate_cfg(mutant, mix_seed(seed, static_cast<std::uint64_t>(step), 1));
    if (s.perf_ok && s.eod < best_eod) {
      frontier.push_back(s.hp);
      best_eod = s.eod;
    }
  }
  return samples;
}

ShapleyDetail shapley_importance_detail(const std::vector<HpSample>& samples, LearnerKind kind) {
  if (samples.size() < 2) {
    throw Error(Errc::InvalidArgument, "need at least two samples");
  }
  const Encoding enc = make_encoding(kind);
  const int p = static_cast<int>(enc.players.size());
  const long n = static_cast<long>(samples.size());

  Eigen::MatrixXd x_raw(n, enc.width);
  Eigen::VectorXd y(n);
  for (long i = 0; i < n; ++i) {
    x_raw.row(i) = encode(enc, kind, samples[static_cast<std::size_t>(i)].hp);
    y(i) = samples[static_cast<std::size_t>(i)].eod;
  }
  // Standardize the encoded columns so one ridge constant fits all.
  Eigen::RowVectorXd col_mean = x_raw.colwise().mean();
  Eigen::MatrixXd x = x_raw.rowwise() - col_mean;
  Eigen::RowVectorXd col_sd(enc.width);
  for (int c = 0; c < enc.width; ++c) {
    const double sd = std::sqrt(x.col(c).squaredNorm() / static_cast<double>(n));
    col_sd(c) = sd > 0.0 ? sd : 1.0;
    x.col(c) /= col_sd(c);
  }
  const double y_mean = y.mean();
  const Eigen::VectorXd yc = y.array() - y_mean;
  const Eigen::MatrixXd gram =
      x.transpose() * x + kSurrogateRidge * Eigen::MatrixXd::Identity(enc.width, enc.width);
  const Eigen::VectorXd beta = gram.ldlt().solve(x.transpose() * yc);

  ShapleyDetail out;
  const Eigen::VectorXd fitted = x * beta;
  const double ss_res = (yc - fitted).squaredNorm();
  const double ss_tot = yc.squaredNorm();
  out.importance.surrogate_r2 = ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : 0.0;
  out.importance.low_fit = out.importance.surrogate_r2 < kLowFitR2;
  out.grand_mean = y_mean;

  // Per-player contribution of a sample: with a linear surrogate and
  // mean imputation, a present player contributes its centered encoded
  // block, an absent one contributes zero. The exact coalition
  // enumeration below therefore telescopes, but is kept literal so the
  // attribution definition stays checkable.
  Eigen::MatrixXd contrib(n, p);
  for (long i = 0; i < n; ++i) {
    for (int j = 0; j < p; ++j) {
      double c = 0.0;
      for (int col : enc.blocks[static_cast<std::size_t>(j)]) c += x(i, col) * beta(col);
      contrib(i, j) = c;
    }
  }
  auto coalition_value = [&](long i, std::uint32_t mask) {
    double v = y_mean;
    for (int j = 0; j < p; ++j) {
      if (mask & (1u << j)) v += contrib(i, j);
    }
    return v;
  };

  std::vector<double> weight(static_cast<std::size_t>(p), 0.0);
  for (int s = 0; s < p; ++s) {
    weight[static_cast<std::size_t>(s)] =
        factorial(s) * factorial(p - s - 1) / factorial(p);
  }
  out.per_sample.assign(static_cast<std::size_t>(n), std::vector<double>(static_cast<std::size_t>(p), 0.0));
  out.predictions.assign(static_cast<std::size_t>(n), 0.0);
  for (long i = 0; i < n; ++i) {
    out.predictions[static_cast<std::size_t>(i)] = y_mean + fitted(i);
    for (int j = 0; j < p; ++j) {
      double phi = 0.0;
      const std::uint32_t full = (1u << p) - 1;
      for (std::uint32_t mask = 0; mask <= full; ++mask) {
        if (mask & (1u << j)) continue;
        const int size = __builtin_popcount(mask);
        phi += weight[static_cast<std::size_t>(size)] *
               (coalition_value(i, mask | (1u << j)) - coalition_value(i, mask));
      }
      out.per_sample[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = phi;
    }
  }

  out.importance.entries.resize(static_cast<std::size_t>(p));
  for (int j = 0; j < p; ++j) {
    double abs_sum = 0.0, sum = 0.0;
    for (long i = 0; i < n; ++i) {
      abs_sum += std::fabs(out.per_sample[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)]);
      sum += out.per_sample[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
    }
    ImportanceEntry e;
    e.name = enc.players[static_cast<std::size_t>(j)];
    const double magnitude = abs_sum / static_cast<double>(n);
    e.importance = sum >= 0.0 ? magnitude : -magnitude;
    out.importance.entries[static_cast<std::size_t>(j)] = std::move(e);
  }
  std::vector<int> order(static_cast<std::size_t>(p));
  for (int j = 0; j < p; ++j) order[static_cast<std::size_t>(j)] = j;
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    const double ia = std::fabs(out.importance.entries[static_cast<std::size_t>(a)].importance);
    const double ib = std::fabs(out.importance.entries[static_cast<std::size_t>(b)].importance);
    if (ia != ib) return ia > ib;
    return out.importance.entries[static_cast<std::size_t>(a)].name <
           out.importance.entries[static_cast<std::size_t>(b)].name;
  });
  for (int j : order) {
    out.importance.ranking.push_back(out.importance.entries[static_cast<std::size_t>(j)].name);
  }
  return out;
}

ImportanceVector shapley_importance(const std::vector<HpSample>& samples, LearnerKind kind) {
  return shapley_importance_detail(samples, kind).importance;
}

RankViolation top4_rank_violation(const std::vector<std::string>& ranking_a,
                                  const std::vector<std::string>& ranking_b) {
  auto top4 = [](const std::vector<std::string>& r) {
    return std::vector<std::string>(r.begin(),
                                    r.begin() + std::min<std::size_t>(4, r.size()));
  };
  const auto a4 = top4(ranking_a);
  const auto b4 = top4(ranking_b);
  const std::set<std::string> a_set(a4.begin(), a4.end());
  const std::set<std::string> b_set(b4.begin(), b4.end());

  RankViolation out;
  int missing = 0;
  for (const auto& name : a4) {
    if (!b_set.count(name)) ++missing;
  }
  out.membership_clause = missing >= 2;

  auto position = [](const std::vector<std::string>& r, const std::string& name) {
    for (std::size_t i = 0; i < r.size(); ++i) {
      if (r[i] == name) return static_cast<long>(i);
    }
    return static_cast<long>(-1);
  };
  std::vector<std::string> shared;
  for (const auto& name : a4) {
    if (b_set.count(name)) shared.push_back(name);
  }
  for (std::size_t i = 0; i < shared.size() && !out.order_clause; ++i) {
    for (std::size_t j = i + 1; j < shared.size(); ++j) {
      const long ai = position(ranking_a, shared[i]);
      const long aj = position(ranking_a, shared[j]);
      const long bi = position(ranking_b, shared[i]);
      const long bj = position(ranking_b, shared[j]);
      if ((ai < aj) != (bi < bj)) {
        out.order_clause = true;
        break;
      }
    }
  }
  out.violated = out.membership_clause || out.order_clause;
  return out;
}

}  // namespace fairaudit

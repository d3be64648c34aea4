#include "fairaudit/interventions.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include "fairaudit/errors.hpp"
#include "fairaudit/fairness.hpp"
#include "fairaudit/stats.hpp"

namespace fairaudit {

namespace {

constexpr double kLambdaEps = 1e-12;

// Sorted candidate feature indices (non-label), schema order.
std::vector<int> candidate_columns(const Schema& schema) {
  std::vector<int> out;
  for (int c = 0; c < schema.dim(); ++c) {
    if (c != schema.label_index()) out.push_back(c);
  }
  return out;
}

std::vector<std::string> names_for(const Schema& schema, const std::vector<int>& cols) {
  std::vector<std::string> out;
  for (int c : cols) out.push_back(schema.name(c));
  return out;
}

// Indices of the k best scores, ties resolved towards earlier schema
// position; +inf sorts above every finite value.
std::vector<int> top_k_by_f(const std::vector<FeatureScore>& scores,
                            const std::vector<int>& cols, int k) {
  std::vector<int> order(cols.size());
  for (std::size_t i = 0; i < cols.size(); ++i) order[i] = static_cast<int>(i);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return scores[static_cast<std::size_t>(a)].f > scores[static_cast<std::size_t>(b)].f;
  });
  order.resize(static_cast<std::size_t>(std::min<int>(k, static_cast<int>(order.size()))));
  std::vector<int> picked;
  for (int i : order) picked.push_back(cols[static_cast<std::size_t>(i)]);
  std::sort(picked.begin(), picked.end());
  return picked;
}

struct GroupStats {
  std::vector<std::size_t> rows;
  long positives = 0;
};

GroupStats group_rows(const std::vector<int>& group, const std::vector<int>& label, int g) {
  GroupStats out;
  for (std::size_t i = 0; i < group.size(); ++i) {
    if (group[i] != g) continue;
    out.rows.push_back(i);
    if (label[i] == 1) ++out.positives;
  }
  return out;
}

struct ThresholdPick {
  double threshold = std::numeric_limits<double>::infinity();
  double tpr = 0.0;
  long correct = 0;
  bool found = false;
};

// Highest-accuracy threshold for one group subject to tpr >= target;
// ties pick the higher (more conservative) threshold.
ThresholdPick pick_group_threshold(const std::vector<double>& score,
                                   const std::vector<int>& label, const GroupStats& g,
                                   double target) {
  std::vector<double> cands;
  for (std::size_t i : g.rows) cands.push_back(score[i]);
  std::sort(cands.begin(), cands.end(), std::greater<double>());
  cands.erase(std::unique(cands.begin(), cands.end()), cands.end());
  cands.insert(cands.begin(), std::numeric_limits<double>::infinity());

  ThresholdPick best;
  for (double t : cands) {
    long tp = 0, correct = 0;
    for (std::size_t i : g.rows) {
      const int pred = score[i] >= t ? 1 : 0;
      if (pred == label[i]) ++correct;
      if (pred == 1 && label[i] == 1) ++tp;
    }
    const double tpr = static_cast<double>(tp) / static_cast<double>(g.positives);
    if (tpr + 1e-12 < target) continue;
    if (!best.found || correct > best.correct ||
        (correct == best.correct && t > best.threshold)) {
      best = {t, tpr, correct, true};
    }
  }
  return best;
}

}  // namespace

std::vector<FeatureScore> anova_f_scores(const Dataset& train) {
  const auto& schema = train.schema();
  const auto label = label_vector(train);
  const long n = train.n();
  if (n < 3) throw Error(Errc::DatasetTooSmall, "need at least three rows");
  long n1 = 0;
  for (int v : label) n1 += v;
  const long n0 = n - n1;
  if (n0 == 0 || n1 == 0) {
    throw Error(Errc::DegenerateGroups, "both label classes are required");
  }
  std::vector<FeatureScore> out;
  for (int c : candidate_columns(schema)) {
    const auto col = train.values().col(c);
    double s0 = 0.0, s1 = 0.0;
    for (long r = 0; r < n; ++r) (label[static_cast<std::size_t>(r)] ? s1 : s0) += col(r);
    const double m0 = s0 / static_cast<double>(n0);
    const double m1 = s1 / static_cast<double>(n1);
    const double grand = (s0 + s1) / static_cast<double>(n);
    double ssw = 0.0;
    for (long r = 0; r < n; ++r) {
      const double m = label[static_cast<std::size_t>(r)] ? m1 : m0;
      ssw += (col(r) - m) * (col(r) - m);
    }
    const double ssb = static_cast<double>(n0) * (m0 - grand) * (m0 - grand) +
                       static_cast<double>(n1) * (m1 - grand) * (m1 - grand);
    FeatureScore fs;
    fs.name = schema.name(c);
    if (ssw <= 0.0) {
      fs.f = ssb > 0.0 ? std::numeric_limits<double>::infinity() : 0.0;
      fs.p_value = ssb > 0.0 ? 0.0 : 1.0;
    } else {
      fs.f = ssb / (ssw / static_cast<double>(n - 2));
      fs.p_value = 1.0 - f_cdf(fs.f, 1.0, static_cast<double>(n - 2));
    }
    out.push_back(std::move(fs));
  }
  return out;
}

const char* intervention_kind_name(InterventionKind k) {
  switch (k) {
    case InterventionKind::SelectKBest: return "select-kbest";
    case InterventionKind::SelectFpr: return "select-fpr";
    case InterventionKind::SelectPercentile: return "select-percentile";
    case InterventionKind::DropSensitive: return "drop-sens";
    case InterventionKind::RandomDrop: return "random-drop";
    case InterventionKind::ThresholdOptimizer: return "threshold-optimizer";
    case InterventionKind::CalibratedEqOdds: return "calibrated-eq-odds";
  }
  return "drop-sens";
}

InterventionKind intervention_kind_from_name(const std::string& s) {
  if (s == "select-kbest") return InterventionKind::SelectKBest;
  if (s == "select-fpr") return InterventionKind::SelectFpr;
  if (s == "select-percentile") return InterventionKind::SelectPercentile;
  if (s == "drop-sens") return InterventionKind::DropSensitive;
  if (s == "random-drop") return InterventionKind::RandomDrop;
  if (s == "threshold-optimizer") return InterventionKind::ThresholdOptimizer;
  if (s == "calibrated-eq-odds") return InterventionKind::CalibratedEqOdds;
  throw Error(Errc::InvalidArgument, "unknown intervention '" + s + "'");
}

bool is_selection_intervention(InterventionKind k) {
  switch (k) {
    case InterventionKind::SelectKBest:
    case InterventionKind::SelectFpr:
    case InterventionKind::SelectPercentile:
    case InterventionKind::DropSensitive:
    case InterventionKind::RandomDrop:
      return true;
    case InterventionKind::ThresholdOptimizer:
    case InterventionKind::CalibratedEqOdds:
      return false;
  }
  return false;
}

SelectionResult select_features(const Dataset& train, const Intervention& iv,
                                std::uint64_t seed) {
  const auto& schema = train.schema();
  const std::vector<int> cols = candidate_columns(schema);
  const int d = static_cast<int>(cols.size());
  SelectionResult out;
  std::vector<FeatureScore> fscores;
  auto ensure_scores = [&]() {
    if (fscores.empty()) fscores = anova_f_scores(train);
  };

  std::vector<int> picked;
  switch (iv.kind) {
    case InterventionKind::SelectKBest: {
      ensure_scores();
      const int k = iv.k > 0 ? std::min(iv.k, d) : (d + 1) / 2;
      picked = top_k_by_f(fscores, cols, k);
      break;
    }
    case InterventionKind::SelectFpr: {
      ensure_scores();
      for (int i = 0; i < d; ++i) {
        if (fscores[static_cast<std::size_t>(i)].p_value < iv.alpha) {
          picked.push_back(cols[static_cast<std::size_t>(i)]);
        }
      }
      break;
    }
    case InterventionKind::SelectPercentile: {
      ensure_scores();
      const int k = std::max(1, static_cast<int>(std::ceil(iv.percentile / 100.0 * d)));
      picked = top_k_by_f(fscores, cols, k);
      break;
    }
    case InterventionKind::DropSensitive: {
      for (int c : cols) {
        if (c != schema.sensitive_index()) picked.push_back(c);
      }
      break;
    }
    case InterventionKind::RandomDrop: {
      if (iv.max_drop < 1 || iv.max_drop > 3) {
        throw Error(Errc::InvalidArgument, "random drop width must lie in [1, 3]");
      }
      Rng rng(seed);
      const int width = std::min(iv.max_drop, d);
      const int count = static_cast<int>(rng.uniform_int(1, width));
      std::vector<int> pool(cols.size());
      for (std::size_t i = 0; i < cols.size(); ++i) pool[i] = static_cast<int>(i);
      rng.shuffle(pool);
      std::set<int> dropped(pool.begin(), pool.begin() + count);
      for (std::size_t i = 0; i < cols.size(); ++i) {
        if (!dropped.count(static_cast<int>(i))) picked.push_back(cols[i]);
      }
      break;
    }
    case InterventionKind::ThresholdOptimizer:
    case InterventionKind::CalibratedEqOdds:
      throw Error(Errc::InvalidArgument, "not a feature-selection intervention");
  }
  if (picked.empty()) {
    ensure_scores();
    picked = top_k_by_f(fscores, cols, 1);
    out.empty_fallback = true;
  }
  out.features = names_for(schema, picked);
  return out;
}

PostProcessor fit_threshold_optimizer(const std::vector<double>& score,
                                      const std::vector<int>& label,
                                      const std::vector<int>& group) {
  if (score.size() != label.size() || score.size() != group.size()) {
    throw Error(Errc::InvalidArgument, "score, label and group sizes differ");
  }
  const GroupStats g1 = group_rows(group, label, 1);
  const GroupStats g0 = group_rows(group, label, 0);
  if (g1.positives == 0 || g0.positives == 0) {
    throw Error(Errc::NoPositivesInGroup, "both groups need positive rows");
  }
  PostProcessor best;
  best.kind = PostProcessor::Kind::GroupThresholds;
  bool have_feasible = false;
  long best_correct = -1;
  double best_gap = std::numeric_limits<double>::infinity();
  for (int step = 0; step <= 100; ++step) {
    const double target = static_cast<double>(step) / 100.0;
    const ThresholdPick p1 = pick_group_threshold(score, label, g1, target);
    const ThresholdPick p0 = pick_group_threshold(score, label, g0, target);
    if (!p1.found || !p0.found) continue;
    const double gap = std::fabs(p1.tpr - p0.tpr);
    const long correct = p1.correct + p0.correct;
    const bool feasible = gap <= kTprGapLimit + 1e-12;
    bool adopt = false;
    if (feasible) {
      adopt = !have_feasible || correct > best_correct;
      have_feasible = have_feasible || feasible;
    } else if (!have_feasible) {
      adopt = gap < best_gap - 1e-12;
    }
    if (adopt) {
      best.threshold_privileged = p1.threshold;
      best.threshold_unprivileged = p0.threshold;
      best.target_tpr = target;
      best_correct = correct;
      best_gap = gap;
    }
  }
  best.feasible = have_feasible;
  return best;
}

double group_positive_score_mean(const std::vector<double>& score, const std::vector<int>& label,
                                 const std::vector<int>& group, int g) {
  double sum = 0.0;
  long count = 0;
  for (std::size_t i = 0; i < score.size(); ++i) {
    if (group[i] == g && label[i] == 1) {
      sum += score[i];
      ++count;
    }
  }
  if (count == 0) {
    throw Error(Errc::NoPositivesInGroup, "group " + std::to_string(g) + " has no positives");
  }
  return sum / static_cast<double>(count);
}

PostProcessor fit_calibrated_eq_odds(const std::vector<double>& score,
                                     const std::vector<int>& label,
                                     const std::vector<int>& group) {
  if (score.size() != label.size() || score.size() != group.size()) {
    throw Error(Errc::InvalidArgument, "score, label and group sizes differ");
  }
  PostProcessor pp;
  pp.kind = PostProcessor::Kind::ScoreMixing;
  double base[2] = {0.0, 0.0};
  long counts[2] = {0, 0};
  for (std::size_t i = 0; i < label.size(); ++i) {
    if (group[i] != 0 && group[i] != 1) {
      throw Error(Errc::InvalidArgument, "group values must be 0 or 1");
    }
    base[group[i]] += label[i];
    ++counts[group[i]];
  }
  if (counts[0] == 0 || counts[1] == 0) {
    throw Error(Errc::DegenerateGroups, "both sensitive groups are required");
  }
  base[0] /= static_cast<double>(counts[0]);
  base[1] /= static_cast<double>(counts[1]);
  pp.base_rate_unprivileged = base[0];
  pp.base_rate_privileged = base[1];

  const double m0 = group_positive_score_mean(score, label, group, 0);
  const double m1 = group_positive_score_mean(score, label, group, 1);
  const double gfnr0 = 1.0 - m0;
  const double gfnr1 = 1.0 - m1;

  // The group already carrying the higher cost stays untouched; the
  // other is mixed towards its base rate until the costs agree:
  // 1 - lambda*base - (1 - lambda)*m == gfnr_high.
  const int low = gfnr0 <= gfnr1 ? 0 : 1;
  const double m_low = low == 0 ? m0 : m1;
  const double base_low = base[low];
  const double target = std::max(gfnr0, gfnr1);
  double lambda = 0.0;
  const double denom = m_low - base_low;
  if (std::fabs(denom) < kLambdaEps) {
    pp.clamped = true;
  } else {
    lambda = (target - (1.0 - m_low)) / denom;
    if (lambda < 0.0 || lambda > 1.0) {
      pp.clamped = true;
      lambda = std::clamp(lambda, 0.0, 1.0);
    }
  }
  if (low == 0) {
    pp.lambda_unprivileged = lambda;
    pp.lambda_privileged = 0.0;
  } else {
    pp.lambda_privileged = lambda;
    pp.lambda_unprivileged = 0.0;
  }
  return pp;
}

std::vector<double> postproc_scores(const PostProcessor& pp, const std::vector<double>& score,
                                    const std::vector<int>& group) {
  if (pp.kind == PostProcessor::Kind::GroupThresholds) return score;
  std::vector<double> out(score.size());
  for (std::size_t i = 0; i < score.size(); ++i) {
    const double lambda = group[i] == 1 ? pp.lambda_privileged : pp.lambda_unprivileged;
    const double base = group[i] == 1 ? pp.base_rate_privileged : pp.base_rate_unprivileged;
    out[i] = lambda * base + (1.0 - lambda) * score[i];
  }
  return out;
}

std::vector<int> postproc_predict(const PostProcessor& pp, const std::vector<double>& score,
                                  const std::vector<int>& group) {
  std::vector<int> out(score.size());
  if (pp.kind == PostProcessor::Kind::GroupThresholds) {
    for (std::size_t i = 0; i < score.size(); ++i) {
      const double t = group[i] == 1 ? pp.threshold_privileged : pp.threshold_unprivileged;
      out[i] = score[i] >= t ? 1 : 0;
    }
    return out;
  }
  const auto mixed = postproc_scores(pp, score, group);
  for (std::size_t i = 0; i < mixed.size(); ++i) {
    out[i] = mixed[i] >= pp.decision_threshold ? 1 : 0;
  }
  return out;
}

}  // namespace fairaudit

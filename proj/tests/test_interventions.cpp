#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <set>
#include <string>
#include <vector>

#include "fairaudit/dataset.hpp"
#include "fairaudit/errors.hpp"
#include "fairaudit/fairness.hpp"
#include "fairaudit/interventions.hpp"
#include "fairaudit/stats.hpp"

using namespace fairaudit;

#define CHECK_NEAR(a, b, tol) CHECK(std::fabs((a) - (b)) <= (tol))

namespace {

Schema quad_schema() {
  return Schema({{"x0", FeatureKind::Continuous},
                 {"x1", FeatureKind::Continuous},
                 {"x2", FeatureKind::Continuous},
                 {"s", FeatureKind::Boolean},
                 {"y", FeatureKind::Boolean}},
                "s", "y");
}

// Class gaps per column: x0 = 3, x1 = 1, x2 and s = none.
Dataset graded_signal_data(int n, std::uint64_t seed) {
  Rng rng(seed);
  Eigen::MatrixXd m(n, 5);
  for (int i = 0; i < n; ++i) {
    const int y = rng.uniform() < 0.5 ? 1 : 0;
    m(i, 0) = rng.normal() + 3.0 * y;
    m(i, 1) = rng.normal() + 1.0 * y;
    m(i, 2) = rng.normal();
    m(i, 3) = rng.uniform() < 0.5 ? 1 : 0;
    m(i, 4) = y;
  }
  return Dataset(quad_schema(), m);
}

Dataset noise_only_data(int n, std::uint64_t seed) {
  Rng rng(seed);
  Eigen::MatrixXd m(n, 5);
  for (int i = 0; i < n; ++i) {
    m(i, 0) = rng.normal();
    m(i, 1) = rng.normal();
    m(i, 2) = rng.normal();
    m(i, 3) = rng.uniform() < 0.5 ? 1 : 0;
    m(i, 4) = rng.uniform() < 0.5 ? 1 : 0;
  }
  return Dataset(quad_schema(), m);
}

std::vector<std::string> picked_names(const Dataset& d, const Intervention& iv,
                                      std::uint64_t seed = 7) {
  return select_features(d, iv, seed).features;
}

double accuracy(const std::vector<int>& pred, const std::vector<int>& label) {
  long hit = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) hit += pred[i] == label[i];
  return static_cast<double>(hit) / static_cast<double>(pred.size());
}

struct SweepPick {
  double t1 = 0.0;
  double t0 = 0.0;
  double target = 0.0;
  bool feasible = false;
};

// Independent rebuild of the target sweep: per group the accuracy-best
// threshold with recall at or above the target (ties towards the higher
// cut), then the best-accuracy target whose group recall gap stays
// within the limit, lowest target on ties.
SweepPick sweep_reference(const std::vector<double>& score, const std::vector<int>& label,
                          const std::vector<int>& group) {
  auto group_best = [&](int g, double target, double& t_out, double& tpr_out,
                        long& correct_out) -> bool {
    std::vector<double> cands{std::numeric_limits<double>::infinity()};
    long positives = 0;
    for (std::size_t i = 0; i < score.size(); ++i) {
      if (group[i] != g) continue;
      cands.push_back(score[i]);
      positives += label[i] == 1;
    }
    std::sort(cands.begin(), cands.end());
    cands.erase(std::unique(cands.begin(), cands.end()), cands.end());
    bool ok = false;
    for (double t : cands) {
      long tp = 0, correct = 0;
      for (std::size_t i = 0; i < score.size(); ++i) {
        if (group[i] != g) continue;
        const int pred = score[i] >= t ? 1 : 0;
        correct += pred == label[i];
        tp += pred == 1 && label[i] == 1;
      }
      const double tpr = static_cast<double>(tp) / static_cast<double>(positives);
      if (tpr + 1e-12 < target) continue;
      if (!ok || correct > correct_out || (correct == correct_out && t > t_out)) {
        t_out = t;
        tpr_out = tpr;
        correct_out = correct;
        ok = true;
      }
    }
    return ok;
  };

  SweepPick out;
  bool have = false;
  long best_correct = -1;
  double best_gap = std::numeric_limits<double>::infinity();
  for (int step = 0; step <= 100; ++step) {
    const double target = static_cast<double>(step) / 100.0;
    double t1 = 0, t0 = 0, r1 = 0, r0 = 0;
    long c1 = 0, c0 = 0;
    if (!group_best(1, target, t1, r1, c1)) continue;
    if (!group_best(0, target, t0, r0, c0)) continue;
    const double gap = std::fabs(r1 - r0);
    if (gap <= kTprGapLimit + 1e-12) {
      if (!have || c1 + c0 > best_correct) {
        out = {t1, t0, target, true};
        best_correct = c1 + c0;
        have = true;
      }
    } else if (!have && gap < best_gap - 1e-12) {
      out = {t1, t0, target, false};
      best_gap = gap;
    }
  }
  out.feasible = have;
  return out;
}

// Scores informative in both groups, the unprivileged one noisier.
void overlapping_scores(int n, std::uint64_t seed, std::vector<double>& score,
                        std::vector<int>& label, std::vector<int>& group) {
  Rng rng(seed);
  score.clear();
  label.clear();
  group.clear();
  for (int i = 0; i < n; ++i) {
    const int g = rng.uniform() < 0.5 ? 1 : 0;
    const int y = rng.uniform() < 0.5 ? 1 : 0;
    const double spread = g == 1 ? 0.15 : 0.25;
    double sc = 0.5 + (y == 1 ? 0.18 : -0.18) + spread * rng.normal();
    sc = std::clamp(sc, 0.0, 1.0);
    group.push_back(g);
    label.push_back(y);
    score.push_back(sc);
  }
}

}  // namespace

TEST_CASE("class separation scores match a hand computation") {
  // Column x: class 0 holds {1, 2, 3}, class 1 holds {4, 6}. Between
  // 10.8, within 4 over 3 dof, so F = 8.1.
  Eigen::MatrixXd m(5, 3);
  m << 1, 1, 0,  //
      2, 0, 0,   //
      3, 1, 0,   //
      4, 0, 1,   //
      6, 1, 1;
  const Dataset d(Schema({{"x", FeatureKind::Continuous},
                          {"s", FeatureKind::Boolean},
                          {"y", FeatureKind::Boolean}},
                         "s", "y"),
                  m);
  const auto scores = anova_f_scores(d);
  REQUIRE(scores.size() == 2);
  CHECK(scores[0].name == "x");
  CHECK(scores[1].name == "s");
  CHECK_NEAR(scores[0].f, 8.1, 1e-9);
  CHECK_NEAR(scores[0].p_value, 0.06532071006198015, 1e-7);
  // Column s by the same arithmetic: F = 3/35.
  CHECK_NEAR(scores[1].f, 3.0 / 35.0, 1e-9);
  CHECK_NEAR(scores[1].p_value, 0.7887799817897357, 1e-7);
}

TEST_CASE("zero within-class variance yields an infinite or zero score") {
  Eigen::MatrixXd m(6, 4);
  for (int i = 0; i < 6; ++i) {
    const int y = i >= 3 ? 1 : 0;
    m(i, 0) = y;    // splits the classes exactly
    m(i, 1) = 5.0;  // constant
    m(i, 2) = i % 2;
    m(i, 3) = y;
  }
  const Dataset d(Schema({{"x", FeatureKind::Continuous},
                          {"z", FeatureKind::Continuous},
                          {"s", FeatureKind::Boolean},
                          {"y", FeatureKind::Boolean}},
                         "s", "y"),
                  m);
  const auto scores = anova_f_scores(d);
  REQUIRE(scores.size() == 3);
  CHECK(std::isinf(scores[0].f));
  CHECK(scores[0].p_value == 0.0);
  CHECK(scores[1].f == 0.0);
  CHECK(scores[1].p_value == 1.0);
}

TEST_CASE("scoring rejects degenerate inputs") {
  Eigen::MatrixXd two(2, 3);
  two << 1, 0, 0,  //
      2, 1, 1;
  const Schema sch({{"x", FeatureKind::Continuous},
                    {"s", FeatureKind::Boolean},
                    {"y", FeatureKind::Boolean}},
                   "s", "y");
  CHECK_THROWS_AS(anova_f_scores(Dataset(sch, two)), Error);

  Eigen::MatrixXd flat(4, 3);
  for (int i = 0; i < 4; ++i) {
    flat(i, 0) = i;
    flat(i, 1) = i % 2;
    flat(i, 2) = 1;  // single class
  }
  CHECK_THROWS_AS(anova_f_scores(Dataset(sch, flat)), Error);
}

TEST_CASE("k-best keeps the strongest columns in schema order") {
  const Dataset d = graded_signal_data(400, 21);
  Intervention iv;
  iv.kind = InterventionKind::SelectKBest;

  iv.k = 1;
  CHECK(picked_names(d, iv) == std::vector<std::string>{"x0"});
  iv.k = 2;
  CHECK(picked_names(d, iv) == std::vector<std::string>{"x0", "x1"});
  // k of zero asks for the upper half of the candidates: 4 -> 2.
  iv.k = 0;
  CHECK(picked_names(d, iv) == std::vector<std::string>{"x0", "x1"});
  // Oversized k clamps to every candidate.
  iv.k = 9;
  CHECK(picked_names(d, iv) == std::vector<std::string>{"x0", "x1", "x2", "s"});
}

TEST_CASE("k-best ties resolve towards the earlier column") {
  // b duplicates a, so their scores are identical doubles.
  Eigen::MatrixXd m(4, 4);
  m << 0, 0, 1, 0,  //
      1, 1, 0, 0,   //
      3, 3, 1, 1,   //
      4, 4, 0, 1;
  const Dataset d(Schema({{"a", FeatureKind::Continuous},
                          {"b", FeatureKind::Continuous},
                          {"s", FeatureKind::Boolean},
                          {"y", FeatureKind::Boolean}},
                         "s", "y"),
                  m);
  Intervention iv;
  iv.kind = InterventionKind::SelectKBest;
  iv.k = 1;
  CHECK(picked_names(d, iv) == std::vector<std::string>{"a"});
  iv.k = 2;
  CHECK(picked_names(d, iv) == std::vector<std::string>{"a", "b"});
}

TEST_CASE("the false-positive-rate filter matches its own score table") {
  const Dataset d = graded_signal_data(400, 22);
  const auto scores = anova_f_scores(d);
  for (double alpha : {1e-6, 0.05, 0.5}) {
    Intervention iv;
    iv.kind = InterventionKind::SelectFpr;
    iv.alpha = alpha;
    std::vector<std::string> expect;
    for (const auto& fs : scores) {
      if (fs.p_value < alpha) expect.push_back(fs.name);
    }
    if (expect.empty()) continue;
    CHECK(picked_names(d, iv) == expect);
  }
  Intervention strict;
  strict.kind = InterventionKind::SelectFpr;
  strict.alpha = 1e-6;
  const auto kept = picked_names(d, strict);
  CHECK(std::count(kept.begin(), kept.end(), "x0") == 1);
}

TEST_CASE("an empty selection falls back to the single best column") {
  const Dataset d = noise_only_data(300, 23);
  Intervention iv;
  iv.kind = InterventionKind::SelectFpr;
  iv.alpha = 1e-12;  // nothing this significant in pure noise
  const auto res = select_features(d, iv, 7);
  CHECK(res.empty_fallback);
  REQUIRE(res.features.size() == 1);
  const auto scores = anova_f_scores(d);
  std::string best;
  double best_f = -1.0;
  for (const auto& fs : scores) {
    if (fs.f > best_f) {
      best_f = fs.f;
      best = fs.name;
    }
  }
  CHECK(res.features[0] == best);
}

TEST_CASE("the percentile selector rounds up and never goes below one") {
  const Dataset d = graded_signal_data(400, 24);
  Intervention iv;
  iv.kind = InterventionKind::SelectPercentile;

  iv.percentile = 10.0;  // ceil(0.4) = 1
  CHECK(picked_names(d, iv) == std::vector<std::string>{"x0"});
  iv.percentile = 50.0;
  CHECK(picked_names(d, iv) == std::vector<std::string>{"x0", "x1"});
  iv.percentile = 100.0;
  CHECK(picked_names(d, iv) == std::vector<std::string>{"x0", "x1", "x2", "s"});
  iv.percentile = 0.5;
  CHECK(picked_names(d, iv).size() == 1);
}

TEST_CASE("dropping the sensitive column keeps everything else") {
  const Dataset d = graded_signal_data(100, 25);
  Intervention iv;
  iv.kind = InterventionKind::DropSensitive;
  CHECK(picked_names(d, iv) == std::vector<std::string>{"x0", "x1", "x2"});
  CHECK_FALSE(select_features(d, iv, 7).empty_fallback);
}

TEST_CASE("random column drops are seeded and bounded") {
  const Dataset d = graded_signal_data(100, 26);
  Intervention iv;
  iv.kind = InterventionKind::RandomDrop;

  iv.max_drop = 0;
  CHECK_THROWS_AS(select_features(d, iv, 7), Error);
  iv.max_drop = 4;
  CHECK_THROWS_AS(select_features(d, iv, 7), Error);

  iv.max_drop = 3;
  const std::vector<std::string> all{"x0", "x1", "x2", "s"};
  std::set<std::vector<std::string>> seen;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto a = picked_names(d, iv, seed);
    const auto b = picked_names(d, iv, seed);
    CHECK(a == b);
    CHECK(a.size() >= 1);
    CHECK(a.size() <= 3);
    // Kept names stay a subsequence of the schema order.
    std::size_t cursor = 0;
    for (const auto& name : a) {
      while (cursor < all.size() && all[cursor] != name) ++cursor;
      CHECK(cursor < all.size());
      ++cursor;
    }
    seen.insert(a);
  }
  CHECK(seen.size() >= 2);

  iv.max_drop = 1;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    CHECK(picked_names(d, iv, seed).size() == 3);
  }
}

TEST_CASE("dropping every candidate falls back to the best column") {
  // Two candidates and width two: some seed removes both.
  Eigen::MatrixXd m(40, 3);
  Rng rng(5);
  for (int i = 0; i < 40; ++i) {
    const int y = i % 2;
    m(i, 0) = rng.normal() + 2.0 * y;
    m(i, 1) = rng.uniform() < 0.5 ? 1 : 0;
    m(i, 2) = y;
  }
  const Dataset d(Schema({{"a", FeatureKind::Continuous},
                          {"s", FeatureKind::Boolean},
                          {"y", FeatureKind::Boolean}},
                         "s", "y"),
                  m);
  Intervention iv;
  iv.kind = InterventionKind::RandomDrop;
  iv.max_drop = 3;
  bool saw_fallback = false;
  for (std::uint64_t seed = 0; seed < 50 && !saw_fallback; ++seed) {
    const auto res = select_features(d, iv, seed);
    REQUIRE(res.features.size() >= 1);
    if (res.empty_fallback) {
      saw_fallback = true;
      REQUIRE(res.features.size() == 1);
      CHECK(res.features[0] == "a");
    }
  }
  CHECK(saw_fallback);
}

TEST_CASE("only selection kinds run through the selector") {
  CHECK(is_selection_intervention(InterventionKind::SelectKBest));
  CHECK(is_selection_intervention(InterventionKind::SelectFpr));
  CHECK(is_selection_intervention(InterventionKind::SelectPercentile));
  CHECK(is_selection_intervention(InterventionKind::DropSensitive));
  CHECK(is_selection_intervention(InterventionKind::RandomDrop));
  CHECK_FALSE(is_selection_intervention(InterventionKind::ThresholdOptimizer));
  CHECK_FALSE(is_selection_intervention(InterventionKind::CalibratedEqOdds));

  const Dataset d = graded_signal_data(50, 27);
  Intervention iv;
  iv.kind = InterventionKind::ThresholdOptimizer;
  CHECK_THROWS_AS(select_features(d, iv, 7), Error);
  iv.kind = InterventionKind::CalibratedEqOdds;
  CHECK_THROWS_AS(select_features(d, iv, 7), Error);
}

TEST_CASE("intervention names round trip and junk is rejected") {
  const InterventionKind kinds[] = {
      InterventionKind::SelectKBest,       InterventionKind::SelectFpr,
      InterventionKind::SelectPercentile,  InterventionKind::DropSensitive,
      InterventionKind::RandomDrop,        InterventionKind::ThresholdOptimizer,
      InterventionKind::CalibratedEqOdds,
  };
  for (InterventionKind k : kinds) {
    CHECK(intervention_kind_from_name(intervention_kind_name(k)) == k);
  }
  CHECK_THROWS_AS(intervention_kind_from_name("select-best"), Error);
  CHECK_THROWS_AS(intervention_kind_from_name(""), Error);
}

TEST_CASE("equal-accuracy thresholds resolve to the higher cut") {
  // Per group {pos 0.9, pos 0.2, neg 0.5}: cutting at 0.9 and at 0.2
  // both get two of three right, so 0.9 wins; the recall gap is zero
  // already at target zero and no target beats four correct overall.
  const std::vector<double> score{0.9, 0.2, 0.5, 0.9, 0.2, 0.5};
  const std::vector<int> label{1, 1, 0, 1, 1, 0};
  const std::vector<int> group{1, 1, 1, 0, 0, 0};
  const PostProcessor pp = fit_threshold_optimizer(score, label, group);
  CHECK(pp.kind == PostProcessor::Kind::GroupThresholds);
  CHECK(pp.threshold_privileged == 0.9);
  CHECK(pp.threshold_unprivileged == 0.9);
  CHECK(pp.target_tpr == 0.0);
  CHECK(pp.feasible);
}

TEST_CASE("the threshold sweep agrees with an independent rebuild") {
  for (std::uint64_t seed : {101, 202, 303}) {
    std::vector<double> score;
    std::vector<int> label, group;
    overlapping_scores(600, seed, score, label, group);
    const PostProcessor pp = fit_threshold_optimizer(score, label, group);
    const SweepPick ref = sweep_reference(score, label, group);
    CHECK(pp.threshold_privileged == ref.t1);
    CHECK(pp.threshold_unprivileged == ref.t0);
    CHECK(pp.target_tpr == ref.target);
    CHECK(pp.feasible == ref.feasible);
  }
}

TEST_CASE("adjusted thresholds close the recall gap at small accuracy cost") {
  std::vector<double> score;
  std::vector<int> label, group;
  overlapping_scores(800, 404, score, label, group);

  const PostProcessor pp = fit_threshold_optimizer(score, label, group);
  REQUIRE(pp.feasible);
  const auto pred = postproc_predict(pp, score, group);
  const double gap =
      std::fabs(group_tpr(pred, label, group, 1) - group_tpr(pred, label, group, 0));
  CHECK(gap <= kTprGapLimit + 1e-12);

  std::vector<int> flat(score.size());
  for (std::size_t i = 0; i < score.size(); ++i) flat[i] = score[i] >= 0.5 ? 1 : 0;
  CHECK_NEAR(accuracy(pred, label), accuracy(flat, label), 0.05);
  // Raw scores pass through untouched for threshold adjustments.
  CHECK(postproc_scores(pp, score, group) == score);
}

TEST_CASE("threshold fitting rejects bad shapes and empty positives") {
  const std::vector<double> score{0.9, 0.1, 0.8, 0.2};
  const std::vector<int> label{1, 0, 1, 0};
  const std::vector<int> group{1, 1, 0, 0};
  CHECK_THROWS_AS(fit_threshold_optimizer(score, label, {1, 1, 0}), Error);
  // Group 0 has no positive rows.
  CHECK_THROWS_AS(fit_threshold_optimizer(score, {1, 0, 0, 0}, group), Error);
}

TEST_CASE("group thresholds drive the prediction rule") {
  PostProcessor pp;
  pp.kind = PostProcessor::Kind::GroupThresholds;
  pp.threshold_privileged = 0.7;
  pp.threshold_unprivileged = 0.3;
  const std::vector<double> score{0.8, 0.5, 0.35, 0.2};
  const std::vector<int> group{1, 1, 0, 0};
  CHECK(postproc_predict(pp, score, group) == std::vector<int>{1, 0, 1, 0});
  // The boundary itself predicts positive.
  CHECK(postproc_predict(pp, {0.7, 0.3}, {1, 0}) == std::vector<int>{1, 1});
}

TEST_CASE("score mixing equalizes the generalized miss rate") {
  // Unprivileged: three positives at 0.9 among ten rows, so the miss
  // rate is 0.1 against a base rate of 0.3. Privileged: two positives
  // at 0.5 among four rows, miss rate 0.5. Matching needs exactly
  // lambda = (0.5 - 0.1) / (0.9 - 0.3) = 2/3 on the unprivileged side.
  std::vector<double> score{0.9, 0.9, 0.9, 0.1, 0.15, 0.2, 0.25, 0.3, 0.35, 0.4,
                            0.5, 0.5, 0.2, 0.4};
  std::vector<int> label{1, 1, 1, 0, 0, 0, 0, 0, 0, 0, 1, 1, 0, 0};
  std::vector<int> group{0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 1, 1, 1, 1};

  const PostProcessor pp = fit_calibrated_eq_odds(score, label, group);
  CHECK(pp.kind == PostProcessor::Kind::ScoreMixing);
  CHECK_FALSE(pp.clamped);
  CHECK_NEAR(pp.lambda_unprivileged, 2.0 / 3.0, 1e-12);
  CHECK(pp.lambda_privileged == 0.0);
  CHECK_NEAR(pp.base_rate_unprivileged, 0.3, 1e-12);
  CHECK_NEAR(pp.base_rate_privileged, 0.5, 1e-12);

  const auto mixed = postproc_scores(pp, score, group);
  for (std::size_t i = 0; i < score.size(); ++i) {
    if (group[i] == 1) {
      CHECK(mixed[i] == score[i]);  // untouched side
    } else {
      CHECK_NEAR(mixed[i], pp.lambda_unprivileged * 0.3 +
                               (1.0 - pp.lambda_unprivileged) * score[i],
                 1e-12);
    }
  }
  const double miss0 = 1.0 - group_positive_score_mean(mixed, label, group, 0);
  const double miss1 = 1.0 - group_positive_score_mean(mixed, label, group, 1);
  CHECK_NEAR(miss0, miss1, 1e-6);
}

TEST_CASE("an unreachable mixing target clamps to zero") {
  // Unprivileged positives score 0.4 below a 0.8 base rate, so the
  // matching coefficient comes out negative.
  std::vector<double> score{0.4, 0.4, 0.4, 0.4, 0.3, 0.1, 0.2, 0.2, 0.2, 0.2};
  std::vector<int> label{1, 1, 1, 1, 0, 1, 0, 0, 0, 0};
  std::vector<int> group{0, 0, 0, 0, 0, 1, 1, 1, 1, 1};
  const PostProcessor pp = fit_calibrated_eq_odds(score, label, group);
  CHECK(pp.clamped);
  CHECK(pp.lambda_unprivileged == 0.0);
  CHECK(pp.lambda_privileged == 0.0);
}

TEST_CASE("a vanishing mixing denominator clamps instead of dividing") {
  // Unprivileged positive mean equals its base rate exactly.
  const std::vector<double> score{0.5, 0.2, 0.3, 0.6};
  const std::vector<int> label{1, 0, 1, 0};
  const std::vector<int> group{0, 0, 1, 1};
  const PostProcessor pp = fit_calibrated_eq_odds(score, label, group);
  CHECK(pp.clamped);
  CHECK(pp.lambda_unprivileged == 0.0);
  CHECK(pp.lambda_privileged == 0.0);
  // Zero mixing leaves every score alone.
  CHECK(postproc_scores(pp, score, group) == score);
}

TEST_CASE("already matched miss rates need no mixing") {
  const std::vector<double> score{0.6, 0.6, 0.6, 0.1, 0.2, 0.3, 0.6, 0.6, 0.4};
  const std::vector<int> label{1, 1, 1, 0, 0, 0, 1, 1, 0};
  const std::vector<int> group{0, 0, 0, 0, 0, 0, 1, 1, 1};
  const PostProcessor pp = fit_calibrated_eq_odds(score, label, group);
  CHECK_FALSE(pp.clamped);
  CHECK(pp.lambda_unprivileged == 0.0);
  CHECK(pp.lambda_privileged == 0.0);
}

TEST_CASE("mixing rejects malformed groups and labels") {
  const std::vector<double> score{0.5, 0.5, 0.5, 0.5};
  const std::vector<int> label{1, 0, 1, 0};
  CHECK_THROWS_AS(fit_calibrated_eq_odds(score, label, {0, 0, 1}), Error);
  CHECK_THROWS_AS(fit_calibrated_eq_odds(score, label, {0, 0, 2, 1}), Error);
  CHECK_THROWS_AS(fit_calibrated_eq_odds(score, label, {1, 1, 1, 1}), Error);
  // Group 0 holds no positives.
  CHECK_THROWS_AS(fit_calibrated_eq_odds(score, {0, 0, 1, 1}, {0, 0, 1, 1}), Error);
}

TEST_CASE("mixed scores follow the blend formula per group") {
  PostProcessor pp;
  pp.kind = PostProcessor::Kind::ScoreMixing;
  pp.lambda_privileged = 0.25;
  pp.base_rate_privileged = 0.8;
  pp.lambda_unprivileged = 0.5;
  pp.base_rate_unprivileged = 0.2;
  const std::vector<double> score{0.4, 0.4};
  const std::vector<int> group{1, 0};
  const auto mixed = postproc_scores(pp, score, group);
  CHECK_NEAR(mixed[0], 0.5, 1e-12);  // 0.25*0.8 + 0.75*0.4
  CHECK_NEAR(mixed[1], 0.3, 1e-12);  // 0.5*0.2 + 0.5*0.4
  // Prediction thresholds the mixed score.
  CHECK(postproc_predict(pp, score, group) == std::vector<int>{1, 0});
}

TEST_CASE("the positive score mean counts only matching rows") {
  const std::vector<double> score{0.2, 0.4, 0.8};
  const std::vector<int> label{1, 0, 1};
  const std::vector<int> group{0, 0, 0};
  CHECK_NEAR(group_positive_score_mean(score, label, group, 0), 0.5, 1e-12);
  CHECK_THROWS_AS(group_positive_score_mean(score, label, group, 1), Error);
}

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fairaudit/dataset.hpp"

namespace fairaudit {

struct FeatureScore {
  std::string name;
  double f = 0.0;        // one-way F statistic against the label
  double p_value = 1.0;  // upper tail of F(1, n - 2)
};

// Univariate class separation of every non-label column. Zero
// within-class variance with distinct class means yields infinity.
std::vector<FeatureScore> anova_f_scores(const Dataset& train);

enum class InterventionKind {
  SelectKBest,
  SelectFpr,
  SelectPercentile,
  DropSensitive,
  RandomDrop,
  ThresholdOptimizer,
  CalibratedEqOdds,
};

const char* intervention_kind_name(InterventionKind k);
InterventionKind intervention_kind_from_name(const std::string& s);

struct Intervention {
  InterventionKind kind = InterventionKind::DropSensitive;
  int k = 0;                 // SelectKBest; 0 means ceil(d / 2)
  double alpha = 0.05;       // SelectFpr
  double percentile = 10.0;  // SelectPercentile
  int max_drop = 3;          // RandomDrop, at most 3
};

bool is_selection_intervention(InterventionKind k);

struct SelectionResult {
  std::vector<std::string> features;  // schema order
  // Selection came up empty; the single best-F feature was kept instead.
  bool empty_fallback = false;
};

SelectionResult select_features(const Dataset& train, const Intervention& iv,
                                std::uint64_t seed);

// Post-hoc adjustment of scores or thresholds, fitted per sensitive
// group on held-out rows.
struct PostProcessor {
  enum class Kind { GroupThresholds, ScoreMixing };
  Kind kind = Kind::GroupThresholds;
  // group thresholds
  double threshold_privileged = 0.5;
  double threshold_unprivileged = 0.5;
  double target_tpr = 0.0;
  bool feasible = true;  // a target with |tpr gap| <= 0.02 existed
  // score mixing towards the group base rate
  double lambda_privileged = 0.0;
  double lambda_unprivileged = 0.0;
  double base_rate_privileged = 0.0;
  double base_rate_unprivileged = 0.0;
  bool clamped = false;
  double decision_threshold = 0.5;
};

inline constexpr double kTprGapLimit = 0.02;

// Sweeps a shared target true-positive rate over {0.00, 0.01, ..., 1.00};
// per group picks the accuracy-maximizing threshold reaching the target,
// then keeps the target with the best overall accuracy whose group gap
// stays within kTprGapLimit (lowest target on ties; closest gap with the
// feasible flag cleared when none qualifies).
PostProcessor fit_threshold_optimizer(const std::vector<double>& score,
                                      const std::vector<int>& label,
                                      const std::vector<int>& group);

// Generalized-false-negative-rate matching: the lower-gfnr group's
// scores are mixed towards its base rate until both groups share the
// higher gfnr; the other group keeps its scores.
PostProcessor fit_calibrated_eq_odds(const std::vector<double>& score,
                                     const std::vector<int>& label,
                                     const std::vector<int>& group);

std::vector<double> postproc_scores(const PostProcessor& pp, const std::vector<double>& score,
                                    const std::vector<int>& group);
std::vector<int> postproc_predict(const PostProcessor& pp, const std::vector<double>& score,
                                  const std::vector<int>& group);

// Mean positive score over the actual positives of one group, the
// complement of the group's generalized false negative rate.
double group_positive_score_mean(const std::vector<double>& score, const std::vector<int>& label,
                                 const std::vector<int>& group, int g);

}  // namespace fairaudit

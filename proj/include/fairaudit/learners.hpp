#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "fairaudit/dataset.hpp"

namespace fairaudit {

enum class LearnerKind { LogisticRegression, DecisionTree, LinearSvm };

const char* learner_kind_name(LearnerKind k);
LearnerKind learner_kind_from_name(const std::string& s);

enum class Penalty { None, L2, L1, ElasticNet };
enum class Solver { Gradient, Newton };
enum class SplitCriterion { Gini, Entropy };

const char* penalty_name(Penalty p);
Penalty penalty_from_name(const std::string& s);
const char* solver_name(Solver s);
Solver solver_from_name(const std::string& s);
const char* split_criterion_name(SplitCriterion c);
SplitCriterion split_criterion_from_name(const std::string& s);

// Hyperparameters for all three learner families; each kind reads only
// its own fields.
struct HpConfig {
  // logistic regression (C and tol/max_iter shared with the svm)
  Penalty penalty = Penalty::L2;
  double c = 1.0;
  double tol = 1e-4;
  bool fit_intercept = true;
  double intercept_scaling = 1.0;
  int max_iter = 100;
  double l1_ratio = 0.5;
  Solver solver = Solver::Newton;
  // decision tree
  SplitCriterion criterion = SplitCriterion::Gini;
  int max_depth = 5;
  int min_samples_leaf = 1;

  bool operator==(const HpConfig&) const = default;
};

// A full training recipe: hyperparameters plus the feature subset the
// model may look at. An empty feature list means every non-label column.
struct ParamConfig {
  HpConfig hp;
  std::vector<std::string> features;
  double decision_threshold = 0.5;
};

struct TreeNode {
  bool leaf = true;
  int feature = -1;      // index into the model's feature list
  double threshold = 0.0;  // x <= threshold goes left
  double prob = 0.0;     // leaf positive fraction
  int left = -1;
  int right = -1;
};

struct TrainedModel {
  LearnerKind kind = LearnerKind::LogisticRegression;
  std::vector<std::string> features;
  double decision_threshold = 0.5;
  bool converged = true;
  // The proximal solver stands in for newton when an l1 component makes
  // the objective non-smooth.
  bool solver_fallback = false;

  // Linear family: score = sigmoid(w.x + b), optionally through a
  // logistic calibration of the raw margin (svm).
  Eigen::VectorXd weights;
  double intercept = 0.0;
  bool calibrated = false;
  double calib_scale = 1.0;
  double calib_offset = 0.0;
  ScalerParams scaler;  // over the model's features

  std::vector<TreeNode> tree;
};

// Scores in [0, 1]; the predicted label is favorable (1) when the score
// reaches the decision threshold.
std::vector<double> scores(const TrainedModel& m, const Dataset& d);
std::vector<int> predict(const TrainedModel& m, const Dataset& d);

struct PerfMetrics {
  double accuracy = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  bool zero_predicted_favorable = false;
};

PerfMetrics evaluate(const TrainedModel& m, const Dataset& test);
PerfMetrics metrics_from_predictions(const std::vector<int>& pred, const std::vector<int>& label);

TrainedModel train(const Dataset& training, LearnerKind kind, const ParamConfig& cfg,
                   std::uint64_t seed);

// Accuracy and F1 must both stay within this distance of the reference
// model for a configuration to count as acceptable.
inline constexpr double kPerfTolerance = 0.05;

}  // namespace fairaudit

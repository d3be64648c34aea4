#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fairaudit/fairness.hpp"
#include "fairaudit/learners.hpp"

namespace fairaudit {

// Tunable hyperparameter names of a learner kind, in a fixed order.
std::vector<std::string> hyperparameter_names(LearnerKind kind);

// One uniformly chosen hyperparameter is changed: categorical fields
// resample among the other values, numeric fields multiply by
// exp(N(0, 0.5)) and clamp to their range. The result always differs
// from the input in exactly that field.
HpConfig mutate(const HpConfig& cfg, LearnerKind kind, std::uint64_t seed);

// Uniform draw over the hyperparameter space (log-uniform for scale
// parameters), used by random-search baselines.
HpConfig random_config(LearnerKind kind, std::uint64_t seed);

struct HpSample {
  HpConfig hp;
  double eod = 0.0;
  PerfMetrics perf;
  bool perf_ok = false;
};

// Mutation-driven search: a frontier grows by mutants that beat the
// lowest equalized-odds difference seen so far while staying within the
// performance tolerance. Returns every evaluated sample, the default
// configuration first; `budget` counts evaluations.
std::vector<HpSample> evolve(const DataSplit& data, LearnerKind kind, int budget,
                             std::uint64_t seed);

struct ImportanceEntry {
  std::string name;
  double importance = 0.0;  // mean |attribution|, signed by mean direction
};

struct ImportanceVector {
  std::vector<ImportanceEntry> entries;  // hyperparameter order
  std::vector<std::string> ranking;      // by |importance| descending, name ties
  double surrogate_r2 = 0.0;
  bool low_fit = false;  // surrogate r2 below 0.1
};

struct ShapleyDetail {
  ImportanceVector importance;
  // per_sample[i][j]: attribution of hyperparameter j on sample i.
  std::vector<std::vector<double>> per_sample;
  std::vector<double> predictions;  // surrogate value per sample
  double grand_mean = 0.0;          // empty-coalition value
};

// Exact Shapley attributions of each hyperparameter on a ridge surrogate
// fitted to the samples' equalized-odds differences. Absent coalition
// members are marginalized by averaging over the sample set.
ImportanceVector shapley_importance(const std::vector<HpSample>& samples, LearnerKind kind);
ShapleyDetail shapley_importance_detail(const std::vector<HpSample>& samples, LearnerKind kind);

struct RankViolation {
  bool violated = false;
  // At least two of a's top four are missing from b's top four.
  bool membership_clause = false;
  // Two names ranked in both top fours swap relative order.
  bool order_clause = false;
};

RankViolation top4_rank_violation(const std::vector<std::string>& ranking_a,
                                  const std::vector<std::string>& ranking_b);

}  // namespace fairaudit

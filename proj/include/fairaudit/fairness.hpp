#pragma once

#include <cstdint>
#include <vector>

#include "fairaudit/dataset.hpp"
#include "fairaudit/learners.hpp"

namespace fairaudit {

struct GroupRates {
  double tpr_privileged = 0.0;    // sensitive == 1
  double tpr_unprivileged = 0.0;  // sensitive == 0
  double eod = 0.0;               // |difference|
};

// True positive rate of one sensitive group. The default denominator is
// the group's positive-label count; `group_size_denominator` divides by
// the whole group instead, which trades the usual recall reading for a
// positive-prediction rate among actual group members.
double group_tpr(const std::vector<int>& pred, const std::vector<int>& label,
                 const std::vector<int>& group, int g, bool group_size_denominator = false);

double eod_from_predictions(const std::vector<int>& pred, const std::vector<int>& label,
                            const std::vector<int>& group);

GroupRates equal_opportunity(const TrainedModel& m, const Dataset& test);

// Label/sensitive columns of a dataset as 0/1 ints.
std::vector<int> label_vector(const Dataset& d);
std::vector<int> sensitive_vector(const Dataset& d);

struct BiasResult {
  double eod = 0.0;
  GroupRates rates;
  PerfMetrics perf;
  PerfMetrics reference_perf;  // full-feature default configuration
  bool perf_ok = false;        // within kPerfTolerance of the reference
};

// Trains under cfg on the train rows and reports test-set bias together
// with an acceptability flag against the default full-feature model of
// the same learner kind.
BiasResult bias_fn(const DataSplit& data, LearnerKind kind, const ParamConfig& cfg,
                   std::uint64_t seed);

}  // namespace fairaudit

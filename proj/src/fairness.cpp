#include "fairaudit/fairness.hpp"

#include <cmath>

#include "fairaudit/errors.hpp"

namespace fairaudit {

namespace {

std::vector<int> to_binary(const Eigen::VectorXd& col) {
  std::vector<int> out(static_cast<std::size_t>(col.size()));
  for (long r = 0; r < col.size(); ++r) out[static_cast<std::size_t>(r)] = col(r) > 0.5 ? 1 : 0;
  return out;
}

}  // namespace

std::vector<int> label_vector(const Dataset& d) {
  return to_binary(d.values().col(d.schema().label_index()));
}

std::vector<int> sensitive_vector(const Dataset& d) {
  return to_binary(d.values().col(d.schema().sensitive_index()));
}

double group_tpr(const std::vector<int>& pred, const std::vector<int>& label,
                 const std::vector<int>& group, int g, bool group_size_denominator) {
  if (pred.size() != label.size() || pred.size() != group.size()) {
    throw Error(Errc::InvalidArgument, "prediction, label and group sizes differ");
  }
  long hits = 0, denom = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    if (group[i] != g) continue;
    if (group_size_denominator) {
      ++denom;
      if (pred[i] == 1 && label[i] == 1) ++hits;
    } else if (label[i] == 1) {
      ++denom;
      if (pred[i] == 1) ++hits;
    }
  }
  if (denom == 0) {
    throw Error(Errc::NoPositivesInGroup,
                "group " + std::to_string(g) + " has no qualifying rows");
  }
  return static_cast<double>(hits) / static_cast<double>(denom);
}

double eod_from_predictions(const std::vector<int>& pred, const std::vector<int>& label,
                            const std::vector<int>& group) {
  const double t1 = group_tpr(pred, label, group, 1);
  const double t0 = group_tpr(pred, label, group, 0);
  return std::fabs(t1 - t0);
}

GroupRates equal_opportunity(const TrainedModel& m, const Dataset& test) {
  const auto pred = predict(m, test);
  const auto label = label_vector(test);
  const auto group = sensitive_vector(test);
  GroupRates out;
  out.tpr_privileged = group_tpr(pred, label, group, 1);
  out.tpr_unprivileged = group_tpr(pred, label, group, 0);
  out.eod = std::fabs(out.tpr_privileged - out.tpr_unprivileged);
  return out;
}

BiasResult bias_fn(const DataSplit& data, LearnerKind kind, const ParamConfig& cfg,
                   std::uint64_t seed) {
  BiasResult out;
  const TrainedModel model = train(data.train, kind, cfg, seed);
  out.rates = equal_opportunity(model, data.test);
  out.eod = out.rates.eod;
  out.perf = evaluate(model, data.test);

  ParamConfig reference;  // default hyperparameters, every predictor
  reference.decision_threshold = cfg.decision_threshold;
  const TrainedModel ref_model = train(data.train, kind, reference, seed);
  out.reference_perf = evaluate(ref_model, data.test);
  out.perf_ok = std::fabs(out.perf.accuracy - out.reference_perf.accuracy) <= kPerfTolerance &&
                std::fabs(out.perf.f1 - out.reference_perf.f1) <= kPerfTolerance;
  return out;
}

}  // namespace fairaudit

#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "fairaudit/dataset.hpp"
#include "fairaudit/graph.hpp"

namespace fairaudit {

// One structural equation: a GLM of the node on its parents. The
// response family follows the column kind: identity link with additive
// Gaussian noise for continuous, log link Poisson for counts, logit
// Bernoulli for booleans.
struct NodeModel {
  std::string name;
  FeatureKind kind = FeatureKind::Continuous;
  std::vector<std::string> parents;
  Eigen::VectorXd weights;  // aligned with `parents`
  double bias = 0.0;
  double noise_sd = 0.0;  // Gaussian only
  bool zero_variance_parent = false;
  bool separation = false;
};

// Fitted structural model over every schema column.
struct ScmModel {
  Schema schema;
  Dag dag;
  std::vector<NodeModel> nodes;  // schema column order
  // Additive uniform noise on the label probability; 0 means no shift.
  double label_shift_eps = 0.0;

  std::string to_json() const;
  static ScmModel from_json(const std::string& text);
  void save(const std::string& path) const;
  static ScmModel load(const std::string& path);
};

// Gaussian approximation around the fitted weights: mean is
// (bias, weights...) per node, covariance the inverse curvature of the
// penalized log likelihood.
struct WeightPosterior {
  std::vector<Eigen::VectorXd> mean;
  std::vector<Eigen::MatrixXd> cov;
  bool clipped = false;  // negative curvature eigenvalues were clipped
};

struct ScmFit {
  ScmModel model;
  WeightPosterior posterior;
};

// Per-node penalized maximum likelihood on the training rows. The dag
// must cover exactly the schema columns.
ScmFit fit_scm(const Dag& dag, const Dataset& train);

// Independent draws of full weight vectors from the posterior; model
// `i` uses a stream derived from (seed, i) so subsets are stable.
std::vector<ScmModel> draw_models(const ScmFit& fit, int count, std::uint64_t seed);

struct SampleResult {
  Dataset data;
  bool rate_clamped = false;  // a Poisson rate hit the ceiling
};

// Ancestral sampling in topological order.
SampleResult sample(const ScmModel& model, long n, std::uint64_t seed);

// Returns a copy whose label probabilities get a per-row U[0, eps) bump,
// clamped to [0, 1]. eps = 0 restores the untouched model.
ScmModel apply_label_shift(const ScmModel& model, double eps);

enum class BaselineKind { Random, Equal };

// Keeps structure, biases and noise scales; replaces every edge weight
// by a standard normal draw (Random: independent draws, Equal: one
// shared draw).
ScmModel baseline_weights(const ScmModel& model, BaselineKind kind, std::uint64_t seed);

}  // namespace fairaudit

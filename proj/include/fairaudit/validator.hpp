#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "fairaudit/dataset.hpp"

namespace fairaudit {

// K-means summary of the training distribution. Distances are measured
// in the standardized feature space; the label column never enters.
struct ClusterModel {
  Eigen::MatrixXd centroids;  // k x |columns|
  std::vector<int> columns;   // dataset column indices used
  ScalerParams scaler;        // fitted on the clustering data
  int iterations = 0;
  bool converged = false;
};

ClusterModel fit_clusters(const Dataset& train, int k = 100, std::uint64_t seed = 0);

// A sampled row is treated as in-distribution when its nearest-centroid
// distance does not exceed the threshold calibrated on real rows.
struct AcceptanceCriterion {
  ClusterModel clusters;
  double threshold = 0.0;
};

AcceptanceCriterion calibrate_acceptance(const ClusterModel& clusters, const Dataset& validation);

std::vector<double> nearest_centroid_distances(const AcceptanceCriterion& crit, const Dataset& d);

double accept_rate(const AcceptanceCriterion& crit, const Dataset& samples);

// Rows meeting the criterion, original order preserved.
Dataset filter_samples(const AcceptanceCriterion& crit, const Dataset& samples);

struct ValidatorQuality {
  double tpr = 0.0;  // acceptance on held-out real rows
  double fnr = 0.0;  // acceptance on the uniform probe (false accepts)
};

ValidatorQuality validator_quality(const AcceptanceCriterion& crit, const Dataset& held_out,
                                   const Dataset& probe);

// Per-feature uniform noise over [min - 2 sd, max + 2 sd] of the
// reference data (booleans are fair coin flips); used to measure how
// much clearly off-distribution data the criterion lets through.
Dataset make_uniform_probe(const Dataset& reference, long n, std::uint64_t seed);

}  // namespace fairaudit

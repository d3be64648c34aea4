#include "fairaudit/validator.hpp"

#include <cmath>
#include <limits>

#include "fairaudit/errors.hpp"
#include "fairaudit/stats.hpp"

namespace fairaudit {

namespace {

constexpr int kMaxLloydIter = 100;
constexpr double kMoveTol = 1e-6;

Eigen::MatrixXd standardized_features(const AcceptanceCriterion& crit, const Dataset& d) {
  const auto& cols = crit.clusters.columns;
  Eigen::MatrixXd all = crit.clusters.scaler.apply(d.values());
  Eigen::MatrixXd out(d.n(), static_cast<long>(cols.size()));
  for (std::size_t c = 0; c < cols.size(); ++c) {
    out.col(static_cast<long>(c)) = all.col(cols[c]);
  }
  return out;
}

// Index of the nearest centroid, lowest index winning ties.
int nearest(const Eigen::MatrixXd& centroids, const Eigen::RowVectorXd& row, double* dist_out) {
  int best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (long c = 0; c < centroids.rows(); ++c) {
    const double d = (centroids.row(c) - row).squaredNorm();
    if (d < best_d) {
      best_d = d;
      best = static_cast<int>(c);
    }
  }
  if (dist_out) *dist_out = std::sqrt(best_d);
  return best;
}

}  // namespace

ClusterModel fit_clusters(const Dataset& train, int k, std::uint64_t seed) {
  if (k < 1) throw Error(Errc::InvalidArgument, "k must be positive");
  if (train.n() < k) {
    throw Error(Errc::DatasetTooSmall, "need at least k rows, have " + std::to_string(train.n()));
  }
  ClusterModel model;
  const int label = train.schema().label_index();
  for (int c = 0; c < train.dim(); ++c) {
    if (c != label) model.columns.push_back(c);
  }
  auto [scaled_ds, scaler] = standardize(train);
  model.scaler = scaler;
  Eigen::MatrixXd points(train.n(), static_cast<long>(model.columns.size()));
  for (std::size_t c = 0; c < model.columns.size(); ++c) {
    points.col(static_cast<long>(c)) = scaled_ds.values().col(model.columns[c]);
  }
  const long n = points.rows();

  // k-means++ seeding.
  Rng rng(seed);
  std::vector<long> chosen;
  chosen.push_back(rng.uniform_int(0, n - 1));
  Eigen::VectorXd dist2 = (points.rowwise() - points.row(chosen[0])).rowwise().squaredNorm();
  while (static_cast<int>(chosen.size()) < k) {
    const double total = dist2.sum();
    long pick = 0;
    if (total <= 0.0) {
      pick = rng.uniform_int(0, n - 1);
    } else {
      double target = rng.uniform() * total;
      for (long r = 0; r < n; ++r) {
        target -= dist2(r);
        if (target <= 0.0) {
          pick = r;
          break;
        }
      }
    }
    chosen.push_back(pick);
    dist2 = dist2.cwiseMin((points.rowwise() - points.row(pick)).rowwise().squaredNorm());
  }
  Eigen::MatrixXd centroids(k, points.cols());
  for (int c = 0; c < k; ++c) centroids.row(c) = points.row(chosen[static_cast<std::size_t>(c)]);

  std::vector<int> assign(static_cast<std::size_t>(n), 0);
  for (int iter = 0; iter < kMaxLloydIter; ++iter) {
    for (long r = 0; r < n; ++r) {
      assign[static_cast<std::size_t>(r)] = nearest(centroids, points.row(r), nullptr);
    }
    Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(k, points.cols());
    std::vector<long> counts(static_cast<std::size_t>(k), 0);
    for (long r = 0; r < n; ++r) {
      sums.row(assign[static_cast<std::size_t>(r)]) += points.row(r);
      ++counts[static_cast<std::size_t>(assign[static_cast<std::size_t>(r)])];
    }
    // An emptied cluster is reseeded at the row farthest from its
    // current centroid (lowest row index on ties).
    for (int c = 0; c < k; ++c) {
      if (counts[static_cast<std::size_t>(c)] > 0) continue;
      long far_row = 0;
      double far_d = -1.0;
      for (long r = 0; r < n; ++r) {
        const double d = (points.row(r) - centroids.row(assign[static_cast<std::size_t>(r)])).squaredNorm();
        if (d > far_d) {
          far_d = d;
          far_row = r;
        }
      }
      sums.row(c) = points.row(far_row);
      counts[static_cast<std::size_t>(c)] = 1;
      assign[static_cast<std::size_t>(far_row)] = c;
    }
    double max_move = 0.0;
    for (int c = 0; c < k; ++c) {
      const Eigen::RowVectorXd updated = sums.row(c) / static_cast<double>(counts[static_cast<std::size_t>(c)]);
      max_move = std::max(max_move, (updated - centroids.row(c)).norm());
      centroids.row(c) = updated;
    }
    model.iterations = iter + 1;
    if (max_move < kMoveTol) {
      model.converged = true;
      break;
    }
  }
  model.centroids = std::move(centroids);
  return model;
}

AcceptanceCriterion calibrate_acceptance(const ClusterModel& clusters, const Dataset& validation) {
  if (validation.n() < 1) throw Error(Errc::DatasetTooSmall, "empty validation split");
  AcceptanceCriterion crit{clusters, 0.0};
  const auto dists = nearest_centroid_distances(crit, validation);
  double sum = 0.0;
  for (double v : dists) sum += v;
  crit.threshold = sum / static_cast<double>(dists.size());
  return crit;
}

std::vector<double> nearest_centroid_distances(const AcceptanceCriterion& crit, const Dataset& d) {
  const Eigen::MatrixXd pts = standardized_features(crit, d);
  std::vector<double> out(static_cast<std::size_t>(pts.rows()), 0.0);
  for (long r = 0; r < pts.rows(); ++r) {
    nearest(crit.clusters.centroids, pts.row(r), &out[static_cast<std::size_t>(r)]);
  }
  return out;
}

double accept_rate(const AcceptanceCriterion& crit, const Dataset& samples) {
  if (samples.n() == 0) return 0.0;
  const auto dists = nearest_centroid_distances(crit, samples);
  long ok = 0;
  for (double v : dists) {
    if (v <= crit.threshold) ++ok;
  }
  return static_cast<double>(ok) / static_cast<double>(samples.n());
}

Dataset filter_samples(const AcceptanceCriterion& crit, const Dataset& samples) {
  const auto dists = nearest_centroid_distances(crit, samples);
  std::vector<int> keep;
  for (long r = 0; r < samples.n(); ++r) {
    if (dists[static_cast<std::size_t>(r)] <= crit.threshold) keep.push_back(static_cast<int>(r));
  }
  return samples.select_rows(keep);
}

ValidatorQuality validator_quality(const AcceptanceCriterion& crit, const Dataset& held_out,
                                   const Dataset& probe) {
  return {accept_rate(crit, held_out), accept_rate(crit, probe)};
}

Dataset make_uniform_probe(const Dataset& reference, long n, std::uint64_t seed) {
  const auto& schema = reference.schema();
  Rng rng(seed);
  Eigen::MatrixXd values(n, schema.dim());
  std::vector<double> lo(static_cast<std::size_t>(schema.dim()));
  std::vector<double> hi(static_cast<std::size_t>(schema.dim()));
  for (int c = 0; c < schema.dim(); ++c) {
    const auto col = reference.values().col(c);
    const double mean = col.mean();
    const double sd = std::sqrt((col.array() - mean).square().sum() /
                                std::max<double>(1.0, static_cast<double>(reference.n())));
    lo[static_cast<std::size_t>(c)] = col.minCoeff() - 2.0 * sd;
    hi[static_cast<std::size_t>(c)] = col.maxCoeff() + 2.0 * sd;
  }
  for (long r = 0; r < n; ++r) {
    for (int c = 0; c < schema.dim(); ++c) {
      switch (schema.kind(c)) {
        case FeatureKind::Boolean:
          values(r, c) = rng.uniform() < 0.5 ? 0.0 : 1.0;
          break;
        case FeatureKind::Count: {
          const auto floor_lo = static_cast<std::int64_t>(
              std::max(0.0, std::floor(lo[static_cast<std::size_t>(c)])));
          const auto ceil_hi = static_cast<std::int64_t>(
              std::max<double>(static_cast<double>(floor_lo), std::ceil(hi[static_cast<std::size_t>(c)])));
          values(r, c) = static_cast<double>(rng.uniform_int(floor_lo, ceil_hi));
          break;
        }
        case FeatureKind::Continuous:
          values(r, c) = rng.uniform(lo[static_cast<std::size_t>(c)], hi[static_cast<std::size_t>(c)]);
          break;
      }
    }
  }
  return Dataset(schema, std::move(values));
}

}  // namespace fairaudit

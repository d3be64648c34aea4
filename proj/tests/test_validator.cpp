#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <vector>

#include "fairaudit/dataset.hpp"
#include "fairaudit/errors.hpp"
#include "fairaudit/stats.hpp"
#include "fairaudit/validator.hpp"

using namespace fairaudit;

namespace {

Schema blob_schema(int n_cont) {
  std::vector<Feature> fs;
  for (int i = 0; i < n_cont; ++i) {
    fs.push_back({"x" + std::to_string(i), FeatureKind::Continuous});
  }
  fs.push_back({"s", FeatureKind::Boolean});
  fs.push_back({"y", FeatureKind::Boolean});
  return Schema(fs, "s", "y");
}

// Standard normal cloud in the continuous columns, fair coins elsewhere.
Dataset normal_cloud(int n, int n_cont, std::uint64_t seed) {
  Rng rng(seed);
  Eigen::MatrixXd m(n, n_cont + 2);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n_cont; ++j) m(i, j) = rng.normal();
    m(i, n_cont) = rng.uniform() < 0.5 ? 1 : 0;
    m(i, n_cont + 1) = rng.uniform() < 0.5 ? 1 : 0;
  }
  return Dataset(blob_schema(n_cont), m);
}

}  // namespace

TEST_CASE("one centroid per training row gives a zero threshold") {
  const Dataset train = normal_cloud(30, 2, 1);
  const ClusterModel cm = fit_clusters(train, 30, 5);
  CHECK(cm.converged);
  const AcceptanceCriterion crit = calibrate_acceptance(cm, train);
  CHECK(crit.threshold == doctest::Approx(0.0));
  CHECK(accept_rate(crit, train) == 1.0);
  // Anything that is not a training row lands outside.
  Dataset far = train;
  far.values().col(0).array() += 40.0;
  CHECK(accept_rate(crit, far) == 0.0);
}

TEST_CASE("two separated blobs yield two centroids at the blob means") {
  Rng rng(3);
  const int n = 200;
  Eigen::MatrixXd m(n, 4);
  for (int i = 0; i < n; ++i) {
    const double base = i < n / 2 ? 0.0 : 10.0;
    m(i, 0) = base + 0.1 * rng.normal();
    m(i, 1) = base + 0.1 * rng.normal();
    m(i, 2) = i % 2;
    m(i, 3) = (i / 2) % 2;
  }
  const Dataset train(blob_schema(2), m);
  const ClusterModel cm = fit_clusters(train, 2, 7);
  const AcceptanceCriterion crit = calibrate_acceptance(cm, train);

  // Points at the blob centers pass, the midpoint does not.
  Eigen::MatrixXd probe(3, 4);
  probe << 0, 0, 0, 0,  //
      10, 10, 1, 0,     //
      5, 5, 0, 1;
  const Dataset q(blob_schema(2), probe);
  const auto dists = nearest_centroid_distances(crit, q);
  CHECK(dists[0] <= crit.threshold + 0.05);
  CHECK(dists[1] <= crit.threshold + 0.05);
  // The coin columns keep every distance at least 1/2, so the margin
  // over the threshold is a factor, not orders of magnitude.
  CHECK(dists[2] > 2.0 * crit.threshold);
  CHECK(accept_rate(crit, q) == doctest::Approx(2.0 / 3.0));
}

TEST_CASE("the label column never affects distances") {
  const Dataset train = normal_cloud(300, 3, 11);
  const ClusterModel cm = fit_clusters(train, 20, 1);
  const AcceptanceCriterion crit = calibrate_acceptance(cm, normal_cloud(100, 3, 12));
  Dataset flipped = normal_cloud(150, 3, 13);
  Dataset same = flipped;
  flipped.values().col(4) = (1.0 - flipped.values().col(4).array()).matrix();
  CHECK(nearest_centroid_distances(crit, same) == nearest_centroid_distances(crit, flipped));
}

TEST_CASE("in-distribution rows pass and a uniform probe fails") {
  const Dataset train = normal_cloud(800, 4, 21);
  const ClusterModel cm = fit_clusters(train, 50, 2);
  const AcceptanceCriterion crit = calibrate_acceptance(cm, normal_cloud(200, 4, 22));
  const Dataset held_out = normal_cloud(400, 4, 23);
  const Dataset probe = make_uniform_probe(train, 400, 24);
  const ValidatorQuality q = validator_quality(crit, held_out, probe);
  // The threshold is the mean validation distance, so roughly half of
  // fresh in-distribution rows clear it.
  CHECK(q.tpr >= 0.4);
  CHECK(q.fnr <= 0.05);
  CHECK(q.tpr > 5.0 * q.fnr);
}

TEST_CASE("filtering keeps exactly the accepted rows in order") {
  const Dataset train = normal_cloud(500, 3, 31);
  const ClusterModel cm = fit_clusters(train, 25, 3);
  const AcceptanceCriterion crit = calibrate_acceptance(cm, normal_cloud(150, 3, 32));
  const Dataset samples = normal_cloud(200, 3, 33);
  const Dataset kept = filter_samples(crit, samples);
  const auto dists = nearest_centroid_distances(crit, samples);
  std::vector<int> want;
  for (int r = 0; r < 200; ++r) {
    if (dists[static_cast<std::size_t>(r)] <= crit.threshold) want.push_back(r);
  }
  REQUIRE(kept.n() == static_cast<long>(want.size()));
  for (std::size_t i = 0; i < want.size(); ++i) {
    CHECK(kept.values().row(static_cast<long>(i)) == samples.values().row(want[i]));
  }
  CHECK(accept_rate(crit, kept) == 1.0);
  const double rate = accept_rate(crit, samples);
  CHECK(rate == doctest::Approx(static_cast<double>(want.size()) / 200.0));
}

TEST_CASE("empty sample sets are rejected outright") {
  const Dataset train = normal_cloud(100, 2, 41);
  const ClusterModel cm = fit_clusters(train, 10, 4);
  const AcceptanceCriterion crit = calibrate_acceptance(cm, train);
  Eigen::MatrixXd none(0, 4);
  const Dataset empty(blob_schema(2), none);
  CHECK(accept_rate(crit, empty) == 0.0);
  CHECK(filter_samples(crit, empty).n() == 0);
}

TEST_CASE("clustering is deterministic in the seed") {
  const Dataset train = normal_cloud(300, 3, 51);
  const ClusterModel a = fit_clusters(train, 15, 9);
  const ClusterModel b = fit_clusters(train, 15, 9);
  CHECK(a.centroids == b.centroids);
  CHECK(a.iterations == b.iterations);
}

TEST_CASE("cluster fitting validates its arguments") {
  const Dataset train = normal_cloud(30, 2, 61);
  CHECK_THROWS_AS(fit_clusters(train, 0, 1), Error);
  CHECK_THROWS_AS(fit_clusters(train, 31, 1), Error);
  try {
    fit_clusters(train, 31, 1);
  } catch (const Error& e) {
    CHECK(e.code() == Errc::DatasetTooSmall);
  }
  const ClusterModel cm = fit_clusters(train, 5, 1);
  Eigen::MatrixXd none(0, 4);
  CHECK_THROWS_AS(calibrate_acceptance(cm, Dataset(blob_schema(2), none)), Error);
}

TEST_CASE("the uniform probe respects column kinds and bounds") {
  const Dataset ref = normal_cloud(400, 2, 71);
  const Dataset probe = make_uniform_probe(ref, 300, 72);
  CHECK(probe.n() == 300);
  for (int c = 0; c < 2; ++c) {
    const auto col = ref.values().col(c);
    const double mean = col.mean();
    const double sd = std::sqrt((col.array() - mean).square().sum() / 400.0);
    CHECK(probe.values().col(c).minCoeff() >= col.minCoeff() - 2.0 * sd);
    CHECK(probe.values().col(c).maxCoeff() <= col.maxCoeff() + 2.0 * sd);
  }
  for (int c = 2; c < 4; ++c) {
    for (long r = 0; r < probe.n(); ++r) {
      const double v = probe.values()(r, c);
      CHECK((v == 0.0 || v == 1.0));
    }
  }
  // Coins are roughly fair.
  CHECK(probe.values().col(2).mean() > 0.35);
  CHECK(probe.values().col(2).mean() < 0.65);
  const Dataset again = make_uniform_probe(ref, 300, 72);
  CHECK(again.values() == probe.values());
}

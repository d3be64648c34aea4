#include <doctest.h>

#include <chrono>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "fairaudit/dataset.hpp"
#include "fairaudit/errors.hpp"
#include "fairaudit/fairness.hpp"
#include "fairaudit/graph.hpp"
#include "fairaudit/interventions.hpp"
#include "fairaudit/learners.hpp"
#include "fairaudit/robustness.hpp"
#include "fairaudit/stats.hpp"

using namespace fairaudit;

#define CHECK_NEAR(a, b, tol) CHECK(std::fabs((a) - (b)) <= (tol))

namespace {

Schema planted_schema() {
  return Schema({{"x0", FeatureKind::Continuous},
                 {"x1", FeatureKind::Continuous},
                 {"s", FeatureKind::Boolean},
                 {"y", FeatureKind::Boolean}},
                "s", "y");
}

// x0 - x1 stays undirected while the collider x1 -> y <- s pins the
// rest, leaving a two-member class.
Dataset planted_data(int n, std::uint64_t seed) {
  Rng rng(seed);
  Eigen::MatrixXd m(n, 4);
  for (int i = 0; i < n; ++i) {
    m(i, 0) = rng.normal();
    m(i, 1) = 0.9 * m(i, 0) + 0.6 * rng.normal();
    m(i, 2) = rng.uniform() < 0.5 ? 1 : 0;
    const double eta = 1.2 * m(i, 1) - 0.9 * m(i, 2) + 0.2;
    m(i, 3) = rng.uniform() < sigmoid(eta) ? 1 : 0;
  }
  return Dataset(planted_schema(), m);
}

// Two tight clusters at +/-100 that a linear-Gaussian refit smears into
// one wide bell, so generated rows land between the modes.
Dataset bimodal_data(int n, std::uint64_t seed) {
  Rng rng(seed);
  Eigen::MatrixXd m(n, 4);
  for (int i = 0; i < n; ++i) {
    const double mode = rng.uniform() < 0.5 ? 100.0 : -100.0;
    m(i, 0) = mode + rng.normal();
    m(i, 1) = -m(i, 0) + rng.normal();
    m(i, 2) = rng.uniform() < 0.5 ? 1 : 0;
    m(i, 3) = rng.uniform() < 0.5 ? 1 : 0;
  }
  return Dataset(planted_schema(), m);
}

PropertySpec drop_sens_property(Claim claim = Claim::BiasDecreases) {
  PropertySpec prop;
  prop.intervention.kind = InterventionKind::DropSensitive;
  prop.learner = LearnerKind::LogisticRegression;
  prop.claim = claim;
  return prop;
}

SearchOptions small_budget(std::uint64_t seed) {
  SearchOptions opts;
  opts.seed = seed;
  opts.n_posterior_models = 8;
  opts.round_models = 4;
  opts.k_clusters = 40;
  return opts;
}

}  // namespace

TEST_CASE("claim, algorithm and status names round trip") {
  CHECK(claim_from_name(claim_name(Claim::BiasDecreases)) == Claim::BiasDecreases);
  CHECK(claim_from_name(claim_name(Claim::BiasNotIncreased)) == Claim::BiasNotIncreased);
  CHECK_THROWS_AS(claim_from_name("bias-vanishes"), Error);
  CHECK(discovery_alg_from_name("pc") == DiscoveryAlg::Pc);
  CHECK(discovery_alg_from_name("ges") == DiscoveryAlg::Ges);
  CHECK_THROWS_AS(discovery_alg_from_name("fci"), Error);
  CHECK(std::string(search_status_name(SearchStatus::Violation)) == "violation");
  CHECK(std::string(search_status_name(SearchStatus::RobustWithinBudget)) ==
        "robust-within-budget");
  CHECK(std::string(search_status_name(SearchStatus::Timeout)) == "timeout");
}

TEST_CASE("a selection property matches training both sides by hand") {
  const Dataset d = planted_data(500, 31);
  SplitSpec sp;
  sp.seed = 9;
  const DataSplit parts = split(d, sp);
  const PropertySpec prop = drop_sens_property();
  const std::uint64_t seed = 77;

  const PropertyEval got = eval_property(prop, parts, seed);

  const TrainedModel base = train(parts.train, prop.learner, prop.base_config, mix_seed(seed, 0));
  const SelectionResult sel = select_features(parts.train, prop.intervention, mix_seed(seed, 1));
  ParamConfig treated_cfg = prop.base_config;
  treated_cfg.features = sel.features;
  const TrainedModel treated = train(parts.train, prop.learner, treated_cfg, mix_seed(seed, 2));

  CHECK(got.eod_base == equal_opportunity(base, parts.test).eod);
  CHECK(got.eod_treated == equal_opportunity(treated, parts.test).eod);
  const PerfMetrics pb = evaluate(base, parts.test);
  const PerfMetrics pt = evaluate(treated, parts.test);
  CHECK(got.perf_base.accuracy == pb.accuracy);
  CHECK(got.perf_treated.accuracy == pt.accuracy);
  CHECK(got.perf_ok == (std::fabs(pt.accuracy - pb.accuracy) <= kPerfTolerance &&
                        std::fabs(pt.f1 - pb.f1) <= kPerfTolerance));
  CHECK(got.holds == (got.eod_base > got.eod_treated));

  // The lenient claim accepts ties, the strict one does not.
  const PropertyEval lenient =
      eval_property(drop_sens_property(Claim::BiasNotIncreased), parts, seed);
  CHECK(lenient.eod_base == got.eod_base);
  CHECK(lenient.holds == (lenient.eod_treated <= lenient.eod_base));

  // A zero tolerance makes the acceptability flag strict.
  const PropertyEval tight = eval_property(prop, parts, seed, 0.0);
  CHECK(tight.perf_ok == (pt.accuracy == pb.accuracy && pt.f1 == pb.f1));
}

TEST_CASE("a post-processing property reuses the base model scores") {
  const Dataset d = planted_data(600, 32);
  SplitSpec sp;
  sp.seed = 4;
  const DataSplit parts = split(d, sp);
  PropertySpec prop;
  prop.intervention.kind = InterventionKind::ThresholdOptimizer;
  const std::uint64_t seed = 55;

  const PropertyEval got = eval_property(prop, parts, seed);

  const TrainedModel base = train(parts.train, prop.learner, prop.base_config, mix_seed(seed, 0));
  const PostProcessor pp =
      fit_threshold_optimizer(scores(base, parts.validation), label_vector(parts.validation),
                              sensitive_vector(parts.validation));
  const auto pred =
      postproc_predict(pp, scores(base, parts.test), sensitive_vector(parts.test));
  CHECK(got.eod_treated ==
        eod_from_predictions(pred, label_vector(parts.test), sensitive_vector(parts.test)));
  CHECK(got.perf_treated.accuracy ==
        metrics_from_predictions(pred, label_vector(parts.test)).accuracy);
  CHECK(got.eod_base == equal_opportunity(base, parts.test).eod);
}

TEST_CASE("evaluating a stored side is reproducible") {
  const Dataset rows = planted_data(400, 33);
  const PropertySpec prop = drop_sens_property();
  const PropertyEval a = evaluate_side(prop, rows, 123);
  const PropertyEval b = evaluate_side(prop, rows, 123);
  CHECK(a.holds == b.holds);
  CHECK(a.eod_base == b.eod_base);
  CHECK(a.eod_treated == b.eod_treated);
  CHECK(a.perf_ok == b.perf_ok);
  const PropertyEval c = evaluate_side(prop, rows, 124);
  const bool same = c.eod_base == a.eod_base && c.eod_treated == a.eod_treated;
  CHECK_FALSE(same);  // a different seed reshuffles the split
}

TEST_CASE("the search rejects bad options") {
  const Dataset d = planted_data(200, 34);
  const PropertySpec prop = drop_sens_property();
  SearchOptions opts = small_budget(1);
  opts.epsilon = 0.0;
  CHECK_THROWS_AS(search(d, prop, DiscoveryAlg::Ges, opts), Error);
  opts.epsilon = 1.0;
  CHECK_THROWS_AS(search(d, prop, DiscoveryAlg::Ges, opts), Error);
  opts = small_budget(1);
  opts.n_posterior_models = 0;
  CHECK_THROWS_AS(search(d, prop, DiscoveryAlg::Ges, opts), Error);
  opts = small_budget(1);
  opts.round_models = 0;
  CHECK_THROWS_AS(search(d, prop, DiscoveryAlg::Ges, opts), Error);
}

TEST_CASE("the neighborhood search is deterministic and its witness replays") {
  const Dataset d = planted_data(500, 35);
  const PropertySpec prop = drop_sens_property();
  const SearchOptions opts = small_budget(3);

  const RobustnessVerdict v = search(d, prop, DiscoveryAlg::Ges, opts);
  CHECK(v.status != SearchStatus::Timeout);
  CHECK(v.n_dags >= 1);
  CHECK(v.weights_only_neighborhood == (v.n_dags == 1));
  CHECK(v.iterations >= 1);
  CHECK(v.max_observed_eod_diff >= 0.0);

  if (v.status == SearchStatus::Violation) {
    // A flip is normalized: the holding side first.
    CHECK(v.prop_truth.first);
    CHECK_FALSE(v.prop_truth.second);
  }
  REQUIRE(v.witness.has_value());
  const NeighborPair& w = *v.witness;
  CHECK(w.a.accept_rate >= 0.5);
  CHECK(w.b.accept_rate >= 0.5);
  CHECK(w.structural_diff == edge_diff(w.a.dag, w.b.dag));
  CHECK(v.prop_truth.first == w.a.eval.holds);
  CHECK(v.prop_truth.second == w.b.eval.holds);

  // Replaying the stored rows with the stored seed reproduces the
  // recorded verdict on both sides.
  for (const SideReport* side : {&w.a, &w.b}) {
    const PropertyEval replay = evaluate_side(prop, side->dataset, side->eval_seed);
    CHECK(replay.holds == side->eval.holds);
    CHECK(replay.eod_base == side->eval.eod_base);
    CHECK(replay.eod_treated == side->eval.eod_treated);
  }

  const RobustnessVerdict again = search(d, prop, DiscoveryAlg::Ges, opts);
  CHECK(again.status == v.status);
  CHECK(again.iterations == v.iterations);
  CHECK(again.prop_truth == v.prop_truth);
  CHECK(again.max_observed_eod_diff == v.max_observed_eod_diff);
}

TEST_CASE("a difference verdict triggers on any sizable effect gap") {
  const Dataset d = planted_data(500, 36);
  const PropertySpec prop = drop_sens_property();
  SearchOptions opts = small_budget(5);
  opts.mode = VerdictMode::Diff;
  opts.epsilon = 1e-4;  // almost any pair of draws differs this much

  const RobustnessVerdict v = search(d, prop, DiscoveryAlg::Ges, opts);
  if (v.status == SearchStatus::Violation) {
    REQUIRE(v.witness.has_value());
    const NeighborPair& w = *v.witness;
    const double da = w.a.eval.eod_treated - w.a.eval.eod_base;
    const double db = w.b.eval.eod_treated - w.b.eval.eod_base;
    CHECK(std::fabs(da - db) > opts.epsilon);
    CHECK(w.a.eval.perf_ok);
    CHECK(w.b.eval.perf_ok);
  }
}

TEST_CASE("an exhausted clock reports a timeout") {
  const Dataset d = planted_data(300, 37);
  SearchOptions opts = small_budget(7);
  opts.timeout = std::chrono::milliseconds(0);
  const RobustnessVerdict v = search(d, drop_sens_property(), DiscoveryAlg::Ges, opts);
  CHECK(v.status == SearchStatus::Timeout);
  CHECK(v.iterations == 0);
  CHECK_FALSE(v.witness.has_value());
}

TEST_CASE("an unreachable input distribution is reported as an error") {
  const Dataset d = bimodal_data(400, 38);
  SearchOptions opts = small_budget(9);
  CHECK_THROWS_AS(search(d, drop_sens_property(), DiscoveryAlg::Ges, opts), Error);
}

TEST_CASE("the generation report covers every requested scheme") {
  const Dataset d = planted_data(400, 39);
  SearchOptions opts = small_budget(11);

  const Rq1Report rep = rq1_report(d, {"ges", "rnd", "eq"}, opts);
  REQUIRE(rep.rows.size() == 3);
  CHECK(rep.rows[0].algorithm == "ges");
  CHECK(rep.rows[1].algorithm == "rnd");
  CHECK(rep.rows[2].algorithm == "eq");
  for (const Rq1Row& row : rep.rows) {
    CHECK(row.n_dags >= 1);
    CHECK(row.accept_min >= 0.0);
    CHECK(row.accept_min <= row.accept_avg + 1e-12);
    CHECK(row.accept_avg <= row.accept_max + 1e-12);
    CHECK(row.accept_max <= 1.0);
    CHECK(row.accept_std >= 0.0);
    CHECK(row.mean_distance >= 0.0);
  }
  // Baseline weights reuse the fitted graphs.
  CHECK(rep.rows[1].n_dags == rep.rows[0].n_dags);
  CHECK(rep.rows[2].n_dags == rep.rows[0].n_dags);

  // Fitted models generate far more acceptable rows than scrambled or
  // flattened weights, and stay closer to the training clusters.
  CHECK(rep.rows[0].accept_avg > rep.rows[1].accept_avg);
  CHECK(rep.rows[0].accept_avg > rep.rows[2].accept_avg);
  CHECK(rep.rows[0].mean_distance < rep.rows[1].mean_distance);
  CHECK(rep.probe_accept <= 0.2);

  CHECK_THROWS_AS(rq1_report(d, {"bogus"}, opts), Error);

  const Rq1Report again = rq1_report(d, {"ges", "rnd", "eq"}, opts);
  for (std::size_t i = 0; i < rep.rows.size(); ++i) {
    CHECK(again.rows[i].accept_avg == rep.rows[i].accept_avg);
    CHECK(again.rows[i].mean_distance == rep.rows[i].mean_distance);
  }
  CHECK(again.probe_accept == rep.probe_accept);
}

#pragma once

#include <chrono>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "fairaudit/dataset.hpp"
#include "fairaudit/fairness.hpp"
#include "fairaudit/graph.hpp"
#include "fairaudit/interventions.hpp"
#include "fairaudit/learners.hpp"
#include "fairaudit/scm.hpp"

namespace fairaudit {

// bias_decreases asserts a strict drop of the equalized-odds difference
// after the intervention; bias_not_increased accepts ties.
enum class Claim { BiasDecreases, BiasNotIncreased };

const char* claim_name(Claim c);
Claim claim_from_name(const std::string& s);

// The audited practice: train under the base configuration, derive the
// treated configuration by applying the intervention, compare bias.
struct PropertySpec {
  Intervention intervention;
  LearnerKind learner = LearnerKind::LogisticRegression;
  ParamConfig base_config;
  Claim claim = Claim::BiasDecreases;
};

struct PropertyEval {
  bool holds = false;
  double eod_base = 0.0;
  double eod_treated = 0.0;
  bool perf_ok = false;
  PerfMetrics perf_base;
  PerfMetrics perf_treated;
};

// Trains both sides on the same split and judges the claim. Selection
// interventions refit on the reduced feature set; post-processing
// interventions are fitted on the validation rows and applied to the
// base model's test scores. perf_ok demands the treated side stays
// within the tolerance of the base side on accuracy and F1.
PropertyEval eval_property(const PropertySpec& prop, const DataSplit& split, std::uint64_t seed,
                           double perf_tolerance = kPerfTolerance);

// The evaluation the search applies to one generated dataset: split it
// with a seed derived from eval_seed, then eval_property. Re-running it
// on a stored witness side reproduces the recorded truth value.
PropertyEval evaluate_side(const PropertySpec& prop, const Dataset& rows, std::uint64_t eval_seed,
                           double perf_tolerance = kPerfTolerance);

enum class DiscoveryAlg { Pc, Ges };

const char* discovery_alg_name(DiscoveryAlg a);
DiscoveryAlg discovery_alg_from_name(const std::string& s);

// Additive uniform shift of the label probability, the distribution
// perturbation applied on top of sampled weights.
struct ShiftSpec {
  double eps = 0.0;
};

// A violation is a flipped truth value by default; Diff mode instead
// triggers on an effect difference beyond epsilon.
enum class VerdictMode { Flip, Diff };

struct SearchOptions {
  double epsilon = 0.05;
  int n_posterior_models = 1000;
  std::chrono::milliseconds timeout{600'000};
  std::uint64_t seed = 0;
  std::optional<ShiftSpec> shift;
  double perf_tolerance = kPerfTolerance;
  VerdictMode mode = VerdictMode::Flip;
  // Models drawn per graph per round; round 1 covers every graph, later
  // rounds only the promoted pair.
  int round_models = 10;
  int k_clusters = 100;
  double pc_alpha = 0.05;
  long max_sample_rows = 20'000;
};

// One side of a neighbor pair: the generating model, the accepted rows,
// and the property evaluated on them.
struct SideReport {
  Dag dag;
  ScmModel scm;
  Dataset dataset;  // rows that passed the acceptance criterion
  double accept_rate = 0.0;
  std::uint64_t eval_seed = 0;
  PropertyEval eval;
};

struct NeighborPair {
  SideReport a;
  SideReport b;
  int structural_diff = 0;  // edge_diff of the two graphs
};

enum class SearchStatus { Violation, RobustWithinBudget, Timeout };

const char* search_status_name(SearchStatus s);

struct RobustnessVerdict {
  SearchStatus status = SearchStatus::RobustWithinBudget;
  std::optional<NeighborPair> witness;
  // Truth of the property on each side of the witness (on the best pair
  // seen when no violation was found). A flip is normalized so the
  // holding side comes first.
  std::pair<bool, bool> prop_truth{false, false};
  double max_observed_eod_diff = 0.0;
  long iterations = 0;  // property evaluations performed
  int n_dags = 0;
  // Single-member equivalence class: the pair compares posterior draws
  // of one graph instead of two graphs.
  bool weights_only_neighborhood = false;
};

// Equivalence-class neighborhood search. Discovers the class, fits one
// structural model per member, then alternates drawing posterior
// weights, sampling datasets of the input's size, filtering them
// through the in-distribution criterion (a side counts only when at
// least half its rows pass), and evaluating the property on both sides
// of every candidate pair. Without a violation the pair with the
// largest effect difference is promoted and the next round's draws
// concentrate on it. Deterministic given the seed as long as the
// timeout does not strike.
RobustnessVerdict search(const Dataset& input, const PropertySpec& prop, DiscoveryAlg alg,
                         const SearchOptions& opts);

// Success-rate table: how often each generation scheme produces rows
// the acceptance criterion keeps. rnd and eq reuse the first requested
// discovery algorithm's graphs with resampled weights.
struct Rq1Row {
  std::string algorithm;  // pc, ges, rnd, eq
  int n_dags = 0;
  double accept_avg = 0.0;
  double accept_std = 0.0;
  double accept_min = 0.0;
  double accept_max = 0.0;
  double mean_distance = 0.0;  // nearest-centroid distance of samples
};

struct Rq1Report {
  std::vector<Rq1Row> rows;
  double probe_accept = 0.0;  // acceptance of the uniform noise probe
};

Rq1Report rq1_report(const Dataset& input, const std::vector<std::string>& algorithms,
                     const SearchOptions& opts);

}  // namespace fairaudit

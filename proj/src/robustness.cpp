#include "fairaudit/robustness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <functional>
#include <thread>

#include "fairaudit/discovery.hpp"
#include "fairaudit/errors.hpp"
#include "fairaudit/stats.hpp"
#include "fairaudit/validator.hpp"

namespace fairaudit {

namespace {

constexpr double kSideAcceptFloor = 0.5;    // a side must keep half its rows
constexpr double kClassAcceptFloor = 0.1;   // best graph below this is hopeless

void run_parallel(long count, const std::function<void(long)>& body) {
  const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  const unsigned workers = static_cast<unsigned>(
      std::min<long>(count, static_cast<long>(std::min(hw, 16u))));
  if (workers <= 1) {
    for (long i = 0; i < count; ++i) body(i);
    return;
  }
  std::atomic<long> next{0};
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (unsigned w = 0; w < workers; ++w) {
    pool.emplace_back([&]() {
      for (long i = next.fetch_add(1); i < count; i = next.fetch_add(1)) body(i);
    });
  }
  for (auto& t : pool) t.join();
}

}  // namespace

const char* claim_name(Claim c) {
  return c == Claim::BiasDecreases ? "bias-decreases" : "bias-not-increased";
}

Claim claim_from_name(const std::string& s) {
  if (s == "bias-decreases") return Claim::BiasDecreases;
  if (s == "bias-not-increased") return Claim::BiasNotIncreased;
  throw Error(Errc::InvalidArgument, "unknown claim '" + s + "'");
}

const char* discovery_alg_name(DiscoveryAlg a) { return a == DiscoveryAlg::Pc ? "pc" : "ges"; }

DiscoveryAlg discovery_alg_from_name(const std::string& s) {
  if (s == "pc") return DiscoveryAlg::Pc;
  if (s == "ges") return DiscoveryAlg::Ges;
  throw Error(Errc::InvalidArgument, "unknown discovery algorithm '" + s + "'");
}

const char* search_status_name(SearchStatus s) {
  switch (s) {
    case SearchStatus::Violation: return "violation";
    case SearchStatus::RobustWithinBudget: return "robust-within-budget";
    case SearchStatus::Timeout: return "timeout";
  }
  return "?";
}

PropertyEval eval_property(const PropertySpec& prop, const DataSplit& split, std::uint64_t seed,
                           double perf_tolerance) {
  PropertyEval out;
  const TrainedModel base = train(split.train, prop.learner, prop.base_config, mix_seed(seed, 0));
  out.perf_base = evaluate(base, split.test);
  out.eod_base = equal_opportunity(base, split.test).eod;

  if (is_selection_intervention(prop.intervention.kind)) {
    const SelectionResult sel = select_features(split.train, prop.intervention, mix_seed(seed, 1));
    ParamConfig treated_cfg = prop.base_config;
    treated_cfg.features = sel.features;
    const TrainedModel treated =
        train(split.train, prop.learner, treated_cfg, mix_seed(seed, 2));
    out.perf_treated = evaluate(treated, split.test);
    out.eod_treated = equal_opportunity(treated, split.test).eod;
  } else {
    const std::vector<double> val_scores = scores(base, split.validation);
    const std::vector<int> val_label = label_vector(split.validation);
    const std::vector<int> val_group = sensitive_vector(split.validation);
    PostProcessor pp;
    if (prop.intervention.kind == InterventionKind::ThresholdOptimizer) {
      pp = fit_threshold_optimizer(val_scores, val_label, val_group);
    } else {
      pp = fit_calibrated_eq_odds(val_scores, val_label, val_group);
    }
    const std::vector<double> test_scores = scores(base, split.test);
    const std::vector<int> test_label = label_vector(split.test);
    const std::vector<int> test_group = sensitive_vector(split.test);
    const std::vector<int> pred = postproc_predict(pp, test_scores, test_group);
    out.perf_treated = metrics_from_predictions(pred, test_label);
    out.eod_treated = eod_from_predictions(pred, test_label, test_group);
  }

  out.perf_ok =
      std::fabs(out.perf_treated.accuracy - out.perf_base.accuracy) <= perf_tolerance &&
      std::fabs(out.perf_treated.f1 - out.perf_base.f1) <= perf_tolerance;
  out.holds = prop.claim == Claim::BiasDecreases ? out.eod_base > out.eod_treated
                                                 : out.eod_treated <= out.eod_base;
  return out;
}

PropertyEval evaluate_side(const PropertySpec& prop, const Dataset& rows, std::uint64_t eval_seed,
                           double perf_tolerance) {
  SplitSpec sp;
  sp.seed = mix_seed(eval_seed, 0xA11);
  return eval_property(prop, split(rows, sp), eval_seed, perf_tolerance);
}

namespace {

struct Candidate {
  int dag = -1;
  long model_index = -1;  // global draw index within the dag's stream
  bool valid = false;
  double accept = 0.0;
  std::uint64_t eval_seed = 0;
  Dataset data;  // accepted rows
  PropertyEval eval;
};

struct SearchContext {
  const PropertySpec* prop = nullptr;
  const SearchOptions* opts = nullptr;
  const AcceptanceCriterion* crit = nullptr;
  long sample_n = 0;
};

Candidate evaluate_candidate(const SearchContext& ctx, int dag_index, long model_index,
                             const ScmModel& drawn) {
  Candidate c;
  c.dag = dag_index;
  c.model_index = model_index;
  const std::uint64_t stream =
      mix_seed(ctx.opts->seed, static_cast<std::uint64_t>(dag_index),
               static_cast<std::uint64_t>(model_index));
  ScmModel model = drawn;
  if (ctx.opts->shift && ctx.opts->shift->eps > 0.0) {
    model = apply_label_shift(model, ctx.opts->shift->eps);
  }
  const SampleResult sr = sample(model, ctx.sample_n, mix_seed(stream, 0));
  c.accept = accept_rate(*ctx.crit, sr.data);
  if (c.accept < kSideAcceptFloor) return c;
  Dataset kept = filter_samples(*ctx.crit, sr.data);
  if (kept.n() < 20 || kept.degenerate()) return c;
  c.eval_seed = mix_seed(stream, 1);
  try {
    c.eval = evaluate_side(*ctx.prop, kept, c.eval_seed, ctx.opts->perf_tolerance);
  } catch (const Error&) {
    // A filtered draw can lose a class or a group entirely; such a
    // candidate is simply not a usable neighbor.
    return c;
  }
  c.data = std::move(kept);
  c.valid = true;
  return c;
}

double effect_difference(const Candidate& a, const Candidate& b) {
  const double da = a.eval.eod_treated - a.eval.eod_base;
  const double db = b.eval.eod_treated - b.eval.eod_base;
  return std::fabs(da - db);
}

}  // namespace

RobustnessVerdict search(const Dataset& input, const PropertySpec& prop, DiscoveryAlg alg,
                         const SearchOptions& opts) {
  if (!(opts.epsilon > 0.0 && opts.epsilon < 1.0)) {
    throw Error(Errc::InvalidArgument, "epsilon must lie in (0, 1)");
  }
  if (opts.n_posterior_models < 1 || opts.round_models < 1) {
    throw Error(Errc::InvalidArgument, "model budget must be positive");
  }
  const auto start = std::chrono::steady_clock::now();
  const auto deadline = start + opts.timeout;

  SplitSpec input_spec;
  input_spec.seed = mix_seed(opts.seed, 0xD5);
  const DataSplit base_split = split(input, input_spec);

  const Cpdag cpdag = alg == DiscoveryAlg::Pc ? pc_discover(input, opts.pc_alpha)
                                              : ges_discover(input);
  const std::vector<Dag> dags = enumerate_dags(cpdag);
  const int n_dags = static_cast<int>(dags.size());

  std::vector<ScmFit> fits;
  fits.reserve(dags.size());
  for (const Dag& dag : dags) fits.push_back(fit_scm(dag, base_split.train));

  const int k = static_cast<int>(
      std::min<long>(opts.k_clusters, std::max<long>(1, base_split.train.n())));
  const ClusterModel clusters = fit_clusters(base_split.train, k, mix_seed(opts.seed, 0xC1));
  const AcceptanceCriterion crit = calibrate_acceptance(clusters, base_split.validation);

  SearchContext ctx;
  ctx.prop = &prop;
  ctx.opts = &opts;
  ctx.crit = &crit;
  ctx.sample_n = std::min(input.n(), opts.max_sample_rows);

  RobustnessVerdict verdict;
  verdict.n_dags = n_dags;
  verdict.weights_only_neighborhood = n_dags == 1;

  std::vector<std::vector<Candidate>> pool(dags.size());
  std::vector<long> drawn(dags.size(), 0);
  std::vector<double> accept_sum(dags.size(), 0.0);
  std::vector<long> accept_count(dags.size(), 0);

  bool timed_out = false;
  auto out_of_time = [&]() { return std::chrono::steady_clock::now() >= deadline; };

  // Draw `count` fresh models for one graph and evaluate them.
  auto extend_pool = [&](int dag_index, int count) {
    const long budget_left = opts.n_posterior_models - drawn[static_cast<std::size_t>(dag_index)];
    const int take = static_cast<int>(std::min<long>(count, budget_left));
    if (take <= 0) return false;
    const long first = drawn[static_cast<std::size_t>(dag_index)];
    // The full stream for a graph is one deterministic sequence; a round
    // consumes the next `take` entries regardless of round boundaries.
    const std::vector<ScmModel> models =
        draw_models(fits[static_cast<std::size_t>(dag_index)],
                    static_cast<int>(first) + take,
                    mix_seed(opts.seed, 0xA0, static_cast<std::uint64_t>(dag_index)));
    std::vector<Candidate> fresh(static_cast<std::size_t>(take));
    run_parallel(take, [&](long i) {
      if (out_of_time()) return;
      fresh[static_cast<std::size_t>(i)] = evaluate_candidate(
          ctx, dag_index, first + i, models[static_cast<std::size_t>(first + i)]);
    });
    for (auto& c : fresh) {
      if (c.dag < 0) {
        timed_out = true;
        continue;
      }
      accept_sum[static_cast<std::size_t>(dag_index)] += c.accept;
      accept_count[static_cast<std::size_t>(dag_index)] += 1;
      if (c.valid) verdict.iterations += 1;
      pool[static_cast<std::size_t>(dag_index)].push_back(std::move(c));
    }
    drawn[static_cast<std::size_t>(dag_index)] += take;
    return true;
  };

  struct BestPair {
    const Candidate* a = nullptr;
    const Candidate* b = nullptr;
    double diff = -1.0;
  };

  auto make_witness = [&](const Candidate& a, const Candidate& b) {
    auto side = [&](const Candidate& c) {
      SideReport s;
      s.dag = dags[static_cast<std::size_t>(c.dag)];
      const std::vector<ScmModel> models =
          draw_models(fits[static_cast<std::size_t>(c.dag)],
                      static_cast<int>(c.model_index) + 1,
                      mix_seed(opts.seed, 0xA0, static_cast<std::uint64_t>(c.dag)));
      s.scm = models[static_cast<std::size_t>(c.model_index)];
      if (opts.shift && opts.shift->eps > 0.0) s.scm = apply_label_shift(s.scm, opts.shift->eps);
      s.dataset = c.data;
      s.accept_rate = c.accept;
      s.eval_seed = c.eval_seed;
      s.eval = c.eval;
      return s;
    };
    NeighborPair pair;
    pair.a = side(a);
    pair.b = side(b);
    pair.structural_diff = edge_diff(pair.a.dag, pair.b.dag);
    return pair;
  };

  // Scan every cross-graph pair (or same-graph draw pair in a
  // single-member class), record the largest effect difference, and
  // stop at the first violation in deterministic pool order.
  auto scan_pairs = [&](BestPair& best) -> std::optional<std::pair<const Candidate*, const Candidate*>> {
    const std::size_t d = pool.size();
    for (std::size_t x = 0; x < d; ++x) {
      for (std::size_t y = x; y < d; ++y) {
        if (x == y && !verdict.weights_only_neighborhood) continue;
        const auto& px = pool[x];
        const auto& py = pool[y];
        for (std::size_t i = 0; i < px.size(); ++i) {
          if (!px[i].valid) continue;
          const std::size_t j0 = x == y ? i + 1 : 0;
          for (std::size_t j = j0; j < py.size(); ++j) {
            if (!py[j].valid) continue;
            const Candidate& a = px[i];
            const Candidate& b = py[j];
            const double diff = effect_difference(a, b);
            verdict.max_observed_eod_diff = std::max(verdict.max_observed_eod_diff, diff);
            if (diff > best.diff) best = {&a, &b, diff};
            const bool both_perf_ok = a.eval.perf_ok && b.eval.perf_ok;
            if (!both_perf_ok) continue;
            const bool flip = a.eval.holds != b.eval.holds;
            if (opts.mode == VerdictMode::Flip ? flip : diff > opts.epsilon) {
              return std::make_pair(&a, &b);
            }
          }
        }
      }
    }
    return std::nullopt;
  };

  auto finish = [&](const BestPair& best) {
    if (!timed_out && best.a != nullptr) {
      verdict.witness = make_witness(*best.a, *best.b);
      verdict.prop_truth = {best.a->eval.holds, best.b->eval.holds};
    }
    verdict.status = timed_out ? SearchStatus::Timeout : SearchStatus::RobustWithinBudget;
    return verdict;
  };

  // Round 1: cover the whole class.
  for (int d = 0; d < n_dags; ++d) extend_pool(d, opts.round_models);

  double best_class_accept = 0.0;
  for (std::size_t d = 0; d < dags.size(); ++d) {
    if (accept_count[d] > 0) {
      best_class_accept =
          std::max(best_class_accept, accept_sum[d] / static_cast<double>(accept_count[d]));
    }
  }
  if (!timed_out && best_class_accept < kClassAcceptFloor) {
    throw Error(Errc::UngeneratableDistribution,
                "no graph generates acceptable samples (best rate " +
                    std::to_string(best_class_accept) + ")");
  }

  while (true) {
    BestPair best;
    const auto hit = scan_pairs(best);
    if (hit) {
      const Candidate* a = hit->first;
      const Candidate* b = hit->second;
      // Normalize a flip so the holding side comes first.
      if (opts.mode == VerdictMode::Flip && !a->eval.holds) std::swap(a, b);
      verdict.status = SearchStatus::Violation;
      verdict.witness = make_witness(*a, *b);
      verdict.prop_truth = {a->eval.holds, b->eval.holds};
      return verdict;
    }
    if (timed_out || out_of_time()) {
      timed_out = true;
      return finish(best);
    }

    // Promote: concentrate fresh draws on the best pair's graphs, or on
    // the two most accepting graphs while no pair has formed yet.
    int da = -1, db = -1;
    if (best.a != nullptr) {
      da = best.a->dag;
      db = best.b->dag;
    } else {
      std::vector<std::pair<double, int>> rate(dags.size());
      for (std::size_t d = 0; d < dags.size(); ++d) {
        const double r =
            accept_count[d] > 0 ? accept_sum[d] / static_cast<double>(accept_count[d]) : 0.0;
        rate[d] = {-r, static_cast<int>(d)};
      }
      std::sort(rate.begin(), rate.end());
      da = rate[0].second;
      db = rate.size() > 1 ? rate[1].second : rate[0].second;
    }
    bool progressed = extend_pool(da, opts.round_models);
    if (db != da) progressed = extend_pool(db, opts.round_models) || progressed;
    if (!progressed) return finish(best);
  }
}

Rq1Report rq1_report(const Dataset& input, const std::vector<std::string>& algorithms,
                     const SearchOptions& opts) {
  SplitSpec input_spec;
  input_spec.seed = mix_seed(opts.seed, 0xD5);
  const DataSplit base_split = split(input, input_spec);
  const int k = static_cast<int>(
      std::min<long>(opts.k_clusters, std::max<long>(1, base_split.train.n())));
  const ClusterModel clusters = fit_clusters(base_split.train, k, mix_seed(opts.seed, 0xC1));
  const AcceptanceCriterion crit = calibrate_acceptance(clusters, base_split.validation);
  const long sample_n = std::min(input.n(), opts.max_sample_rows);

  Rq1Report report;
  const Dataset probe = make_uniform_probe(base_split.train, sample_n, mix_seed(opts.seed, 0xF0));
  report.probe_accept = accept_rate(crit, probe);

  std::vector<ScmFit> reference_fits;  // first discovery algorithm's models
  auto scheme_tag = [](const std::string& name) -> std::uint64_t {
    if (name == "pc") return 1;
    if (name == "ges") return 2;
    if (name == "rnd") return 3;
    return 4;
  };
  auto row_from_models = [&](const std::string& name, const std::vector<ScmModel>& models) {
    Rq1Row row;
    row.algorithm = name;
    row.n_dags = static_cast<int>(models.size());
    std::vector<double> rates;
    double dist_sum = 0.0;
    long dist_count = 0;
    for (std::size_t m = 0; m < models.size(); ++m) {
      const SampleResult sr =
          sample(models[m], sample_n, mix_seed(opts.seed, scheme_tag(name), m));
      rates.push_back(accept_rate(crit, sr.data));
      for (double dv : nearest_centroid_distances(crit, sr.data)) {
        dist_sum += dv;
        dist_count += 1;
      }
    }
    const Moments mm = moments(rates);
    row.accept_avg = mm.mean;
    row.accept_std = mm.sd;
    row.accept_min = rates.empty() ? 0.0 : *std::min_element(rates.begin(), rates.end());
    row.accept_max = rates.empty() ? 0.0 : *std::max_element(rates.begin(), rates.end());
    row.mean_distance = dist_count > 0 ? dist_sum / static_cast<double>(dist_count) : 0.0;
    return row;
  };

  auto fitted_models = [&](DiscoveryAlg alg) {
    const Cpdag cpdag = alg == DiscoveryAlg::Pc ? pc_discover(input, opts.pc_alpha)
                                                : ges_discover(input);
    const std::vector<Dag> dags = enumerate_dags(cpdag);
    std::vector<ScmFit> fits;
    fits.reserve(dags.size());
    for (const Dag& dag : dags) fits.push_back(fit_scm(dag, base_split.train));
    return fits;
  };

  for (const std::string& name : algorithms) {
    if (name == "pc" || name == "ges") {
      std::vector<ScmFit> fits = fitted_models(discovery_alg_from_name(name));
      std::vector<ScmModel> models;
      models.reserve(fits.size());
      for (const auto& f : fits) models.push_back(f.model);
      report.rows.push_back(row_from_models(name, models));
      if (reference_fits.empty()) reference_fits = std::move(fits);
    } else if (name == "rnd" || name == "eq") {
      if (reference_fits.empty()) reference_fits = fitted_models(DiscoveryAlg::Ges);
      const BaselineKind kind = name == "rnd" ? BaselineKind::Random : BaselineKind::Equal;
      std::vector<ScmModel> models;
      models.reserve(reference_fits.size());
      for (std::size_t d = 0; d < reference_fits.size(); ++d) {
        models.push_back(baseline_weights(reference_fits[d].model, kind,
                                          mix_seed(opts.seed, 0xB0, d)));
      }
      report.rows.push_back(row_from_models(name, models));
    } else {
      throw Error(Errc::InvalidArgument, "unknown generation scheme '" + name + "'");
    }
  }
  return report;
}

}  // namespace fairaudit

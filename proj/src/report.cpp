#include "fairaudit/report.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "fairaudit/errors.hpp"
#include "fairaudit/stats.hpp"

namespace fairaudit {

namespace {

struct SkGroup {
  std::string name;
  double mean = 0.0;
  std::vector<double> values;
};

// Likelihood-ratio split test over the ordered means in [lo, hi].
// Returns the index of the last group in the left cluster, or -1 when
// the best split is not significant.
int best_significant_split(const std::vector<SkGroup>& g, int lo, int hi, double alpha) {
  const int k = hi - lo + 1;
  if (k < 2) return -1;

  double total = 0.0;
  for (int i = lo; i <= hi; ++i) total += g[static_cast<std::size_t>(i)].mean;
  double best_b0 = -1.0;
  int best_split = -1;
  double left = 0.0;
  for (int s = lo; s < hi; ++s) {
    left += g[static_cast<std::size_t>(s)].mean;
    const double right = total - left;
    const int k1 = s - lo + 1;
    const int k2 = k - k1;
    const double b0 = left * left / k1 + right * right / k2 - total * total / k;
    if (b0 > best_b0 + 1e-15) {
      best_b0 = b0;
      best_split = s;
    }
  }

  const double grand = total / k;
  double means_ss = 0.0;
  double within_ss = 0.0;
  long within_dof = 0;
  double mean_size = 0.0;
  for (int i = lo; i <= hi; ++i) {
    const auto& grp = g[static_cast<std::size_t>(i)];
    means_ss += (grp.mean - grand) * (grp.mean - grand);
    for (double v : grp.values) within_ss += (v - grp.mean) * (v - grp.mean);
    within_dof += static_cast<long>(grp.values.size()) - 1;
    mean_size += static_cast<double>(grp.values.size());
  }
  mean_size /= k;
  const double s2_mean = within_dof > 0 ? within_ss / static_cast<double>(within_dof) / mean_size
                                        : 0.0;
  const double sigma0_sq =
      (means_ss + static_cast<double>(within_dof) * s2_mean) / (k + within_dof);

  if (best_b0 <= 1e-15) return -1;  // all means equal
  if (sigma0_sq <= 0.0) return best_split;  // zero noise with distinct means

  const double pi = std::numbers::pi;
  const double lambda = pi / (2.0 * (pi - 2.0)) * best_b0 / sigma0_sq;
  const double nu0 = static_cast<double>(k) / (pi - 2.0);
  const double critical = chi2_quantile(1.0 - alpha, nu0);
  return lambda > critical ? best_split : -1;
}

void cluster(const std::vector<SkGroup>& g, int lo, int hi, double alpha,
             std::vector<std::pair<int, int>>& out) {
  const int s = best_significant_split(g, lo, hi, alpha);
  if (s < 0) {
    out.emplace_back(lo, hi);
    return;
  }
  cluster(g, lo, s, alpha, out);
  cluster(g, s + 1, hi, alpha, out);
}

}  // namespace

std::vector<RankedGroup> scott_knott(
    const std::vector<std::pair<std::string, std::vector<double>>>& groups, double alpha) {
  if (groups.empty()) return {};
  if (!(alpha > 0.0 && alpha < 1.0)) {
    throw Error(Errc::InvalidArgument, "alpha must lie in (0, 1)");
  }
  std::vector<SkGroup> g;
  g.reserve(groups.size());
  for (const auto& [name, values] : groups) {
    if (values.size() < 2) {
      throw Error(Errc::InvalidArgument, "group '" + name + "' needs at least 2 measurements");
    }
    SkGroup grp;
    grp.name = name;
    grp.values = values;
    grp.mean = moments(values).mean;
    g.push_back(std::move(grp));
  }
  std::sort(g.begin(), g.end(), [](const SkGroup& a, const SkGroup& b) {
    if (a.mean != b.mean) return a.mean < b.mean;
    return a.name < b.name;
  });

  std::vector<std::pair<int, int>> clusters;
  cluster(g, 0, static_cast<int>(g.size()) - 1, alpha, clusters);
  std::sort(clusters.begin(), clusters.end());

  std::vector<RankedGroup> out;
  int rank = 1;
  for (const auto& [lo, hi] : clusters) {
    for (int i = lo; i <= hi; ++i) {
      out.push_back({g[static_cast<std::size_t>(i)].name, g[static_cast<std::size_t>(i)].mean,
                     rank});
    }
    ++rank;
  }
  return out;
}

namespace {

using ordered_json = nlohmann::ordered_json;

ordered_json perf_json(const PerfMetrics& p) {
  return ordered_json{{"accuracy", p.accuracy},
                      {"precision", p.precision},
                      {"recall", p.recall},
                      {"f1", p.f1}};
}

ordered_json side_json(const SideReport& s, const std::string& csv, const std::string& dot,
                       const std::string& scm) {
  ordered_json j;
  j["holds"] = s.eval.holds;
  j["eod_base"] = s.eval.eod_base;
  j["eod_treated"] = s.eval.eod_treated;
  j["perf_ok"] = s.eval.perf_ok;
  j["perf_base"] = perf_json(s.eval.perf_base);
  j["perf_treated"] = perf_json(s.eval.perf_treated);
  j["accept_rate"] = s.accept_rate;
  j["rows"] = s.dataset.n();
  j["eval_seed"] = s.eval_seed;
  j["dataset_csv"] = csv;
  j["dag_dot"] = dot;
  j["scm_json"] = scm;
  return j;
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(Errc::Io, "cannot write " + path.string());
  out << text;
}

std::string format_fixed(double v, int digits) {
  std::ostringstream os;
  os.setf(std::ios::fixed);
  os.precision(digits);
  os << v;
  return os.str();
}

}  // namespace

AuditOutcome run_audit_on(const Dataset& input, const RunConfig& cfg) {
  if (cfg.repeats < 1) throw Error(Errc::InvalidArgument, "repeats must be at least 1");
  if (cfg.out_dir.empty()) throw Error(Errc::InvalidArgument, "output directory required");
  const std::filesystem::path out_dir(cfg.out_dir);
  std::filesystem::create_directories(out_dir);

  AuditOutcome outcome;
  outcome.repeats.resize(static_cast<std::size_t>(cfg.repeats));

  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(cfg.repeats));
  {
    std::atomic<int> next{0};
    const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
    const unsigned workers =
        static_cast<unsigned>(std::min<int>(cfg.repeats, static_cast<int>(std::min(hw, 8u))));
    auto work = [&]() {
      for (int r = next.fetch_add(1); r < cfg.repeats; r = next.fetch_add(1)) {
        RepeatOutcome& ro = outcome.repeats[static_cast<std::size_t>(r)];
        ro.seed = mix_seed(cfg.opts.seed, static_cast<std::uint64_t>(r));
        SearchOptions opts = cfg.opts;
        opts.seed = ro.seed;
        try {
          ro.verdict = search(input, cfg.prop, cfg.discovery, opts);
        } catch (...) {
          errors[static_cast<std::size_t>(r)] = std::current_exception();
        }
      }
    };
    if (workers <= 1) {
      work();
    } else {
      std::vector<std::thread> pool;
      for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work);
      for (auto& t : pool) t.join();
    }
  }
  for (int r = 0; r < cfg.repeats; ++r) {
    if (errors[static_cast<std::size_t>(r)]) std::rethrow_exception(errors[static_cast<std::size_t>(r)]);
  }

  ordered_json report;
  {
    ordered_json c;
    c["dataset"] = cfg.dataset_path;
    c["schema"] = cfg.schema_path;
    c["discovery"] = discovery_alg_name(cfg.discovery);
    c["intervention"] = intervention_kind_name(cfg.prop.intervention.kind);
    c["learner"] = learner_kind_name(cfg.prop.learner);
    c["claim"] = claim_name(cfg.prop.claim);
    c["mode"] = cfg.opts.mode == VerdictMode::Flip ? "flip" : "diff";
    c["epsilon"] = cfg.opts.epsilon;
    c["n_posterior_models"] = cfg.opts.n_posterior_models;
    c["round_models"] = cfg.opts.round_models;
    c["timeout_ms"] = cfg.opts.timeout.count();
    c["seed"] = cfg.opts.seed;
    c["repeats"] = cfg.repeats;
    c["shift_eps"] = cfg.opts.shift ? cfg.opts.shift->eps : 0.0;
    c["perf_tolerance"] = cfg.opts.perf_tolerance;
    report["config"] = c;
  }

  std::vector<double> deltas_a;
  std::vector<double> deltas_b;
  ordered_json repeats_json = ordered_json::array();
  for (int r = 0; r < cfg.repeats; ++r) {
    const RepeatOutcome& ro = outcome.repeats[static_cast<std::size_t>(r)];
    const RobustnessVerdict& v = ro.verdict;
    ordered_json j;
    j["repeat"] = r;
    j["seed"] = ro.seed;
    j["status"] = search_status_name(v.status);
    j["prop_truth"] = ordered_json::array({v.prop_truth.first, v.prop_truth.second});
    j["max_eod_diff"] = v.max_observed_eod_diff;
    j["iterations"] = v.iterations;
    j["n_dags"] = v.n_dags;
    j["weights_only_neighborhood"] = v.weights_only_neighborhood;
    if (v.status == SearchStatus::Violation) outcome.violations += 1;
    if (v.witness) {
      const NeighborPair& w = *v.witness;
      deltas_a.push_back(w.a.eval.eod_treated - w.a.eval.eod_base);
      deltas_b.push_back(w.b.eval.eod_treated - w.b.eval.eod_base);
      const std::string dir_name = "witness-" + std::to_string(r);
      const std::filesystem::path wdir = out_dir / dir_name;
      std::filesystem::create_directories(wdir);
      const std::string csv_a = dir_name + "/side-a.csv";
      const std::string csv_b = dir_name + "/side-b.csv";
      const std::string dot_a = dir_name + "/dag-a.dot";
      const std::string dot_b = dir_name + "/dag-b.dot";
      const std::string scm_a = dir_name + "/scm-a.json";
      const std::string scm_b = dir_name + "/scm-b.json";
      save_csv(w.a.dataset, (out_dir / csv_a).string());
      save_csv(w.b.dataset, (out_dir / csv_b).string());
      write_text_file(out_dir / dot_a, to_dot(w.a.dag));
      write_text_file(out_dir / dot_b, to_dot(w.b.dag));
      write_text_file(out_dir / scm_a, w.a.scm.to_json());
      write_text_file(out_dir / scm_b, w.b.scm.to_json());
      ordered_json wj;
      wj["structural_diff"] = w.structural_diff;
      wj["side_a"] = side_json(w.a, csv_a, dot_a, scm_a);
      wj["side_b"] = side_json(w.b, csv_b, dot_b, scm_b);
      j["witness"] = wj;
    }
    repeats_json.push_back(std::move(j));
  }
  report["repeats"] = repeats_json;

  {
    ordered_json sk;
    sk["variant"] = "classic";
    sk["alpha"] = 0.05;
    ordered_json groups = ordered_json::array();
    if (deltas_a.size() >= 2 && deltas_b.size() >= 2) {
      const auto ranked = scott_knott({{"neighbor-a", deltas_a}, {"neighbor-b", deltas_b}}, 0.05);
      for (const auto& rg : ranked) {
        groups.push_back(ordered_json{{"name", rg.name}, {"mean", rg.mean}, {"rank", rg.rank}});
      }
    }
    sk["groups"] = groups;
    report["scott_knott"] = sk;
  }

  outcome.exit_code = outcome.violations > 0 ? 2 : 0;
  report["summary"] = ordered_json{{"violations", outcome.violations},
                                   {"repeats", cfg.repeats},
                                   {"exit_code", outcome.exit_code}};

  const std::filesystem::path report_path = out_dir / "report.json";
  write_text_file(report_path, report.dump(2) + "\n");
  outcome.report_path = report_path.string();

  std::ostringstream txt;
  txt << "audit: " << intervention_kind_name(cfg.prop.intervention.kind) << " with "
      << learner_kind_name(cfg.prop.learner) << ", claim " << claim_name(cfg.prop.claim)
      << ", discovery " << discovery_alg_name(cfg.discovery) << "\n";
  txt << "repeats: " << cfg.repeats << "  violations: " << outcome.violations << "\n\n";
  txt << "repeat  status                 max_diff  iterations  n_dags\n";
  for (int r = 0; r < cfg.repeats; ++r) {
    const RobustnessVerdict& v = outcome.repeats[static_cast<std::size_t>(r)].verdict;
    std::ostringstream line;
    line << r;
    std::string rs = line.str();
    rs.resize(6, ' ');
    std::string st = search_status_name(v.status);
    st.resize(21, ' ');
    txt << rs << "  " << st << "  " << format_fixed(v.max_observed_eod_diff, 4) << "    "
        << v.iterations << "           " << v.n_dags << "\n";
  }
  if (deltas_a.size() >= 2 && deltas_b.size() >= 2) {
    txt << "\nranks over per-repeat effect (treated - base) by side (classic variant):\n";
    for (const auto& rg : scott_knott({{"neighbor-a", deltas_a}, {"neighbor-b", deltas_b}}, 0.05)) {
      txt << "  rank " << rg.rank << "  " << rg.name << "  mean " << format_fixed(rg.mean, 4)
          << "\n";
    }
  }
  const std::filesystem::path summary_path = out_dir / "summary.txt";
  write_text_file(summary_path, txt.str());
  outcome.summary_path = summary_path.string();
  return outcome;
}

AuditOutcome run_audit(const RunConfig& cfg) {
  const Schema schema = Schema::load(cfg.schema_path);
  const Dataset input = load_csv(cfg.dataset_path, schema);
  return run_audit_on(input, cfg);
}

}  // namespace fairaudit

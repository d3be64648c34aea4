#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "fairaudit/dataset.hpp"
#include "fairaudit/discovery.hpp"
#include "fairaudit/errors.hpp"
#include "fairaudit/graph.hpp"
#include "fairaudit/hp_search.hpp"
#include "fairaudit/report.hpp"
#include "fairaudit/robustness.hpp"
#include "fairaudit/scm.hpp"
#include "fairaudit/stats.hpp"

namespace {

constexpr const char* kVersion = "0.1.0";
constexpr int kUsageError = 64;

using fairaudit::Error;

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(fairaudit::Errc::Io, "cannot write " + path);
  out << text;
}

fairaudit::Dataset load_input(const std::string& data_path, const std::string& schema_path) {
  const fairaudit::Schema schema = fairaudit::Schema::load(schema_path);
  return fairaudit::load_csv(data_path, schema);
}

nlohmann::ordered_json posterior_json(const fairaudit::WeightPosterior& post) {
  nlohmann::ordered_json j;
  j["clipped"] = post.clipped;
  nlohmann::ordered_json means = nlohmann::ordered_json::array();
  for (const auto& m : post.mean) {
    means.push_back(std::vector<double>(m.data(), m.data() + m.size()));
  }
  j["mean"] = means;
  nlohmann::ordered_json covs = nlohmann::ordered_json::array();
  for (const auto& c : post.cov) {
    nlohmann::ordered_json rows = nlohmann::ordered_json::array();
    for (long r = 0; r < c.rows(); ++r) {
      rows.push_back(std::vector<double>(c.row(r).data(), c.row(r).data() + c.cols()));
    }
    covs.push_back(rows);
  }
  j["cov"] = covs;
  return j;
}

std::string fixed(double v, int digits) {
  std::ostringstream os;
  os.setf(std::ios::fixed);
  os.precision(digits);
  os << v;
  return os.str();
}

int cmd_discover(const std::string& data_path, const std::string& schema_path,
                 const std::string& algorithm, double alpha, const std::string& out_dir) {
  const fairaudit::Dataset input = load_input(data_path, schema_path);
  const fairaudit::DiscoveryAlg alg = fairaudit::discovery_alg_from_name(algorithm);
  const fairaudit::Cpdag cpdag = alg == fairaudit::DiscoveryAlg::Pc
                                     ? fairaudit::pc_discover(input, alpha)
                                     : fairaudit::ges_discover(input);
  const std::vector<fairaudit::Dag> dags = fairaudit::enumerate_dags(cpdag);
  std::filesystem::create_directories(out_dir);
  write_file((std::filesystem::path(out_dir) / "cpdag.dot").string(), fairaudit::to_dot(cpdag));
  for (std::size_t i = 0; i < dags.size(); ++i) {
    write_file((std::filesystem::path(out_dir) / ("dag-" + std::to_string(i) + ".dot")).string(),
               fairaudit::to_dot(dags[i]));
  }
  std::cout << "equivalence class members: " << dags.size() << "\n";
  std::cout << "wrote " << out_dir << "/cpdag.dot and dag-<i>.dot\n";
  return 0;
}

int cmd_fit(const std::string& data_path, const std::string& schema_path,
            const std::string& dag_path, const std::string& algorithm, std::uint64_t seed,
            const std::string& out_path) {
  const fairaudit::Dataset input = load_input(data_path, schema_path);
  fairaudit::SplitSpec spec;
  spec.seed = fairaudit::mix_seed(seed, 0xD5);
  const fairaudit::DataSplit parts = fairaudit::split(input, spec);
  fairaudit::Dag dag;
  if (!dag_path.empty()) {
    std::ifstream in(dag_path, std::ios::binary);
    if (!in) throw Error(fairaudit::Errc::Io, "cannot read " + dag_path);
    std::stringstream buf;
    buf << in.rdbuf();
    dag = fairaudit::dag_from_dot(buf.str());
  } else {
    const fairaudit::DiscoveryAlg alg = fairaudit::discovery_alg_from_name(algorithm);
    const fairaudit::Cpdag cpdag = alg == fairaudit::DiscoveryAlg::Pc
                                       ? fairaudit::pc_discover(input, 0.05)
                                       : fairaudit::ges_discover(input);
    dag = fairaudit::enumerate_dags(cpdag).front();
  }
  const fairaudit::ScmFit fit = fairaudit::fit_scm(dag, parts.train);
  nlohmann::ordered_json j;
  j["model"] = nlohmann::ordered_json::parse(fit.model.to_json());
  j["posterior"] = posterior_json(fit.posterior);
  write_file(out_path, j.dump(2) + "\n");
  std::cout << "wrote " << out_path << "\n";
  return 0;
}

int cmd_sample(const std::string& model_path, long n, double shift_eps, std::uint64_t seed,
               const std::string& out_path) {
  std::ifstream in(model_path, std::ios::binary);
  if (!in) throw Error(fairaudit::Errc::Io, "cannot read " + model_path);
  std::stringstream buf;
  buf << in.rdbuf();
  const nlohmann::ordered_json j = nlohmann::ordered_json::parse(buf.str());
  fairaudit::ScmModel model =
      fairaudit::ScmModel::from_json(j.contains("model") ? j["model"].dump() : buf.str());
  if (shift_eps > 0.0) model = fairaudit::apply_label_shift(model, shift_eps);
  const fairaudit::SampleResult sr = fairaudit::sample(model, n, seed);
  fairaudit::save_csv(sr.data, out_path);
  std::cout << "wrote " << out_path << " (" << sr.data.n() << " rows)";
  if (sr.rate_clamped) std::cout << " [count rate clamped]";
  std::cout << "\n";
  return 0;
}

int cmd_validate(const std::string& data_path, const std::string& schema_path,
                 const std::string& algorithms_csv, std::uint64_t seed, int models) {
  const fairaudit::Dataset input = load_input(data_path, schema_path);
  std::vector<std::string> algorithms;
  std::stringstream ss(algorithms_csv);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) algorithms.push_back(item);
  }
  fairaudit::SearchOptions opts;
  opts.seed = seed;
  opts.n_posterior_models = models;
  const fairaudit::Rq1Report report = fairaudit::rq1_report(input, algorithms, opts);
  std::cout << "Alg    #DAGs  Avg     Std     Min     Max     Dist\n";
  for (const auto& row : report.rows) {
    std::string name = row.algorithm;
    name.resize(5, ' ');
    std::string nd = std::to_string(row.n_dags);
    nd.resize(5, ' ');
    std::cout << name << "  " << nd << "  " << fixed(row.accept_avg, 4) << "  "
              << fixed(row.accept_std, 4) << "  " << fixed(row.accept_min, 4) << "  "
              << fixed(row.accept_max, 4) << "  " << fixed(row.mean_distance, 4) << "\n";
  }
  std::cout << "uniform probe accept rate: " << fixed(report.probe_accept, 4) << "\n";
  return 0;
}

int cmd_audit(const fairaudit::RunConfig& cfg) {
  const fairaudit::AuditOutcome outcome = fairaudit::run_audit(cfg);
  std::cout << "violations: " << outcome.violations << "/" << cfg.repeats << "\n";
  std::cout << "report: " << outcome.report_path << "\n";
  std::cout << "summary: " << outcome.summary_path << "\n";
  return outcome.exit_code;
}

int cmd_hp_audit(const std::string& data_path, const std::string& schema_path,
                 const std::string& learner, int budget, std::uint64_t seed,
                 const std::string& out_dir) {
  const fairaudit::Dataset input = load_input(data_path, schema_path);
  const fairaudit::LearnerKind kind = fairaudit::learner_kind_from_name(learner);
  fairaudit::SplitSpec spec;
  spec.seed = fairaudit::mix_seed(seed, 0xD5);
  const fairaudit::DataSplit parts = fairaudit::split(input, spec);
  const std::vector<fairaudit::HpSample> samples =
      fairaudit::evolve(parts, kind, budget, seed);
  const fairaudit::ImportanceVector importance = fairaudit::shapley_importance(samples, kind);

  std::filesystem::create_directories(out_dir);
  std::ostringstream csv;
  csv << "penalty,c,tol,fit_intercept,intercept_scaling,max_iter,l1_ratio,solver,criterion,"
         "max_depth,min_samples_leaf,eod,accuracy,f1,perf_ok\n";
  for (const auto& s : samples) {
    csv << fairaudit::penalty_name(s.hp.penalty) << ',' << s.hp.c << ',' << s.hp.tol << ','
        << (s.hp.fit_intercept ? 1 : 0) << ',' << s.hp.intercept_scaling << ',' << s.hp.max_iter
        << ',' << s.hp.l1_ratio << ',' << fairaudit::solver_name(s.hp.solver) << ','
        << fairaudit::split_criterion_name(s.hp.criterion) << ',' << s.hp.max_depth << ','
        << s.hp.min_samples_leaf << ',' << s.eod << ',' << s.perf.accuracy << ',' << s.perf.f1
        << ',' << (s.perf_ok ? 1 : 0) << "\n";
  }
  write_file((std::filesystem::path(out_dir) / "hp_samples.csv").string(), csv.str());

  nlohmann::ordered_json j;
  j["learner"] = learner;
  j["budget"] = budget;
  j["seed"] = seed;
  j["surrogate_r2"] = importance.surrogate_r2;
  j["low_fit"] = importance.low_fit;
  nlohmann::ordered_json entries = nlohmann::ordered_json::array();
  for (const auto& e : importance.entries) {
    entries.push_back(nlohmann::ordered_json{{"name", e.name}, {"importance", e.importance}});
  }
  j["importance"] = entries;
  j["ranking"] = importance.ranking;
  write_file((std::filesystem::path(out_dir) / "importance.json").string(), j.dump(2) + "\n");

  double best = samples.front().eod;
  for (const auto& s : samples) {
    if (s.perf_ok) best = std::min(best, s.eod);
  }
  std::cout << "evaluations: " << samples.size() << "\n";
  std::cout << "best equalized-odds difference: " << fixed(best, 4) << "\n";
  std::cout << "importance ranking:";
  for (const auto& name : importance.ranking) std::cout << " " << name;
  std::cout << "\n";
  if (importance.low_fit) std::cout << "note: surrogate fit quality is low\n";
  std::cout << "wrote " << out_dir << "/hp_samples.csv and importance.json\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"fairness practice robustness auditor"};
  app.require_subcommand(1);

  std::string data_path, schema_path, out_dir = "out", out_path, dag_path, model_path;
  std::string algorithm = "ges";
  std::string algorithms_csv = "pc,ges,rnd,eq";
  std::string intervention = "drop-sens";
  std::string learner = "lr";
  std::string claim = "bias-decreases";
  std::string mode = "flip";
  double alpha = 0.05;
  double epsilon = 0.05;
  double shift_eps = 0.0;
  double timeout_s = 600.0;
  std::uint64_t seed = 0;
  long n_rows = 1000;
  int repeats = 1;
  int models = 1000;
  int round_models = 10;
  int budget = 500;
  int select_k = 0;
  double select_alpha = 0.05;
  double select_percentile = 10.0;
  int max_drop = 3;

  CLI::App* discover = app.add_subcommand("discover", "infer an equivalence class, write DOT files");
  discover->add_option("--data", data_path)->required();
  discover->add_option("--schema", schema_path)->required();
  discover->add_option("--algorithm", algorithm, "pc or ges");
  discover->add_option("--alpha", alpha, "independence test level (pc)");
  discover->add_option("--out", out_dir, "output directory");

  CLI::App* fit = app.add_subcommand("fit", "fit a structural model, write model + posterior JSON");
  fit->add_option("--data", data_path)->required();
  fit->add_option("--schema", schema_path)->required();
  fit->add_option("--dag", dag_path, "DOT file; defaults to the first class member");
  fit->add_option("--algorithm", algorithm, "pc or ges");
  fit->add_option("--seed", seed);
  fit->add_option("--out", out_path)->required();

  CLI::App* sample = app.add_subcommand("sample", "draw synthetic rows from a fitted model");
  sample->add_option("--model", model_path)->required();
  sample->add_option("--n", n_rows, "rows to draw");
  sample->add_option("--shift-eps", shift_eps, "label probability shift");
  sample->add_option("--seed", seed);
  sample->add_option("--out", out_path)->required();

  CLI::App* validate = app.add_subcommand("validate", "success-rate table per generation scheme");
  validate->add_option("--data", data_path)->required();
  validate->add_option("--schema", schema_path)->required();
  validate->add_option("--algorithms", algorithms_csv, "comma list of pc,ges,rnd,eq");
  validate->add_option("--seed", seed);
  validate->add_option("--models", models);

  CLI::App* audit = app.add_subcommand("audit", "search the equivalence class for a violation");
  audit->add_option("--data", data_path)->required();
  audit->add_option("--schema", schema_path)->required();
  audit->add_option("--intervention", intervention,
                    "select-kbest, select-fpr, select-percentile, drop-sens, random-drop, "
                    "threshold-optimizer, calibrated-eq-odds");
  audit->add_option("--learner", learner, "lr, dt, or svm");
  audit->add_option("--claim", claim, "bias-decreases or bias-not-increased");
  audit->add_option("--discovery", algorithm, "pc or ges");
  audit->add_option("--mode", mode, "flip or diff");
  audit->add_option("--epsilon", epsilon, "effect difference threshold (diff mode)");
  audit->add_option("--timeout", timeout_s, "seconds per repeat");
  audit->add_option("--seed", seed);
  audit->add_option("--repeats", repeats);
  audit->add_option("--models", models, "posterior draws per graph");
  audit->add_option("--round-models", round_models, "draws per graph per round");
  audit->add_option("--shift-eps", shift_eps, "label probability shift");
  audit->add_option("--k", select_k, "select-kbest count (0 = half)");
  audit->add_option("--select-alpha", select_alpha, "select-fpr level");
  audit->add_option("--percentile", select_percentile, "select-percentile value");
  audit->add_option("--max-drop", max_drop, "random-drop upper bound");
  audit->add_option("--out", out_dir, "output directory");

  CLI::App* hp_audit = app.add_subcommand("hp-audit", "hyperparameter search and importance");
  hp_audit->add_option("--data", data_path)->required();
  hp_audit->add_option("--schema", schema_path)->required();
  hp_audit->add_option("--learner", learner, "lr, dt, or svm");
  hp_audit->add_option("--budget", budget, "evaluation budget");
  hp_audit->add_option("--seed", seed);
  hp_audit->add_option("--out", out_dir, "output directory");

  CLI::App* version = app.add_subcommand("version", "print the tool version");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << e.what() << "\n\n" << app.help() << std::flush;
    return kUsageError;
  }

  try {
    if (version->parsed()) {
      std::cout << "fairaudit " << kVersion << "\n";
      return 0;
    }
    if (discover->parsed()) return cmd_discover(data_path, schema_path, algorithm, alpha, out_dir);
    if (fit->parsed()) return cmd_fit(data_path, schema_path, dag_path, algorithm, seed, out_path);
    if (sample->parsed()) return cmd_sample(model_path, n_rows, shift_eps, seed, out_path);
    if (validate->parsed())
      return cmd_validate(data_path, schema_path, algorithms_csv, seed, models);
    if (hp_audit->parsed())
      return cmd_hp_audit(data_path, schema_path, learner, budget, seed, out_dir);
    if (audit->parsed()) {
      fairaudit::RunConfig cfg;
      cfg.dataset_path = data_path;
      cfg.schema_path = schema_path;
      cfg.discovery = fairaudit::discovery_alg_from_name(algorithm);
      cfg.prop.intervention.kind = fairaudit::intervention_kind_from_name(intervention);
      cfg.prop.intervention.k = select_k;
      cfg.prop.intervention.alpha = select_alpha;
      cfg.prop.intervention.percentile = select_percentile;
      cfg.prop.intervention.max_drop = max_drop;
      cfg.prop.learner = fairaudit::learner_kind_from_name(learner);
      cfg.prop.claim = fairaudit::claim_from_name(claim);
      cfg.opts.epsilon = epsilon;
      cfg.opts.n_posterior_models = models;
      cfg.opts.round_models = round_models;
      cfg.opts.timeout =
          std::chrono::milliseconds(static_cast<long long>(timeout_s * 1000.0));
      cfg.opts.seed = seed;
      if (shift_eps > 0.0) cfg.opts.shift = fairaudit::ShiftSpec{shift_eps};
      if (mode == "flip") {
        cfg.opts.mode = fairaudit::VerdictMode::Flip;
      } else if (mode == "diff") {
        cfg.opts.mode = fairaudit::VerdictMode::Diff;
      } else {
        throw Error(fairaudit::Errc::InvalidArgument, "mode must be flip or diff");
      }
      cfg.repeats = repeats;
      cfg.out_dir = out_dir;
      return cmd_audit(cfg);
    }
  } catch (const Error& e) {
    std::cerr << "error [" << fairaudit::errc_name(e.code()) << "]: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

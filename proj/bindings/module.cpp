#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <chrono>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "fairaudit/dataset.hpp"
#include "fairaudit/discovery.hpp"
#include "fairaudit/errors.hpp"
#include "fairaudit/fairness.hpp"
#include "fairaudit/graph.hpp"
#include "fairaudit/hp_search.hpp"
#include "fairaudit/learners.hpp"
#include "fairaudit/report.hpp"
#include "fairaudit/robustness.hpp"
#include "fairaudit/scm.hpp"
#include "fairaudit/stats.hpp"

namespace py = pybind11;
using namespace fairaudit;

namespace {

Schema make_schema(const std::vector<std::pair<std::string, std::string>>& features,
                   const std::string& sensitive, const std::string& label) {
  std::vector<Feature> fs;
  fs.reserve(features.size());
  for (const auto& [name, kind] : features) {
    fs.push_back({name, feature_kind_from_name(kind)});
  }
  return Schema(std::move(fs), sensitive, label);
}

Dataset make_dataset(const Schema& schema, const std::vector<std::vector<double>>& rows) {
  Eigen::MatrixXd values(static_cast<long>(rows.size()), schema.dim());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (static_cast<int>(rows[i].size()) != schema.dim()) {
      throw Error(Errc::FeatureMismatch, "row " + std::to_string(i) + " width mismatch");
    }
    for (int j = 0; j < schema.dim(); ++j) {
      values(static_cast<long>(i), j) = rows[i][static_cast<std::size_t>(j)];
    }
  }
  Dataset d(schema, std::move(values));
  validate_cells(d);
  return d;
}

std::vector<std::vector<double>> dataset_rows(const Dataset& d) {
  std::vector<std::vector<double>> rows(static_cast<std::size_t>(d.n()));
  for (long i = 0; i < d.n(); ++i) {
    rows[static_cast<std::size_t>(i)].resize(static_cast<std::size_t>(d.dim()));
    for (int j = 0; j < d.dim(); ++j) {
      rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = d.values()(i, j);
    }
  }
  return rows;
}

py::dict perf_dict(const PerfMetrics& p) {
  py::dict d;
  d["accuracy"] = p.accuracy;
  d["precision"] = p.precision;
  d["recall"] = p.recall;
  d["f1"] = p.f1;
  return d;
}

py::dict eval_dict(const PropertyEval& e) {
  py::dict d;
  d["holds"] = e.holds;
  d["eod_base"] = e.eod_base;
  d["eod_treated"] = e.eod_treated;
  d["perf_ok"] = e.perf_ok;
  d["perf_base"] = perf_dict(e.perf_base);
  d["perf_treated"] = perf_dict(e.perf_treated);
  return d;
}

PropertySpec make_prop(const std::string& intervention, const std::string& learner,
                       const std::string& claim, int select_k) {
  PropertySpec prop;
  prop.intervention.kind = intervention_kind_from_name(intervention);
  prop.intervention.k = select_k;
  prop.learner = learner_kind_from_name(learner);
  prop.claim = claim_from_name(claim);
  return prop;
}

}  // namespace

PYBIND11_MODULE(fairaudit, m) {
  m.doc() = "fairness practice robustness auditing";

  py::register_exception<Error>(m, "FairauditError");

  py::class_<Schema>(m, "Schema")
      .def(py::init(&make_schema), py::arg("features"), py::arg("sensitive"), py::arg("label"))
      .def_static("from_json", &Schema::from_json)
      .def_static("load", &Schema::load)
      .def("to_json", &Schema::to_json)
      .def("save", &Schema::save)
      .def_property_readonly("sensitive", &Schema::sensitive)
      .def_property_readonly("label", &Schema::label)
      .def_property_readonly("feature_names", [](const Schema& s) {
        std::vector<std::string> names;
        names.reserve(s.features().size());
        for (const auto& f : s.features()) names.push_back(f.name);
        return names;
      });

  py::class_<Dataset>(m, "Dataset")
      .def(py::init(&make_dataset), py::arg("schema"), py::arg("rows"))
      .def_static("load_csv", &load_csv, py::arg("path"), py::arg("schema"))
      .def("save_csv", [](const Dataset& d, const std::string& path) { save_csv(d, path); })
      .def("to_csv", &to_csv)
      .def("rows", &dataset_rows)
      .def("column", [](const Dataset& d, const std::string& name) {
        const Eigen::VectorXd col = d.column(name);
        return std::vector<double>(col.data(), col.data() + col.size());
      })
      .def_property_readonly("schema", &Dataset::schema)
      .def_property_readonly("n", &Dataset::n)
      .def_property_readonly("degenerate", &Dataset::degenerate);

  m.def(
      "split",
      [](const Dataset& d, double train, double validation, double test, std::uint64_t seed) {
        SplitSpec spec{train, validation, test, seed};
        DataSplit parts = split(d, spec);
        return py::make_tuple(parts.train, parts.validation, parts.test);
      },
      py::arg("dataset"), py::arg("train") = 0.6, py::arg("validation") = 0.2,
      py::arg("test") = 0.2, py::arg("seed") = 0);

  m.def(
      "discover",
      [](const Dataset& d, const std::string& algorithm, double alpha) {
        const Cpdag c = discovery_alg_from_name(algorithm) == DiscoveryAlg::Pc
                            ? pc_discover(d, alpha)
                            : ges_discover(d);
        py::dict out;
        out["cpdag"] = to_dot(c);
        std::vector<std::string> dags;
        for (const Dag& dag : enumerate_dags(c)) dags.push_back(to_dot(dag));
        out["dags"] = dags;
        return out;
      },
      py::arg("dataset"), py::arg("algorithm") = "ges", py::arg("alpha") = 0.05);

  m.def(
      "fit_scm",
      [](const Dataset& train_rows, const std::string& dag_dot) {
        return fit_scm(dag_from_dot(dag_dot), train_rows).model.to_json();
      },
      py::arg("train"), py::arg("dag_dot"));

  m.def(
      "sample",
      [](const std::string& model_json, long n, std::uint64_t seed, double shift_eps) {
        ScmModel model = ScmModel::from_json(model_json);
        if (shift_eps > 0.0) model = apply_label_shift(model, shift_eps);
        return sample(model, n, seed).data;
      },
      py::arg("model_json"), py::arg("n"), py::arg("seed") = 0, py::arg("shift_eps") = 0.0);

  m.def(
      "train_bias",
      [](const Dataset& d, const std::string& learner,
         const std::vector<std::string>& features, std::uint64_t seed) {
        SplitSpec spec;
        spec.seed = mix_seed(seed, 0xD5);
        const DataSplit parts = split(d, spec);
        ParamConfig cfg;
        cfg.features = features;
        const BiasResult res =
            bias_fn(parts, learner_kind_from_name(learner), cfg, seed);
        py::dict out;
        out["eod"] = res.eod;
        out["tpr_privileged"] = res.rates.tpr_privileged;
        out["tpr_unprivileged"] = res.rates.tpr_unprivileged;
        out["perf"] = perf_dict(res.perf);
        out["perf_ok"] = res.perf_ok;
        return out;
      },
      py::arg("dataset"), py::arg("learner") = "lr",
      py::arg("features") = std::vector<std::string>{}, py::arg("seed") = 0);

  m.def(
      "eval_property",
      [](const Dataset& d, const std::string& intervention, const std::string& learner,
         const std::string& claim, int select_k, std::uint64_t seed) {
        SplitSpec spec;
        spec.seed = mix_seed(seed, 0xD5);
        const DataSplit parts = split(d, spec);
        return eval_dict(eval_property(make_prop(intervention, learner, claim, select_k),
                                       parts, seed));
      },
      py::arg("dataset"), py::arg("intervention") = "drop-sens", py::arg("learner") = "lr",
      py::arg("claim") = "bias-decreases", py::arg("select_k") = 0, py::arg("seed") = 0);

  m.def(
      "audit",
      [](const Dataset& d, const std::string& intervention, const std::string& learner,
         const std::string& claim, const std::string& discovery, const std::string& mode,
         double epsilon, int models, int round_models, std::uint64_t seed, double timeout_s,
         double shift_eps, int select_k) {
        PropertySpec prop = make_prop(intervention, learner, claim, select_k);
        SearchOptions opts;
        opts.epsilon = epsilon;
        opts.n_posterior_models = models;
        opts.round_models = round_models;
        opts.seed = seed;
        opts.timeout = std::chrono::milliseconds(static_cast<long long>(timeout_s * 1000.0));
        if (shift_eps > 0.0) opts.shift = ShiftSpec{shift_eps};
        opts.mode = mode == "diff" ? VerdictMode::Diff : VerdictMode::Flip;
        const RobustnessVerdict v =
            search(d, prop, discovery_alg_from_name(discovery), opts);
        py::dict out;
        out["status"] = std::string(search_status_name(v.status));
        out["prop_truth"] = py::make_tuple(v.prop_truth.first, v.prop_truth.second);
        out["max_eod_diff"] = v.max_observed_eod_diff;
        out["iterations"] = v.iterations;
        out["n_dags"] = v.n_dags;
        out["weights_only_neighborhood"] = v.weights_only_neighborhood;
        if (v.witness) {
          py::dict w;
          w["structural_diff"] = v.witness->structural_diff;
          w["side_a"] = eval_dict(v.witness->a.eval);
          w["side_b"] = eval_dict(v.witness->b.eval);
          w["accept_rate_a"] = v.witness->a.accept_rate;
          w["accept_rate_b"] = v.witness->b.accept_rate;
          w["dataset_a"] = v.witness->a.dataset;
          w["dataset_b"] = v.witness->b.dataset;
          out["witness"] = w;
        }
        return out;
      },
      py::arg("dataset"), py::arg("intervention") = "drop-sens", py::arg("learner") = "lr",
      py::arg("claim") = "bias-decreases", py::arg("discovery") = "ges",
      py::arg("mode") = "flip", py::arg("epsilon") = 0.05, py::arg("models") = 1000,
      py::arg("round_models") = 10, py::arg("seed") = 0, py::arg("timeout_s") = 600.0,
      py::arg("shift_eps") = 0.0, py::arg("select_k") = 0);

  m.def(
      "scott_knott",
      [](const std::vector<std::pair<std::string, std::vector<double>>>& groups, double alpha) {
        py::list out;
        for (const RankedGroup& g : scott_knott(groups, alpha)) {
          py::dict row;
          row["name"] = g.name;
          row["mean"] = g.mean;
          row["rank"] = g.rank;
          out.append(row);
        }
        return out;
      },
      py::arg("groups"), py::arg("alpha") = 0.05);

  m.def(
      "hp_evolve",
      [](const Dataset& d, const std::string& learner, int budget, std::uint64_t seed) {
        SplitSpec spec;
        spec.seed = mix_seed(seed, 0xD5);
        const DataSplit parts = split(d, spec);
        const LearnerKind kind = learner_kind_from_name(learner);
        const auto samples = evolve(parts, kind, budget, seed);
        const ImportanceVector imp = shapley_importance(samples, kind);
        py::dict out;
        py::list eods;
        for (const auto& s : samples) eods.append(s.eod);
        out["eods"] = eods;
        out["ranking"] = imp.ranking;
        out["surrogate_r2"] = imp.surrogate_r2;
        out["low_fit"] = imp.low_fit;
        return out;
      },
      py::arg("dataset"), py::arg("learner") = "lr", py::arg("budget") = 50,
      py::arg("seed") = 0);

  m.def("top4_rank_violation",
        [](const std::vector<std::string>& a, const std::vector<std::string>& b) {
          const RankViolation v = top4_rank_violation(a, b);
          py::dict out;
          out["violated"] = v.violated;
          out["membership_clause"] = v.membership_clause;
          out["order_clause"] = v.order_clause;
          return out;
        });

  m.def("version", []() { return std::string("0.1.0"); });
}

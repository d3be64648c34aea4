#include "fairaudit/scm.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "fairaudit/errors.hpp"
#include "fairaudit/stats.hpp"

namespace fairaudit {

namespace {

constexpr double kRidge = 1e-4;
constexpr double kIrlsTol = 1e-10;
constexpr int kIrlsMaxIter = 100;
constexpr double kEtaClamp = 30.0;
constexpr double kSeparationWeight = 30.0;
constexpr double kRateCeiling = 1e6;
constexpr double kPsdTol = 1e-8;

struct NodeFit {
  Eigen::VectorXd beta;      // bias first
  Eigen::MatrixXd cov;
  double noise_sd = 0.0;
  bool separation = false;
};

Eigen::MatrixXd design_matrix(const Dataset& d, const std::vector<int>& parents) {
  Eigen::MatrixXd x(d.n(), static_cast<long>(parents.size()) + 1);
  x.col(0).setOnes();
  for (std::size_t c = 0; c < parents.size(); ++c) {
    x.col(static_cast<long>(c) + 1) = d.values().col(parents[c]);
  }
  return x;
}

NodeFit fit_gaussian(const Eigen::MatrixXd& x, const Eigen::VectorXd& y) {
  const long n = x.rows();
  const long p = x.cols();
  Eigen::MatrixXd gram = x.transpose() * x + kRidge * Eigen::MatrixXd::Identity(p, p);
  NodeFit fit;
  fit.beta = gram.ldlt().solve(x.transpose() * y);
  const double rss = (y - x * fit.beta).squaredNorm();
  fit.noise_sd = std::sqrt(rss / static_cast<double>(n));
  const double sigma2 = std::max(rss / static_cast<double>(n), 1e-12);
  fit.cov = sigma2 * gram.ldlt().solve(Eigen::MatrixXd::Identity(p, p));
  return fit;
}

// IRLS for the log-link Poisson and logit-link Bernoulli families with
// an L2 penalty of kRidge on all coefficients.
NodeFit fit_glm(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, bool poisson) {
  const long p = x.cols();
  NodeFit fit;
  fit.beta = Eigen::VectorXd::Zero(p);
  Eigen::MatrixXd curvature = Eigen::MatrixXd::Identity(p, p);
  for (int iter = 0; iter < kIrlsMaxIter; ++iter) {
    Eigen::VectorXd eta = x * fit.beta;
    eta = eta.array().min(kEtaClamp).max(-kEtaClamp);
    Eigen::VectorXd mu(eta.size()), w(eta.size());
    for (long r = 0; r < eta.size(); ++r) {
      if (poisson) {
        mu(r) = std::exp(eta(r));
        w(r) = mu(r);
      } else {
        mu(r) = sigmoid(eta(r));
        w(r) = mu(r) * (1.0 - mu(r));
      }
    }
    const Eigen::VectorXd grad = x.transpose() * (y - mu) - kRidge * fit.beta;
    curvature = x.transpose() * w.asDiagonal() * x +
                kRidge * Eigen::MatrixXd::Identity(p, p);
    const Eigen::VectorXd step = curvature.ldlt().solve(grad);
    fit.beta += step;
    if (step.cwiseAbs().maxCoeff() < kIrlsTol) break;
    if (iter == kIrlsMaxIter - 1) fit.separation = true;
  }
  if (fit.beta.cwiseAbs().maxCoeff() > kSeparationWeight) fit.separation = true;
  fit.cov = curvature.ldlt().solve(Eigen::MatrixXd::Identity(p, p));
  return fit;
}

Eigen::MatrixXd symmetrize_psd(Eigen::MatrixXd m, bool& clipped) {
  m = 0.5 * (m + m.transpose()).eval();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m);
  if (es.eigenvalues().minCoeff() >= 0.0) return m;
  if (es.eigenvalues().minCoeff() < -kPsdTol) clipped = true;
  Eigen::VectorXd ev = es.eigenvalues().cwiseMax(0.0);
  return es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
}

int node_index(const ScmModel& m, const std::string& name) {
  return m.schema.index_of(name);
}

}  // namespace

ScmFit fit_scm(const Dag& dag, const Dataset& train) {
  const Schema& schema = train.schema();
  if (static_cast<int>(dag.nodes.size()) != schema.dim()) {
    throw Error(Errc::NodeSetMismatch, "dag and schema column counts differ");
  }
  for (int i = 0; i < schema.dim(); ++i) {
    if (dag.nodes[static_cast<std::size_t>(i)] != schema.name(i)) {
      throw Error(Errc::NodeSetMismatch, "dag nodes must match schema columns in order");
    }
  }
  if (train.n() < 2) throw Error(Errc::DatasetTooSmall, "need at least two training rows");
  dag.topo_order();

  ScmFit out;
  out.model.schema = schema;
  out.model.dag = dag;
  for (int v = 0; v < schema.dim(); ++v) {
    NodeModel node;
    node.name = schema.name(v);
    node.kind = schema.kind(v);

    std::vector<int> parent_idx = dag.parents_of(v);
    std::sort(parent_idx.begin(), parent_idx.end());
    // Constant parents carry no signal; they are excluded from the
    // regression and reported with weight zero.
    std::vector<int> active;
    for (int p : parent_idx) {
      const auto col = train.values().col(p);
      if ((col.array() - col(0)).abs().maxCoeff() == 0.0) {
        node.zero_variance_parent = true;
      } else {
        active.push_back(p);
      }
    }
    const Eigen::MatrixXd x = design_matrix(train, active);
    const Eigen::VectorXd y = train.values().col(v);
    NodeFit fit;
    switch (node.kind) {
      case FeatureKind::Continuous:
        fit = fit_gaussian(x, y);
        break;
      case FeatureKind::Count:
        fit = fit_glm(x, y, /*poisson=*/true);
        break;
      case FeatureKind::Boolean:
        fit = fit_glm(x, y, /*poisson=*/false);
        break;
    }
    node.bias = fit.beta(0);
    node.noise_sd = fit.noise_sd;
    node.separation = fit.separation;
    node.weights = Eigen::VectorXd::Zero(static_cast<long>(parent_idx.size()));
    for (int p : parent_idx) node.parents.push_back(schema.name(p));
    // Posterior over (bias, all parent weights); excluded parents get a
    // point mass at zero.
    const long dim = static_cast<long>(parent_idx.size()) + 1;
    Eigen::VectorXd mean = Eigen::VectorXd::Zero(dim);
    Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(dim, dim);
    mean(0) = fit.beta(0);
    cov(0, 0) = fit.cov(0, 0);
    long fit_col = 1;
    for (std::size_t k = 0; k < parent_idx.size(); ++k) {
      if (std::find(active.begin(), active.end(), parent_idx[k]) == active.end()) continue;
      node.weights(static_cast<long>(k)) = fit.beta(fit_col);
      mean(static_cast<long>(k) + 1) = fit.beta(fit_col);
      cov(0, static_cast<long>(k) + 1) = fit.cov(0, fit_col);
      cov(static_cast<long>(k) + 1, 0) = fit.cov(fit_col, 0);
      long fit_col2 = 1;
      for (std::size_t k2 = 0; k2 < parent_idx.size(); ++k2) {
        if (std::find(active.begin(), active.end(), parent_idx[k2]) == active.end()) continue;
        cov(static_cast<long>(k) + 1, static_cast<long>(k2) + 1) = fit.cov(fit_col, fit_col2);
        ++fit_col2;
      }
      ++fit_col;
    }
    out.posterior.mean.push_back(std::move(mean));
    out.posterior.cov.push_back(symmetrize_psd(std::move(cov), out.posterior.clipped));
    out.model.nodes.push_back(std::move(node));
  }
  return out;
}

std::vector<ScmModel> draw_models(const ScmFit& fit, int count, std::uint64_t seed) {
  std::vector<ScmModel> out;
  out.reserve(static_cast<std::size_t>(count));
  // Cholesky factors are shared across draws.
  std::vector<Eigen::MatrixXd> roots;
  for (const auto& cov : fit.posterior.cov) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cov);
    Eigen::VectorXd ev = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
    roots.push_back(es.eigenvectors() * ev.asDiagonal());
  }
  for (int m = 0; m < count; ++m) {
    Rng rng(mix_seed(seed, static_cast<std::uint64_t>(m)));
    ScmModel model = fit.model;
    for (std::size_t v = 0; v < model.nodes.size(); ++v) {
      const auto& root = roots[v];
      Eigen::VectorXd z(root.cols());
      for (long k = 0; k < z.size(); ++k) z(k) = rng.normal();
      const Eigen::VectorXd w = fit.posterior.mean[v] + root * z;
      model.nodes[v].bias = w(0);
      for (long k = 1; k < w.size(); ++k) model.nodes[v].weights(k - 1) = w(k);
    }
    out.push_back(std::move(model));
  }
  return out;
}

SampleResult sample(const ScmModel& model, long n, std::uint64_t seed) {
  if (n < 0) throw Error(Errc::InvalidArgument, "negative sample size");
  const Schema& schema = model.schema;
  Eigen::MatrixXd values(n, schema.dim());
  Rng rng(seed);
  SampleResult out{Dataset(), false};
  const int label_idx = schema.label_index();
  for (int v : model.dag.topo_order()) {
    const NodeModel& node = model.nodes[static_cast<std::size_t>(v)];
    Eigen::VectorXd eta = Eigen::VectorXd::Constant(n, node.bias);
    for (std::size_t k = 0; k < node.parents.size(); ++k) {
      eta += node.weights(static_cast<long>(k)) *
             values.col(node_index(model, node.parents[k]));
    }
    const bool shifted = v == label_idx && model.label_shift_eps > 0.0;
    for (long r = 0; r < n; ++r) {
      double cell = 0.0;
      switch (node.kind) {
        case FeatureKind::Continuous:
          cell = eta(r) + node.noise_sd * rng.normal();
          break;
        case FeatureKind::Count: {
          double rate = std::exp(std::min(eta(r), std::log(kRateCeiling) + 1.0));
          if (rate > kRateCeiling) {
            rate = kRateCeiling;
            out.rate_clamped = true;
          }
          cell = static_cast<double>(rng.poisson(rate));
          break;
        }
        case FeatureKind::Boolean: {
          double p = sigmoid(eta(r));
          if (shifted) {
            p = std::min(1.0, p + rng.uniform(0.0, model.label_shift_eps));
          }
          cell = rng.uniform() < p ? 1.0 : 0.0;
          break;
        }
      }
      values(r, v) = cell;
    }
  }
  out.data = Dataset(schema, std::move(values));
  return out;
}

ScmModel apply_label_shift(const ScmModel& model, double eps) {
  if (eps < 0.0 || eps > 1.0) {
    throw Error(Errc::InvalidArgument, "label shift must lie in [0, 1]");
  }
  ScmModel out = model;
  out.label_shift_eps = eps;
  return out;
}

ScmModel baseline_weights(const ScmModel& model, BaselineKind kind, std::uint64_t seed) {
  ScmModel out = model;
  Rng rng(seed);
  const double shared = rng.normal();
  for (auto& node : out.nodes) {
    for (long k = 0; k < node.weights.size(); ++k) {
      node.weights(k) = kind == BaselineKind::Random ? rng.normal() : shared;
    }
  }
  return out;
}

std::string ScmModel::to_json() const {
  nlohmann::ordered_json j;
  j["schema"] = nlohmann::ordered_json::parse(schema.to_json());
  j["label_shift_eps"] = label_shift_eps;
  j["nodes"] = nlohmann::ordered_json::array();
  for (const auto& node : nodes) {
    nlohmann::ordered_json nj;
    nj["name"] = node.name;
    nj["kind"] = feature_kind_name(node.kind);
    nj["parents"] = node.parents;
    nj["weights"] = std::vector<double>(node.weights.data(), node.weights.data() + node.weights.size());
    nj["bias"] = node.bias;
    nj["noise_sd"] = node.noise_sd;
    j["nodes"].push_back(std::move(nj));
  }
  return j.dump(2);
}

ScmModel ScmModel::from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::Io, e.what());
  }
  ScmModel out;
  out.schema = Schema::from_json(j.at("schema").dump());
  out.label_shift_eps = j.value("label_shift_eps", 0.0);
  Dag dag;
  for (const auto& f : out.schema.features()) dag.nodes.push_back(f.name);
  for (const auto& nj : j.at("nodes")) {
    NodeModel node;
    node.name = nj.at("name").get<std::string>();
    node.kind = feature_kind_from_name(nj.at("kind").get<std::string>());
    node.parents = nj.at("parents").get<std::vector<std::string>>();
    const auto w = nj.at("weights").get<std::vector<double>>();
    if (w.size() != node.parents.size()) {
      throw Error(Errc::Io, "weights and parents disagree for node " + node.name);
    }
    node.weights = Eigen::Map<const Eigen::VectorXd>(w.data(), static_cast<long>(w.size()));
    node.bias = nj.at("bias").get<double>();
    node.noise_sd = nj.at("noise_sd").get<double>();
    const int child = out.schema.index_of(node.name);
    for (const auto& p : node.parents) dag.edges.insert({out.schema.index_of(p), child});
    out.nodes.push_back(std::move(node));
  }
  if (out.nodes.size() != static_cast<std::size_t>(out.schema.dim())) {
    throw Error(Errc::Io, "model must define every schema column");
  }
  for (int i = 0; i < out.schema.dim(); ++i) {
    if (out.nodes[static_cast<std::size_t>(i)].name != out.schema.name(i)) {
      throw Error(Errc::Io, "model nodes must follow schema order");
    }
  }
  dag.topo_order();
  out.dag = std::move(dag);
  return out;
}

void ScmModel::save(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw Error(Errc::Io, "cannot write '" + path + "'");
  out << to_json() << '\n';
}

ScmModel ScmModel::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::Io, "cannot read '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return from_json(ss.str());
}

}  // namespace fairaudit

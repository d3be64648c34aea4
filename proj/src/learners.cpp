#include "fairaudit/learners.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "fairaudit/errors.hpp"
#include "fairaudit/stats.hpp"

namespace fairaudit {

namespace {

constexpr int kPowerIters = 60;
constexpr int kPlattIters = 50;

struct Problem {
  Eigen::MatrixXd x;       // standardized features (+ intercept column last)
  Eigen::VectorXd y;       // 0/1
  bool has_intercept_col = false;
};

Eigen::MatrixXd feature_matrix(const Dataset& d, const std::vector<std::string>& names) {
  const auto& schema = d.schema();
  Eigen::MatrixXd x(d.n(), static_cast<long>(names.size()));
  for (std::size_t c = 0; c < names.size(); ++c) {
    const int idx = schema.index_of(names[c]);
    if (idx == schema.label_index()) {
      throw Error(Errc::FeatureMismatch, "label cannot be used as a feature");
    }
    x.col(static_cast<long>(c)) = d.values().col(idx);
  }
  return x;
}

// Scaler over the model feature columns only (continuous/count scaled,
// booleans identity), mirroring the dataset-level standardize.
ScalerParams fit_feature_scaler(const Dataset& d, const std::vector<std::string>& names,
                                const Eigen::MatrixXd& x) {
  ScalerParams params;
  params.mean.assign(names.size(), 0.0);
  params.sd.assign(names.size(), 0.0);
  const auto& schema = d.schema();
  for (std::size_t c = 0; c < names.size(); ++c) {
    if (schema.kind(schema.index_of(names[c])) == FeatureKind::Boolean) continue;
    const auto col = x.col(static_cast<long>(c));
    const double m = col.mean();
    const double var = (col.array() - m).square().sum() / static_cast<double>(x.rows());
    params.mean[c] = m;
    params.sd[c] = var > 0.0 ? std::sqrt(var) : 0.0;
  }
  return params;
}

double largest_eigenvalue(const Eigen::MatrixXd& gram) {
  Eigen::VectorXd v = Eigen::VectorXd::Ones(gram.cols());
  v.normalize();
  double lambda = 1.0;
  for (int i = 0; i < kPowerIters; ++i) {
    v = gram * v;
    lambda = v.norm();
    if (lambda <= 0.0) return 1.0;
    v /= lambda;
  }
  return lambda;
}

double soft_threshold(double v, double t) {
  if (v > t) return v - t;
  if (v < -t) return v + t;
  return 0.0;
}

// Penalized logistic regression. Newton handles the smooth penalties;
// any l1 component routes through proximal gradient steps.
void fit_logistic(const Problem& prob, const HpConfig& hp, TrainedModel& model) {
  const long p = prob.x.cols();
  const double inv_c = 1.0 / hp.c;
  double l1 = 0.0, l2 = 0.0;
  switch (hp.penalty) {
    case Penalty::None: break;
    case Penalty::L2: l2 = inv_c; break;
    case Penalty::L1: l1 = inv_c; break;
    case Penalty::ElasticNet:
      l1 = inv_c * hp.l1_ratio;
      l2 = inv_c * (1.0 - hp.l1_ratio);
      break;
  }
  const bool use_newton = hp.solver == Solver::Newton && l1 == 0.0;
  model.solver_fallback = hp.solver == Solver::Newton && l1 > 0.0;

  Eigen::VectorXd beta = Eigen::VectorXd::Zero(p);
  model.converged = false;
  if (use_newton) {
    for (int iter = 0; iter < hp.max_iter; ++iter) {
      Eigen::VectorXd mu(prob.x.rows());
      Eigen::VectorXd w(prob.x.rows());
      const Eigen::VectorXd eta = prob.x * beta;
      for (long r = 0; r < eta.size(); ++r) {
        mu(r) = sigmoid(eta(r));
        w(r) = std::max(mu(r) * (1.0 - mu(r)), 1e-10);
      }
      const Eigen::VectorXd grad = prob.x.transpose() * (mu - prob.y) + l2 * beta;
      if (grad.cwiseAbs().maxCoeff() <= hp.tol) {
        model.converged = true;
        break;
      }
      const Eigen::MatrixXd hess = prob.x.transpose() * w.asDiagonal() * prob.x +
                                   l2 * Eigen::MatrixXd::Identity(p, p) +
                                   1e-10 * Eigen::MatrixXd::Identity(p, p);
      beta -= hess.ldlt().solve(grad);
    }
  } else {
    const double lip = 0.25 * largest_eigenvalue(prob.x.transpose() * prob.x) + l2 + 1e-12;
    for (int iter = 0; iter < hp.max_iter; ++iter) {
      Eigen::VectorXd mu(prob.x.rows());
      const Eigen::VectorXd eta = prob.x * beta;
      for (long r = 0; r < eta.size(); ++r) mu(r) = sigmoid(eta(r));
      const Eigen::VectorXd grad = prob.x.transpose() * (mu - prob.y) + l2 * beta;
      Eigen::VectorXd next(p);
      for (long k = 0; k < p; ++k) {
        next(k) = soft_threshold(beta(k) - grad(k) / lip, l1 / lip);
      }
      const double residual = (beta - next).cwiseAbs().maxCoeff() * lip;
      beta = next;
      if (residual <= hp.tol) {
        model.converged = true;
        break;
      }
    }
  }
  if (prob.has_intercept_col) {
    model.weights = beta.head(p - 1);
    model.intercept = beta(p - 1) * hp.intercept_scaling;
  } else {
    model.weights = beta;
    model.intercept = 0.0;
  }
}

// Hinge-loss linear classifier, full-batch subgradient descent with the
// classic 1/(lambda t) step schedule, then a logistic fit of the margin
// so scores land in [0, 1].
void fit_svm(const Problem& prob, const HpConfig& hp, TrainedModel& model) {
  const long p = prob.x.cols();
  const long n = prob.x.rows();
  const double lambda = 1.0 / (hp.c * static_cast<double>(n));
  Eigen::VectorXd y_pm(n);
  for (long r = 0; r < n; ++r) y_pm(r) = prob.y(r) > 0.5 ? 1.0 : -1.0;

  Eigen::VectorXd w = Eigen::VectorXd::Zero(p);
  model.converged = false;
  for (int iter = 1; iter <= hp.max_iter; ++iter) {
    const Eigen::VectorXd margins = (prob.x * w).cwiseProduct(y_pm);
    Eigen::VectorXd sub = lambda * w;
    for (long r = 0; r < n; ++r) {
      if (margins(r) < 1.0) sub -= y_pm(r) * prob.x.row(r).transpose() / static_cast<double>(n);
    }
    if (sub.norm() <= hp.tol) {
      model.converged = true;
      break;
    }
    w -= sub / (lambda * static_cast<double>(iter));
  }

  const Eigen::VectorXd margin = prob.x * w;
  // Platt scaling by newton steps on (scale, offset).
  double a = 1.0, b = 0.0;
  for (int iter = 0; iter < kPlattIters; ++iter) {
    double g_a = 0.0, g_b = 0.0, h_aa = 0.0, h_ab = 0.0, h_bb = 0.0;
    for (long r = 0; r < n; ++r) {
      const double z = sigmoid(a * margin(r) + b);
      const double d = z - prob.y(r);
      const double v = std::max(z * (1.0 - z), 1e-10);
      g_a += d * margin(r);
      g_b += d;
      h_aa += v * margin(r) * margin(r);
      h_ab += v * margin(r);
      h_bb += v;
    }
    const double det = h_aa * h_bb - h_ab * h_ab + 1e-12;
    const double da = (g_a * h_bb - g_b * h_ab) / det;
    const double db = (g_b * h_aa - g_a * h_ab) / det;
    a -= da;
    b -= db;
    if (std::fabs(da) + std::fabs(db) < 1e-10) break;
  }
  model.weights = prob.has_intercept_col ? Eigen::VectorXd(w.head(p - 1)) : w;
  model.intercept = prob.has_intercept_col ? w(p - 1) : 0.0;
  model.calibrated = true;
  model.calib_scale = a;
  model.calib_offset = b;
}

struct TreeBuilder {
  const Eigen::MatrixXd& x;
  const Eigen::VectorXd& y;
  const HpConfig& hp;
  std::vector<TreeNode> nodes;

  double impurity(double pos, double total) const {
    if (total <= 0.0) return 0.0;
    const double p = pos / total;
    if (hp.criterion == SplitCriterion::Gini) {
      return 1.0 - p * p - (1.0 - p) * (1.0 - p);
    }
    double h = 0.0;
    if (p > 0.0) h -= p * std::log(p);
    if (p < 1.0) h -= (1.0 - p) * std::log(1.0 - p);
    return h;
  }

  int build(std::vector<int>& rows, int depth) {
    double pos = 0.0;
    for (int r : rows) pos += y(r);
    const double total = static_cast<double>(rows.size());
    TreeNode node;
    node.prob = total > 0.0 ? pos / total : 0.0;
    const int id = static_cast<int>(nodes.size());
    nodes.push_back(node);
    if (depth >= hp.max_depth || pos == 0.0 || pos == total ||
        static_cast<int>(rows.size()) < 2 * hp.min_samples_leaf) {
      return id;
    }
    const double parent_imp = impurity(pos, total);
    int best_feature = -1;
    double best_threshold = 0.0;
    double best_gain = 1e-12;
    for (int f = 0; f < x.cols(); ++f) {
      std::vector<int> order = rows;
      std::sort(order.begin(), order.end(), [&](int a, int b) {
        if (x(a, f) != x(b, f)) return x(a, f) < x(b, f);
        return a < b;
      });
      double left_pos = 0.0;
      for (std::size_t i = 0; i + 1 < order.size(); ++i) {
        left_pos += y(order[i]);
        const double v = x(order[i], f);
        const double v_next = x(order[i + 1], f);
        if (v == v_next) continue;
        const long n_left = static_cast<long>(i) + 1;
        const long n_right = static_cast<long>(order.size()) - n_left;
        if (n_left < hp.min_samples_leaf || n_right < hp.min_samples_leaf) continue;
        const double right_pos = pos - left_pos;
        const double child_imp =
            (static_cast<double>(n_left) * impurity(left_pos, static_cast<double>(n_left)) +
             static_cast<double>(n_right) * impurity(right_pos, static_cast<double>(n_right))) /
            total;
        const double gain = parent_imp - child_imp;
        if (gain > best_gain) {
          best_gain = gain;
          best_feature = f;
          best_threshold = 0.5 * (v + v_next);
        }
      }
    }
    if (best_feature < 0) return id;
    std::vector<int> left_rows, right_rows;
    for (int r : rows) {
      (x(r, best_feature) <= best_threshold ? left_rows : right_rows).push_back(r);
    }
    nodes[static_cast<std::size_t>(id)].leaf = false;
    nodes[static_cast<std::size_t>(id)].feature = best_feature;
    nodes[static_cast<std::size_t>(id)].threshold = best_threshold;
    const int left_id = build(left_rows, depth + 1);
    nodes[static_cast<std::size_t>(id)].left = left_id;
    const int right_id = build(right_rows, depth + 1);
    nodes[static_cast<std::size_t>(id)].right = right_id;
    return id;
  }
};

double linear_score(const TrainedModel& m, const Eigen::RowVectorXd& raw) {
  Eigen::RowVectorXd x = raw;
  for (long c = 0; c < x.size(); ++c) {
    const double mean = m.scaler.mean[static_cast<std::size_t>(c)];
    const double sd = m.scaler.sd[static_cast<std::size_t>(c)];
    x(c) = sd > 0.0 ? (x(c) - mean) / sd : x(c) - mean;
  }
  const double margin = x.dot(m.weights) + m.intercept;
  if (m.calibrated) return sigmoid(m.calib_scale * margin + m.calib_offset);
  return sigmoid(margin);
}

double tree_score(const TrainedModel& m, const Eigen::RowVectorXd& x) {
  int id = 0;
  while (!m.tree[static_cast<std::size_t>(id)].leaf) {
    const auto& node = m.tree[static_cast<std::size_t>(id)];
    id = x(node.feature) <= node.threshold ? node.left : node.right;
  }
  return m.tree[static_cast<std::size_t>(id)].prob;
}

}  // namespace

const char* learner_kind_name(LearnerKind k) {
  switch (k) {
    case LearnerKind::LogisticRegression: return "logistic-regression";
    case LearnerKind::DecisionTree: return "decision-tree";
    case LearnerKind::LinearSvm: return "linear-svm";
  }
  return "logistic-regression";
}

LearnerKind learner_kind_from_name(const std::string& s) {
  if (s == "logistic-regression" || s == "lr") return LearnerKind::LogisticRegression;
  if (s == "decision-tree" || s == "dt") return LearnerKind::DecisionTree;
  if (s == "linear-svm" || s == "svm") return LearnerKind::LinearSvm;
  throw Error(Errc::InvalidArgument, "unknown learner '" + s + "'");
}

const char* penalty_name(Penalty p) {
  switch (p) {
    case Penalty::None: return "none";
    case Penalty::L2: return "l2";
    case Penalty::L1: return "l1";
    case Penalty::ElasticNet: return "elasticnet";
  }
  return "l2";
}

Penalty penalty_from_name(const std::string& s) {
  if (s == "none") return Penalty::None;
  if (s == "l2") return Penalty::L2;
  if (s == "l1") return Penalty::L1;
  if (s == "elasticnet") return Penalty::ElasticNet;
  throw Error(Errc::InvalidArgument, "unknown penalty '" + s + "'");
}

const char* solver_name(Solver s) {
  return s == Solver::Gradient ? "gradient" : "newton";
}

Solver solver_from_name(const std::string& s) {
  if (s == "gradient") return Solver::Gradient;
  if (s == "newton") return Solver::Newton;
  throw Error(Errc::InvalidArgument, "unknown solver '" + s + "'");
}

const char* split_criterion_name(SplitCriterion c) {
  return c == SplitCriterion::Gini ? "gini" : "entropy";
}

SplitCriterion split_criterion_from_name(const std::string& s) {
  if (s == "gini") return SplitCriterion::Gini;
  if (s == "entropy") return SplitCriterion::Entropy;
  throw Error(Errc::InvalidArgument, "unknown split criterion '" + s + "'");
}

TrainedModel train(const Dataset& training, LearnerKind kind, const ParamConfig& cfg,
                   std::uint64_t seed) {
  (void)seed;  // all three fits are deterministic batch procedures
  if (training.n() < 2) throw Error(Errc::DatasetTooSmall, "need at least two rows");
  TrainedModel model;
  model.kind = kind;
  model.decision_threshold = cfg.decision_threshold;
  model.features = cfg.features.empty() ? training.schema().predictor_names() : cfg.features;

  const Eigen::VectorXd y = training.column(training.schema().label());
  if (y.minCoeff() == y.maxCoeff()) {
    throw Error(Errc::SingleClassTraining, "training labels are single-valued");
  }
  Eigen::MatrixXd x_raw = feature_matrix(training, model.features);
  model.scaler = fit_feature_scaler(training, model.features, x_raw);

  if (kind == LearnerKind::DecisionTree) {
    TreeBuilder builder{x_raw, y, cfg.hp, {}};
    std::vector<int> rows(static_cast<std::size_t>(training.n()));
    std::iota(rows.begin(), rows.end(), 0);
    builder.build(rows, 0);
    model.tree = std::move(builder.nodes);
    return model;
  }

  Problem prob;
  Eigen::MatrixXd x_std = x_raw;
  for (long c = 0; c < x_std.cols(); ++c) {
    const double mean = model.scaler.mean[static_cast<std::size_t>(c)];
    const double sd = model.scaler.sd[static_cast<std::size_t>(c)];
    if (sd > 0.0) {
      x_std.col(c) = (x_std.col(c).array() - mean) / sd;
    } else {
      x_std.col(c) = x_std.col(c).array() - mean;
    }
  }
  const bool add_intercept = kind == LearnerKind::LinearSvm || cfg.hp.fit_intercept;
  if (add_intercept) {
    prob.x.resize(x_std.rows(), x_std.cols() + 1);
    prob.x.leftCols(x_std.cols()) = x_std;
    prob.x.col(x_std.cols()).setConstant(
        kind == LearnerKind::LogisticRegression ? cfg.hp.intercept_scaling : 1.0);
    prob.has_intercept_col = true;
  } else {
    prob.x = std::move(x_std);
  }
  prob.y = y;

  if (kind == LearnerKind::LogisticRegression) {
    fit_logistic(prob, cfg.hp, model);
    if (prob.has_intercept_col) {
      // intercept was scaled back already in fit_logistic
    }
  } else {
    fit_svm(prob, cfg.hp, model);
  }
  return model;
}

std::vector<double> scores(const TrainedModel& m, const Dataset& d) {
  Eigen::MatrixXd x = feature_matrix(d, m.features);
  std::vector<double> out(static_cast<std::size_t>(d.n()));
  for (long r = 0; r < d.n(); ++r) {
    out[static_cast<std::size_t>(r)] = m.kind == LearnerKind::DecisionTree
                                           ? tree_score(m, x.row(r))
                                           : linear_score(m, x.row(r));
  }
  return out;
}

std::vector<int> predict(const TrainedModel& m, const Dataset& d) {
  const auto s = scores(m, d);
  std::vector<int> out(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    out[i] = s[i] >= m.decision_threshold ? 1 : 0;
  }
  return out;
}

PerfMetrics metrics_from_predictions(const std::vector<int>& pred, const std::vector<int>& label) {
  if (pred.size() != label.size()) {
    throw Error(Errc::InvalidArgument, "prediction and label counts differ");
  }
  long tp = 0, fp = 0, tn = 0, fn = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    if (pred[i] == 1 && label[i] == 1) ++tp;
    if (pred[i] == 1 && label[i] == 0) ++fp;
    if (pred[i] == 0 && label[i] == 0) ++tn;
    if (pred[i] == 0 && label[i] == 1) ++fn;
  }
  PerfMetrics m;
  const double n = static_cast<double>(pred.size());
  m.accuracy = n > 0.0 ? static_cast<double>(tp + tn) / n : 0.0;
  if (tp + fp == 0) {
    m.precision = 0.0;
    m.zero_predicted_favorable = true;
  } else {
    m.precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
  }
  m.recall = tp + fn > 0 ? static_cast<double>(tp) / static_cast<double>(tp + fn) : 0.0;
  m.f1 = m.precision + m.recall > 0.0
             ? 2.0 * m.precision * m.recall / (m.precision + m.recall)
             : 0.0;
  return m;
}

PerfMetrics evaluate(const TrainedModel& m, const Dataset& test) {
  const auto pred = predict(m, test);
  const Eigen::VectorXd y = test.column(test.schema().label());
  std::vector<int> label(static_cast<std::size_t>(test.n()));
  for (long r = 0; r < test.n(); ++r) label[static_cast<std::size_t>(r)] = y(r) > 0.5 ? 1 : 0;
  return metrics_from_predictions(pred, label);
}

}  // namespace fairaudit

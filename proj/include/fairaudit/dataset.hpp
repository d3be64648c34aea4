#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "fairaudit/errors.hpp"

namespace fairaudit {

enum class FeatureKind { Continuous, Count, Boolean };

const char* feature_kind_name(FeatureKind k);
FeatureKind feature_kind_from_name(const std::string& s);

struct Feature {
  std::string name;
  FeatureKind kind = FeatureKind::Continuous;
  bool operator==(const Feature&) const = default;
};

// Column layout of a dataset. The label and the sensitive attribute are
// ordinary columns and must appear in `features`; both are boolean and
// distinct. The favorable label value is fixed at 1 and the privileged
// sensitive value is fixed at 1.
class Schema {
 public:
  Schema() = default;
  Schema(std::vector<Feature> features, std::string sensitive, std::string label);

  const std::vector<Feature>& features() const { return features_; }
  const std::string& sensitive() const { return sensitive_; }
  const std::string& label() const { return label_; }
  int dim() const { return static_cast<int>(features_.size()); }
  int index_of(const std::string& name) const;
  int sensitive_index() const { return sensitive_idx_; }
  int label_index() const { return label_idx_; }
  FeatureKind kind(int i) const { return features_[static_cast<std::size_t>(i)].kind; }
  const std::string& name(int i) const { return features_[static_cast<std::size_t>(i)].name; }
  // All column names except the label, in schema order.
  std::vector<std::string> predictor_names() const;

  std::string to_json() const;
  static Schema from_json(const std::string& text);
  void save(const std::string& path) const;
  static Schema load(const std::string& path);

  bool operator==(const Schema&) const = default;

 private:
  std::vector<Feature> features_;
  std::string sensitive_;
  std::string label_;
  int sensitive_idx_ = -1;
  int label_idx_ = -1;
};

// Rows are dense doubles; boolean columns hold exactly 0/1, count
// columns hold non-negative integers. Cell validity is enforced when
// loading from disk or via validate_cells, not on every construction,
// because intermediate transforms (standardization) intentionally leave
// the original kinds behind.
class Dataset {
 public:
  Dataset() = default;
  Dataset(Schema schema, Eigen::MatrixXd values);

  const Schema& schema() const { return schema_; }
  const Eigen::MatrixXd& values() const { return values_; }
  Eigen::MatrixXd& values() { return values_; }
  long n() const { return values_.rows(); }
  int dim() const { return static_cast<int>(values_.cols()); }

  Eigen::VectorXd column(const std::string& name) const;
  Eigen::VectorXd column(int idx) const { return values_.col(idx); }
  Dataset select_rows(const std::vector<int>& rows) const;

  // True when n >= 20 and the label or the sensitive column does not
  // contain both of its values.
  bool degenerate() const;

 private:
  Schema schema_;
  Eigen::MatrixXd values_;
};

void validate_cells(const Dataset& d);

Dataset load_csv(const std::string& path, const Schema& schema);
void save_csv(const Dataset& d, const std::string& path);
std::string to_csv(const Dataset& d);
Dataset from_csv(const std::string& text, const Schema& schema);

struct SplitSpec {
  double train = 0.6;
  double validation = 0.2;
  double test = 0.2;
  std::uint64_t seed = 0;
};

struct DataSplit {
  Dataset train;
  Dataset validation;
  Dataset test;
};

// Uniform shuffle then contiguous cut; no stratification.
DataSplit split(const Dataset& d, const SplitSpec& spec);

// Per-column affine transform fitted on one dataset and reusable on
// any other with the same schema.
struct ScalerParams {
  std::vector<double> mean;
  std::vector<double> sd;

  Eigen::MatrixXd apply(const Eigen::MatrixXd& values) const;
  Dataset apply(const Dataset& d) const;
};

// Continuous and count columns are centered and scaled to unit variance;
// zero-variance columns are centered only; boolean columns pass through.
std::pair<Dataset, ScalerParams> standardize(const Dataset& d);

}  // namespace fairaudit

#include "fairaudit/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <unordered_map>

#include <json.hpp>

#include "fairaudit/stats.hpp"

namespace fairaudit {

namespace {

constexpr double kFractionTol = 1e-9;

std::string format_cell(double v, FeatureKind kind) {
  if (kind == FeatureKind::Boolean || kind == FeatureKind::Count) {
    return std::to_string(static_cast<long long>(std::llround(v)));
  }
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

// Returns the error class a value violates for its declared kind, or
// nothing when the value is fine.
std::optional<Errc> check_value(double v, FeatureKind kind) {
  if (!std::isfinite(v)) return Errc::NonParsableCell;
  switch (kind) {
    case FeatureKind::Boolean:
      if (v != 0.0 && v != 1.0) return Errc::InvalidBoolean;
      break;
    case FeatureKind::Count:
      if (v != std::floor(v)) return Errc::NonParsableCell;
      if (v < 0.0) return Errc::NegativeCount;
      break;
    case FeatureKind::Continuous:
      break;
  }
  return std::nullopt;
}

double parse_cell(const std::string& cell, FeatureKind kind, long row, const std::string& col) {
  auto fail = [&](Errc code) -> Error {
    std::ostringstream os;
    os << "row " << row << ", column '" << col << "': '" << cell << "'";
    return Error(code, os.str());
  };
  if (cell.empty()) throw fail(Errc::NonParsableCell);
  double v = 0.0;
  const char* first = cell.data();
  const char* last = cell.data() + cell.size();
  auto res = std::from_chars(first, last, v);
  if (res.ec != std::errc() || res.ptr != last) {
    throw fail(Errc::NonParsableCell);
  }
  if (auto bad = check_value(v, kind)) throw fail(*bad);
  return v;
}

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  return out;
}

bool column_has_both_values(const Eigen::MatrixXd& values, int col) {
  bool saw0 = false, saw1 = false;
  for (long r = 0; r < values.rows(); ++r) {
    if (values(r, col) == 0.0) saw0 = true;
    if (values(r, col) == 1.0) saw1 = true;
    if (saw0 && saw1) return true;
  }
  return false;
}

}  // namespace

const char* feature_kind_name(FeatureKind k) {
  switch (k) {
    case FeatureKind::Continuous: return "continuous";
    case FeatureKind::Count: return "count";
    case FeatureKind::Boolean: return "boolean";
  }
  return "continuous";
}

FeatureKind feature_kind_from_name(const std::string& s) {
  if (s == "continuous") return FeatureKind::Continuous;
  if (s == "count") return FeatureKind::Count;
  if (s == "boolean") return FeatureKind::Boolean;
  throw Error(Errc::InvalidSchema, "unknown feature kind '" + s + "'");
}

Schema::Schema(std::vector<Feature> features, std::string sensitive, std::string label)
    : features_(std::move(features)), sensitive_(std::move(sensitive)), label_(std::move(label)) {
  std::set<std::string> seen;
  for (const auto& f : features_) {
    if (f.name.empty()) throw Error(Errc::InvalidSchema, "empty feature name");
    if (!seen.insert(f.name).second) {
      throw Error(Errc::InvalidSchema, "duplicate feature name '" + f.name + "'");
    }
  }
  if (sensitive_ == label_) {
    throw Error(Errc::InvalidSchema, "sensitive attribute and label must differ");
  }
  sensitive_idx_ = index_of(sensitive_);
  label_idx_ = index_of(label_);
  if (features_[static_cast<std::size_t>(sensitive_idx_)].kind != FeatureKind::Boolean) {
    throw Error(Errc::InvalidSchema, "sensitive attribute must be boolean");
  }
  if (features_[static_cast<std::size_t>(label_idx_)].kind != FeatureKind::Boolean) {
    throw Error(Errc::InvalidSchema, "label must be boolean");
  }
}

int Schema::index_of(const std::string& name) const {
  for (std::size_t i = 0; i < features_.size(); ++i) {
    if (features_[i].name == name) return static_cast<int>(i);
  }
  throw Error(Errc::MissingColumn, "'" + name + "' not in schema");
}

std::vector<std::string> Schema::predictor_names() const {
  std::vector<std::string> out;
  for (const auto& f : features_) {
    if (f.name != label_) out.push_back(f.name);
  }
  return out;
}

std::string Schema::to_json() const {
  nlohmann::ordered_json j;
  j["features"] = nlohmann::ordered_json::array();
  for (const auto& f : features_) {
    j["features"].push_back({{"name", f.name}, {"kind", feature_kind_name(f.kind)}});
  }
  j["sensitive"] = sensitive_;
  j["label"] = label_;
  return j.dump(2);
}

Schema Schema::from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::InvalidSchema, e.what());
  }
  if (!j.contains("features") || !j.contains("sensitive") || !j.contains("label")) {
    throw Error(Errc::InvalidSchema, "schema json needs 'features', 'sensitive', 'label'");
  }
  std::vector<Feature> feats;
  for (const auto& f : j["features"]) {
    feats.push_back({f.at("name").get<std::string>(),
                     feature_kind_from_name(f.at("kind").get<std::string>())});
  }
  return Schema(std::move(feats), j["sensitive"].get<std::string>(),
                j["label"].get<std::string>());
}

void Schema::save(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw Error(Errc::Io, "cannot write '" + path + "'");
  out << to_json() << '\n';
}

Schema Schema::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::Io, "cannot read '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return from_json(ss.str());
}

Dataset::Dataset(Schema schema, Eigen::MatrixXd values)
    : schema_(std::move(schema)), values_(std::move(values)) {
  if (values_.cols() != schema_.dim()) {
    throw Error(Errc::InvalidArgument, "value matrix width does not match schema");
  }
}

Eigen::VectorXd Dataset::column(const std::string& name) const {
  return values_.col(schema_.index_of(name));
}

Dataset Dataset::select_rows(const std::vector<int>& rows) const {
  Eigen::MatrixXd out(static_cast<long>(rows.size()), values_.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    out.row(static_cast<long>(i)) = values_.row(rows[i]);
  }
  return Dataset(schema_, std::move(out));
}

bool Dataset::degenerate() const {
  if (n() < 20) return false;
  return !column_has_both_values(values_, schema_.label_index()) ||
         !column_has_both_values(values_, schema_.sensitive_index());
}

void validate_cells(const Dataset& d) {
  const auto& schema = d.schema();
  for (long r = 0; r < d.n(); ++r) {
    for (int c = 0; c < d.dim(); ++c) {
      if (auto bad = check_value(d.values()(r, c), schema.kind(c))) {
        std::ostringstream os;
        os << "row " << r << ", column '" << schema.name(c) << "': " << d.values()(r, c);
        throw Error(*bad, os.str());
      }
    }
  }
}

Dataset from_csv(const std::string& text, const Schema& schema) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw Error(Errc::Io, "empty csv");
  const auto header = split_line(line);
  // Header must contain every schema column; column order in the file is
  // free, extra columns are rejected.
  std::unordered_map<std::string, int> pos;
  for (std::size_t i = 0; i < header.size(); ++i) pos[header[i]] = static_cast<int>(i);
  if (header.size() != static_cast<std::size_t>(schema.dim())) {
    throw Error(Errc::MissingColumn, "header has " + std::to_string(header.size()) +
                                         " columns, schema has " + std::to_string(schema.dim()));
  }
  std::vector<int> file_col(static_cast<std::size_t>(schema.dim()));
  for (int c = 0; c < schema.dim(); ++c) {
    auto it = pos.find(schema.name(c));
    if (it == pos.end()) throw Error(Errc::MissingColumn, "'" + schema.name(c) + "' not in header");
    file_col[static_cast<std::size_t>(c)] = it->second;
  }

  std::vector<std::vector<std::string>> raw;
  long row = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto cells = split_line(line);
    if (cells.size() != header.size()) {
      throw Error(Errc::NonParsableCell, "row " + std::to_string(row) + " has " +
                                             std::to_string(cells.size()) + " cells");
    }
    raw.push_back(std::move(cells));
    ++row;
  }
  Eigen::MatrixXd values(row, schema.dim());
  for (long r = 0; r < row; ++r) {
    for (int c = 0; c < schema.dim(); ++c) {
      const auto& cell = raw[static_cast<std::size_t>(r)][static_cast<std::size_t>(file_col[static_cast<std::size_t>(c)])];
      values(r, c) = parse_cell(cell, schema.kind(c), r, schema.name(c));
    }
  }
  return Dataset(schema, std::move(values));
}

Dataset load_csv(const std::string& path, const Schema& schema) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::Io, "cannot read '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return from_csv(ss.str(), schema);
}

std::string to_csv(const Dataset& d) {
  std::ostringstream out;
  const auto& schema = d.schema();
  for (int c = 0; c < schema.dim(); ++c) {
    if (c) out << ',';
    out << schema.name(c);
  }
  out << '\n';
  for (long r = 0; r < d.n(); ++r) {
    for (int c = 0; c < schema.dim(); ++c) {
      if (c) out << ',';
      out << format_cell(d.values()(r, c), schema.kind(c));
    }
    out << '\n';
  }
  return out.str();
}

void save_csv(const Dataset& d, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error(Errc::Io, "cannot write '" + path + "'");
  out << to_csv(d);
}

DataSplit split(const Dataset& d, const SplitSpec& spec) {
  if (spec.train < 0 || spec.validation < 0 || spec.test < 0 ||
      std::fabs(spec.train + spec.validation + spec.test - 1.0) > kFractionTol) {
    throw Error(Errc::InvalidArgument, "split fractions must be non-negative and sum to 1");
  }
  const long n = d.n();
  std::vector<int> idx(static_cast<std::size_t>(n));
  for (long i = 0; i < n; ++i) idx[static_cast<std::size_t>(i)] = static_cast<int>(i);
  Rng rng(spec.seed);
  rng.shuffle(idx);
  const long n_train = std::llround(spec.train * static_cast<double>(n));
  const long n_val = std::llround(spec.validation * static_cast<double>(n));
  const long n_test = n - n_train - n_val;
  if (n_test < 0) throw Error(Errc::InvalidArgument, "split fractions overflow dataset");
  auto take = [&](long from, long count) {
    std::vector<int> rows(idx.begin() + from, idx.begin() + from + count);
    return d.select_rows(rows);
  };
  DataSplit out;
  out.train = take(0, n_train);
  out.validation = take(n_train, n_val);
  out.test = take(n_train + n_val, n_test);
  return out;
}

Eigen::MatrixXd ScalerParams::apply(const Eigen::MatrixXd& values) const {
  if (values.cols() != static_cast<long>(mean.size())) {
    throw Error(Errc::FeatureMismatch, "scaler width does not match data");
  }
  Eigen::MatrixXd out = values;
  for (long c = 0; c < out.cols(); ++c) {
    const double m = mean[static_cast<std::size_t>(c)];
    const double s = sd[static_cast<std::size_t>(c)];
    if (s > 0.0) {
      out.col(c) = (out.col(c).array() - m) / s;
    } else {
      out.col(c) = out.col(c).array() - m;
    }
  }
  return out;
}

Dataset ScalerParams::apply(const Dataset& d) const {
  return Dataset(d.schema(), apply(d.values()));
}

std::pair<Dataset, ScalerParams> standardize(const Dataset& d) {
  const auto& schema = d.schema();
  ScalerParams params;
  params.mean.assign(static_cast<std::size_t>(d.dim()), 0.0);
  params.sd.assign(static_cast<std::size_t>(d.dim()), 0.0);
  for (int c = 0; c < d.dim(); ++c) {
    if (schema.kind(c) == FeatureKind::Boolean) continue;  // identity
    const auto col = d.values().col(c);
    const double m = col.mean();
    const double var = (col.array() - m).square().sum() / std::max<double>(1.0, static_cast<double>(d.n()));
    params.mean[static_cast<std::size_t>(c)] = m;
    params.sd[static_cast<std::size_t>(c)] = var > 0.0 ? std::sqrt(var) : 0.0;
  }
  return {params.apply(d), params};
}

}  // namespace fairaudit

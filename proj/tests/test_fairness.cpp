#include <doctest.h>

#include <cmath>
#include <cstdint>
#include <functional>
#include <vector>

#include "fairaudit/dataset.hpp"
#include "fairaudit/errors.hpp"
#include "fairaudit/fairness.hpp"
#include "fairaudit/learners.hpp"
#include "fairaudit/stats.hpp"

using namespace fairaudit;

namespace {

// Independent confusion-count computation. Division order matches the
// reading "hits over qualifying rows" so agreement must be bit-exact.
struct CellCounts {
  // index bits: (group << 2) | (label << 1) | pred
  long c[8] = {0, 0, 0, 0, 0, 0, 0, 0};

  long tp(int g) const { return c[(g << 2) | 3]; }
  long pos(int g) const { return c[(g << 2) | 2] + c[(g << 2) | 3]; }

  bool defined() const { return pos(0) > 0 && pos(1) > 0; }
  double eod() const {
    const double t1 = static_cast<double>(tp(1)) / static_cast<double>(pos(1));
    const double t0 = static_cast<double>(tp(0)) / static_cast<double>(pos(0));
    return std::fabs(t1 - t0);
  }
};

// All ways to spread n rows over the eight confusion cells.
void for_each_split(int n, int slot, CellCounts& counts,
                    const std::function<void(const CellCounts&)>& fn) {
  if (slot == 7) {
    counts.c[7] = n;
    fn(counts);
    return;
  }
  for (int take = 0; take <= n; ++take) {
    counts.c[slot] = take;
    for_each_split(n - take, slot + 1, counts, fn);
  }
}

void expand(const CellCounts& counts, std::vector<int>& pred, std::vector<int>& label,
            std::vector<int>& group) {
  pred.clear();
  label.clear();
  group.clear();
  for (int cell = 0; cell < 8; ++cell) {
    for (long k = 0; k < counts.c[cell]; ++k) {
      group.push_back((cell >> 2) & 1);
      label.push_back((cell >> 1) & 1);
      pred.push_back(cell & 1);
    }
  }
}

Schema bias_schema() {
  return Schema({{"x0", FeatureKind::Continuous},
                 {"x1", FeatureKind::Continuous},
                 {"x2", FeatureKind::Continuous},
                 {"s", FeatureKind::Boolean},
                 {"y", FeatureKind::Boolean}},
                "s", "y");
}

Dataset biased_data(int n, std::uint64_t seed) {
  Rng rng(seed);
  Eigen::MatrixXd m(n, 5);
  for (int i = 0; i < n; ++i) {
    m(i, 3) = rng.uniform() < 0.5 ? 1 : 0;
    m(i, 0) = rng.normal() + 1.0 * m(i, 3);
    m(i, 1) = rng.normal();
    m(i, 2) = rng.normal();
    const double eta = 1.2 * m(i, 0) - 0.8 * m(i, 1) - 0.9 * m(i, 3) - 0.2;
    m(i, 4) = rng.uniform() < sigmoid(eta) ? 1 : 0;
  }
  return Dataset(bias_schema(), m);
}

}  // namespace

TEST_CASE("group rates match a hand count") {
  const std::vector<int> group{1, 1, 1, 0, 0, 0};
  const std::vector<int> label{1, 1, 0, 1, 1, 0};
  std::vector<int> pred{1, 0, 1, 1, 0, 0};
  CHECK(group_tpr(pred, label, group, 1) == doctest::Approx(0.5));
  CHECK(group_tpr(pred, label, group, 0) == doctest::Approx(0.5));
  CHECK(eod_from_predictions(pred, label, group) == doctest::Approx(0.0));
  pred[4] = 1;
  CHECK(group_tpr(pred, label, group, 0) == doctest::Approx(1.0));
  CHECK(eod_from_predictions(pred, label, group) == doctest::Approx(0.5));
}

TEST_CASE("the group-size denominator counts the whole group") {
  const std::vector<int> group{1, 1, 1, 0, 0, 0};
  const std::vector<int> label{1, 1, 0, 1, 1, 0};
  const std::vector<int> pred{1, 0, 1, 1, 0, 0};
  CHECK(group_tpr(pred, label, group, 1, true) == doctest::Approx(1.0 / 3.0));
  CHECK(group_tpr(pred, label, group, 0, true) == doctest::Approx(1.0 / 3.0));
  // No positive labels in the group: the recall reading is undefined,
  // the group-size reading is zero.
  const std::vector<int> label2{0, 0, 0, 1, 1, 0};
  CHECK_THROWS_AS(group_tpr(pred, label2, group, 1), Error);
  CHECK(group_tpr(pred, label2, group, 1, true) == 0.0);
  // An absent group is undefined either way.
  const std::vector<int> all_ones{1, 1, 1, 1, 1, 1};
  CHECK_THROWS_AS(group_tpr(pred, label, all_ones, 0), Error);
  CHECK_THROWS_AS(group_tpr(pred, label, all_ones, 0, true), Error);
}

TEST_CASE("argument sizes must agree") {
  CHECK_THROWS_AS(group_tpr({1}, {1, 0}, {1, 0}, 1), Error);
  try {
    group_tpr({1}, {1, 0}, {1, 0}, 1);
  } catch (const Error& e) {
    CHECK(e.code() == Errc::InvalidArgument);
  }
}

TEST_CASE("disparity agrees with confusion counting on every small dataset") {
  // Exhaustive over all confusion-cell multisets up to twelve rows;
  // equality is exact, not approximate.
  long checked = 0, undefined = 0;
  std::vector<int> pred, label, group;
  for (int n = 1; n <= 12; ++n) {
    CellCounts counts;
    for_each_split(n, 0, counts, [&](const CellCounts& cc) {
      expand(cc, pred, label, group);
      if (cc.defined()) {
        const double got = eod_from_predictions(pred, label, group);
        if (got != cc.eod()) {
          REQUIRE(got == cc.eod());  // report the first mismatch loudly
        }
        ++checked;
      } else {
        ++undefined;
      }
    });
  }
  // C(19, 7) + ... compositions in total; most small ones are undefined.
  CHECK(checked + undefined == 125969);
  CHECK(checked > 50000);
}

TEST_CASE("row order is irrelevant") {
  Rng rng(7);
  std::vector<int> pred, label, group;
  for (int i = 0; i < 40; ++i) {
    pred.push_back(rng.uniform() < 0.5 ? 1 : 0);
    label.push_back(rng.uniform() < 0.6 ? 1 : 0);
    group.push_back(rng.uniform() < 0.5 ? 1 : 0);
  }
  const double base = eod_from_predictions(pred, label, group);
  std::vector<int> idx(40);
  for (int i = 0; i < 40; ++i) idx[static_cast<std::size_t>(i)] = i;
  rng.shuffle(idx);
  std::vector<int> p2, l2, g2;
  for (int i : idx) {
    p2.push_back(pred[static_cast<std::size_t>(i)]);
    l2.push_back(label[static_cast<std::size_t>(i)]);
    g2.push_back(group[static_cast<std::size_t>(i)]);
  }
  CHECK(eod_from_predictions(p2, l2, g2) == base);
}

TEST_CASE("model-level disparity is the prediction-level one") {
  const Dataset tr = biased_data(2000, 3);
  const Dataset te = biased_data(800, 4);
  ParamConfig cfg;
  const TrainedModel m = train(tr, LearnerKind::LogisticRegression, cfg, 0);
  const GroupRates r = equal_opportunity(m, te);
  CHECK(r.eod == std::fabs(r.tpr_privileged - r.tpr_unprivileged));
  CHECK(r.eod ==
        eod_from_predictions(predict(m, te), label_vector(te), sensitive_vector(te)));
  // The planted generator really is biased against the unprivileged
  // group, so the gap is visible.
  CHECK(r.eod > 0.02);
}

TEST_CASE("column extraction maps to exact zero-one vectors") {
  const Dataset d = biased_data(50, 9);
  const auto label = label_vector(d);
  const auto group = sensitive_vector(d);
  for (long r = 0; r < d.n(); ++r) {
    CHECK(label[static_cast<std::size_t>(r)] == static_cast<int>(d.values()(r, 4)));
    CHECK(group[static_cast<std::size_t>(r)] == static_cast<int>(d.values()(r, 3)));
  }
}

TEST_CASE("configurations are judged against the default reference") {
  const Dataset all = biased_data(3000, 11);
  const DataSplit parts = split(all, {0.5, 0.2, 0.3, 77});

  ParamConfig defaults;
  const BiasResult base = bias_fn(parts, LearnerKind::LogisticRegression, defaults, 0);
  CHECK(base.perf_ok);  // the reference matches itself
  CHECK(base.perf.accuracy == base.reference_perf.accuracy);
  CHECK(base.perf.f1 == base.reference_perf.f1);
  CHECK(base.eod == base.rates.eod);

  // A model restricted to a pure-noise column cannot stay within the
  // performance margin.
  ParamConfig crippled;
  crippled.features = {"x2"};
  const BiasResult bad = bias_fn(parts, LearnerKind::LogisticRegression, crippled, 0);
  CHECK(bad.reference_perf.accuracy == base.reference_perf.accuracy);
  CHECK_FALSE(bad.perf_ok);
  CHECK(bad.perf.accuracy < base.perf.accuracy - kPerfTolerance);
}

#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace fairaudit {

// Deterministic seed derivation: repeated splitmix64 over the parts.
// Used everywhere a sub-task needs its own stream (model index, repeat
// index, node index) so that work can be reordered or parallelized
// without changing results.
std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b);
std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b, std::uint64_t c);

// Thin RNG wrapper. Samplers are hand-rolled on top of the raw 64-bit
// stream so a given seed yields the same values on every platform.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  std::uint64_t next_u64() { return gen_(); }

  // Uniform in [0, 1).
  double uniform();
  double uniform(double lo, double hi);
  // Inclusive bounds.
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi);
  // Box-Muller, no cached spare: consumes exactly two uniforms.
  double normal();
  double normal(double mean, double sd);
  // Knuth product method below 30, rounded normal approximation above.
  std::int64_t poisson(double lambda);
  // Fisher-Yates.
  void shuffle(std::vector<int>& idx);

 private:
  std::mt19937_64 gen_;
};

// Distribution functions. All implemented from the standard series /
// continued-fraction expansions; accurate to ~1e-12 in the ranges used.
double normal_cdf(double z);
// Regularized incomplete beta I_x(a, b).
double incomplete_beta(double a, double b, double x);
// Regularized lower incomplete gamma P(a, x).
double incomplete_gamma_p(double a, double x);
// Student-t two-sided p-value helpers built on the above.
double f_cdf(double f, double d1, double d2);
double chi2_cdf(double x, double k);
double chi2_quantile(double p, double k);

double sigmoid(double x);

struct Moments {
  double mean = 0.0;
  double sd = 0.0;
};
Moments moments(const std::vector<double>& xs);

}  // namespace fairaudit

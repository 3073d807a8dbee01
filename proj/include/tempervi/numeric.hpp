#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Core>

namespace tempervi {

/// log(sum_i exp(x_i)) with max-subtraction. Returns -inf for an empty span
/// or when every entry is -inf.
double log_sum_exp(std::span<const double> x);

/// log((1/n) sum_i exp(x_i)).
double log_mean_exp(std::span<const double> x);

/// Normalizes logits into probabilities in place. Throws NumericError when a
/// logit is NaN or +inf, or when all logits are -inf.
void softmax_in_place(std::span<double> logits);

std::vector<double> softmax(std::span<const double> logits);

double digamma(double x);

/// x log x with the 0 log 0 = 0 convention.
inline double xlogx(double x) { return x > 0.0 ? x * std::log(x) : 0.0; }

inline double sigmoid(double x) {
  if (x >= 0.0) {
    return 1.0 / (1.0 + std::exp(-x));
  }
  const double e = std::exp(x);
  return e / (1.0 + e);
}

/// Standard error of log(mean(exp(x))) by the delta method, computed in the
/// log domain: se(m)/m with m the sample mean of exp(x).
double log_mean_exp_std_err(std::span<const double> x);

/// Seeds a generator for substream `index` of a run seeded with `seed`.
std::uint64_t substream_seed(std::uint64_t seed, std::uint64_t index);

/// FNV-1a, 64 bit.
std::uint64_t fnv1a64(std::span<const char> bytes);

}  // namespace tempervi

#include <random>

namespace tempervi {

/// Draws log(p) for p ~ Dirichlet(concentration), working in the log domain
/// so tiny concentrations do not underflow the whole vector to zero.
Eigen::VectorXd sample_log_dirichlet(std::mt19937_64& rng, const Eigen::VectorXd& concentration);

Eigen::VectorXd sample_dirichlet(std::mt19937_64& rng, const Eigen::VectorXd& concentration);

}  // namespace tempervi

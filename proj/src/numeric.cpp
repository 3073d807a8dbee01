#include "tempervi/numeric.hpp"

#include <algorithm>
#include <cstdlib>
#include <string>
#include <limits>

#include <boost/math/special_functions/digamma.hpp>

#include "tempervi/errors.hpp"
#include "tempervi/parallel.hpp"

namespace tempervi {

double log_sum_exp(std::span<const double> x) {
  if (x.empty()) {
    return -std::numeric_limits<double>::infinity();
  }
  const double top = *std::max_element(x.begin(), x.end());
  if (std::isinf(top)) {
    return top;
  }
  double acc = 0.0;
  for (double v : x) {
    acc += std::exp(v - top);
  }
  return top + std::log(acc);
}

double log_mean_exp(std::span<const double> x) {
  return log_sum_exp(x) - std::log(static_cast<double>(x.size()));
}

void softmax_in_place(std::span<double> logits) {
  double top = -std::numeric_limits<double>::infinity();
  for (double v : logits) {
    if (std::isnan(v) || v == std::numeric_limits<double>::infinity()) {
      throw NumericError("softmax: non-finite logit");
    }
    top = std::max(top, v);
  }
  if (!std::isfinite(top)) {
    throw NumericError("softmax: all logits are -inf");
  }
  double total = 0.0;
  for (double& v : logits) {
    v = std::exp(v - top);
    total += v;
  }
  for (double& v : logits) {
    v /= total;
  }
}

std::vector<double> softmax(std::span<const double> logits) {
  std::vector<double> out(logits.begin(), logits.end());
  softmax_in_place(out);
  return out;
}

double digamma(double x) { return boost::math::digamma(x); }

double log_mean_exp_std_err(std::span<const double> x) {
  const std::size_t n = x.size();
  if (n < 2) {
    return 0.0;
  }
  const double top = *std::max_element(x.begin(), x.end());
  if (!std::isfinite(top)) {
    return 0.0;
  }
  double mean = 0.0;
  for (double v : x) {
    mean += std::exp(v - top);
  }
  mean /= static_cast<double>(n);
  double var = 0.0;
  for (double v : x) {
    const double d = std::exp(v - top) - mean;
    var += d * d;
  }
  var /= static_cast<double>(n - 1);
  return std::sqrt(var / static_cast<double>(n)) / mean;
}

std::uint64_t substream_seed(std::uint64_t seed, std::uint64_t index) {
  // splitmix64 over the pair
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (index + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::uint64_t fnv1a64(std::span<const char> bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : bytes) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}


Eigen::VectorXd sample_log_dirichlet(std::mt19937_64& rng, const Eigen::VectorXd& concentration) {
  const Eigen::Index k = concentration.size();
  Eigen::VectorXd log_g(k);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (Eigen::Index i = 0; i < k; ++i) {
    const double a = concentration[i];
    if (!(a > 0.0)) {
      throw ArgumentError("Dirichlet concentration must be positive");
    }
    // G(a) = G(a + 1) * U^(1/a)
    std::gamma_distribution<double> gamma(a + 1.0, 1.0);
    double u = unif(rng);
    while (u <= 0.0) u = unif(rng);
    log_g[i] = std::log(gamma(rng)) + std::log(u) / a;
  }
  const double norm = log_sum_exp(std::span<const double>(log_g.data(), static_cast<std::size_t>(k)));
  return log_g.array() - norm;
}

Eigen::VectorXd sample_dirichlet(std::mt19937_64& rng, const Eigen::VectorXd& concentration) {
  return sample_log_dirichlet(rng, concentration).array().exp();
}


std::size_t default_thread_count() {
  if (const char* env = std::getenv("TEMPERVI_THREADS")) {
    try {
      const long v = std::stol(env);
      if (v >= 1) return static_cast<std::size_t>(v);
    } catch (const std::exception&) {
    }
    throw ConfigError(std::string("TEMPERVI_THREADS must be a positive integer, got '") + env + "'");
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : hw;
}

}  // namespace tempervi

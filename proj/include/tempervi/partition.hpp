#pragma once

#include <concepts>
#include <cstdio>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "tempervi/errors.hpp"
#include "tempervi/numeric.hpp"
#include "tempervi/parallel.hpp"
#include "tempervi/tempering.hpp"

namespace tempervi {

enum class PartitionMethod { mc, map, analytic, lda_nested };

std::string to_string(PartitionMethod method);
PartitionMethod partition_method_from_string(const std::string& name);

/// Provenance of a partition table. Stored as sorted key=value pairs; the
/// keys `model`, `n_data` and every `hp.*` entry identify the model the table
/// belongs to and feed model_hash().
struct PartitionMeta {
  std::map<std::string, std::string> entries;

  void set(const std::string& key, const std::string& value) { entries[key] = value; }
  void set(const std::string& key, double value);
  const std::string& get(const std::string& key) const;
  bool has(const std::string& key) const { return entries.count(key) != 0; }

  /// Content hash over the model-identifying entries.
  std::uint64_t model_hash() const;
};

/// (T_m, log C(T_m), standard error) triples over a grid.
struct PartitionTable {
  TemperatureGrid grid;
  std::vector<double> log_c;
  std::vector<double> std_err;
  PartitionMeta meta;

  /// Throws ValidationError when lengths differ, entries are non-finite, or
  /// log C(1) is not exactly zero.
  void validate() const;
};

/// Text format: `# key=value` header lines, a `T,log_c,std_err` column line,
/// then one row per temperature with 17 significant digits.
void write_partition_table(std::ostream& out, const PartitionTable& table);
PartitionTable read_partition_table(std::istream& in);
void save_partition_table(const std::string& path, const PartitionTable& table);
PartitionTable load_partition_table(const std::string& path);

/// Fails with ConfigError unless `table` was produced for the model
/// identified by `expected` and covers `grid`.
void check_partition_table(const PartitionTable& table, const PartitionMeta& expected,
                           const TemperatureGrid& grid);

/// Models whose tempered partition function reduces to an integral over the
/// global variables: they sample from the prior and evaluate the local
/// log-normalizer a_l at a natural-parameter vector.
template <class M>
concept PartitionModel = requires(const M& model, std::mt19937_64& rng, const Eigen::VectorXd& beta,
                                  std::size_t n) {
  { model.sample_prior_global(rng) } -> std::convertible_to<Eigen::VectorXd>;
  { model.eval_a_l(beta) } -> std::convertible_to<double>;
  { model.in_global_domain(beta) } -> std::convertible_to<bool>;
  { model.partition_meta(n) } -> std::convertible_to<PartitionMeta>;
};

/// log of the per-datum tempered normalizer, a_l(beta/T) - a_l(beta)/T.
template <PartitionModel M>
double log_local_tempered_normalizer(const M& model, const Eigen::VectorXd& beta, double temperature) {
  if (temperature == 1.0) {
    return 0.0;
  }
  const Eigen::VectorXd scaled = beta / temperature;
  return model.eval_a_l(scaled) - model.eval_a_l(beta) / temperature;
}

/// Monte Carlo estimate of log C(T_m) from prior samples of the globals,
///   log (1/S) sum_s exp{ N (a_l(beta_s/T) - a_l(beta_s)/T) }.
/// The same samples serve every temperature, and T = 1 is exactly 0.
template <PartitionModel M>
PartitionTable mc_log_partition(const M& model, std::size_t n_data, const TemperatureGrid& grid,
                                std::size_t n_samples, std::uint64_t seed,
                                std::size_t threads = default_thread_count()) {
  if (n_samples < 1) {
    throw ArgumentError("mc_log_partition: need at least one sample");
  }
  const std::size_t m_count = grid.size();
  const double n = static_cast<double>(n_data);
  // exponents[m * S + s]
  std::vector<double> exponents(m_count * n_samples, 0.0);
  parallel_for(n_samples, threads, [&](std::size_t s) {
    std::mt19937_64 rng(substream_seed(seed, s));
    const Eigen::VectorXd beta = model.sample_prior_global(rng);
    const double a_beta = model.eval_a_l(beta);
    for (std::size_t m = 0; m < m_count; ++m) {
      if (grid[m] == 1.0) continue;
      const Eigen::VectorXd scaled = beta / grid[m];
      exponents[m * n_samples + s] = n * (model.eval_a_l(scaled) - a_beta / grid[m]);
    }
  });

  PartitionTable table{grid, std::vector<double>(m_count, 0.0), std::vector<double>(m_count, 0.0),
                       model.partition_meta(n_data)};
  for (std::size_t m = 0; m < m_count; ++m) {
    if (grid[m] == 1.0) continue;
    const std::span<const double> row(exponents.data() + m * n_samples, n_samples);
    const double value = log_mean_exp(row);
    if (!std::isfinite(value)) {
      throw EstimationError("mc_log_partition: estimate is not finite at T = " +
                            std::to_string(grid[m]));
    }
    table.log_c[m] = value;
    table.std_err[m] = log_mean_exp_std_err(row);
  }
  table.meta.set("method", to_string(PartitionMethod::mc));
  table.meta.set("n_samples", std::to_string(n_samples));
  table.meta.set("seed", std::to_string(seed));
  table.meta.set("spacing", std::string(to_string(grid.spacing())));
  return table;
}

/// Point approximation of the prior integral at beta_star:
///   log C(T) ~ N (a_l(beta*/T) - a_l(beta*)/T).
template <PartitionModel M>
PartitionTable map_log_partition(const M& model, std::size_t n_data, const TemperatureGrid& grid,
                                 const Eigen::VectorXd& beta_star) {
  if (!model.in_global_domain(beta_star)) {
    throw ArgumentError("map_log_partition: beta_star outside the model domain");
  }
  const std::size_t m_count = grid.size();
  PartitionTable table{grid, std::vector<double>(m_count, 0.0), std::vector<double>(m_count, 0.0),
                       model.partition_meta(n_data)};
  const double n = static_cast<double>(n_data);
  for (std::size_t m = 0; m < m_count; ++m) {
    table.log_c[m] = n * log_local_tempered_normalizer(model, beta_star, grid[m]);
  }
  table.meta.set("method", to_string(PartitionMethod::map));
  table.meta.set("spacing", std::string(to_string(grid.spacing())));
  std::string encoded;
  for (Eigen::Index i = 0; i < beta_star.size(); ++i) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%s%.17g", i ? " " : "", beta_star[i]);
    encoded += buf;
  }
  table.meta.set("beta_star", encoded);
  return table;
}

struct LdaPriors {
  std::size_t topics = 1;
  std::size_t vocab = 1;
  double alpha = 1.0;
  double eta = 1.0;
};

/// Per-(beta sample, theta sample, temperature) values
///   u = log sum_v (sum_k theta_k beta_kv)^(1/T)
/// shared by the nested estimator and the Jensen bounds.
struct LdaPartitionSamples {
  TemperatureGrid grid;
  std::size_t n_beta = 0;
  std::size_t n_theta = 0;
  std::vector<double> u;  // [(b * n_theta + j) * M + m]

  double at(std::size_t b, std::size_t j, std::size_t m) const {
    return u[(b * n_theta + j) * grid.size() + m];
  }
};

LdaPartitionSamples sample_lda_partition_terms(const LdaPriors& priors, const TemperatureGrid& grid,
                                               std::size_t n_beta, std::size_t n_theta,
                                               std::uint64_t seed,
                                               std::size_t threads = default_thread_count());

PartitionMeta lda_partition_meta(const LdaPriors& priors, double words_per_doc, std::size_t docs);

/// Nested estimator
///   log C(T) ~ log (1/N_b) sum_beta exp{ D log (1/N_t) sum_theta exp(N u) }.
PartitionTable lda_log_partition(const LdaPriors& priors, double words_per_doc, std::size_t docs,
                                 const TemperatureGrid& grid, std::size_t n_beta,
                                 std::size_t n_theta, std::uint64_t seed);

PartitionTable lda_log_partition(const LdaPartitionSamples& samples, const LdaPriors& priors,
                                 double words_per_doc, std::size_t docs, std::uint64_t seed);

struct JensenBounds {
  std::vector<double> lower;
  std::vector<double> upper;
  std::vector<double> lower_std_err;
  std::vector<double> upper_std_err;
};

/// lower = N D E[u], upper = N D log E[exp u], both over the shared samples.
JensenBounds lda_jensen_bounds(const LdaPriors& priors, double words_per_doc, std::size_t docs,
                               const TemperatureGrid& grid, std::size_t n_samples,
                               std::uint64_t seed);

JensenBounds lda_jensen_bounds(const LdaPartitionSamples& samples, double words_per_doc,
                               std::size_t docs);

}  // namespace tempervi

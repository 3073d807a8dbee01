#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "tempervi/ccef.hpp"
#include "tempervi/partition.hpp"
#include "tempervi/tempering.hpp"

namespace tempervi::fmm {

enum class VarianceConvention { variance, stddev };

std::string to_string(VarianceConvention convention);
VarianceConvention variance_convention_from_string(const std::string& name);

struct FmmConfig {
  std::size_t components = 8;  // K
  std::size_t dim = 16;        // D
  double pi = 0.3;
  double sigma_n = 0.1;
  double sigma_mu = 0.35;
  VarianceConvention convention = VarianceConvention::stddev;

  void validate() const;
  double noise_variance() const;
  double prior_variance() const;
};

/// Rows are data points.
using Dataset = Eigen::MatrixXd;

/// q(mu_k) = N(m_k, s2_k I).
struct FmmGlobal {
  Eigen::MatrixXd m;   // K x D
  Eigen::VectorXd s2;  // K
};

struct FmmLocal {
  Eigen::VectorXd nu;  // K, E[Z_nk]
  bool converged = true;
  int iterations = 0;
};

/// Natural-parameter vector [prec_k m_kd (k-major), prec_k] <-> (m, s2).
Eigen::VectorXd to_natural(const FmmGlobal& global);
FmmGlobal from_natural(const Eigen::VectorXd& lambda, std::size_t components, std::size_t dim);

/// Coordinate sweeps over k of
///   logit nu_k = inv_t [ logit(pi) + (m_k . (x - sum_{j != k} nu_j m_j) - (|m_k|^2 + D s2_k) / 2) / sigma_n^2 ]
/// until no responsibility moves by more than the tolerance.
FmmLocal fmm_local_step(const Eigen::Ref<const Eigen::VectorXd>& x, const FmmGlobal& global,
                        const FmmConfig& config, double inv_t,
                        const LocalSolverOptions& options = {}, const FmmLocal* warm = nullptr);

/// Conjugate update of every q(mu_k), visiting components in order and using
/// the freshest means of the others. `nu` holds one row per batch point;
/// `weights` multiplies each point's statistics (inverse temperatures times
/// any replication factor).
FmmGlobal fmm_global_step(const Dataset& batch, const Eigen::MatrixXd& nu,
                          std::span<const double> weights, const FmmConfig& config, double rho,
                          const FmmGlobal& current);

/// E_q[log N(x; sum_k Z_k mu_k, sigma_n^2 I)] + E_q[log p(Z | pi)].
double fmm_expected_loglik(const Eigen::Ref<const Eigen::VectorXd>& x,
                           const Eigen::VectorXd& nu, const FmmGlobal& global,
                           const FmmConfig& config);

/// log C(T) = (N D / 2) log T + N K log(pi^(1/T) + (1 - pi)^(1/T)), exact.
double fmm_log_partition_value(const FmmConfig& config, std::size_t n_data, double temperature);
PartitionTable fmm_log_partition(const FmmConfig& config, std::size_t n_data,
                                 const TemperatureGrid& grid);
PartitionMeta fmm_partition_meta(const FmmConfig& config, std::size_t n_data);

/// Global parameters for the generic partition estimators:
/// beta = [mu_k / sigma_n^2 (K*D), 1 / sigma_n^2, logit(pi)].
class FmmPartitionModel {
public:
  explicit FmmPartitionModel(FmmConfig config);
  Eigen::VectorXd sample_prior_global(std::mt19937_64& rng) const;
  double eval_a_l(const Eigen::VectorXd& beta) const;
  bool in_global_domain(const Eigen::VectorXd& beta) const;
  PartitionMeta partition_meta(std::size_t n_data) const;
  /// Prior mode, for the MAP approximation.
  Eigen::VectorXd prior_mode() const;

private:
  FmmConfig config_;
};

class FmmModel {
public:
  using Dataset = fmm::Dataset;
  using Local = FmmLocal;
  using Cache = FmmGlobal;

  /// `init_precision` is added to the prior precision of the initial q(mu_k).
  explicit FmmModel(FmmConfig config, LocalSolverOptions options = {}, double init_precision = 0.0);

  const FmmConfig& config() const noexcept { return config_; }

  std::size_t num_data(const Dataset& data) const { return static_cast<std::size_t>(data.rows()); }
  std::size_t dim_global() const { return config_.components * (config_.dim + 1); }
  const Eigen::VectorXd& prior_natural() const { return prior_; }
  bool in_domain(const Eigen::VectorXd& lambda) const;
  Eigen::VectorXd initial_lambda(const Dataset& data, std::mt19937_64& rng) const;

  Cache prepare(const Eigen::VectorXd& lambda) const;
  void prepare_local_tempering(Cache&, std::span<const double>) const {}

  Local local_step(const Dataset& data, std::size_t n, const Cache& cache, double inv_t,
                   const Local* warm) const;
  double expected_log_lik(const Dataset& data, std::size_t n, const Local& local,
                          const Cache& cache) const;
  /// -(D/2) log(2 pi sigma_n^2), which the analytic partition function leaves untempered.
  double log_base_measure(const Dataset&, std::size_t) const;
  double temperature_statistic(const Dataset& data, std::size_t n, const Local& local,
                               const Cache& cache) const {
    return expected_log_lik(data, n, local, cache) - log_base_measure(data, n);
  }
  /// Exact: s ell - (1 - s)(D/2) log(2 pi sigma_n^2) - (D/2) log T - K log(pi^s + (1-pi)^s).
  std::vector<double> expected_tempered_log_lik(const Dataset& data, std::size_t n,
                                                const Local& local, const Cache& cache,
                                                std::span<const double> temps) const;
  double local_terms(const Dataset& data, std::size_t n, const Local& local) const;
  double global_terms(const Cache& cache) const;
  void accumulate_suff_stats(const Dataset& data, std::size_t n, const Local& local,
                             const Cache& cache, double weight, Eigen::VectorXd& acc) const;
  Eigen::VectorXd global_step(const Dataset& data, std::span<const std::size_t> batch,
                              std::span<const Local> locals, std::span<const double> weights,
                              double rho, double scale, const Eigen::VectorXd& lambda) const;

  PartitionMeta partition_meta(const Dataset& data) const {
    return fmm_partition_meta(config_, num_data(data));
  }

private:
  FmmConfig config_;
  LocalSolverOptions options_;
  double init_precision_;
  Eigen::VectorXd prior_;
};

/// Eight 4x4 binary masks (K=8, D=16): four 2x2 quadrants, both diagonals,
/// the two middle columns and the two middle rows.
Eigen::MatrixXd toy_masks();

/// Each mask scaled by an independent Uniform[0.5, 1] weight.
Eigen::MatrixXd toy_features(std::uint64_t seed);

/// K rows of D characters '0' / '1'.
Eigen::MatrixXd parse_masks(const std::string& text);

/// Plain CSV, one matrix row per line, values written with 17 significant digits.
void write_matrix_csv(std::ostream& out, const Eigen::MatrixXd& matrix);
Eigen::MatrixXd read_matrix_csv(std::istream& in);
void save_matrix_csv(const std::string& path, const Eigen::MatrixXd& matrix);
Eigen::MatrixXd load_matrix_csv(const std::string& path);

Dataset fmm_generate(const FmmConfig& config, const Eigen::MatrixXd& features, std::size_t n,
                     std::uint64_t seed);

/// Minimum over injective assignments of learned rows to true rows of the
/// root-mean-square entry difference. Needs learned.rows() >= truth.rows().
double best_permutation_rmse(const Eigen::MatrixXd& learned, const Eigen::MatrixXd& truth);

}  // namespace tempervi::fmm

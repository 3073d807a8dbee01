#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "tempervi/ccef.hpp"
#include "tempervi/corpus.hpp"
#include "tempervi/partition.hpp"

namespace tempervi::lda {

struct LdaConfig {
  std::size_t topics = 1;
  std::size_t vocab = 1;
  double alpha = 1.0;  // symmetric Dirichlet on theta_d
  double eta = 1.0;    // symmetric Dirichlet on beta_k

  void validate() const;
  LdaPriors priors() const { return {topics, vocab, alpha, eta}; }
};

/// psi(a_k) - psi(sum a), i.e. E[log x_k] for x ~ Dirichlet(a).
Eigen::VectorXd dirichlet_expected_log(const Eigen::VectorXd& params);

/// Per-document variational factors: q(theta_d) = Dir(gamma) and one column
/// of topic responsibilities per distinct word type of the document.
struct LdaLocal {
  Eigen::VectorXd gamma;  // K
  Eigen::MatrixXd phi;    // K x num_types
  bool converged = true;
  int iterations = 0;
};

/// phi_k ∝ exp{ inv_t (E[log theta_k] + E[log beta_kv]) }
Eigen::VectorXd lda_responsibilities(const Eigen::VectorXd& elog_theta,
                                     const Eigen::VectorXd& elog_beta_word, double inv_t);

/// Alternates the responsibility and gamma updates,
///   gamma = alpha + inv_t * sum_v n_v phi_v,
/// until the relative change in gamma drops below the tolerance.
/// `elog_beta` is K x V.
LdaLocal lda_local_step(const Document& doc, const Eigen::MatrixXd& elog_beta, double alpha,
                        double inv_t, const LocalSolverOptions& options = {},
                        const LdaLocal* warm = nullptr);

/// K x V matrix with entry (k, v) = n_v phi_kv; zero outside the document.
Eigen::MatrixXd lda_global_stats(const Document& doc, const LdaLocal& local, std::size_t vocab);

/// sum_v n_v sum_k phi_kv (E[log theta_k] + E[log beta_kv]).
double lda_expected_loglik(const Document& doc, const LdaLocal& local,
                           const Eigen::MatrixXd& elog_beta);

/// Per-document term of the global temperature statistic.
///   assignment: sum_v n_v sum_k phi_kv (E[log theta_k] + E[log beta_kv])
///   integrated: sum_v n_v log sum_k exp(E[log theta_k] + E[log beta_kv])
enum class TemperatureStatistic { assignment, integrated };

std::string to_string(TemperatureStatistic statistic);
TemperatureStatistic temperature_statistic_from_string(const std::string& name);

/// sum_v n_v log sum_k exp(E[log theta_k] + E[log beta_kv]).
double lda_integrated_loglik(const Document& doc, const Eigen::VectorXd& gamma,
                             const Eigen::MatrixXd& elog_beta);

/// LDA over a bag-of-words corpus. lambda is the K x V matrix of topic
/// Dirichlet parameters stored column-major (entry (k, v) at v * K + k).
class LdaModel {
public:
  using Dataset = Corpus;
  using Local = LdaLocal;

  struct Cache {
    Eigen::MatrixXd lambda;     // K x V
    Eigen::MatrixXd elog_beta;  // K x V
    // log sum_v exp(E[log beta_kv] / T_m), K x M, filled on demand
    Eigen::MatrixXd log_topic_mass;
    std::vector<double> temps;
  };

  explicit LdaModel(LdaConfig config, LocalSolverOptions options = {}, double init_scale = 1.0,
                    TemperatureStatistic statistic = TemperatureStatistic::assignment);

  const LdaConfig& config() const noexcept { return config_; }
  const LocalSolverOptions& solver() const noexcept { return options_; }
  TemperatureStatistic statistic() const noexcept { return statistic_; }

  std::size_t num_data(const Corpus& corpus) const { return corpus.num_docs(); }
  std::size_t dim_global() const { return config_.topics * config_.vocab; }
  const Eigen::VectorXd& prior_natural() const { return prior_; }
  bool in_domain(const Eigen::VectorXd& lambda) const;

  /// eta + init_scale * Gamma(100, 1/100) noise per entry.
  Eigen::VectorXd initial_lambda(const Corpus& corpus, std::mt19937_64& rng) const;

  Cache prepare(const Eigen::VectorXd& lambda) const;
  void prepare_local_tempering(Cache& cache, std::span<const double> temps) const;

  Local local_step(const Corpus& corpus, std::size_t d, const Cache& cache, double inv_t,
                   const Local* warm) const;
  double expected_log_lik(const Corpus& corpus, std::size_t d, const Local& local,
                          const Cache& cache) const;
  double log_base_measure(const Corpus&, std::size_t) const { return 0.0; }
  double temperature_statistic(const Corpus& corpus, std::size_t d, const Local& local,
                               const Cache& cache) const;

  /// Plug-in evaluation at the expected natural parameters:
  ///   (1/T) ell_d - N_d log sum_k exp(E[log theta_k] / T) sum_v exp(E[log beta_kv] / T).
  std::vector<double> expected_tempered_log_lik(const Corpus& corpus, std::size_t d,
                                                const Local& local, const Cache& cache,
                                                std::span<const double> temps) const;

  double local_terms(const Corpus& corpus, std::size_t d, const Local& local) const;
  double global_terms(const Cache& cache) const;
  void accumulate_suff_stats(const Corpus& corpus, std::size_t d, const Local& local,
                             const Cache& cache, double weight, Eigen::VectorXd& acc) const;
  Eigen::VectorXd global_step(const Corpus& corpus, std::span<const std::size_t> batch,
                              std::span<const Local> locals, std::span<const double> weights,
                              double rho, double scale, const Eigen::VectorXd& lambda) const;

  PartitionMeta partition_meta(const Corpus& corpus) const;

private:
  LdaConfig config_;
  LocalSolverOptions options_;
  double init_scale_;
  TemperatureStatistic statistic_;
  Eigen::VectorXd prior_;
};

struct SyntheticCorpusSpec {
  std::size_t docs = 2000;
  std::size_t vocab = 2000;
  std::size_t topics = 25;
  double mean_doc_length = 100.0;
  double alpha = 0.1;  // document-topic concentration
  double eta = 0.05;   // topic-word concentration
};

struct SyntheticCorpus {
  Corpus corpus;
  Eigen::MatrixXd topics;  // K x V, rows sum to 1
};

/// Samples a corpus from the LDA generative process with Poisson document
/// lengths (at least one token each).
SyntheticCorpus generate_corpus(const SyntheticCorpusSpec& spec, std::uint64_t seed);

/// Same generative process with fixed topics.
Corpus generate_documents(const Eigen::MatrixXd& topics, std::size_t docs, double mean_doc_length,
                          double alpha, std::uint64_t seed);

}  // namespace tempervi::lda

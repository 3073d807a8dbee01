#include "tempervi/lda.hpp"

#include <algorithm>
#include <cmath>

#include "tempervi/errors.hpp"
#include "tempervi/numeric.hpp"

namespace tempervi::lda {

void LdaConfig::validate() const {
  if (topics < 1 || vocab < 1) throw ConfigError("LDA needs K >= 1 and V >= 1");
  if (!(alpha > 0.0) || !(eta > 0.0) || !std::isfinite(alpha) || !std::isfinite(eta)) {
    throw ConfigError("LDA hyperparameters alpha and eta must be positive and finite");
  }
}

Eigen::VectorXd dirichlet_expected_log(const Eigen::VectorXd& params) {
  if (params.size() == 0) throw ArgumentError("dirichlet_expected_log: empty parameter vector");
  if (!(params.minCoeff() > 0.0) || !params.allFinite()) {
    throw ArgumentError("dirichlet_expected_log: parameters must be positive and finite");
  }
  const double psi_total = digamma(params.sum());
  return params.unaryExpr([](double a) { return digamma(a); }).array() - psi_total;
}

Eigen::VectorXd lda_responsibilities(const Eigen::VectorXd& elog_theta,
                                     const Eigen::VectorXd& elog_beta_word, double inv_t) {
  Eigen::VectorXd logits = inv_t * (elog_theta + elog_beta_word);
  softmax_in_place(std::span<double>(logits.data(), static_cast<std::size_t>(logits.size())));
  return logits;
}

namespace {

// Exponentiated digammas of a Dirichlet parameter vector, scaled by inv_t.
// Subtracting the max keeps the exponentials in range; the per-word
// normalization cancels the constant.
Eigen::VectorXd tempered_exp_elog(const Eigen::VectorXd& gamma, double inv_t) {
  Eigen::VectorXd e = inv_t * dirichlet_expected_log(gamma);
  return (e.array() - e.maxCoeff()).exp();
}

}  // namespace

LdaLocal lda_local_step(const Document& doc, const Eigen::MatrixXd& elog_beta, double alpha,
                        double inv_t, const LocalSolverOptions& options, const LdaLocal* warm) {
  if (!(inv_t > 0.0) || inv_t > 1.0) {
    throw ArgumentError("lda_local_step: inverse temperature must lie in (0, 1]");
  }
  const Eigen::Index k_count = elog_beta.rows();
  const auto n_types = static_cast<Eigen::Index>(doc.words.size());
  LdaLocal local;
  local.gamma = Eigen::VectorXd::Constant(k_count, alpha);
  local.phi.resize(k_count, n_types);
  if (n_types == 0) return local;

  Eigen::VectorXd counts(n_types);
  Eigen::MatrixXd beta_t(k_count, n_types);
  for (Eigen::Index j = 0; j < n_types; ++j) {
    counts[j] = doc.counts[static_cast<std::size_t>(j)];
    const auto col = elog_beta.col(doc.words[static_cast<std::size_t>(j)]);
    beta_t.col(j) = (inv_t * (col.array() - col.maxCoeff())).exp();
  }

  if (warm != nullptr && warm->gamma.size() == k_count) {
    local.gamma = warm->gamma;
  } else {
    local.gamma.array() += inv_t * counts.sum() / static_cast<double>(k_count);
  }

  local.converged = false;
  for (int it = 0; it < options.max_iterations; ++it) {
    const Eigen::VectorXd theta_t = tempered_exp_elog(local.gamma, inv_t);
    local.phi = beta_t.array().colwise() * theta_t.array();
    local.phi.array().rowwise() /= local.phi.colwise().sum().array();
    Eigen::VectorXd next = (local.phi * counts).array() * inv_t + alpha;
    const double change = ((next - local.gamma).array().abs() / local.gamma.array()).maxCoeff();
    local.gamma = std::move(next);
    local.iterations = it + 1;
    if (change < options.tolerance) {
      local.converged = true;
      break;
    }
  }
  return local;
}

Eigen::MatrixXd lda_global_stats(const Document& doc, const LdaLocal& local, std::size_t vocab) {
  Eigen::MatrixXd stats = Eigen::MatrixXd::Zero(local.gamma.size(), static_cast<Eigen::Index>(vocab));
  for (std::size_t j = 0; j < doc.words.size(); ++j) {
    stats.col(doc.words[j]) += doc.counts[j] * local.phi.col(static_cast<Eigen::Index>(j));
  }
  return stats;
}

double lda_expected_loglik(const Document& doc, const LdaLocal& local,
                           const Eigen::MatrixXd& elog_beta) {
  if (doc.empty()) return 0.0;
  const Eigen::VectorXd elog_theta = dirichlet_expected_log(local.gamma);
  double total = 0.0;
  for (std::size_t j = 0; j < doc.words.size(); ++j) {
    const auto col = static_cast<Eigen::Index>(j);
    total += doc.counts[j] *
             local.phi.col(col).dot(elog_theta + elog_beta.col(doc.words[j]));
  }
  return total;
}

std::string to_string(TemperatureStatistic statistic) {
  return statistic == TemperatureStatistic::assignment ? "assignment" : "integrated";
}

TemperatureStatistic temperature_statistic_from_string(const std::string& name) {
  if (name == "assignment") return TemperatureStatistic::assignment;
  if (name == "integrated") return TemperatureStatistic::integrated;
  throw ConfigError("unknown temperature statistic '" + name + "' (expected assignment or integrated)");
}

double lda_integrated_loglik(const Document& doc, const Eigen::VectorXd& gamma,
                             const Eigen::MatrixXd& elog_beta) {
  if (doc.empty()) return 0.0;
  const Eigen::VectorXd elog_theta = dirichlet_expected_log(gamma);
  double total = 0.0;
  for (std::size_t j = 0; j < doc.words.size(); ++j) {
    const Eigen::VectorXd logits = elog_theta + elog_beta.col(doc.words[j]);
    const double top = logits.maxCoeff();
    total += doc.counts[j] * (top + std::log((logits.array() - top).exp().sum()));
  }
  return total;
}

LdaModel::LdaModel(LdaConfig config, LocalSolverOptions options, double init_scale,
                   TemperatureStatistic statistic)
    : config_(config), options_(options), init_scale_(init_scale), statistic_(statistic) {
  config_.validate();
  if (!(init_scale_ >= 0.0)) throw ConfigError("LDA init_scale must be >= 0");
  prior_ = Eigen::VectorXd::Constant(static_cast<Eigen::Index>(dim_global()), config_.eta);
}

bool LdaModel::in_domain(const Eigen::VectorXd& lambda) const {
  return lambda.size() == static_cast<Eigen::Index>(dim_global()) && lambda.allFinite() &&
         lambda.minCoeff() > 0.0;
}

Eigen::VectorXd LdaModel::initial_lambda(const Corpus&, std::mt19937_64& rng) const {
  std::gamma_distribution<double> noise(100.0, 0.01);
  Eigen::VectorXd lambda(static_cast<Eigen::Index>(dim_global()));
  for (Eigen::Index i = 0; i < lambda.size(); ++i) {
    lambda[i] = config_.eta + init_scale_ * noise(rng);
  }
  return lambda;
}

LdaModel::Cache LdaModel::prepare(const Eigen::VectorXd& lambda) const {
  if (!in_domain(lambda)) throw InvalidStateError("LDA lambda outside the positive orthant");
  const auto k_count = static_cast<Eigen::Index>(config_.topics);
  const auto v_count = static_cast<Eigen::Index>(config_.vocab);
  Cache cache;
  cache.lambda = Eigen::Map<const Eigen::MatrixXd>(lambda.data(), k_count, v_count);
  const Eigen::VectorXd psi_rows =
      cache.lambda.rowwise().sum().unaryExpr([](double a) { return digamma(a); });
  cache.elog_beta = cache.lambda.unaryExpr([](double a) { return digamma(a); });
  cache.elog_beta.colwise() -= psi_rows;
  return cache;
}

void LdaModel::prepare_local_tempering(Cache& cache, std::span<const double> temps) const {
  const Eigen::Index k_count = cache.elog_beta.rows();
  const auto m_count = static_cast<Eigen::Index>(temps.size());
  cache.temps.assign(temps.begin(), temps.end());
  cache.log_topic_mass.resize(k_count, m_count);
  for (Eigen::Index k = 0; k < k_count; ++k) {
    const auto row = cache.elog_beta.row(k);
    const double top = row.maxCoeff();
    for (Eigen::Index m = 0; m < m_count; ++m) {
      const double s = 1.0 / temps[static_cast<std::size_t>(m)];
      cache.log_topic_mass(k, m) = s * top + std::log((s * (row.array() - top)).exp().sum());
    }
  }
}

LdaLocal LdaModel::local_step(const Corpus& corpus, std::size_t d, const Cache& cache,
                              double inv_t, const LdaLocal* warm) const {
  return lda_local_step(corpus.docs[d], cache.elog_beta, config_.alpha, inv_t, options_, warm);
}

double LdaModel::expected_log_lik(const Corpus& corpus, std::size_t d, const LdaLocal& local,
                                  const Cache& cache) const {
  return lda_expected_loglik(corpus.docs[d], local, cache.elog_beta);
}

double LdaModel::temperature_statistic(const Corpus& corpus, std::size_t d, const LdaLocal& local,
                                       const Cache& cache) const {
  if (statistic_ == TemperatureStatistic::assignment) {
    return lda_expected_loglik(corpus.docs[d], local, cache.elog_beta);
  }
  return lda_integrated_loglik(corpus.docs[d], local.gamma, cache.elog_beta);
}

std::vector<double> LdaModel::expected_tempered_log_lik(const Corpus& corpus, std::size_t d,
                                                        const LdaLocal& local, const Cache& cache,
                                                        std::span<const double> temps) const {
  if (cache.temps.size() != temps.size() ||
      !std::equal(temps.begin(), temps.end(), cache.temps.begin())) {
    throw InvalidStateError("LDA cache was not prepared for this temperature grid");
  }
  const Document& doc = corpus.docs[d];
  std::vector<double> out(temps.size(), 0.0);
  if (doc.empty()) return out;
  const double ell = lda_expected_loglik(doc, local, cache.elog_beta);
  const double n_tokens = static_cast<double>(doc.num_tokens());
  const Eigen::VectorXd elog_theta = dirichlet_expected_log(local.gamma);
  std::vector<double> terms(static_cast<std::size_t>(elog_theta.size()));
  for (std::size_t m = 0; m < temps.size(); ++m) {
    const double s = 1.0 / temps[m];
    for (Eigen::Index k = 0; k < elog_theta.size(); ++k) {
      terms[static_cast<std::size_t>(k)] =
          s * elog_theta[k] + cache.log_topic_mass(k, static_cast<Eigen::Index>(m));
    }
    out[m] = s * ell - n_tokens * log_sum_exp(terms);
  }
  return out;
}

double LdaModel::local_terms(const Corpus& corpus, std::size_t d, const LdaLocal& local) const {
  const Document& doc = corpus.docs[d];
  const double k_count = static_cast<double>(config_.topics);
  const double alpha = config_.alpha;
  const Eigen::VectorXd elog_theta = dirichlet_expected_log(local.gamma);

  const double log_prior = std::lgamma(k_count * alpha) - k_count * std::lgamma(alpha) +
                           (alpha - 1.0) * elog_theta.sum();
  double log_q = std::lgamma(local.gamma.sum()) + ((local.gamma.array() - 1.0) * elog_theta.array()).sum();
  for (Eigen::Index k = 0; k < local.gamma.size(); ++k) log_q -= std::lgamma(local.gamma[k]);

  double phi_entropy = 0.0;
  for (std::size_t j = 0; j < doc.words.size(); ++j) {
    double h = 0.0;
    for (Eigen::Index k = 0; k < local.phi.rows(); ++k) {
      h -= xlogx(local.phi(k, static_cast<Eigen::Index>(j)));
    }
    phi_entropy += doc.counts[j] * h;
  }
  return log_prior - log_q + phi_entropy;
}

double LdaModel::global_terms(const Cache& cache) const {
  const double v_count = static_cast<double>(config_.vocab);
  const double eta = config_.eta;
  const double log_norm_prior = std::lgamma(v_count * eta) - v_count * std::lgamma(eta);
  double total = 0.0;
  for (Eigen::Index k = 0; k < cache.lambda.rows(); ++k) {
    const auto lam = cache.lambda.row(k);
    const auto elog = cache.elog_beta.row(k);
    double lg = 0.0;
    for (Eigen::Index v = 0; v < lam.size(); ++v) lg += std::lgamma(lam[v]);
    const double log_p = log_norm_prior + (eta - 1.0) * elog.sum();
    const double log_q = std::lgamma(lam.sum()) - lg + ((lam.array() - 1.0) * elog.array()).sum();
    total += log_p - log_q;
  }
  return total;
}

void LdaModel::accumulate_suff_stats(const Corpus& corpus, std::size_t d, const LdaLocal& local,
                                     const Cache&, double weight, Eigen::VectorXd& acc) const {
  const Document& doc = corpus.docs[d];
  const Eigen::Index k_count = static_cast<Eigen::Index>(config_.topics);
  for (std::size_t j = 0; j < doc.words.size(); ++j) {
    acc.segment(static_cast<Eigen::Index>(doc.words[j]) * k_count, k_count) +=
        (weight * doc.counts[j]) * local.phi.col(static_cast<Eigen::Index>(j));
  }
}

Eigen::VectorXd LdaModel::global_step(const Corpus& corpus, std::span<const std::size_t> batch,
                                      std::span<const LdaLocal> locals,
                                      std::span<const double> weights, double rho, double scale,
                                      const Eigen::VectorXd& lambda) const {
  return conjugate_global_step(*this, corpus, batch, locals, weights, rho, scale, lambda);
}

PartitionMeta LdaModel::partition_meta(const Corpus& corpus) const {
  return lda_partition_meta(config_.priors(), corpus.mean_words_per_doc(), corpus.num_docs());
}

namespace {

Document sample_document(std::mt19937_64& rng, const std::vector<std::vector<double>>& cdf,
                         double mean_length, double alpha) {
  const auto k_count = static_cast<Eigen::Index>(cdf.size());
  std::poisson_distribution<int> length_dist(mean_length);
  const int length = std::max(1, length_dist(rng));
  const Eigen::VectorXd theta = sample_dirichlet(rng, Eigen::VectorXd::Constant(k_count, alpha));
  std::discrete_distribution<int> topic_dist(theta.data(), theta.data() + k_count);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::vector<std::pair<std::uint32_t, std::uint32_t>> pairs;
  pairs.reserve(static_cast<std::size_t>(length));
  for (int n = 0; n < length; ++n) {
    const auto& row = cdf[static_cast<std::size_t>(topic_dist(rng))];
    const double u = unif(rng) * row.back();
    const auto it = std::upper_bound(row.begin(), row.end() - 1, u);
    pairs.emplace_back(static_cast<std::uint32_t>(it - row.begin()), 1u);
  }
  return Document::from_pairs(std::move(pairs));
}

}  // namespace

Corpus generate_documents(const Eigen::MatrixXd& topics, std::size_t docs, double mean_doc_length,
                          double alpha, std::uint64_t seed) {
  if (topics.rows() < 1 || topics.cols() < 1) throw ArgumentError("generate_documents: empty topics");
  if (!(mean_doc_length > 0.0) || !(alpha > 0.0)) {
    throw ArgumentError("generate_documents: need positive mean length and alpha");
  }
  std::vector<std::vector<double>> cdf(static_cast<std::size_t>(topics.rows()));
  for (Eigen::Index k = 0; k < topics.rows(); ++k) {
    auto& row = cdf[static_cast<std::size_t>(k)];
    row.resize(static_cast<std::size_t>(topics.cols()));
    double acc = 0.0;
    for (Eigen::Index v = 0; v < topics.cols(); ++v) row[static_cast<std::size_t>(v)] = acc += topics(k, v);
  }
  Corpus corpus;
  corpus.vocab_size = static_cast<std::size_t>(topics.cols());
  corpus.docs.reserve(docs);
  for (std::size_t d = 0; d < docs; ++d) {
    std::mt19937_64 rng(substream_seed(seed, d));
    corpus.docs.push_back(sample_document(rng, cdf, mean_doc_length, alpha));
  }
  return corpus;
}

SyntheticCorpus generate_corpus(const SyntheticCorpusSpec& spec, std::uint64_t seed) {
  if (spec.topics < 1 || spec.vocab < 1 || !(spec.eta > 0.0)) {
    throw ArgumentError("generate_corpus: need K, V >= 1 and eta > 0");
  }
  SyntheticCorpus out;
  const auto k_count = static_cast<Eigen::Index>(spec.topics);
  const auto v_count = static_cast<Eigen::Index>(spec.vocab);
  out.topics.resize(k_count, v_count);
  std::mt19937_64 rng(substream_seed(seed, ~std::uint64_t{0}));
  const Eigen::VectorXd conc = Eigen::VectorXd::Constant(v_count, spec.eta);
  for (Eigen::Index k = 0; k < k_count; ++k) {
    out.topics.row(k) = sample_dirichlet(rng, conc).transpose();
  }
  out.corpus = generate_documents(out.topics, spec.docs, spec.mean_doc_length, spec.alpha, seed);
  return out;
}

}  // namespace tempervi::lda

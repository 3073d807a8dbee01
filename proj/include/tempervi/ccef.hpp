#pragma once

// Conditionally conjugate exponential-family models: the contract the
// optimizer and the objective functions are written against.

#include <cmath>
#include <concepts>
#include <cstddef>
#include <random>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "tempervi/errors.hpp"
#include "tempervi/numeric.hpp"
#include "tempervi/parallel.hpp"
#include "tempervi/partition.hpp"
#include "tempervi/tempering.hpp"

namespace tempervi {

/// Fixed-point controls for coupled local updates.
struct LocalSolverOptions {
  double tolerance = 1e-6;  // relative change
  int max_iterations = 100;
};

/// Natural parameters of q(beta) plus the iteration that produced them.
struct GlobalState {
  Eigen::VectorXd lambda;
  std::size_t iteration = 0;
};

/// A model M exposes
///   - prior_natural(): alpha, the prior natural parameter (length dim_global)
///   - prepare(lambda): a cache of expectations under q(beta | lambda)
///   - local_step: the tempered coordinate update of one datum's locals
///   - expected_log_lik: E_q[log p(x_i, z_i | beta)]
///   - log_base_measure: the part of log p(x_i, z_i | beta) that tempering
///     leaves untouched (a constant normalizer such as a Gaussian's)
///   - temperature_statistic: the per-datum term multiplying 1/T in the
///     global temperature update, paired with the model's partition function
///   - expected_tempered_log_lik: E_q[log p(x_i, z_i | beta / T_m)] per T_m
///   - local_terms: E_q[log p(untempered local priors)] - E_q[log q(z_i)]
///   - global_terms: E_q[log p(beta)] - E_q[log q(beta)]
///   - accumulate_suff_stats: acc += weight * E_q[t(x_i, z_i)]
///   - global_step: lambda_hat from weighted statistics, blended with rho
template <class M>
concept ConjugateModel = requires(const M& model, const typename M::Dataset& data, std::size_t i,
                                  const typename M::Local& local, typename M::Cache& mutable_cache,
                                  const typename M::Cache& cache, const Eigen::VectorXd& lambda,
                                  Eigen::VectorXd& acc, double inv_t, std::span<const double> temps,
                                  std::span<const std::size_t> batch,
                                  std::span<const typename M::Local> locals,
                                  std::span<const double> weights, double rho, double scale,
                                  std::mt19937_64& rng) {
  { model.num_data(data) } -> std::convertible_to<std::size_t>;
  { model.dim_global() } -> std::convertible_to<std::size_t>;
  { model.prior_natural() } -> std::convertible_to<Eigen::VectorXd>;
  { model.in_domain(lambda) } -> std::same_as<bool>;
  { model.initial_lambda(data, rng) } -> std::same_as<Eigen::VectorXd>;
  { model.prepare(lambda) } -> std::same_as<typename M::Cache>;
  model.prepare_local_tempering(mutable_cache, temps);
  { model.local_step(data, i, cache, inv_t, &local) } -> std::same_as<typename M::Local>;
  { local.converged } -> std::convertible_to<bool>;
  { model.expected_log_lik(data, i, local, cache) } -> std::convertible_to<double>;
  { model.log_base_measure(data, i) } -> std::convertible_to<double>;
  { model.temperature_statistic(data, i, local, cache) } -> std::convertible_to<double>;
  { model.expected_tempered_log_lik(data, i, local, cache, temps) } -> std::same_as<std::vector<double>>;
  { model.local_terms(data, i, local) } -> std::convertible_to<double>;
  { model.global_terms(cache) } -> std::convertible_to<double>;
  model.accumulate_suff_stats(data, i, local, cache, inv_t, acc);
  { model.global_step(data, batch, locals, weights, rho, scale, lambda) } -> std::same_as<Eigen::VectorXd>;
};

/// Two-step natural-gradient update shared by conjugate models:
///   lambda_hat = alpha + scale * sum_b weights[b] * E[t(x_b, z_b)]
///   lambda'    = (1 - rho) lambda + rho lambda_hat
template <class M>
Eigen::VectorXd conjugate_global_step(const M& model, const typename M::Dataset& data,
                                      std::span<const std::size_t> batch,
                                      std::span<const typename M::Local> locals,
                                      std::span<const double> weights, double rho, double scale,
                                      const Eigen::VectorXd& lambda) {
  if (batch.empty()) {
    throw ArgumentError("global step needs a non-empty batch");
  }
  if (locals.size() != batch.size() || weights.size() != batch.size()) {
    throw ArgumentError("global step: batch, locals and weights differ in length");
  }
  const auto cache = model.prepare(lambda);
  Eigen::VectorXd stats = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(model.dim_global()));
  for (std::size_t b = 0; b < batch.size(); ++b) {
    model.accumulate_suff_stats(data, batch[b], locals[b], cache, weights[b], stats);
  }
  const Eigen::VectorXd lambda_hat = model.prior_natural() + scale * stats;
  Eigen::VectorXd next = (1.0 - rho) * lambda + rho * lambda_hat;
  if (!model.in_domain(next)) {
    throw InvalidStateError("global step left the valid natural-parameter domain");
  }
  return next;
}

namespace detail {

template <ConjugateModel M>
void check_objective_inputs(const M& model, const typename M::Dataset& data,
                            const Eigen::VectorXd& lambda,
                            std::span<const typename M::Local> locals) {
  if (!model.in_domain(lambda)) {
    throw InvalidStateError("objective: lambda outside the model domain");
  }
  if (locals.size() != model.num_data(data)) {
    throw InvalidStateError("objective: need fitted locals for every datum");
  }
}

struct ObjectiveSums {
  double global = 0.0;
  double loglik = 0.0;  // excludes the untempered base measure
  double base = 0.0;
  double local = 0.0;
};

template <ConjugateModel M>
ObjectiveSums objective_sums(const M& model, const typename M::Dataset& data,
                             const Eigen::VectorXd& lambda,
                             std::span<const typename M::Local> locals, std::size_t threads) {
  check_objective_inputs(model, data, lambda, locals);
  const auto cache = model.prepare(lambda);
  const std::size_t n = locals.size();
  std::vector<double> loglik(n), base(n), local(n);
  parallel_for(n, threads, [&](std::size_t i) {
    base[i] = model.log_base_measure(data, i);
    loglik[i] = model.expected_log_lik(data, i, locals[i], cache) - base[i];
    local[i] = model.local_terms(data, i, locals[i]);
  });
  ObjectiveSums sums;
  sums.global = model.global_terms(cache);
  for (std::size_t i = 0; i < n; ++i) {
    sums.loglik += loglik[i];
    sums.base += base[i];
    sums.local += local[i];
  }
  if (!std::isfinite(sums.global) || !std::isfinite(sums.loglik) || !std::isfinite(sums.local) ||
      !std::isfinite(sums.base)) {
    throw InvalidStateError("objective: non-finite terms (locals outside their domain?)");
  }
  return sums;
}

}  // namespace detail

/// Annealed ELBO: prior, entropy and base-measure terms untempered, the rest
/// of the expected log-likelihood divided by T. No partition-function term.
/// T may be +inf.
template <ConjugateModel M>
double annealed_elbo(const M& model, const typename M::Dataset& data,
                     const Eigen::VectorXd& lambda, std::span<const typename M::Local> locals,
                     double temperature, std::size_t threads = 1) {
  if (!(temperature >= 1.0)) {
    throw ArgumentError("annealed_elbo: temperature must be >= 1");
  }
  const auto sums = detail::objective_sums(model, data, lambda, locals, threads);
  const double inv_t = 1.0 / temperature;
  return sums.global + sums.base + inv_t * sums.loglik + sums.local;
}

/// E_q[log p(beta, z, x)] - E_q[log q(beta, z)], in nats.
template <ConjugateModel M>
double elbo(const M& model, const typename M::Dataset& data, const Eigen::VectorXd& lambda,
            std::span<const typename M::Local> locals, std::size_t threads = 1) {
  return annealed_elbo(model, data, lambda, locals, 1.0, threads);
}

/// Tempered ELBO with a multinomial temperature posterior r and fixed prior
/// weights pi; includes -sum_m r_m log C(T_m) and the entropy of q(y).
template <ConjugateModel M>
double tempered_elbo(const M& model, const typename M::Dataset& data,
                     const Eigen::VectorXd& lambda, std::span<const typename M::Local> locals,
                     const TemperaturePosterior& posterior, const PartitionTable& table,
                     std::span<const double> prior, std::size_t threads = 1) {
  if (!(posterior.grid() == table.grid)) {
    throw ConfigError("tempered_elbo: temperature posterior and partition table use different grids");
  }
  const std::size_t m_count = posterior.grid().size();
  if (prior.size() != m_count) {
    throw ConfigError("tempered_elbo: prior length differs from grid");
  }
  const auto sums = detail::objective_sums(model, data, lambda, locals, threads);
  double value = sums.global + sums.base + expected_inverse_temperature(posterior) * sums.loglik + sums.local;
  double y_terms = 0.0;
  for (std::size_t m = 0; m < m_count; ++m) {
    const double r = posterior[m];
    if (r == 0.0) continue;
    y_terms += r * std::log(prior[m]) - r * std::log(r) - r * table.log_c[m];
  }
  return value + y_terms;
}

}  // namespace tempervi

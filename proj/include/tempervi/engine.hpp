#pragma once

#include <chrono>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "tempervi/ccef.hpp"
#include "tempervi/checkpoint.hpp"
#include "tempervi/errors.hpp"
#include "tempervi/metrics.hpp"
#include "tempervi/parallel.hpp"
#include "tempervi/partition.hpp"
#include "tempervi/tempering.hpp"

namespace tempervi {

enum class Mode { svi, avi, vt, lvt };

std::string to_string(Mode mode);
Mode mode_from_string(const std::string& name);

/// rho_t = (tau + t)^(-kappa)
double robbins_monro_rate(double tau, double kappa, double t);

struct GridConfig {
  GridSpacing spacing = GridSpacing::exponential;
  std::size_t size = 100;
  double t_max = 10.0;  // ignored for inverse_linear

  TemperatureGrid build() const;
};

struct TrainConfig {
  Mode mode = Mode::svi;
  std::size_t batch_size = 100;
  bool batch_mode = false;  // whole dataset per iteration with rho = 1
  double tau = 1024.0;
  double kappa = 0.7;
  GridConfig grid;  // vt: tempered ladder; lvt: per-datum ladder
  std::optional<AnnealSchedule> schedule;
  std::size_t temp_update_every = 1000;
  double vt_ema = 0.0;  // weight of the newest statistic; 0 disables smoothing
  // Evaluate the vt statistic with locals refitted at T = 1 instead of the
  // locals of the current iteration.
  bool vt_untempered_statistic = false;
  LocalTemperatureWeighting lvt_weighting = LocalTemperatureWeighting::unscaled;
  int lvt_rounds = 2;
  double max_passes = 1.0;
  std::size_t max_iterations = 0;  // overrides max_passes when non-zero
  std::uint64_t seed = 0;
  std::size_t eval_every = 0;  // 0 disables metrics rows
  bool track_elbo = false;     // batch mode only
  std::size_t threads = 1;
  bool wallclock = false;

  /// Throws ConfigError describing the first violated requirement.
  void validate() const;
  /// Iterations per pass over the data for a dataset of `n` items.
  double iters_per_pass(std::size_t n) const;
  std::size_t total_iterations(std::size_t n) const;
  /// Canonical `key=value` lines of everything that affects the trajectory.
  std::string canonical() const;
  std::uint64_t hash() const;
};

/// Grid used by a run: the tempered ladder for vt, the inverse-temperature
/// ladder for lvt.
TemperatureGrid run_grid(const TrainConfig& config);

template <class M>
struct TrainResult {
  GlobalState global;
  double temperature = 1.0;
  std::optional<TemperaturePosterior> posterior;
  std::vector<MetricsRow> metrics;
  std::vector<typename M::Local> locals;  // batch mode: final persistent locals
  std::size_t nonconverged_locals = 0;
};

struct TrainHooks {
  /// Held-out score for the current global parameters.
  std::function<double(const Eigen::VectorXd&)> heldout;
  std::function<void(const MetricsRow&)> on_row;
  /// Invoked with the last consistent state before an error propagates.
  std::function<void(const Checkpoint&)> on_abort;
  /// Invoked every `checkpoint_every` completed iterations (0 disables).
  /// Batch-mode locals are not stored; a resumed batch run refits them cold.
  std::function<void(const Checkpoint&)> on_checkpoint;
  std::size_t checkpoint_every = 0;
  const Checkpoint* resume = nullptr;
};

/// Single-temperature two-step update.
template <ConjugateModel M>
Eigen::VectorXd global_step(const M& model, const typename M::Dataset& data,
                            std::span<const std::size_t> batch,
                            std::span<const typename M::Local> locals, const Eigen::VectorXd& lambda,
                            double inv_t, double rho) {
  if (!(inv_t > 0.0) || inv_t > 1.0) throw ArgumentError("global_step: inv_T must lie in (0, 1]");
  const std::vector<double> weights(batch.size(), inv_t);
  const double scale = static_cast<double>(model.num_data(data)) / static_cast<double>(batch.size());
  return model.global_step(data, batch, locals, weights, rho, scale, lambda);
}

/// Two-step update with one expected inverse temperature per batch datum.
template <ConjugateModel M>
Eigen::VectorXd lvt_global_step(const M& model, const typename M::Dataset& data,
                                std::span<const std::size_t> batch,
                                std::span<const typename M::Local> locals,
                                const Eigen::VectorXd& lambda, std::span<const double> inv_temps,
                                double rho) {
  if (inv_temps.size() != batch.size()) {
    throw ArgumentError("lvt_global_step: need one inverse temperature per batch datum");
  }
  for (double s : inv_temps) {
    if (!(s > 0.0) || s > 1.0) throw ArgumentError("lvt_global_step: inv_T must lie in (0, 1]");
  }
  const double scale = static_cast<double>(model.num_data(data)) / static_cast<double>(batch.size());
  return model.global_step(data, batch, locals, inv_temps, rho, scale, lambda);
}

/// B distinct indices drawn uniformly from [0, n) (Floyd's algorithm).
std::vector<std::size_t> sample_minibatch(std::mt19937_64& rng, std::size_t n, std::size_t b);

std::string rng_state(const std::mt19937_64& rng);
void restore_rng(std::mt19937_64& rng, const std::string& state);

namespace detail {

template <ConjugateModel M>
struct LocalFit {
  typename M::Local local;
  double inv_t = 1.0;
  double expected_t = 1.0;
  double loglik = 0.0;
};

// Alternates the local fit with q(y_i) for one datum, starting from uniform.
template <ConjugateModel M>
LocalFit<M> fit_lvt_local(const M& model, const typename M::Dataset& data, std::size_t i,
                          const typename M::Cache& cache, const TemperatureGrid& grid,
                          std::span<const double> prior, const TrainConfig& config) {
  LocalFit<M> fit;
  TemperaturePosterior r = TemperaturePosterior::uniform(grid);
  fit.inv_t = expected_inverse_temperature(r);
  const typename M::Local* warm = nullptr;
  for (int round = 0; round < config.lvt_rounds; ++round) {
    fit.local = model.local_step(data, i, cache, fit.inv_t, warm);
    warm = &fit.local;
    const auto tempered = model.expected_tempered_log_lik(data, i, fit.local, cache, grid.temps());
    r = update_local_temperature(tempered, grid, prior, config.lvt_weighting);
    fit.inv_t = expected_inverse_temperature(r);
  }
  fit.expected_t = r.expected_temperature();
  return fit;
}

}  // namespace detail

/// Annealed or tempered stochastic variational inference. `table` must be
/// given in vt mode and must match the run grid.
template <ConjugateModel M>
TrainResult<M> train(const M& model, const typename M::Dataset& data, const TrainConfig& config,
                     const PartitionTable* table = nullptr, const TrainHooks& hooks = {}) {
  using Local = typename M::Local;
  config.validate();
  const std::size_t n = model.num_data(data);
  if (n == 0) throw ArgumentError("train: empty dataset");
  if (config.mode == Mode::vt) {
    if (table == nullptr) throw ConfigError("vt mode needs a partition table");
    if (!(table->grid == run_grid(config))) {
      throw ConfigError("partition table grid differs from the configured temperature grid");
    }
  }
  const std::size_t b_count = config.batch_mode ? n : std::min(config.batch_size, n);
  const double per_pass = config.batch_mode ? 1.0 : config.iters_per_pass(n);
  const std::size_t total = config.batch_mode
                                ? (config.max_iterations ? config.max_iterations
                                                         : static_cast<std::size_t>(std::ceil(config.max_passes)))
                                : config.total_iterations(n);
  const double scale = static_cast<double>(n) / static_cast<double>(b_count);

  std::optional<TemperatureGrid> grid;
  std::vector<double> prior;
  if (config.mode == Mode::vt || config.mode == Mode::lvt) {
    grid = run_grid(config);
    prior = uniform_prior(grid->size());
  }

  TrainResult<M> result;
  std::mt19937_64 rng(config.seed);
  double temperature = 1.0;
  std::optional<TemperaturePosterior> posterior;
  if (config.mode == Mode::vt) posterior = TemperaturePosterior::uniform(*grid);
  if (config.mode == Mode::avi) temperature = config.schedule->initial_temperature;
  double ema = 0.0;
  bool ema_ready = false;
  std::size_t start = 0;

  result.global.lambda = model.initial_lambda(data, rng);
  if (hooks.resume != nullptr) {
    const Checkpoint& c = *hooks.resume;
    if (c.config_hash != config.hash()) throw ConfigError("checkpoint was written by a different configuration");
    if (c.lambda.size() != result.global.lambda.size()) throw ConfigError("checkpoint lambda has the wrong size");
    result.global.lambda = c.lambda;
    start = c.iteration;
    temperature = c.temperature;
    if (posterior) posterior.emplace(*grid, c.posterior);
    ema = c.statistic_ema;
    ema_ready = c.statistic_ema_ready;
    restore_rng(rng, c.rng_state);
  }
  result.global.iteration = start;

  std::vector<Local> persistent;
  std::vector<std::size_t> all;
  if (config.batch_mode) {
    persistent.resize(n);
    all.resize(n);
    for (std::size_t i = 0; i < n; ++i) all[i] = i;
  }
  const auto t0 = std::chrono::steady_clock::now();

  // State after the last completed iteration; `rng` itself may run ahead.
  std::mt19937_64 rng_committed = rng;
  std::size_t committed = start;
  auto snapshot = [&] {
    Checkpoint c;
    c.mode = to_string(config.mode);
    c.iteration = committed;
    c.lambda = result.global.lambda;
    c.temperature = temperature;
    if (posterior) c.posterior.assign(posterior->weights().begin(), posterior->weights().end());
    c.statistic_ema = ema;
    c.statistic_ema_ready = ema_ready;
    c.rng_state = rng_state(rng_committed);
    c.config_hash = config.hash();
    return c;
  };

  std::vector<Local> locals(b_count);
  std::vector<double> weights(b_count, 1.0);
  std::vector<double> logliks(b_count, 0.0);
  std::vector<double> lvt_expected_t(b_count, 1.0);
  std::vector<unsigned char> converged(b_count, 1);
  std::size_t t = start;
  try {
    for (; t < total; ++t) {
      const std::vector<std::size_t> batch =
          config.batch_mode ? all : sample_minibatch(rng, n, b_count);
      auto cache = model.prepare(result.global.lambda);

      double inv_t = 1.0;
      switch (config.mode) {
        case Mode::svi:
          break;
        case Mode::avi:
          temperature = schedule_temperature(*config.schedule, t, per_pass);
          inv_t = 1.0 / temperature;
          break;
        case Mode::vt:
          inv_t = expected_inverse_temperature(*posterior);
          break;
        case Mode::lvt:
          model.prepare_local_tempering(cache, grid->temps());
          break;
      }

      parallel_for(b_count, config.threads, [&](std::size_t b) {
        const std::size_t i = batch[b];
        if (config.mode == Mode::lvt) {
          auto fit = detail::fit_lvt_local(model, data, i, cache, *grid, prior, config);
          locals[b] = std::move(fit.local);
          weights[b] = fit.inv_t;
          lvt_expected_t[b] = fit.expected_t;
        } else {
          const Local* warm = config.batch_mode && t > start ? &persistent[i] : nullptr;
          locals[b] = model.local_step(data, i, cache, inv_t, warm);
          weights[b] = inv_t;
          if (config.mode == Mode::vt) {
            if (config.vt_untempered_statistic && inv_t != 1.0) {
              const Local at_one = model.local_step(data, i, cache, 1.0, &locals[b]);
              logliks[b] = model.temperature_statistic(data, i, at_one, cache);
            } else {
              logliks[b] = model.temperature_statistic(data, i, locals[b], cache);
            }
          }
        }
        converged[b] = locals[b].converged ? 1 : 0;
      });
      for (std::size_t b = 0; b < b_count; ++b) result.nonconverged_locals += converged[b] ? 0 : 1;

      const double rho = config.batch_mode ? 1.0 : robbins_monro_rate(config.tau, config.kappa, static_cast<double>(t));
      Eigen::VectorXd next =
          model.global_step(data, batch, std::span<const Local>(locals), weights, rho, scale,
                            result.global.lambda);

      if (config.mode == Mode::vt) {
        double s = 0.0;
        for (double l : logliks) s += l;
        s *= scale;
        double next_ema = ema;
        if (config.vt_ema > 0.0) {
          next_ema = ema_ready ? (1.0 - config.vt_ema) * ema + config.vt_ema * s : s;
          s = next_ema;
        }
        if ((t + 1) % config.temp_update_every == 0) {
          posterior = update_global_temperature(s, *grid, prior, *table);
        }
        if (config.vt_ema > 0.0) {
          ema = next_ema;
          ema_ready = true;
        }
      }

      result.global.lambda = std::move(next);
      result.global.iteration = t + 1;
      if (config.batch_mode) {
        for (std::size_t b = 0; b < b_count; ++b) persistent[b] = locals[b];
      }
      committed = t + 1;
      rng_committed = rng;

      if (config.eval_every > 0 && ((t + 1) % config.eval_every == 0 || t + 1 == total)) {
        MetricsRow row;
        row.iteration = t + 1;
        row.effective_passes = static_cast<double>(t + 1) * static_cast<double>(b_count) / static_cast<double>(n);
        row.rate = rho;
        switch (config.mode) {
          case Mode::svi:
            row.expected_t = 1.0;
            break;
          case Mode::avi:
            row.expected_t = temperature;
            break;
          case Mode::vt:
            row.expected_t = posterior->expected_temperature();
            break;
          case Mode::lvt: {
            double sum = 0.0;
            for (double e : lvt_expected_t) sum += e;
            row.expected_t = sum / static_cast<double>(b_count);
            break;
          }
        }
        if (config.batch_mode && config.track_elbo) {
          const auto fresh = model.prepare(result.global.lambda);
          std::vector<Local> at_one(n);
          parallel_for(n, config.threads, [&](std::size_t i) {
            at_one[i] = model.local_step(data, i, fresh, 1.0, &persistent[i]);
          });
          row.elbo_t1 = elbo(model, data, result.global.lambda, std::span<const Local>(at_one), config.threads);
        }
        if (hooks.heldout) row.heldout = hooks.heldout(result.global.lambda);
        if (config.wallclock) {
          row.wallclock_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        }
        if (hooks.on_row) hooks.on_row(row);
        result.metrics.push_back(row);
      }
      if (hooks.on_checkpoint && hooks.checkpoint_every > 0 && (t + 1) % hooks.checkpoint_every == 0) {
        hooks.on_checkpoint(snapshot());
      }
    }
  } catch (...) {
    if (hooks.on_abort) hooks.on_abort(snapshot());
    throw;
  }

  result.temperature = temperature;
  result.posterior = posterior;
  if (config.batch_mode) result.locals = std::move(persistent);
  return result;
}

}  // namespace tempervi

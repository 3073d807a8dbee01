#include "tempervi/tempering.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "tempervi/errors.hpp"
#include "tempervi/numeric.hpp"
#include "tempervi/partition.hpp"

namespace tempervi {

std::string_view to_string(GridSpacing spacing) {
  switch (spacing) {
    case GridSpacing::exponential:
      return "exponential";
    case GridSpacing::linear:
      return "linear";
    case GridSpacing::inverse_linear:
      return "inverse-linear";
  }
  return "unknown";
}

GridSpacing grid_spacing_from_string(std::string_view name) {
  if (name == "exponential") return GridSpacing::exponential;
  if (name == "linear") return GridSpacing::linear;
  if (name == "inverse-linear") return GridSpacing::inverse_linear;
  throw ConfigError("unknown grid spacing '" + std::string(name) + "'");
}

TemperatureGrid::TemperatureGrid(std::vector<double> temps, GridSpacing spacing)
    : temps_(std::move(temps)), spacing_(spacing) {
  if (temps_.empty()) {
    throw ArgumentError("temperature grid must not be empty");
  }
  if (temps_.front() != 1.0) {
    throw ArgumentError("temperature grid must start at exactly T = 1");
  }
  for (std::size_t m = 0; m < temps_.size(); ++m) {
    if (!std::isfinite(temps_[m])) {
      throw ArgumentError("temperature grid entries must be finite");
    }
    if (m > 0 && !(temps_[m] > temps_[m - 1])) {
      throw ArgumentError("temperature grid must be strictly increasing");
    }
  }
}

std::vector<double> TemperatureGrid::inverse_temps() const {
  std::vector<double> inv(temps_.size());
  std::transform(temps_.begin(), temps_.end(), inv.begin(), [](double t) { return 1.0 / t; });
  return inv;
}

TemperatureGrid make_exponential_grid(std::size_t count, double t_min, double t_max) {
  if (count < 1) {
    throw ArgumentError("grid needs at least one temperature");
  }
  if (t_min != 1.0) {
    throw ArgumentError("t_min must be 1 so that T_1 recovers the original model");
  }
  if (!(t_max >= t_min) || !std::isfinite(t_max)) {
    throw ArgumentError("t_max must be finite and >= t_min");
  }
  if (count == 1) {
    return TemperatureGrid({1.0}, GridSpacing::exponential);
  }
  std::vector<double> temps(count);
  const double log_span = std::log(t_max);
  const double steps = static_cast<double>(count - 1);
  temps.front() = 1.0;
  for (std::size_t m = 1; m + 1 < count; ++m) {
    temps[m] = std::exp(log_span * static_cast<double>(m) / steps);
  }
  temps.back() = t_max;
  return TemperatureGrid(std::move(temps), GridSpacing::exponential);
}

TemperatureGrid make_linear_grid(std::size_t count, double t_max) {
  if (count < 1) {
    throw ArgumentError("grid needs at least one temperature");
  }
  if (!(t_max >= 1.0) || !std::isfinite(t_max)) {
    throw ArgumentError("t_max must be finite and >= 1");
  }
  if (count == 1) {
    return TemperatureGrid({1.0}, GridSpacing::linear);
  }
  std::vector<double> temps(count);
  const double steps = static_cast<double>(count - 1);
  for (std::size_t m = 0; m < count; ++m) {
    temps[m] = 1.0 + (t_max - 1.0) * static_cast<double>(m) / steps;
  }
  temps.back() = t_max;
  return TemperatureGrid(std::move(temps), GridSpacing::linear);
}

TemperatureGrid make_inverse_temp_grid(std::size_t count) {
  if (count < 1) {
    throw ArgumentError("grid needs at least one temperature");
  }
  std::vector<double> temps(count);
  const double total = static_cast<double>(count);
  // m-th entry (increasing T) has inverse temperature (M - m) / M.
  for (std::size_t m = 0; m < count; ++m) {
    temps[m] = total / static_cast<double>(count - m);
  }
  return TemperatureGrid(std::move(temps), GridSpacing::inverse_linear);
}

std::vector<double> uniform_prior(std::size_t count) {
  return std::vector<double>(count, 1.0 / static_cast<double>(count));
}

TemperaturePosterior::TemperaturePosterior(TemperatureGrid grid, std::vector<double> weights)
    : grid_(std::move(grid)), weights_(std::move(weights)) {
  if (weights_.size() != grid_.size()) {
    throw ArgumentError("temperature posterior length differs from grid");
  }
  double total = 0.0;
  for (double w : weights_) {
    if (!(w >= 0.0) || !std::isfinite(w)) {
      throw ArgumentError("temperature posterior weights must be finite and nonnegative");
    }
    total += w;
  }
  if (std::abs(total - 1.0) > 1e-12) {
    throw ArgumentError("temperature posterior weights must sum to 1");
  }
}

TemperaturePosterior TemperaturePosterior::uniform(TemperatureGrid grid) {
  const std::size_t m = grid.size();
  return TemperaturePosterior(std::move(grid), uniform_prior(m));
}

double TemperaturePosterior::expected_temperature() const {
  double acc = 0.0;
  for (std::size_t m = 0; m < weights_.size(); ++m) {
    acc += weights_[m] * grid_[m];
  }
  return acc;
}

double expected_inverse_temperature(const TemperaturePosterior& posterior) {
  double acc = 0.0;
  for (std::size_t m = 0; m < posterior.weights().size(); ++m) {
    acc += posterior[m] / posterior.grid()[m];
  }
  return acc;
}

void AnnealSchedule::validate() const {
  if (!(initial_temperature >= 1.0) || !std::isfinite(initial_temperature)) {
    throw ConfigError("anneal schedule: initial temperature must be >= 1");
  }
  if (!(passes > 0.0)) {
    throw ConfigError("anneal schedule: length must be positive");
  }
  if (update_every < 1) {
    throw ConfigError("anneal schedule: update_every must be >= 1");
  }
}

double schedule_temperature(const AnnealSchedule& schedule, std::size_t iteration,
                            double iters_per_pass) {
  const std::size_t every = std::max<std::size_t>(schedule.update_every, 1);
  const auto refreshed = static_cast<double>((iteration / every) * every);
  const double end = schedule.passes * iters_per_pass;
  if (refreshed >= end) {
    return 1.0;
  }
  const double t = schedule.initial_temperature +
                   (1.0 - schedule.initial_temperature) * (refreshed / end);
  return std::max(t, 1.0);
}

double mean_temperature(const TemperatureGrid& grid) {
  const auto temps = grid.temps();
  return std::accumulate(temps.begin(), temps.end(), 0.0) / static_cast<double>(temps.size());
}

namespace {

void check_prior(std::span<const double> prior, std::size_t m) {
  if (prior.size() != m) {
    throw ArgumentError("temperature prior length differs from grid");
  }
  for (double p : prior) {
    if (!(p >= 0.0) || !std::isfinite(p)) {
      throw ArgumentError("temperature prior weights must be finite and nonnegative");
    }
  }
}

double log_or_neg_inf(double p) {
  return p > 0.0 ? std::log(p) : -std::numeric_limits<double>::infinity();
}

}  // namespace

TemperaturePosterior update_global_temperature(double sum_expected_loglik,
                                               const TemperatureGrid& grid,
                                               std::span<const double> prior,
                                               std::span<const double> log_partition) {
  const std::size_t m_count = grid.size();
  check_prior(prior, m_count);
  if (log_partition.size() != m_count) {
    throw ConfigError("partition values do not cover the temperature grid");
  }
  if (!std::isfinite(sum_expected_loglik)) {
    throw NumericError("global temperature update: non-finite log-likelihood statistic");
  }
  std::vector<double> logits(m_count);
  for (std::size_t m = 0; m < m_count; ++m) {
    if (!std::isfinite(log_partition[m])) {
      throw NumericError("global temperature update: non-finite log C(T)");
    }
    logits[m] = sum_expected_loglik / grid[m] + log_or_neg_inf(prior[m]) - log_partition[m];
  }
  softmax_in_place(logits);
  return TemperaturePosterior(grid, std::move(logits));
}

TemperaturePosterior update_global_temperature(double sum_expected_loglik,
                                               const TemperatureGrid& grid,
                                               std::span<const double> prior,
                                               const PartitionTable& table) {
  if (!(table.grid == grid)) {
    throw ConfigError("partition table grid does not match the temperature grid");
  }
  return update_global_temperature(sum_expected_loglik, grid, prior, table.log_c);
}

std::string_view to_string(LocalTemperatureWeighting weighting) {
  switch (weighting) {
    case LocalTemperatureWeighting::scaled:
      return "scaled";
    case LocalTemperatureWeighting::prior_outside:
      return "prior-outside";
    case LocalTemperatureWeighting::unscaled:
      return "unscaled";
  }
  return "unknown";
}

LocalTemperatureWeighting local_weighting_from_string(std::string_view name) {
  if (name == "scaled") return LocalTemperatureWeighting::scaled;
  if (name == "prior-outside") return LocalTemperatureWeighting::prior_outside;
  if (name == "unscaled") return LocalTemperatureWeighting::unscaled;
  throw ConfigError("unknown local temperature weighting '" + std::string(name) + "'");
}

TemperaturePosterior update_local_temperature(std::span<const double> tempered_loglik,
                                              const TemperatureGrid& grid,
                                              std::span<const double> prior,
                                              LocalTemperatureWeighting weighting) {
  const std::size_t m_count = grid.size();
  if (tempered_loglik.size() != m_count) {
    throw ArgumentError("local temperature update needs one log-likelihood per grid point");
  }
  check_prior(prior, m_count);
  std::vector<double> logits(m_count);
  for (std::size_t m = 0; m < m_count; ++m) {
    const double inv_t = 1.0 / grid[m];
    const double log_prior = log_or_neg_inf(prior[m]);
    switch (weighting) {
      case LocalTemperatureWeighting::scaled:
        logits[m] = inv_t * (tempered_loglik[m] + log_prior);
        break;
      case LocalTemperatureWeighting::prior_outside:
        logits[m] = inv_t * tempered_loglik[m] + log_prior;
        break;
      case LocalTemperatureWeighting::unscaled:
        logits[m] = tempered_loglik[m] + log_prior;
        break;
    }
  }
  softmax_in_place(logits);
  return TemperaturePosterior(grid, std::move(logits));
}

}  // namespace tempervi

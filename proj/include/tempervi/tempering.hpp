#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace tempervi {

struct PartitionTable;

enum class GridSpacing { exponential, linear, inverse_linear };

std::string_view to_string(GridSpacing spacing);
GridSpacing grid_spacing_from_string(std::string_view name);

/// Temperature ladder 1 = T_1 < T_2 < ... < T_M.
class TemperatureGrid {
public:
  TemperatureGrid(std::vector<double> temps, GridSpacing spacing);

  std::span<const double> temps() const noexcept { return temps_; }
  std::size_t size() const noexcept { return temps_.size(); }
  double operator[](std::size_t m) const { return temps_[m]; }
  GridSpacing spacing() const noexcept { return spacing_; }

  std::vector<double> inverse_temps() const;

  friend bool operator==(const TemperatureGrid& a, const TemperatureGrid& b) {
    return a.temps_ == b.temps_;
  }

private:
  std::vector<double> temps_;
  GridSpacing spacing_;
};

/// Geometric progression from t_min (must be 1) to t_max inclusive.
TemperatureGrid make_exponential_grid(std::size_t count, double t_min, double t_max);

/// Evenly spaced temperatures from 1 to t_max inclusive.
TemperatureGrid make_linear_grid(std::size_t count, double t_max);

/// Inverse temperatures m/M for m = 1..M; temps are the reciprocals in
/// increasing order (so the last inverse temperature, 1, maps to T_1).
TemperatureGrid make_inverse_temp_grid(std::size_t count);

std::vector<double> uniform_prior(std::size_t count);

/// Variational multinomial q(y | r) over a temperature grid.
class TemperaturePosterior {
public:
  TemperaturePosterior(TemperatureGrid grid, std::vector<double> weights);

  static TemperaturePosterior uniform(TemperatureGrid grid);

  const TemperatureGrid& grid() const noexcept { return grid_; }
  std::span<const double> weights() const noexcept { return weights_; }
  double operator[](std::size_t m) const { return weights_[m]; }

  double expected_temperature() const;

private:
  TemperatureGrid grid_;
  std::vector<double> weights_;
};

/// E_q[1/T_y] = sum_m r_m / T_m.
double expected_inverse_temperature(const TemperaturePosterior& posterior);

/// Linear cooling from T0 to 1 over tA effective passes.
struct AnnealSchedule {
  double initial_temperature = 1.0;
  double passes = 1.0;
  std::size_t update_every = 1;

  void validate() const;
};

/// Temperature at iteration t. Held constant between refreshes spaced
/// update_every iterations; clamps at 1 once the schedule has elapsed.
double schedule_temperature(const AnnealSchedule& schedule, std::size_t iteration,
                            double iters_per_pass);

/// Mean temperature under a uniform distribution over the grid.
double mean_temperature(const TemperatureGrid& grid);

/// Global temperature update:
///   r_m ∝ exp{ S / T_m + log pi_m - log C(T_m) }
/// where S is the full-data expected log-likelihood.
TemperaturePosterior update_global_temperature(double sum_expected_loglik,
                                               const TemperatureGrid& grid,
                                               std::span<const double> prior,
                                               std::span<const double> log_partition);

TemperaturePosterior update_global_temperature(double sum_expected_loglik,
                                               const TemperatureGrid& grid,
                                               std::span<const double> prior,
                                               const PartitionTable& table);

/// How the per-datum tempered log-likelihood L_m = E[log p(x_i, z_i | beta/T_m)]
/// and the prior enter the local temperature logits.
enum class LocalTemperatureWeighting {
  scaled,         // (1/T_m) * (L_m + log pi_m)
  prior_outside,  // (1/T_m) * L_m + log pi_m
  unscaled,       // L_m + log pi_m
};

std::string_view to_string(LocalTemperatureWeighting weighting);
LocalTemperatureWeighting local_weighting_from_string(std::string_view name);

TemperaturePosterior update_local_temperature(
    std::span<const double> tempered_loglik, const TemperatureGrid& grid,
    std::span<const double> prior,
    LocalTemperatureWeighting weighting = LocalTemperatureWeighting::scaled);

}  // namespace tempervi

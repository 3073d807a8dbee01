#include "tempervi/engine.hpp"

#include <algorithm>
#include <cstdio>
#include <sstream>
#include <unordered_set>

namespace tempervi {

std::string to_string(Mode mode) {
  switch (mode) {
    case Mode::svi:
      return "svi";
    case Mode::avi:
      return "avi";
    case Mode::vt:
      return "vt";
    case Mode::lvt:
      return "lvt";
  }
  return "unknown";
}

Mode mode_from_string(const std::string& name) {
  if (name == "svi") return Mode::svi;
  if (name == "avi") return Mode::avi;
  if (name == "vt") return Mode::vt;
  if (name == "lvt") return Mode::lvt;
  throw ConfigError("unknown mode '" + name + "' (expected svi, avi, vt or lvt)");
}

double robbins_monro_rate(double tau, double kappa, double t) {
  if (!(tau >= 0.0) || !(t >= 0.0)) throw ArgumentError("robbins_monro_rate: tau and t must be >= 0");
  if (tau + t == 0.0) throw ArgumentError("robbins_monro_rate: tau + t must be positive");
  return std::pow(tau + t, -kappa);
}

TemperatureGrid GridConfig::build() const {
  switch (spacing) {
    case GridSpacing::exponential:
      return make_exponential_grid(size, 1.0, t_max);
    case GridSpacing::linear:
      return make_linear_grid(size, t_max);
    case GridSpacing::inverse_linear:
      return make_inverse_temp_grid(size);
  }
  throw ConfigError("unknown grid spacing");
}

TemperatureGrid run_grid(const TrainConfig& config) { return config.grid.build(); }

void TrainConfig::validate() const {
  if (!(kappa > 0.5 && kappa <= 1.0)) throw ConfigError("kappa must lie in (0.5, 1]");
  if (!(tau >= 0.0)) throw ConfigError("tau must be >= 0");
  if (batch_size < 1) throw ConfigError("batch size must be >= 1");
  if (mode == Mode::avi) {
    if (!schedule) throw ConfigError("avi mode needs an annealing schedule");
    schedule->validate();
  }
  if (temp_update_every < 1) throw ConfigError("temp_update_every must be >= 1");
  if (!(vt_ema >= 0.0 && vt_ema <= 1.0)) throw ConfigError("vt_ema must lie in [0, 1]");
  if (lvt_rounds < 1) throw ConfigError("lvt_rounds must be >= 1");
  if (max_iterations == 0 && !(max_passes > 0.0)) {
    throw ConfigError("need max_passes > 0 or max_iterations > 0");
  }
  if (grid.size < 1) throw ConfigError("temperature grid needs at least one point");
  if (!(grid.t_max >= 1.0)) throw ConfigError("grid t_max must be >= 1");
  if (threads < 1) throw ConfigError("threads must be >= 1");
}

double TrainConfig::iters_per_pass(std::size_t n) const {
  return static_cast<double>(n) / static_cast<double>(std::min(batch_size, n));
}

std::size_t TrainConfig::total_iterations(std::size_t n) const {
  if (max_iterations > 0) return max_iterations;
  return static_cast<std::size_t>(std::ceil(max_passes * iters_per_pass(n)));
}

std::string TrainConfig::canonical() const {
  std::ostringstream out;
  auto num = [](double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return std::string(buf);
  };
  out << "mode=" << to_string(mode) << '\n'
      << "batch_size=" << batch_size << '\n'
      << "batch_mode=" << batch_mode << '\n'
      << "tau=" << num(tau) << '\n'
      << "kappa=" << num(kappa) << '\n'
      << "grid.spacing=" << to_string(grid.spacing) << '\n'
      << "grid.size=" << grid.size << '\n'
      << "grid.t_max=" << num(grid.t_max) << '\n';
  if (schedule) {
    out << "schedule.t0=" << num(schedule->initial_temperature) << '\n'
        << "schedule.passes=" << num(schedule->passes) << '\n'
        << "schedule.update_every=" << schedule->update_every << '\n';
  }
  out << "temp_update_every=" << temp_update_every << '\n'
      << "vt_ema=" << num(vt_ema) << '\n'
      << "vt_untempered_statistic=" << vt_untempered_statistic << '\n'
      << "lvt_weighting=" << to_string(lvt_weighting) << '\n'
      << "lvt_rounds=" << lvt_rounds << '\n'
      << "max_passes=" << num(max_passes) << '\n'
      << "max_iterations=" << max_iterations << '\n'
      << "seed=" << seed << '\n';
  return out.str();
}

std::uint64_t TrainConfig::hash() const { return fnv1a64(canonical()); }

std::vector<std::size_t> sample_minibatch(std::mt19937_64& rng, std::size_t n, std::size_t b) {
  if (b > n) throw ArgumentError("sample_minibatch: batch larger than the dataset");
  std::vector<std::size_t> out;
  out.reserve(b);
  std::unordered_set<std::size_t> taken;
  taken.reserve(2 * b);
  for (std::size_t j = n - b; j < n; ++j) {
    const std::size_t r = std::uniform_int_distribution<std::size_t>(0, j)(rng);
    const std::size_t pick = taken.count(r) ? j : r;
    taken.insert(pick);
    out.push_back(pick);
  }
  return out;
}

std::string rng_state(const std::mt19937_64& rng) {
  std::ostringstream out;
  out << rng;
  return out.str();
}

void restore_rng(std::mt19937_64& rng, const std::string& state) {
  std::istringstream in(state);
  in >> rng;
  if (!in) throw ParseError(0, "invalid generator state in checkpoint");
}

}  // namespace tempervi

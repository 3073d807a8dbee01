#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace tempervi {

/// Everything needed to resume a run: global natural parameters, the
/// temperature state of the active mode, the iteration counter and the
/// generator state.
struct Checkpoint {
  std::string mode;
  std::size_t iteration = 0;
  Eigen::VectorXd lambda;
  double temperature = 1.0;              // svi / avi
  std::vector<double> posterior;         // vt weights over the grid
  double statistic_ema = 0.0;            // vt smoothed statistic
  bool statistic_ema_ready = false;
  std::string rng_state;                 // std::mt19937_64 stream form
  std::uint64_t config_hash = 0;
};

void write_checkpoint(std::ostream& out, const Checkpoint& ckpt);
Checkpoint read_checkpoint(std::istream& in);
void save_checkpoint(const std::string& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace tempervi

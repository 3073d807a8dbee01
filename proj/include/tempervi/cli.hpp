#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace tempervi {

/// Subcommands: precompute-partition, train, evaluate, generate-fmm,
/// export-metrics. Returns 0 on success, 2 for usage or configuration
/// problems, 1 for runtime failures.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int run_cli(int argc, const char* const* argv);

/// Flat vector file: a count line followed by one value per line.
void save_vector(const std::string& path, const Eigen::VectorXd& v);
Eigen::VectorXd load_vector(const std::string& path);

}  // namespace tempervi

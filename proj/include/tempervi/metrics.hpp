#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace tempervi {

struct MetricsRow {
  std::size_t iteration = 0;
  double effective_passes = 0.0;
  std::optional<double> elbo_t1;
  std::optional<double> heldout;  // nats per held-out word
  double expected_t = 1.0;
  double rate = 0.0;
  std::optional<double> wallclock_s;

  friend bool operator==(const MetricsRow&, const MetricsRow&) = default;
};

inline constexpr const char* kMetricsHeader =
    "iteration,effective_passes,elbo_T1,heldout,expected_T,rate,wallclock_s";

void write_metrics_header(std::ostream& out);
void write_metrics_row(std::ostream& out, const MetricsRow& row);
void write_metrics_csv(std::ostream& out, const std::vector<MetricsRow>& rows);
void save_metrics_csv(const std::string& path, const std::vector<MetricsRow>& rows);

/// Throws ParseError on a wrong header, a malformed field or a row whose
/// iteration does not increase.
std::vector<MetricsRow> read_metrics_csv(std::istream& in);
std::vector<MetricsRow> load_metrics_csv(const std::string& path);

/// One `run,iteration,metric,value` line per present value.
void write_metrics_long(std::ostream& out, const std::string& run,
                        const std::vector<MetricsRow>& rows);

/// {"run": ..., "rows": [{...}, ...]}; absent values are null.
std::string metrics_to_json(const std::string& run, const std::vector<MetricsRow>& rows);

}  // namespace tempervi

#include "tempervi/metrics.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include <json.hpp>

#include "tempervi/errors.hpp"

namespace tempervi {

namespace {

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string fmt(const std::optional<double>& v) { return v ? fmt(*v) : std::string(); }

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, ',')) fields.push_back(field);
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

double parse_double(const std::string& s, std::size_t line, const char* column) {
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (s.empty() || end != s.c_str() + s.size()) {
    throw ParseError(line, std::string("bad number in column ") + column + ": '" + s + "'");
  }
  return v;
}

std::optional<double> parse_optional(const std::string& s, std::size_t line, const char* column) {
  if (s.empty()) return std::nullopt;
  return parse_double(s, line, column);
}

}  // namespace

void write_metrics_header(std::ostream& out) { out << kMetricsHeader << '\n'; }

void write_metrics_row(std::ostream& out, const MetricsRow& row) {
  out << row.iteration << ',' << fmt(row.effective_passes) << ',' << fmt(row.elbo_t1) << ','
      << fmt(row.heldout) << ',' << fmt(row.expected_t) << ',' << fmt(row.rate) << ','
      << fmt(row.wallclock_s) << '\n';
}

void write_metrics_csv(std::ostream& out, const std::vector<MetricsRow>& rows) {
  write_metrics_header(out);
  for (const auto& row : rows) write_metrics_row(out, row);
}

void save_metrics_csv(const std::string& path, const std::vector<MetricsRow>& rows) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write metrics file '" + path + "'");
  write_metrics_csv(out, rows);
}

std::vector<MetricsRow> read_metrics_csv(std::istream& in) {
  std::string line;
  std::size_t line_no = 1;
  if (!std::getline(in, line)) throw ParseError(line_no, "empty metrics file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kMetricsHeader) throw ParseError(line_no, "unexpected metrics header '" + line + "'");
  std::vector<MetricsRow> rows;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto f = split_csv(line);
    if (f.size() != 7) throw ParseError(line_no, "expected 7 fields, got " + std::to_string(f.size()));
    MetricsRow row;
    const double it = parse_double(f[0], line_no, "iteration");
    if (it < 0 || it != static_cast<double>(static_cast<std::size_t>(it))) {
      throw ParseError(line_no, "iteration must be a non-negative integer");
    }
    row.iteration = static_cast<std::size_t>(it);
    row.effective_passes = parse_double(f[1], line_no, "effective_passes");
    row.elbo_t1 = parse_optional(f[2], line_no, "elbo_T1");
    row.heldout = parse_optional(f[3], line_no, "heldout");
    row.expected_t = parse_double(f[4], line_no, "expected_T");
    row.rate = parse_double(f[5], line_no, "rate");
    row.wallclock_s = parse_optional(f[6], line_no, "wallclock_s");
    if (!rows.empty() && row.iteration <= rows.back().iteration) {
      throw ParseError(line_no, "iterations must increase");
    }
    rows.push_back(row);
  }
  return rows;
}

std::vector<MetricsRow> load_metrics_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open metrics file '" + path + "'");
  return read_metrics_csv(in);
}

void write_metrics_long(std::ostream& out, const std::string& run,
                        const std::vector<MetricsRow>& rows) {
  out << "run,iteration,metric,value\n";
  auto emit = [&](std::size_t it, const char* name, const std::optional<double>& v) {
    if (v) out << run << ',' << it << ',' << name << ',' << fmt(*v) << '\n';
  };
  for (const auto& r : rows) {
    emit(r.iteration, "effective_passes", r.effective_passes);
    emit(r.iteration, "elbo_T1", r.elbo_t1);
    emit(r.iteration, "heldout", r.heldout);
    emit(r.iteration, "expected_T", r.expected_t);
    emit(r.iteration, "rate", r.rate);
    emit(r.iteration, "wallclock_s", r.wallclock_s);
  }
}

std::string metrics_to_json(const std::string& run, const std::vector<MetricsRow>& rows) {
  auto opt = [](const std::optional<double>& v) { return v ? nlohmann::json(*v) : nlohmann::json(); };
  nlohmann::json doc;
  doc["run"] = run;
  doc["rows"] = nlohmann::json::array();
  for (const auto& r : rows) {
    doc["rows"].push_back({{"iteration", r.iteration},
                           {"effective_passes", r.effective_passes},
                           {"elbo_T1", opt(r.elbo_t1)},
                           {"heldout", opt(r.heldout)},
                           {"expected_T", r.expected_t},
                           {"rate", r.rate},
                           {"wallclock_s", opt(r.wallclock_s)}});
  }
  return doc.dump(2);
}

}  // namespace tempervi

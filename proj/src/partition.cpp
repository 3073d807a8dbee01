#include "tempervi/partition.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

namespace tempervi {

std::string to_string(PartitionMethod method) {
  switch (method) {
    case PartitionMethod::mc:
      return "mc";
    case PartitionMethod::map:
      return "map";
    case PartitionMethod::analytic:
      return "analytic";
    case PartitionMethod::lda_nested:
      return "lda-nested";
  }
  return "unknown";
}

PartitionMethod partition_method_from_string(const std::string& name) {
  if (name == "mc") return PartitionMethod::mc;
  if (name == "map") return PartitionMethod::map;
  if (name == "analytic") return PartitionMethod::analytic;
  if (name == "lda-nested") return PartitionMethod::lda_nested;
  throw ConfigError("unknown partition method '" + name + "'");
}

namespace {

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

bool identifies_model(const std::string& key) {
  return key == "model" || key == "n_data" || key.rfind("hp.", 0) == 0;
}

}  // namespace

void PartitionMeta::set(const std::string& key, double value) { entries[key] = format_double(value); }

const std::string& PartitionMeta::get(const std::string& key) const {
  auto it = entries.find(key);
  if (it == entries.end()) {
    throw ConfigError("partition table meta lacks key '" + key + "'");
  }
  return it->second;
}

std::uint64_t PartitionMeta::model_hash() const {
  std::string canonical;
  for (const auto& [key, value] : entries) {
    if (identifies_model(key)) {
      canonical += key + "=" + value + "\n";
    }
  }
  return fnv1a64(canonical);
}

void PartitionTable::validate() const {
  const std::size_t m = grid.size();
  if (log_c.size() != m || std_err.size() != m) {
    throw ValidationError("partition table columns do not match the grid");
  }
  for (std::size_t i = 0; i < m; ++i) {
    if (!std::isfinite(log_c[i]) || !std::isfinite(std_err[i]) || std_err[i] < 0.0) {
      throw ValidationError("partition table has non-finite entries");
    }
  }
  if (grid[0] == 1.0 && log_c[0] != 0.0) {
    throw ValidationError("partition table must have log C(1) == 0 exactly");
  }
}

void write_partition_table(std::ostream& out, const PartitionTable& table) {
  table.validate();
  char hash[24];
  std::snprintf(hash, sizeof hash, "%016llx",
                static_cast<unsigned long long>(table.meta.model_hash()));
  for (const auto& [key, value] : table.meta.entries) {
    if (key == "model_hash") continue;
    out << "# " << key << '=' << value << '\n';
  }
  out << "# model_hash=" << hash << '\n';
  out << "T,log_c,std_err\n";
  for (std::size_t m = 0; m < table.grid.size(); ++m) {
    out << format_double(table.grid[m]) << ',' << format_double(table.log_c[m]) << ','
        << format_double(table.std_err[m]) << '\n';
  }
}

PartitionTable read_partition_table(std::istream& in) {
  PartitionMeta meta;
  std::vector<double> temps, log_c, std_err;
  std::string line;
  std::size_t line_no = 0;
  bool saw_columns = false;
  std::string stored_hash;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line[0] == '#') {
      std::string body = line.substr(1);
      if (!body.empty() && body[0] == ' ') body.erase(0, 1);
      const auto eq = body.find('=');
      if (eq == std::string::npos) {
        throw ParseError(line_no, "meta line must be key=value");
      }
      const std::string key = body.substr(0, eq);
      const std::string value = body.substr(eq + 1);
      if (key == "model_hash") {
        stored_hash = value;
      } else {
        meta.set(key, value);
      }
      continue;
    }
    if (!saw_columns) {
      if (line != "T,log_c,std_err") {
        throw ParseError(line_no, "expected column line 'T,log_c,std_err'");
      }
      saw_columns = true;
      continue;
    }
    std::istringstream row(line);
    std::string cell[3];
    for (int c = 0; c < 3; ++c) {
      if (!std::getline(row, cell[c], ',')) {
        throw ParseError(line_no, "expected three comma-separated values");
      }
    }
    double v[3];
    for (int c = 0; c < 3; ++c) {
      char* end = nullptr;
      v[c] = std::strtod(cell[c].c_str(), &end);
      if (end == cell[c].c_str() || *end != '\0') {
        throw ParseError(line_no, "malformed number '" + cell[c] + "'");
      }
    }
    temps.push_back(v[0]);
    log_c.push_back(v[1]);
    std_err.push_back(v[2]);
  }
  if (!saw_columns || temps.empty()) {
    throw ParseError(line_no, "partition table has no rows");
  }
  GridSpacing spacing = GridSpacing::exponential;
  if (meta.has("spacing")) {
    spacing = grid_spacing_from_string(meta.get("spacing"));
  }
  PartitionTable table{TemperatureGrid(std::move(temps), spacing), std::move(log_c),
                       std::move(std_err), std::move(meta)};
  table.validate();
  if (!stored_hash.empty()) {
    char hash[24];
    std::snprintf(hash, sizeof hash, "%016llx",
                  static_cast<unsigned long long>(table.meta.model_hash()));
    if (stored_hash != hash) {
      throw ValidationError("partition table model_hash does not match its meta entries");
    }
  }
  return table;
}

void save_partition_table(const std::string& path, const PartitionTable& table) {
  std::ofstream out(path);
  if (!out) {
    throw Error("cannot open '" + path + "' for writing");
  }
  write_partition_table(out, table);
}

PartitionTable load_partition_table(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw ConfigError("cannot open partition table '" + path + "'");
  }
  return read_partition_table(in);
}

void check_partition_table(const PartitionTable& table, const PartitionMeta& expected,
                           const TemperatureGrid& grid) {
  if (table.meta.model_hash() != expected.model_hash()) {
    std::string detail;
    for (const auto& [key, value] : expected.entries) {
      if (!identifies_model(key)) continue;
      const auto it = table.meta.entries.find(key);
      if (it == table.meta.entries.end() || it->second != value) {
        detail += " " + key + " (table: " +
                  (it == table.meta.entries.end() ? std::string("<missing>") : it->second) +
                  ", model: " + value + ")";
      }
    }
    throw ConfigError("partition table was computed for a different model:" + detail);
  }
  if (!(table.grid == grid)) {
    throw ConfigError("partition table grid does not match the configured temperature grid");
  }
}

// ---------------------------------------------------------------------------
// LDA nested estimator

PartitionMeta lda_partition_meta(const LdaPriors& priors, double words_per_doc, std::size_t docs) {
  PartitionMeta meta;
  meta.set("model", "lda");
  meta.set("n_data", std::to_string(docs));
  meta.set("hp.K", std::to_string(priors.topics));
  meta.set("hp.V", std::to_string(priors.vocab));
  meta.set("hp.alpha", priors.alpha);
  meta.set("hp.eta", priors.eta);
  meta.set("hp.words_per_doc", words_per_doc);
  return meta;
}

LdaPartitionSamples sample_lda_partition_terms(const LdaPriors& priors, const TemperatureGrid& grid,
                                               std::size_t n_beta, std::size_t n_theta,
                                               std::uint64_t seed, std::size_t threads) {
  if (priors.topics < 1 || priors.vocab < 1 || !(priors.alpha > 0.0) || !(priors.eta > 0.0)) {
    throw ArgumentError("LDA priors need K, V >= 1 and alpha, eta > 0");
  }
  if (n_beta < 1 || n_theta < 1) {
    throw ArgumentError("LDA partition estimator needs at least one sample per level");
  }
  const auto k = static_cast<Eigen::Index>(priors.topics);
  const auto v = static_cast<Eigen::Index>(priors.vocab);
  const std::size_t m_count = grid.size();
  LdaPartitionSamples out{grid, n_beta, n_theta, std::vector<double>(n_beta * n_theta * m_count)};
  const Eigen::VectorXd eta = Eigen::VectorXd::Constant(v, priors.eta);
  const Eigen::VectorXd alpha = Eigen::VectorXd::Constant(k, priors.alpha);

  parallel_for(n_beta, threads, [&](std::size_t b) {
    std::mt19937_64 rng(substream_seed(seed, b));
    Eigen::MatrixXd beta(k, v);
    for (Eigen::Index t = 0; t < k; ++t) {
      beta.row(t) = sample_dirichlet(rng, eta).transpose();
    }
    Eigen::ArrayXd log_p(v);
    for (std::size_t j = 0; j < n_theta; ++j) {
      const Eigen::VectorXd theta = sample_dirichlet(rng, alpha);
      log_p = (beta.transpose() * theta).array().log();
      const double top = log_p.maxCoeff();
      for (std::size_t m = 0; m < m_count; ++m) {
        double value = 0.0;
        if (grid[m] != 1.0) {
          const double s = 1.0 / grid[m];
          value = s * top + std::log(((log_p - top) * s).exp().sum());
        }
        out.u[(b * n_theta + j) * m_count + m] = value;
      }
    }
  });
  return out;
}

PartitionTable lda_log_partition(const LdaPartitionSamples& samples, const LdaPriors& priors,
                                 double words_per_doc, std::size_t docs, std::uint64_t seed) {
  const TemperatureGrid& grid = samples.grid;
  const std::size_t m_count = grid.size();
  PartitionTable table{grid, std::vector<double>(m_count, 0.0), std::vector<double>(m_count, 0.0),
                       lda_partition_meta(priors, words_per_doc, docs)};
  const double d = static_cast<double>(docs);
  std::vector<double> inner(samples.n_theta);
  std::vector<double> outer(samples.n_beta);
  for (std::size_t m = 0; m < m_count; ++m) {
    if (grid[m] == 1.0) continue;
    for (std::size_t b = 0; b < samples.n_beta; ++b) {
      for (std::size_t j = 0; j < samples.n_theta; ++j) {
        inner[j] = words_per_doc * samples.at(b, j, m);
      }
      outer[b] = d * log_mean_exp(inner);
    }
    const double value = log_mean_exp(outer);
    if (!std::isfinite(value)) {
      throw EstimationError("lda_log_partition: estimate overflowed at T = " +
                            std::to_string(grid[m]));
    }
    table.log_c[m] = value;
    table.std_err[m] = log_mean_exp_std_err(outer);
  }
  table.meta.set("method", to_string(PartitionMethod::lda_nested));
  table.meta.set("n_beta", std::to_string(samples.n_beta));
  table.meta.set("n_theta", std::to_string(samples.n_theta));
  table.meta.set("seed", std::to_string(seed));
  table.meta.set("spacing", std::string(to_string(grid.spacing())));
  return table;
}

PartitionTable lda_log_partition(const LdaPriors& priors, double words_per_doc, std::size_t docs,
                                 const TemperatureGrid& grid, std::size_t n_beta,
                                 std::size_t n_theta, std::uint64_t seed) {
  if (!(words_per_doc >= 1.0) || docs < 1) {
    throw ArgumentError("lda_log_partition: need words_per_doc >= 1 and docs >= 1");
  }
  const auto samples = sample_lda_partition_terms(priors, grid, n_beta, n_theta, seed);
  return lda_log_partition(samples, priors, words_per_doc, docs, seed);
}

JensenBounds lda_jensen_bounds(const LdaPartitionSamples& samples, double words_per_doc,
                               std::size_t docs) {
  const std::size_t m_count = samples.grid.size();
  const std::size_t total = samples.n_beta * samples.n_theta;
  const double scale = words_per_doc * static_cast<double>(docs);
  JensenBounds out{std::vector<double>(m_count, 0.0), std::vector<double>(m_count, 0.0),
                   std::vector<double>(m_count, 0.0), std::vector<double>(m_count, 0.0)};
  std::vector<double> u(total);
  for (std::size_t m = 0; m < m_count; ++m) {
    if (samples.grid[m] == 1.0) continue;
    for (std::size_t i = 0; i < total; ++i) {
      u[i] = samples.u[i * m_count + m];
    }
    double mean = 0.0;
    for (double x : u) mean += x;
    mean /= static_cast<double>(total);
    double var = 0.0;
    for (double x : u) var += (x - mean) * (x - mean);
    var = total > 1 ? var / static_cast<double>(total - 1) : 0.0;
    out.lower[m] = scale * mean;
    out.lower_std_err[m] = scale * std::sqrt(var / static_cast<double>(total));
    out.upper[m] = scale * log_mean_exp(u);
    out.upper_std_err[m] = scale * log_mean_exp_std_err(u);
  }
  return out;
}

JensenBounds lda_jensen_bounds(const LdaPriors& priors, double words_per_doc, std::size_t docs,
                               const TemperatureGrid& grid, std::size_t n_samples,
                               std::uint64_t seed) {
  const auto samples = sample_lda_partition_terms(priors, grid, n_samples, n_samples, seed);
  return lda_jensen_bounds(samples, words_per_doc, docs);
}

}  // namespace tempervi

#include "tempervi/fmm.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <numbers>
#include <sstream>

#include "tempervi/errors.hpp"
#include "tempervi/numeric.hpp"

namespace tempervi::fmm {

std::string to_string(VarianceConvention convention) {
  return convention == VarianceConvention::variance ? "variance" : "stddev";
}

VarianceConvention variance_convention_from_string(const std::string& name) {
  if (name == "variance") return VarianceConvention::variance;
  if (name == "stddev") return VarianceConvention::stddev;
  throw ConfigError("unknown variance convention '" + name + "' (expected variance or stddev)");
}

void FmmConfig::validate() const {
  if (components < 1 || dim < 1) throw ConfigError("FMM needs K >= 1 and D >= 1");
  if (!(pi > 0.0 && pi < 1.0)) throw ConfigError("FMM activation probability must lie in (0, 1)");
  if (!(sigma_n > 0.0) || !(sigma_mu > 0.0) || !std::isfinite(sigma_n) || !std::isfinite(sigma_mu)) {
    throw ConfigError("FMM scales must be positive and finite");
  }
}

double FmmConfig::noise_variance() const {
  return convention == VarianceConvention::stddev ? sigma_n * sigma_n : sigma_n;
}

double FmmConfig::prior_variance() const {
  return convention == VarianceConvention::stddev ? sigma_mu * sigma_mu : sigma_mu;
}

Eigen::VectorXd to_natural(const FmmGlobal& global) {
  const Eigen::Index k_count = global.m.rows();
  const Eigen::Index dim = global.m.cols();
  Eigen::VectorXd lambda(k_count * (dim + 1));
  for (Eigen::Index k = 0; k < k_count; ++k) {
    const double prec = 1.0 / global.s2[k];
    lambda.segment(k * dim, dim) = prec * global.m.row(k).transpose();
    lambda[k_count * dim + k] = prec;
  }
  return lambda;
}

FmmGlobal from_natural(const Eigen::VectorXd& lambda, std::size_t components, std::size_t dim) {
  const auto k_count = static_cast<Eigen::Index>(components);
  const auto d = static_cast<Eigen::Index>(dim);
  if (lambda.size() != k_count * (d + 1)) {
    throw ArgumentError("FMM natural parameter vector has the wrong length");
  }
  FmmGlobal g;
  g.m.resize(k_count, d);
  g.s2.resize(k_count);
  for (Eigen::Index k = 0; k < k_count; ++k) {
    const double prec = lambda[k_count * d + k];
    if (!(prec > 0.0)) throw InvalidStateError("FMM component precision must be positive");
    g.s2[k] = 1.0 / prec;
    g.m.row(k) = lambda.segment(k * d, d).transpose() / prec;
  }
  return g;
}

FmmLocal fmm_local_step(const Eigen::Ref<const Eigen::VectorXd>& x, const FmmGlobal& global,
                        const FmmConfig& config, double inv_t, const LocalSolverOptions& options,
                        const FmmLocal* warm) {
  if (!(inv_t > 0.0) || inv_t > 1.0) {
    throw ArgumentError("fmm_local_step: inverse temperature must lie in (0, 1]");
  }
  const Eigen::Index k_count = global.m.rows();
  const double noise_var = config.noise_variance();
  const double prior_logit = std::log(config.pi / (1.0 - config.pi));
  const double dim = static_cast<double>(global.m.cols());

  FmmLocal local;
  if (warm != nullptr && warm->nu.size() == k_count) {
    local.nu = warm->nu;
  } else {
    local.nu = Eigen::VectorXd::Constant(k_count, sigmoid(inv_t * prior_logit));
  }
  // residual = x - sum_j nu_j m_j, kept current across the sweep
  Eigen::VectorXd residual = x - global.m.transpose() * local.nu;
  Eigen::VectorXd self_energy(k_count);
  for (Eigen::Index k = 0; k < k_count; ++k) {
    self_energy[k] = 0.5 * (global.m.row(k).squaredNorm() + dim * global.s2[k]);
  }

  local.converged = false;
  for (int it = 0; it < options.max_iterations; ++it) {
    double change = 0.0;
    for (Eigen::Index k = 0; k < k_count; ++k) {
      const auto mk = global.m.row(k);
      const double fit = mk.dot(residual.transpose()) + local.nu[k] * mk.squaredNorm();
      const double nu = sigmoid(inv_t * (prior_logit + (fit - self_energy[k]) / noise_var));
      const double delta = nu - local.nu[k];
      if (delta != 0.0) {
        residual -= delta * mk.transpose();
        local.nu[k] = nu;
      }
      change = std::max(change, std::abs(delta));
    }
    local.iterations = it + 1;
    if (change < options.tolerance) {
      local.converged = true;
      break;
    }
  }
  return local;
}

FmmGlobal fmm_global_step(const Dataset& batch, const Eigen::MatrixXd& nu,
                          std::span<const double> weights, const FmmConfig& config, double rho,
                          const FmmGlobal& current) {
  const Eigen::Index n = batch.rows();
  const Eigen::Index k_count = current.m.rows();
  const Eigen::Index dim = current.m.cols();
  if (n == 0) throw ArgumentError("fmm_global_step: empty batch");
  if (nu.rows() != n || nu.cols() != k_count || static_cast<Eigen::Index>(weights.size()) != n ||
      batch.cols() != dim) {
    throw ArgumentError("fmm_global_step: batch, responsibilities and weights disagree in shape");
  }
  const double noise_var = config.noise_variance();
  const double prior_prec = 1.0 / config.prior_variance();

  FmmGlobal next = current;
  Eigen::MatrixXd residual = batch - nu * current.m;  // n x D
  const Eigen::Map<const Eigen::VectorXd> w(weights.data(), n);
  for (Eigen::Index k = 0; k < k_count; ++k) {
    const Eigen::VectorXd wnu = w.cwiseProduct(nu.col(k));
    // sum_n w_n nu_nk (x_n - sum_{j != k} nu_nj m_j)
    const Eigen::RowVectorXd mean_stat =
        wnu.transpose() * residual + wnu.dot(nu.col(k)) * next.m.row(k);
    const double prec_hat = prior_prec + wnu.sum() / noise_var;
    const Eigen::RowVectorXd eta_hat = mean_stat / noise_var;

    const double prec_old = 1.0 / next.s2[k];
    const double prec = (1.0 - rho) * prec_old + rho * prec_hat;
    if (!(prec > 0.0) || !std::isfinite(prec)) {
      throw InvalidStateError("fmm_global_step: component precision became non-positive");
    }
    const Eigen::RowVectorXd eta = (1.0 - rho) * prec_old * next.m.row(k) + rho * eta_hat;
    const Eigen::RowVectorXd m_new = eta / prec;
    residual -= nu.col(k) * (m_new - next.m.row(k));
    next.m.row(k) = m_new;
    next.s2[k] = 1.0 / prec;
  }
  return next;
}

double fmm_expected_loglik(const Eigen::Ref<const Eigen::VectorXd>& x, const Eigen::VectorXd& nu,
                           const FmmGlobal& global, const FmmConfig& config) {
  const double noise_var = config.noise_variance();
  const double dim = static_cast<double>(x.size());
  double sq = (x - global.m.transpose() * nu).squaredNorm();
  double bern = 0.0;
  for (Eigen::Index k = 0; k < nu.size(); ++k) {
    const double norm2 = global.m.row(k).squaredNorm();
    sq += nu[k] * (norm2 + dim * global.s2[k]) - nu[k] * nu[k] * norm2;
    bern += (nu[k] > 0.0 ? nu[k] * std::log(config.pi) : 0.0) +
            (nu[k] < 1.0 ? (1.0 - nu[k]) * std::log1p(-config.pi) : 0.0);
  }
  return -0.5 * dim * std::log(2.0 * std::numbers::pi * noise_var) - 0.5 * sq / noise_var + bern;
}

double fmm_log_partition_value(const FmmConfig& config, std::size_t n_data, double temperature) {
  if (!(temperature >= 1.0) || !std::isfinite(temperature)) {
    throw ArgumentError("fmm_log_partition: temperature must be finite and >= 1");
  }
  if (temperature == 1.0) return 0.0;
  const double s = 1.0 / temperature;
  const double n = static_cast<double>(n_data);
  const double mix = std::exp(s * std::log(config.pi)) + std::exp(s * std::log1p(-config.pi));
  return 0.5 * n * static_cast<double>(config.dim) * std::log(temperature) +
         n * static_cast<double>(config.components) * std::log(mix);
}

PartitionMeta fmm_partition_meta(const FmmConfig& config, std::size_t n_data) {
  PartitionMeta meta;
  meta.set("model", "fmm");
  meta.set("n_data", std::to_string(n_data));
  meta.set("hp.K", std::to_string(config.components));
  meta.set("hp.D", std::to_string(config.dim));
  meta.set("hp.pi", config.pi);
  meta.set("hp.noise_variance", config.noise_variance());
  return meta;
}

PartitionTable fmm_log_partition(const FmmConfig& config, std::size_t n_data,
                                 const TemperatureGrid& grid) {
  config.validate();
  PartitionTable table{grid, std::vector<double>(grid.size()), std::vector<double>(grid.size(), 0.0),
                       fmm_partition_meta(config, n_data)};
  for (std::size_t m = 0; m < grid.size(); ++m) {
    table.log_c[m] = fmm_log_partition_value(config, n_data, grid[m]);
  }
  table.meta.set("method", to_string(PartitionMethod::analytic));
  table.meta.set("spacing", std::string(to_string(grid.spacing())));
  return table;
}

FmmPartitionModel::FmmPartitionModel(FmmConfig config) : config_(config) { config_.validate(); }

Eigen::VectorXd FmmPartitionModel::sample_prior_global(std::mt19937_64& rng) const {
  const auto kd = static_cast<Eigen::Index>(config_.components * config_.dim);
  const double noise_var = config_.noise_variance();
  std::normal_distribution<double> normal(0.0, std::sqrt(config_.prior_variance()));
  Eigen::VectorXd beta(kd + 2);
  for (Eigen::Index i = 0; i < kd; ++i) beta[i] = normal(rng) / noise_var;
  beta[kd] = 1.0 / noise_var;
  beta[kd + 1] = std::log(config_.pi / (1.0 - config_.pi));
  return beta;
}

Eigen::VectorXd FmmPartitionModel::prior_mode() const {
  const auto kd = static_cast<Eigen::Index>(config_.components * config_.dim);
  Eigen::VectorXd beta = Eigen::VectorXd::Zero(kd + 2);
  beta[kd] = 1.0 / config_.noise_variance();
  beta[kd + 1] = std::log(config_.pi / (1.0 - config_.pi));
  return beta;
}

double FmmPartitionModel::eval_a_l(const Eigen::VectorXd& beta) const {
  const auto kd = static_cast<Eigen::Index>(config_.components * config_.dim);
  const double prec = beta[kd];
  const double omega = beta[kd + 1];
  const double softplus = omega > 0.0 ? omega + std::log1p(std::exp(-omega)) : std::log1p(std::exp(omega));
  return beta.head(kd).squaredNorm() / (2.0 * prec) -
         0.5 * static_cast<double>(config_.dim) * std::log(prec * config_.noise_variance()) +
         static_cast<double>(config_.components) * softplus;
}

bool FmmPartitionModel::in_global_domain(const Eigen::VectorXd& beta) const {
  const auto kd = static_cast<Eigen::Index>(config_.components * config_.dim);
  return beta.size() == kd + 2 && beta.allFinite() && beta[kd] > 0.0;
}

PartitionMeta FmmPartitionModel::partition_meta(std::size_t n_data) const {
  return fmm_partition_meta(config_, n_data);
}

FmmModel::FmmModel(FmmConfig config, LocalSolverOptions options, double init_precision)
    : config_(config), options_(options), init_precision_(init_precision) {
  config_.validate();
  if (!(init_precision_ >= 0.0)) throw ConfigError("FMM init_precision must be >= 0");
  const auto k_count = static_cast<Eigen::Index>(config_.components);
  const auto d = static_cast<Eigen::Index>(config_.dim);
  prior_ = Eigen::VectorXd::Zero(k_count * (d + 1));
  prior_.tail(k_count).setConstant(1.0 / config_.prior_variance());
}

bool FmmModel::in_domain(const Eigen::VectorXd& lambda) const {
  return lambda.size() == static_cast<Eigen::Index>(dim_global()) && lambda.allFinite() &&
         lambda.tail(static_cast<Eigen::Index>(config_.components)).minCoeff() > 0.0;
}

Eigen::VectorXd FmmModel::initial_lambda(const Dataset&, std::mt19937_64& rng) const {
  std::normal_distribution<double> normal(0.0, std::sqrt(config_.prior_variance()));
  FmmGlobal g;
  g.m.resize(static_cast<Eigen::Index>(config_.components), static_cast<Eigen::Index>(config_.dim));
  for (Eigen::Index k = 0; k < g.m.rows(); ++k) {
    for (Eigen::Index d = 0; d < g.m.cols(); ++d) g.m(k, d) = normal(rng);
  }
  g.s2 = Eigen::VectorXd::Constant(g.m.rows(), 1.0 / (1.0 / config_.prior_variance() + init_precision_));
  return to_natural(g);
}

FmmModel::Cache FmmModel::prepare(const Eigen::VectorXd& lambda) const {
  if (!in_domain(lambda)) throw InvalidStateError("FMM lambda outside its domain");
  return from_natural(lambda, config_.components, config_.dim);
}

FmmLocal FmmModel::local_step(const Dataset& data, std::size_t n, const Cache& cache, double inv_t,
                              const FmmLocal* warm) const {
  return fmm_local_step(data.row(static_cast<Eigen::Index>(n)).transpose(), cache, config_, inv_t,
                        options_, warm);
}

double FmmModel::expected_log_lik(const Dataset& data, std::size_t n, const FmmLocal& local,
                                  const Cache& cache) const {
  return fmm_expected_loglik(data.row(static_cast<Eigen::Index>(n)).transpose(), local.nu, cache,
                             config_);
}

std::vector<double> FmmModel::expected_tempered_log_lik(const Dataset& data, std::size_t n,
                                                        const FmmLocal& local, const Cache& cache,
                                                        std::span<const double> temps) const {
  const double ell = expected_log_lik(data, n, local, cache);
  const double dim = static_cast<double>(config_.dim);
  const double log_norm = std::log(2.0 * std::numbers::pi * config_.noise_variance());
  std::vector<double> out(temps.size());
  for (std::size_t m = 0; m < temps.size(); ++m) {
    if (temps[m] == 1.0) {
      out[m] = ell;
      continue;
    }
    const double s = 1.0 / temps[m];
    const double mix = std::exp(s * std::log(config_.pi)) + std::exp(s * std::log1p(-config_.pi));
    out[m] = s * ell - (1.0 - s) * 0.5 * dim * log_norm - 0.5 * dim * std::log(temps[m]) -
             static_cast<double>(config_.components) * std::log(mix);
  }
  return out;
}

double FmmModel::log_base_measure(const Dataset&, std::size_t) const {
  return -0.5 * static_cast<double>(config_.dim) *
         std::log(2.0 * std::numbers::pi * config_.noise_variance());
}

double FmmModel::local_terms(const Dataset&, std::size_t, const FmmLocal& local) const {
  double h = 0.0;
  for (Eigen::Index k = 0; k < local.nu.size(); ++k) {
    h -= xlogx(local.nu[k]) + xlogx(1.0 - local.nu[k]);
  }
  return h;
}

double FmmModel::global_terms(const Cache& cache) const {
  const double dim = static_cast<double>(config_.dim);
  const double prior_var = config_.prior_variance();
  const double two_pi = 2.0 * std::numbers::pi;
  double total = 0.0;
  for (Eigen::Index k = 0; k < cache.m.rows(); ++k) {
    const double s2 = cache.s2[k];
    total += -0.5 * dim * std::log(two_pi * prior_var) -
             0.5 * (cache.m.row(k).squaredNorm() + dim * s2) / prior_var +
             0.5 * dim * std::log(two_pi * std::numbers::e * s2);
  }
  return total;
}

void FmmModel::accumulate_suff_stats(const Dataset& data, std::size_t n, const FmmLocal& local,
                                     const Cache& cache, double weight, Eigen::VectorXd& acc) const {
  const auto k_count = static_cast<Eigen::Index>(config_.components);
  const auto d = static_cast<Eigen::Index>(config_.dim);
  const double noise_var = config_.noise_variance();
  const Eigen::VectorXd x = data.row(static_cast<Eigen::Index>(n)).transpose();
  const Eigen::VectorXd residual = x - cache.m.transpose() * local.nu;
  for (Eigen::Index k = 0; k < k_count; ++k) {
    const double nu = local.nu[k];
    acc.segment(k * d, d) +=
        (weight * nu / noise_var) * (residual + nu * cache.m.row(k).transpose());
    acc[k_count * d + k] += weight * nu / noise_var;
  }
}

Eigen::VectorXd FmmModel::global_step(const Dataset& data, std::span<const std::size_t> batch,
                                      std::span<const FmmLocal> locals,
                                      std::span<const double> weights, double rho, double scale,
                                      const Eigen::VectorXd& lambda) const {
  if (batch.empty()) throw ArgumentError("global step needs a non-empty batch");
  if (locals.size() != batch.size() || weights.size() != batch.size()) {
    throw ArgumentError("global step: batch, locals and weights differ in length");
  }
  const auto b_count = static_cast<Eigen::Index>(batch.size());
  Dataset rows(b_count, data.cols());
  Eigen::MatrixXd nu(b_count, static_cast<Eigen::Index>(config_.components));
  std::vector<double> w(batch.size());
  for (std::size_t b = 0; b < batch.size(); ++b) {
    rows.row(static_cast<Eigen::Index>(b)) = data.row(static_cast<Eigen::Index>(batch[b]));
    nu.row(static_cast<Eigen::Index>(b)) = locals[b].nu.transpose();
    w[b] = scale * weights[b];
  }
  const FmmGlobal next = fmm_global_step(rows, nu, w, config_, rho, prepare(lambda));
  return to_natural(next);
}

Eigen::MatrixXd parse_masks(const std::string& text) {
  std::vector<std::string> rows;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    std::string bits;
    for (char c : line) {
      if (c == '0' || c == '1') {
        bits += c;
      } else if (c == '#') {
        break;
      } else if (c != ' ' && c != '\t' && c != '\r') {
        throw ValidationError("mask text may contain only 0, 1 and whitespace");
      }
    }
    if (!bits.empty()) rows.push_back(bits);
  }
  if (rows.empty()) throw ValidationError("mask text has no rows");
  Eigen::MatrixXd masks(static_cast<Eigen::Index>(rows.size()),
                        static_cast<Eigen::Index>(rows[0].size()));
  for (std::size_t k = 0; k < rows.size(); ++k) {
    if (rows[k].size() != rows[0].size()) throw ValidationError("mask rows differ in length");
    for (std::size_t d = 0; d < rows[k].size(); ++d) {
      masks(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(d)) = rows[k][d] == '1' ? 1.0 : 0.0;
    }
  }
  return masks;
}

Eigen::MatrixXd toy_masks() {
  return parse_masks(
      "1100110000000000\n"
      "0011001100000000\n"
      "0000000011001100\n"
      "0000000000110011\n"
      "1000010000100001\n"
      "0001001001001000\n"
      "0110011001100110\n"
      "0000111111110000\n");
}

Eigen::MatrixXd toy_features(std::uint64_t seed) {
  Eigen::MatrixXd features = toy_masks();
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> weight(0.5, 1.0);
  for (Eigen::Index k = 0; k < features.rows(); ++k) features.row(k) *= weight(rng);
  return features;
}

void write_matrix_csv(std::ostream& out, const Eigen::MatrixXd& matrix) {
  char buf[40];
  for (Eigen::Index i = 0; i < matrix.rows(); ++i) {
    for (Eigen::Index j = 0; j < matrix.cols(); ++j) {
      std::snprintf(buf, sizeof buf, "%.17g", matrix(i, j));
      if (j > 0) out << ',';
      out << buf;
    }
    out << '\n';
  }
}

Eigen::MatrixXd read_matrix_csv(std::istream& in) {
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    std::vector<double> row;
    std::istringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) {
      char* end = nullptr;
      const double v = std::strtod(field.c_str(), &end);
      while (end && (*end == ' ' || *end == '\t')) ++end;
      if (field.empty() || *end != '\0') throw ParseError(line_no, "bad number '" + field + "'");
      row.push_back(v);
    }
    if (!rows.empty() && row.size() != rows[0].size()) {
      throw ParseError(line_no, "row has " + std::to_string(row.size()) + " values, expected " +
                                    std::to_string(rows[0].size()));
    }
    rows.push_back(std::move(row));
  }
  Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()),
                    rows.empty() ? 0 : static_cast<Eigen::Index>(rows[0].size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < rows[i].size(); ++j) {
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
    }
  }
  return m;
}

void save_matrix_csv(const std::string& path, const Eigen::MatrixXd& matrix) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write '" + path + "'");
  write_matrix_csv(out, matrix);
}

Eigen::MatrixXd load_matrix_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open '" + path + "'");
  return read_matrix_csv(in);
}

Dataset fmm_generate(const FmmConfig& config, const Eigen::MatrixXd& features, std::size_t n,
                     std::uint64_t seed) {
  if (!(config.pi >= 0.0 && config.pi <= 1.0)) {
    throw ArgumentError("fmm_generate: activation probability must lie in [0, 1]");
  }
  if (features.rows() < 1 || features.cols() < 1) throw ArgumentError("fmm_generate: empty features");
  const double noise_sd = std::sqrt(config.noise_variance());
  Dataset x(static_cast<Eigen::Index>(n), features.cols());
  for (std::size_t i = 0; i < n; ++i) {
    std::mt19937_64 rng(substream_seed(seed, i));
    std::bernoulli_distribution active(config.pi);
    std::normal_distribution<double> noise(0.0, noise_sd);
    auto row = x.row(static_cast<Eigen::Index>(i));
    for (Eigen::Index d = 0; d < features.cols(); ++d) row[d] = noise(rng);
    for (Eigen::Index k = 0; k < features.rows(); ++k) {
      if (active(rng)) row += features.row(k);
    }
  }
  return x;
}

double best_permutation_rmse(const Eigen::MatrixXd& learned, const Eigen::MatrixXd& truth) {
  const Eigen::Index l_count = learned.rows();
  const Eigen::Index t_count = truth.rows();
  if (learned.cols() != truth.cols() || l_count < t_count || t_count < 1) {
    throw ArgumentError("best_permutation_rmse: need matching widths and at least as many learned rows");
  }
  if (l_count > 20) throw ArgumentError("best_permutation_rmse: at most 20 learned rows supported");
  Eigen::MatrixXd cost(t_count, l_count);
  for (Eigen::Index t = 0; t < t_count; ++t) {
    for (Eigen::Index l = 0; l < l_count; ++l) cost(t, l) = (truth.row(t) - learned.row(l)).squaredNorm();
  }
  // dp[mask]: least cost of matching the first popcount(mask) true rows to the learned rows in mask.
  const std::size_t subsets = std::size_t{1} << l_count;
  std::vector<double> dp(subsets, std::numeric_limits<double>::infinity());
  dp[0] = 0.0;
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t mask = 0; mask < subsets; ++mask) {
    if (!std::isfinite(dp[mask])) continue;
    const auto t = static_cast<Eigen::Index>(__builtin_popcountll(mask));
    if (t == t_count) {
      best = std::min(best, dp[mask]);
      continue;
    }
    for (Eigen::Index l = 0; l < l_count; ++l) {
      const std::size_t bit = std::size_t{1} << l;
      if (mask & bit) continue;
      dp[mask | bit] = std::min(dp[mask | bit], dp[mask] + cost(t, l));
    }
  }
  return std::sqrt(best / static_cast<double>(t_count * truth.cols()));
}

}  // namespace tempervi::fmm

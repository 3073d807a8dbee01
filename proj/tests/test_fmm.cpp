#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <random>
#include <sstream>
#include <vector>

#include "tempervi/ccef.hpp"
#include "tempervi/engine.hpp"
#include "tempervi/errors.hpp"
#include "tempervi/fmm.hpp"

using namespace tempervi;
using namespace tempervi::fmm;

namespace {

FmmConfig unit_config(std::size_t k, std::size_t d, double pi) {
  FmmConfig c;
  c.components = k;
  c.dim = d;
  c.pi = pi;
  c.sigma_n = 1.0;
  c.sigma_mu = 1.0;
  return c;
}

// Mean-field ELBO of the factorial mixture, expanded pairwise:
//   E|x - sum_k z_k mu_k|^2 = |x|^2 - 2 sum_k nu_k x.m_k + sum_k nu_k (|m_k|^2 + D s2_k)
//                             + sum_{j != k} nu_j nu_k m_j.m_k
double oracle_elbo(const Eigen::MatrixXd& x, const Eigen::MatrixXd& nu, const Eigen::MatrixXd& m,
                   const Eigen::VectorXd& s2, double pi, double noise_var, double prior_var, double t) {
  const Eigen::Index n = x.rows(), k_count = m.rows(), dim = m.cols();
  const double two_pi = 2.0 * std::numbers::pi;
  double value = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    double sq = x.row(i).squaredNorm();
    double bern = 0.0, entropy = 0.0;
    for (Eigen::Index k = 0; k < k_count; ++k) {
      const double v = nu(i, k);
      sq += -2.0 * v * x.row(i).dot(m.row(k)) + v * (m.row(k).squaredNorm() + dim * s2[k]);
      for (Eigen::Index j = 0; j < k_count; ++j) {
        if (j != k) sq += v * nu(i, j) * m.row(k).dot(m.row(j));
      }
      bern += v * std::log(pi) + (1.0 - v) * std::log(1.0 - pi);
      if (v > 0.0) entropy -= v * std::log(v);
      if (v < 1.0) entropy -= (1.0 - v) * std::log(1.0 - v);
    }
    // the Gaussian normalizer stays untempered
    value += -0.5 * dim * std::log(two_pi * noise_var) + (-0.5 * sq / noise_var + bern) / t + entropy;
  }
  for (Eigen::Index k = 0; k < k_count; ++k) {
    value += -0.5 * dim * std::log(two_pi * prior_var) - 0.5 * (m.row(k).squaredNorm() + dim * s2[k]) / prior_var;
    value += 0.5 * dim * (std::log(two_pi * s2[k]) + 1.0);
  }
  return value;
}

struct Tiny {
  FmmConfig config;
  Dataset x;
  FmmGlobal global;
};

Tiny random_tiny(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::normal_distribution<double> n01(0.0, 1.0);
  Tiny t;
  t.config.components = 1 + rng() % 2;
  t.config.dim = 1 + rng() % 2;
  t.config.pi = 0.1 + 0.8 * u(rng);
  t.config.sigma_n = 0.3 + u(rng);
  t.config.sigma_mu = 0.5 + u(rng);
  const auto n = static_cast<Eigen::Index>(1 + rng() % 5);
  const auto k = static_cast<Eigen::Index>(t.config.components);
  const auto d = static_cast<Eigen::Index>(t.config.dim);
  t.x.resize(n, d);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < d; ++j) t.x(i, j) = n01(rng);
  t.global.m.resize(k, d);
  for (Eigen::Index i = 0; i < k; ++i)
    for (Eigen::Index j = 0; j < d; ++j) t.global.m(i, j) = n01(rng);
  t.global.s2 = Eigen::VectorXd::Constant(k, 0.05 + 0.5 * u(rng));
  return t;
}

Eigen::MatrixXd fit_nu(const Tiny& t, double inv_t, double tol = 1e-14) {
  Eigen::MatrixXd nu(t.x.rows(), t.global.m.rows());
  for (Eigen::Index i = 0; i < t.x.rows(); ++i) {
    nu.row(i) = fmm_local_step(t.x.row(i).transpose(), t.global, t.config, inv_t, {tol, 10000}).nu.transpose();
  }
  return nu;
}

}  // namespace

TEST_CASE("local step examples") {
  const FmmConfig c1 = unit_config(1, 1, 0.5);
  FmmGlobal g{Eigen::MatrixXd::Ones(1, 1), Eigen::VectorXd::Zero(1)};
  const auto local = fmm_local_step(Eigen::VectorXd::Ones(1), g, c1, 1.0);
  CHECK(local.nu[0] == doctest::Approx(1.0 / (1.0 + std::exp(-0.5))).epsilon(1e-12));
  CHECK(local.nu[0] == doctest::Approx(0.6225).epsilon(1e-4));

  FmmConfig c3;
  c3.components = 3;
  c3.dim = 4;
  FmmGlobal zero{Eigen::MatrixXd::Zero(3, 4), Eigen::VectorXd::Constant(3, 0.0)};
  const Eigen::VectorXd x = Eigen::VectorXd::LinSpaced(4, -1.0, 2.0);
  const auto prior = fmm_local_step(x, zero, c3, 1.0);
  for (int k = 0; k < 3; ++k) CHECK(prior.nu[k] == doctest::Approx(0.3).epsilon(1e-12));

  FmmGlobal rnd{Eigen::MatrixXd::Random(3, 4), Eigen::VectorXd::Constant(3, 0.1)};
  const auto cold = fmm_local_step(x, rnd, c3, 1e-10);
  for (int k = 0; k < 3; ++k) CHECK(cold.nu[k] == doctest::Approx(0.5).epsilon(1e-6));
  CHECK_THROWS_AS(fmm_local_step(x, rnd, c3, 0.0), ArgumentError);
}

TEST_CASE("global step examples") {
  const FmmConfig c = unit_config(1, 1, 0.5);
  const FmmGlobal start{Eigen::MatrixXd::Constant(1, 1, 0.3), Eigen::VectorXd::Constant(1, 0.7)};
  const Dataset x = Dataset::Constant(1, 1, 2.0);
  const std::vector<double> w{1.0};
  const auto next = fmm_global_step(x, Eigen::MatrixXd::Ones(1, 1), w, c, 1.0, start);
  CHECK(next.s2[0] == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(next.m(0, 0) == doctest::Approx(1.0).epsilon(1e-15));

  FmmConfig c3;
  c3.components = 3;
  c3.dim = 2;
  const Dataset data = Dataset::Random(5, 2);
  const FmmGlobal g3{Eigen::MatrixXd::Random(3, 2), Eigen::VectorXd::Constant(3, 0.2)};
  const std::vector<double> ones(5, 1.0), halves(5, 0.5);
  const auto off = fmm_global_step(data, Eigen::MatrixXd::Zero(5, 3), ones, c3, 1.0, g3);
  CHECK(off.m.isZero());
  for (int k = 0; k < 3; ++k) CHECK(off.s2[k] == doctest::Approx(c3.prior_variance()));

  // Halving the weights halves the data part of the precision and of the mean statistic.
  const Eigen::MatrixXd nu = (Eigen::MatrixXd::Random(5, 3).array() + 1.0) / 2.0;
  const FmmConfig one_comp = [&] { auto c = c3; c.components = 1; return c; }();
  const FmmGlobal g1{Eigen::MatrixXd::Random(1, 2), Eigen::VectorXd::Constant(1, 0.2)};
  const auto full = fmm_global_step(data, nu.leftCols(1), ones, one_comp, 1.0, g1);
  const auto half = fmm_global_step(data, nu.leftCols(1), halves, one_comp, 1.0, g1);
  const double prior_prec = 1.0 / one_comp.prior_variance();
  CHECK(1.0 / half.s2[0] - prior_prec == doctest::Approx(0.5 * (1.0 / full.s2[0] - prior_prec)).epsilon(1e-13));
  const Eigen::RowVectorXd stat_full = full.m.row(0) / full.s2[0];
  const Eigen::RowVectorXd stat_half = half.m.row(0) / half.s2[0];
  CHECK((stat_half - 0.5 * stat_full).norm() < 1e-12);

  CHECK_THROWS_AS(fmm_global_step(data, nu, ones, c3, -5.0, g3), InvalidStateError);
  CHECK_THROWS_AS(fmm_global_step(data, nu, std::vector<double>(4, 1.0), c3, 1.0, g3), ArgumentError);
}

TEST_CASE("expected log-likelihood examples") {
  const FmmConfig c = unit_config(1, 1, 0.5);
  FmmGlobal g{Eigen::MatrixXd::Constant(1, 1, 2.0), Eigen::VectorXd::Ones(1)};
  const double v = fmm_expected_loglik(Eigen::VectorXd::Ones(1), Eigen::VectorXd::Constant(1, 0.5), g, c);
  CHECK(v == doctest::Approx(-0.5 * std::log(2.0 * std::numbers::pi) - 0.75 + std::log(0.5)).epsilon(1e-14));

  FmmGlobal exact{Eigen::MatrixXd::Constant(1, 1, 0.8), Eigen::VectorXd::Zero(1)};
  FmmConfig noisy = c;
  noisy.sigma_n = 0.2;
  noisy.pi = 0.3;
  const double fit = fmm_expected_loglik(Eigen::VectorXd::Constant(1, 0.8), Eigen::VectorXd::Ones(1), exact, noisy);
  CHECK(fit == doctest::Approx(-0.5 * std::log(2.0 * std::numbers::pi * 0.04) + std::log(0.3)).epsilon(1e-14));

  FmmConfig c4;
  c4.components = 4;
  c4.dim = 3;
  const Eigen::VectorXd x = Eigen::VectorXd::LinSpaced(3, 0.1, 0.7);
  FmmGlobal any{Eigen::MatrixXd::Random(4, 3), Eigen::VectorXd::Constant(4, 0.3)};
  const double off = fmm_expected_loglik(x, Eigen::VectorXd::Zero(4), any, c4);
  const double s2 = c4.noise_variance();
  CHECK(off == doctest::Approx(-1.5 * std::log(2.0 * std::numbers::pi * s2) - 0.5 * x.squaredNorm() / s2 +
                               4.0 * std::log(0.7)).epsilon(1e-14));
}

TEST_CASE("updates match the reference mean-field fixed point on tiny instances") {
  std::mt19937_64 rng(2024);
  for (int rep = 0; rep < 40; ++rep) {
    const Tiny t = random_tiny(rng);
    const double nv = t.config.noise_variance(), pv = t.config.prior_variance();
    const Eigen::MatrixXd nu = fit_nu(t, 1.0);
    // The local fixed point is a stationary point of the oracle ELBO in nu.
    // Differences are taken in logit(nu) so every probe stays inside (0, 1).
    for (Eigen::Index i = 0; i < nu.rows(); ++i) {
      for (Eigen::Index k = 0; k < nu.cols(); ++k) {
        const double v = nu(i, k);
        if (v <= 0.0 || v >= 1.0) continue;
        const double h = 1e-5, logit = std::log(v) - std::log1p(-v);
        Eigen::MatrixXd up = nu, dn = nu;
        up(i, k) = 1.0 / (1.0 + std::exp(-(logit + h)));
        dn(i, k) = 1.0 / (1.0 + std::exp(-(logit - h)));
        const double grad = (oracle_elbo(t.x, up, t.global.m, t.global.s2, t.config.pi, nv, pv, 1.0) -
                             oracle_elbo(t.x, dn, t.global.m, t.global.s2, t.config.pi, nv, pv, 1.0)) / (2 * h);
        CHECK(std::abs(grad) < 1e-6);
      }
    }
    // Repeated global sweeps with nu fixed reach the joint optimum over q(mu).
    FmmGlobal g = t.global;
    const std::vector<double> w(static_cast<std::size_t>(t.x.rows()), 1.0);
    for (int s = 0; s < 2000; ++s) g = fmm_global_step(t.x, nu, w, t.config, 1.0, g);
    const double base = oracle_elbo(t.x, nu, g.m, g.s2, t.config.pi, nv, pv, 1.0);
    for (Eigen::Index k = 0; k < g.m.rows(); ++k) {
      for (Eigen::Index d = 0; d < g.m.cols(); ++d) {
        const double h = 1e-6;
        FmmGlobal up = g, dn = g;
        up.m(k, d) += h;
        dn.m(k, d) -= h;
        const double grad = (oracle_elbo(t.x, nu, up.m, up.s2, t.config.pi, nv, pv, 1.0) -
                             oracle_elbo(t.x, nu, dn.m, dn.s2, t.config.pi, nv, pv, 1.0)) / (2 * h);
        CHECK(std::abs(grad) < 1e-5);
      }
      // closed form for the variance: 1/s2 = 1/prior_var + sum_n nu_nk / noise_var
      CHECK(1.0 / g.s2[k] == doctest::Approx(1.0 / pv + nu.col(k).sum() / nv).epsilon(1e-12));
    }
    CHECK(std::isfinite(base));
  }
}

TEST_CASE("model objective equals the oracle ELBO") {
  std::mt19937_64 rng(7);
  for (int rep = 0; rep < 20; ++rep) {
    const Tiny t = random_tiny(rng);
    const FmmModel model(t.config);
    const Eigen::VectorXd lambda = to_natural(t.global);
    const Eigen::MatrixXd nu = fit_nu(t, 0.7);
    std::vector<FmmLocal> locals;
    for (Eigen::Index i = 0; i < nu.rows(); ++i) locals.push_back(FmmLocal{nu.row(i).transpose(), true, 1});
    for (double temp : {1.0, 1.7, 6.0}) {
      const double ours = annealed_elbo(model, t.x, lambda, std::span<const FmmLocal>(locals), temp);
      const double oracle = oracle_elbo(t.x, nu, t.global.m, t.global.s2, t.config.pi,
                                        t.config.noise_variance(), t.config.prior_variance(), temp);
      CHECK(ours == doctest::Approx(oracle).epsilon(1e-12));
    }
  }
}

TEST_CASE("batch coordinate ascent never decreases the annealed ELBO") {
  std::mt19937_64 rng(99);
  for (int rep = 0; rep < 20; ++rep) {
    const Tiny t = random_tiny(rng);
    const FmmModel model(t.config, {1e-12, 1000});
    const double temp = 1.0 + 5.0 * std::uniform_real_distribution<double>(0.0, 1.0)(rng);
    Eigen::VectorXd lambda = to_natural(t.global);
    std::vector<std::size_t> all(static_cast<std::size_t>(t.x.rows()));
    std::iota(all.begin(), all.end(), 0);
    std::vector<FmmLocal> locals;
    auto refit = [&] {
      const auto cache = model.prepare(lambda);
      std::vector<FmmLocal> next;
      for (std::size_t i : all) next.push_back(model.local_step(t.x, i, cache, 1.0 / temp, locals.empty() ? nullptr : &locals[i]));
      locals = std::move(next);
    };
    refit();
    double prev = annealed_elbo(model, t.x, lambda, std::span<const FmmLocal>(locals), temp);
    for (int s = 0; s < 30; ++s) {
      lambda = global_step(model, t.x, all, std::span<const FmmLocal>(locals), lambda, 1.0 / temp, 1.0);
      const double g = annealed_elbo(model, t.x, lambda, std::span<const FmmLocal>(locals), temp);
      CHECK(g >= prev - 1e-8 * std::abs(prev));
      refit();
      const double l = annealed_elbo(model, t.x, lambda, std::span<const FmmLocal>(locals), temp);
      CHECK(l >= g - 1e-8 * std::abs(g));
      prev = l;
    }
  }
}

TEST_CASE("exact tempered log-likelihood") {
  FmmConfig c;
  c.components = 2;
  c.dim = 3;
  const FmmModel model(c);
  std::mt19937_64 rng(3);
  const Dataset x = Dataset::Random(2, 3);
  const Eigen::VectorXd lambda = model.initial_lambda(x, rng);
  const auto cache = model.prepare(lambda);
  const auto local = model.local_step(x, 1, cache, 1.0, nullptr);
  const std::vector<double> temps{1.0, 2.0, 5.0};
  const auto out = model.expected_tempered_log_lik(x, 1, local, cache, temps);
  const double ell = model.expected_log_lik(x, 1, local, cache);
  CHECK(out[0] == ell);
  for (std::size_t m = 1; m < temps.size(); ++m) {
    // (1/T) ell - per-datum log normalizer of the tempered likelihood
    const double per_datum = fmm_log_partition_value(c, 1, temps[m]) +
                             (1.0 - 1.0 / temps[m]) * 1.5 * std::log(2.0 * std::numbers::pi * c.noise_variance());
    CHECK(out[m] == doctest::Approx(ell / temps[m] - per_datum).epsilon(1e-13));
  }
}

TEST_CASE("temperature statistic drops the Gaussian normalizer") {
  FmmConfig c;
  c.components = 2;
  c.dim = 4;
  const FmmModel model(c);
  std::mt19937_64 rng(5);
  const Dataset x = Dataset::Random(3, 4);
  const auto cache = model.prepare(model.initial_lambda(x, rng));
  const auto local = model.local_step(x, 2, cache, 1.0, nullptr);
  const double base = -2.0 * std::log(2.0 * std::numbers::pi * c.noise_variance());
  CHECK(model.log_base_measure(x, 2) == doctest::Approx(base).epsilon(1e-15));
  CHECK(model.temperature_statistic(x, 2, local, cache) ==
        doctest::Approx(model.expected_log_lik(x, 2, local, cache) - base).epsilon(1e-14));
}

TEST_CASE("natural parameters round-trip") {
  FmmGlobal g{Eigen::MatrixXd::Random(3, 5), (Eigen::VectorXd::Random(3).array() + 2.0).matrix()};
  const auto back = from_natural(to_natural(g), 3, 5);
  CHECK((back.m - g.m).cwiseAbs().maxCoeff() < 1e-14);
  CHECK((back.s2 - g.s2).cwiseAbs().maxCoeff() < 1e-14);
  Eigen::VectorXd bad = to_natural(g);
  bad[15] = -1.0;
  CHECK_THROWS_AS(from_natural(bad, 3, 5), InvalidStateError);
  CHECK_THROWS_AS(from_natural(bad.head(10), 3, 5), ArgumentError);
}

TEST_CASE("generator moments") {
  FmmConfig c;
  const Eigen::MatrixXd features = toy_features(5);
  const Dataset x = fmm_generate(c, features, 10000, 41);
  CHECK(x.rows() == 10000);
  CHECK(x.cols() == 16);
  const Eigen::RowVectorXd mean = x.colwise().mean();
  const Eigen::RowVectorXd expected = 0.3 * features.colwise().sum();
  for (Eigen::Index d = 0; d < 16; ++d) {
    const Eigen::ArrayXd centered = x.col(d).array() - mean[d];
    const double se = std::sqrt(centered.square().sum() / 9999.0 / 10000.0);
    CHECK(std::abs(mean[d] - expected[d]) < 5.0 * se);
  }

  FmmConfig off = c;
  off.pi = 0.0;
  const Dataset noise = fmm_generate(off, features, 4000, 1);
  for (Eigen::Index d = 0; d < 16; ++d) CHECK(std::abs(noise.col(d).mean()) < 4.0 * 0.1 / std::sqrt(4000.0));

  FmmConfig on = c;
  on.pi = 1.0;
  const Dataset all_on = fmm_generate(on, features, 200, 2);
  const Eigen::RowVectorXd sum = features.colwise().sum();
  for (Eigen::Index i = 0; i < 200; ++i) CHECK((all_on.row(i) - sum).cwiseAbs().maxCoeff() < 0.6);
  const Eigen::RowVectorXd resid_mean = (all_on.rowwise() - sum).colwise().mean();
  CHECK(resid_mean.cwiseAbs().maxCoeff() < 4.0 * 0.1 / std::sqrt(200.0));

  CHECK(fmm_generate(c, features, 50, 3) == fmm_generate(c, features, 50, 3));
}

TEST_CASE("toy features and masks") {
  const auto masks = toy_masks();
  CHECK(masks.rows() == 8);
  CHECK(masks.cols() == 16);
  CHECK(((masks.array() == 0.0) || (masks.array() == 1.0)).all());
  const auto f = toy_features(3);
  for (Eigen::Index k = 0; k < 8; ++k) {
    const double w = f.row(k).maxCoeff();
    CHECK(w >= 0.5);
    CHECK(w <= 1.0);
    CHECK((f.row(k) - w * masks.row(k)).norm() == 0.0);
  }
  CHECK(parse_masks("10 # comment\n01\n") == (Eigen::MatrixXd(2, 2) << 1, 0, 0, 1).finished());
  CHECK_THROWS_AS(parse_masks("102\n"), ValidationError);
  CHECK_THROWS_AS(parse_masks("10\n1\n"), ValidationError);
}

TEST_CASE("matrix CSV round-trip") {
  const Eigen::MatrixXd m = Eigen::MatrixXd::Random(4, 3) * 1e3;
  std::stringstream ss;
  write_matrix_csv(ss, m);
  CHECK(read_matrix_csv(ss) == m);
  std::istringstream ragged("1,2\n3\n");
  CHECK_THROWS_AS(read_matrix_csv(ragged), ParseError);
  std::istringstream text("1,x\n");
  CHECK_THROWS_AS(read_matrix_csv(text), ParseError);
}

TEST_CASE("best-permutation recovery error") {
  const Eigen::MatrixXd truth = toy_features(1);
  std::vector<int> order(8);
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(4);
  std::shuffle(order.begin(), order.end(), rng);
  Eigen::MatrixXd permuted(8, 16);
  for (int k = 0; k < 8; ++k) permuted.row(k) = truth.row(order[k]);
  CHECK(best_permutation_rmse(permuted, truth) == 0.0);

  Eigen::MatrixXd shifted = permuted.array() + 0.25;
  CHECK(best_permutation_rmse(shifted, truth) == doctest::Approx(0.25).epsilon(1e-14));

  // brute force over all assignments of 3 of 4 learned rows
  const Eigen::MatrixXd small_truth = Eigen::MatrixXd::Random(3, 2);
  const Eigen::MatrixXd learned = Eigen::MatrixXd::Random(4, 2);
  double best = 1e300;
  for (int a = 0; a < 4; ++a)
    for (int b = 0; b < 4; ++b)
      for (int c = 0; c < 4; ++c) {
        if (a == b || b == c || a == c) continue;
        const double cost = (small_truth.row(0) - learned.row(a)).squaredNorm() +
                            (small_truth.row(1) - learned.row(b)).squaredNorm() +
                            (small_truth.row(2) - learned.row(c)).squaredNorm();
        best = std::min(best, cost);
      }
  CHECK(best_permutation_rmse(learned, small_truth) == doctest::Approx(std::sqrt(best / 6.0)).epsilon(1e-14));
  CHECK_THROWS_AS(best_permutation_rmse(small_truth, learned), ArgumentError);
}

TEST_CASE("configuration checks") {
  FmmConfig c;
  c.pi = 1.0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c.pi = 0.3;
  c.sigma_n = 0.0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  FmmConfig v;
  v.convention = VarianceConvention::variance;
  CHECK(v.noise_variance() == 0.1);
  CHECK(FmmConfig{}.noise_variance() == doctest::Approx(0.01).epsilon(1e-15));
  CHECK(variance_convention_from_string("variance") == VarianceConvention::variance);
  CHECK_THROWS_AS(variance_convention_from_string("sd"), ConfigError);
}

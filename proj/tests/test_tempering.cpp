#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "tempervi/errors.hpp"
#include "tempervi/partition.hpp"
#include "tempervi/tempering.hpp"

using namespace tempervi;

TEST_CASE("exponential grids") {
  const auto g2 = make_exponential_grid(2, 1.0, 10.0);
  CHECK(g2.size() == 2);
  CHECK(g2[0] == 1.0);
  CHECK(g2[1] == 10.0);

  const auto g3 = make_exponential_grid(3, 1.0, 10.0);
  CHECK(g3[1] == doctest::Approx(std::sqrt(10.0)).epsilon(1e-14));
  CHECK(g3[1] == doctest::Approx(3.16228).epsilon(1e-6));

  const auto g100 = make_exponential_grid(100, 1.0, 10.0);
  CHECK(g100[0] == 1.0);
  CHECK(g100[99] == 10.0);
  const double ratio = g100[1] / g100[0];
  for (std::size_t m = 1; m < 99; ++m) {
    CHECK(std::abs(g100[m + 1] / g100[m] - ratio) < 1e-12);
  }

  const auto single = make_exponential_grid(1, 1.0, 10.0);
  CHECK(single.size() == 1);
  CHECK(single[0] == 1.0);
  CHECK_THROWS_AS(make_exponential_grid(5, 2.0, 10.0), ArgumentError);
  CHECK_THROWS_AS(make_exponential_grid(5, 1.0, 0.5), ArgumentError);
  CHECK_THROWS_AS(make_exponential_grid(0, 1.0, 10.0), ArgumentError);
}

TEST_CASE("inverse-temperature grids") {
  const auto g1 = make_inverse_temp_grid(1);
  CHECK(g1[0] == 1.0);
  CHECK(g1.inverse_temps()[0] == 1.0);

  const auto g4 = make_inverse_temp_grid(4);
  const std::vector<double> temps{1.0, 4.0 / 3.0, 2.0, 4.0};
  for (std::size_t m = 0; m < 4; ++m) CHECK(g4[m] == doctest::Approx(temps[m]).epsilon(1e-15));
  const auto inv = g4.inverse_temps();
  const std::vector<double> inv_expected{1.0, 0.75, 0.5, 0.25};
  for (std::size_t m = 0; m < 4; ++m) CHECK(inv[m] == doctest::Approx(inv_expected[m]).epsilon(1e-15));

  const auto g100 = make_inverse_temp_grid(100);
  const auto inv100 = g100.inverse_temps();
  CHECK(inv100.front() == 1.0);
  CHECK(inv100.back() == doctest::Approx(0.01).epsilon(1e-14));
}

TEST_CASE("linear grids and grid invariants") {
  const auto g = make_linear_grid(4, 4.0);
  CHECK(g[0] == 1.0);
  CHECK(g[1] == 2.0);
  CHECK(g[3] == 4.0);
  CHECK_THROWS_AS(TemperatureGrid({1.0, 1.0}, GridSpacing::linear), ArgumentError);
  CHECK_THROWS_AS(TemperatureGrid({1.5, 2.0}, GridSpacing::linear), ArgumentError);
  CHECK_THROWS_AS(TemperatureGrid({}, GridSpacing::linear), ArgumentError);
  CHECK(grid_spacing_from_string(to_string(GridSpacing::inverse_linear)) == GridSpacing::inverse_linear);
  CHECK_THROWS_AS(grid_spacing_from_string("cubic"), ConfigError);
}

TEST_CASE("anneal schedule") {
  const AnnealSchedule s{10.0, 1.0, 1};
  CHECK(schedule_temperature(s, 0, 100.0) == 10.0);
  CHECK(schedule_temperature(s, 50, 100.0) == doctest::Approx(5.5).epsilon(1e-15));
  CHECK(schedule_temperature(s, 100, 100.0) == 1.0);
  CHECK(schedule_temperature(s, 12345, 100.0) == 1.0);

  const AnnealSchedule stepped{10.0, 1.0, 30};
  CHECK(schedule_temperature(stepped, 29, 100.0) == 10.0);
  CHECK(schedule_temperature(stepped, 30, 100.0) == schedule_temperature(s, 30, 100.0));
  CHECK(schedule_temperature(stepped, 59, 100.0) == schedule_temperature(s, 30, 100.0));

  for (const auto& sched : {s, stepped, AnnealSchedule{3.0, 2.5, 7}}) {
    double prev = schedule_temperature(sched, 0, 40.0);
    for (std::size_t t = 1; t < 400; ++t) {
      const double cur = schedule_temperature(sched, t, 40.0);
      CHECK(cur <= prev);
      CHECK(cur >= 1.0);
      prev = cur;
    }
    CHECK(prev == 1.0);
  }
  CHECK_THROWS_AS((AnnealSchedule{0.5, 1.0, 1}.validate()), ConfigError);
  CHECK_THROWS_AS((AnnealSchedule{2.0, 0.0, 1}.validate()), ConfigError);
  CHECK_THROWS_AS((AnnealSchedule{2.0, 1.0, 0}.validate()), ConfigError);
}

TEST_CASE("expected inverse temperature") {
  CHECK(expected_inverse_temperature(TemperaturePosterior(TemperatureGrid({1.0}, GridSpacing::linear), {1.0})) == 1.0);
  const TemperatureGrid g12({1.0, 2.0}, GridSpacing::linear);
  CHECK(expected_inverse_temperature(TemperaturePosterior(g12, {0.5, 0.5})) == doctest::Approx(0.75));
  const TemperatureGrid g14({1.0, 4.0}, GridSpacing::linear);
  CHECK(expected_inverse_temperature(TemperaturePosterior(g14, {0.2, 0.8})) == doctest::Approx(0.4));
  CHECK_THROWS_AS(TemperaturePosterior(g12, {0.5, 0.6}), ArgumentError);
  CHECK_THROWS_AS(TemperaturePosterior(g12, {1.0}), ArgumentError);
  CHECK(mean_temperature(g14) == 2.5);
}

TEST_CASE("global temperature update examples") {
  const TemperatureGrid one({1.0}, GridSpacing::exponential);
  CHECK(update_global_temperature(-1e9, one, std::vector<double>{1.0}, std::vector<double>{0.0})[0] == 1.0);

  const auto g = make_exponential_grid(6, 1.0, 10.0);
  const auto r = update_global_temperature(0.0, g, uniform_prior(6), std::vector<double>(6, 0.0));
  for (std::size_t m = 0; m < 6; ++m) CHECK(r[m] == doctest::Approx(1.0 / 6.0).epsilon(1e-14));

  const TemperatureGrid g12({1.0, 2.0}, GridSpacing::linear);
  const auto r2 = update_global_temperature(-10.0, g12, std::vector<double>{0.5, 0.5},
                                            std::vector<double>{0.0, 3.0});
  // logits -10 + log 0.5 and -5 + log 0.5 - 3; gap 2
  const double lo = 1.0 / (1.0 + std::exp(2.0));
  CHECK(r2[0] == doctest::Approx(lo).epsilon(1e-14));
  CHECK(r2[0] == doctest::Approx(0.1192).epsilon(1e-3));
  CHECK(r2[1] == doctest::Approx(0.8808).epsilon(1e-4));

  CHECK_THROWS_AS(update_global_temperature(std::nan(""), g12, uniform_prior(2), std::vector<double>{0.0, 1.0}),
                  NumericError);
  CHECK_THROWS_AS(update_global_temperature(1.0, g12, uniform_prior(2), std::vector<double>{0.0}), ConfigError);
}

TEST_CASE("global temperature update is monotone in the statistic") {
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int rep = 0; rep < 50; ++rep) {
    const std::size_t m_count = 2 + rng() % 30;
    std::vector<double> temps{1.0};
    for (std::size_t m = 1; m < m_count; ++m) temps.push_back(temps.back() + 0.01 + 2.0 * u(rng));
    const TemperatureGrid grid(temps, GridSpacing::linear);
    std::vector<double> prior(m_count), log_c(m_count, 0.0);
    double total = 0.0;
    for (auto& p : prior) total += (p = 0.05 + u(rng));
    for (auto& p : prior) p /= total;
    for (std::size_t m = 1; m < m_count; ++m) log_c[m] = log_c[m - 1] + 50.0 * u(rng);
    double prev = 0.0;
    for (int step = 0; step <= 400; ++step) {
      const double s = -2e4 + 100.0 * step;
      const double e = expected_inverse_temperature(update_global_temperature(s, grid, prior, log_c));
      CHECK(e > 0.0);
      CHECK(e <= 1.0 + 1e-15);
      if (step > 0) CHECK(e >= prev - 1e-14);
      prev = e;
    }
  }
}

TEST_CASE("global temperature update checks the partition table grid") {
  const auto g = make_exponential_grid(3, 1.0, 10.0);
  PartitionTable table{make_exponential_grid(4, 1.0, 10.0), std::vector<double>(4, 0.0),
                       std::vector<double>(4, 0.0), {}};
  CHECK_THROWS_AS(update_global_temperature(0.0, g, uniform_prior(3), table), ConfigError);
}

TEST_CASE("local temperature update examples") {
  const TemperatureGrid one({1.0}, GridSpacing::inverse_linear);
  CHECK(update_local_temperature(std::vector<double>{-3.0}, one, std::vector<double>{1.0})[0] == 1.0);

  const TemperatureGrid g12({1.0, 2.0}, GridSpacing::linear);
  const auto r = update_local_temperature(std::vector<double>{-4.0, -4.0}, g12, std::vector<double>{0.5, 0.5});
  const double a = -4.0 + std::log(0.5);
  const double expected0 = 1.0 / (1.0 + std::exp(a / 2.0 - a));
  CHECK(r[0] == doctest::Approx(expected0).epsilon(1e-14));
  CHECK(r[0] == doctest::Approx(0.0874).epsilon(1e-3));
  CHECK(r[1] == doctest::Approx(0.9126).epsilon(1e-4));

  const auto sharp = update_local_temperature(std::vector<double>{-1.0, -100.0}, g12, std::vector<double>{0.5, 0.5});
  CHECK(1.0 - sharp[0] < 1e-20);
  CHECK(sharp[1] > 0.0);
  CHECK(sharp[1] < 1e-20);

  CHECK_THROWS_AS(update_local_temperature(std::vector<double>{-1.0}, g12, uniform_prior(2)), ArgumentError);
}

TEST_CASE("local temperature weighting variants") {
  const TemperatureGrid g12({1.0, 2.0}, GridSpacing::linear);
  const std::vector<double> ll{-3.0, -5.0};
  const std::vector<double> prior{0.25, 0.75};
  auto gap = [&](LocalTemperatureWeighting w) {
    const auto r = update_local_temperature(ll, g12, prior, w);
    return std::log(r[1] / r[0]);
  };
  CHECK(gap(LocalTemperatureWeighting::scaled) ==
        doctest::Approx(0.5 * (-5.0 + std::log(0.75)) - (-3.0 + std::log(0.25))));
  CHECK(gap(LocalTemperatureWeighting::prior_outside) ==
        doctest::Approx(0.5 * -5.0 + std::log(0.75) - (-3.0 + std::log(0.25))));
  CHECK(gap(LocalTemperatureWeighting::unscaled) ==
        doctest::Approx(-5.0 + std::log(0.75) - (-3.0 + std::log(0.25))));
  for (auto w : {LocalTemperatureWeighting::scaled, LocalTemperatureWeighting::prior_outside,
                 LocalTemperatureWeighting::unscaled}) {
    CHECK(local_weighting_from_string(to_string(w)) == w);
  }
}

TEST_CASE("posterior weights stay on the simplex for extreme logits") {
  const auto g = make_exponential_grid(100, 1.0, 10.0);
  for (double s : {-1e12, -1e6, -1.0, 0.0, 1e6}) {
    const auto r = update_global_temperature(s, g, uniform_prior(100), std::vector<double>(100, 0.0));
    double total = 0.0;
    for (double w : r.weights()) {
      CHECK(w >= 0.0);
      total += w;
    }
    CHECK(std::abs(total - 1.0) <= 1e-12);
  }
}

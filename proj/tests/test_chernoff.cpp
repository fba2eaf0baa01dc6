#include "doctest.h"

#include "test_support.hpp"

#include <cmath>

using namespace tiltwork;
using namespace tiltwork::testing;

TEST_CASE("FiniteDistribution normalises its support") {
  VectorXd values(5);
  values << 2, 1, 2 + 1e-13, 5, 3;
  VectorXd probs(5);
  probs << 0.25, 0.25, 0.25, 0.0, 0.25;
  const FiniteDistributiond d(values, probs);
  REQUIRE(d.size() == 3);
  CHECK(d.values()[0] == 1);
  CHECK(d.values()[1] == 2);
  CHECK(d.probs()[1] == 0.5);
  CHECK(d.values()[2] == 3);
  CHECK(d.mean() == doctest::Approx(2.0));
}

TEST_CASE("FiniteDistribution rejects invalid input") {
  CHECK_THROWS_AS(FiniteDistributiond(VectorXd::Zero(2), VectorXd::Constant(3, 1.0 / 3)), Error);
  CHECK_THROWS_AS(FiniteDistributiond(VectorXd::LinSpaced(2, 0, 1), VectorXd::Constant(2, 0.45)), Error);
  VectorXd neg(2);
  neg << 1.5, -0.5;
  CHECK_THROWS_AS(FiniteDistributiond(VectorXd::LinSpaced(2, 0, 1), neg), Error);
  VectorXd nan_values(2);
  nan_values << 0, std::nan("");
  CHECK_THROWS_AS(FiniteDistributiond(nan_values, VectorXd::Constant(2, 0.5)), Error);
}

TEST_CASE("log_mgf examples") {
  Generator gen(1);
  const auto any = gen.distribution();
  CHECK(log_mgf(any, 0.0) == 0.0);
  const auto coin = fair_coin();
  CHECK(log_mgf(coin, std::log(3.0)) == doctest::Approx(std::log(2.0)).epsilon(1e-14));
  for (double s : {-3.0, 0.5, 7.0}) {
    CHECK(log_mgf(coin, s) == doctest::Approx(std::log((1 + std::exp(s)) / 2)).epsilon(1e-13));
  }
  const auto point = FiniteDistributiond::point_mass(1.7);
  CHECK(log_mgf(point, 3.0) == doctest::Approx(3.0 * 1.7));
  CHECK(log_mgf(point, -2.0) == doctest::Approx(-2.0 * 1.7));
}

TEST_CASE("log_mgf does not overflow for large |s y|") {
  VectorXd values(2);
  values << -1, 1;
  const FiniteDistributiond d(values, VectorXd::Constant(2, 0.5));
  for (double s : {700.0, -700.0, 1e4, -1e4}) {
    const double v = log_mgf(d, s);
    CHECK(std::isfinite(v));
    CHECK(v == doctest::Approx(std::abs(s) + std::log(0.5)).epsilon(1e-12));
  }
}

TEST_CASE("tilt examples") {
  const auto coin = fair_coin();
  const auto base = tilt(coin, 0.0);
  CHECK(base.mean == 0.5);
  CHECK(base.variance == 0.25);
  CHECK(base.log_mgf == 0.0);
  CHECK((base.tilted.probs() - coin.probs()).cwiseAbs().maxCoeff() <= 1e-12);
  for (double s : {-4.0, -1.0, 0.3, 2.5}) {
    const auto r = tilt(coin, s);
    const double e = std::exp(s);
    CHECK(r.mean == doctest::Approx(e / (1 + e)).epsilon(1e-14));
    CHECK(r.variance == doctest::Approx(e / ((1 + e) * (1 + e))).epsilon(1e-13));
    CHECK(std::abs(r.tilted.probs().sum() - 1) <= 1e-12);
    CHECK(r.tilted.probs()[1] == doctest::Approx(e / (1 + e)));
  }
}

TEST_CASE("rate_at_force examples") {
  const auto coin = fair_coin();
  const auto zero = rate_at_force(coin, 0.0);
  CHECK(zero.rate == 0.0);
  CHECK(zero.level == 0.5);
  for (double s : {-5.0, -1.0, 1.0, 3.0}) {
    const double u = std::exp(s) / (1 + std::exp(s));
    CHECK(rate_at_force(coin, s).rate == doctest::Approx(std::log(2.0) - h2(u)).epsilon(1e-12));
  }
  CHECK(rate_at_force(coin, std::log(1.0 / 3)).rate == doctest::Approx(kBssRateQuarter).epsilon(1e-13));
}

TEST_CASE("force_at_level examples and errors") {
  const auto coin = fair_coin();
  const auto at_mean = force_at_level(coin, 0.5);
  CHECK(at_mean.force == 0.0);
  CHECK(at_mean.rate == 0.0);

  const auto quarter = force_at_level(coin, 0.25);
  CHECK(quarter.status == SolveStatus::Interior);
  CHECK(quarter.force == doctest::Approx(std::log(1.0 / 3)).epsilon(1e-11));
  CHECK(quarter.rate == doctest::Approx(kBssRateQuarter).epsilon(1e-12));

  const auto top = force_at_level(coin, 1.0);
  CHECK(top.status == SolveStatus::Extreme);
  CHECK(top.force == infinity<double>());
  CHECK(top.rate == doctest::Approx(std::log(2.0)));
  const auto bottom = force_at_level(coin, 0.0);
  CHECK(bottom.force == -infinity<double>());

  try {
    force_at_level(coin, 1.5);
    FAIL("expected LevelInfeasible");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::LevelInfeasible);
  }
  const auto point = FiniteDistributiond::point_mass(2.0);
  CHECK(force_at_level(point, 2.0).rate == 0.0);
  CHECK_THROWS_AS(force_at_level(point, 2.5), Error);
}

TEST_CASE("rate_work_integral and mean_via_integral examples") {
  const auto coin = fair_coin();
  const double s = std::log(1.0 / 3);
  CHECK(rate_work_integral(coin, 0.0) == 0.0);
  CHECK(std::abs(rate_work_integral(coin, s, 1e-9) - kBssRateQuarter) <= 1e-9);
  CHECK(rate_work_integral(FiniteDistributiond::point_mass(3.0), -2.0) == 0.0);

  CHECK(mean_via_integral(coin, 0.0) == 0.5);
  CHECK(std::abs(mean_via_integral(coin, s, 1e-10) - 0.25) <= 1e-10);
  CHECK(std::abs(mean_via_integral(coin, 2.0, 1e-10) - std::exp(2.0) / (1 + std::exp(2.0))) <= 1e-10);
}

TEST_CASE("riemann_sandwich examples") {
  const auto coin = fair_coin();
  const auto degenerate = riemann_sandwich(coin, std::vector<double>{0.0});
  CHECK(degenerate.left == 0.0);
  CHECK(degenerate.right == 0.0);

  const auto fine = riemann_sandwich(coin, uniform_partition(std::log(1.0 / 3), 1000));
  CHECK(std::abs(fine.left - kBssRateQuarter) <= 1e-3);
  CHECK(std::abs(fine.right - kBssRateQuarter) <= 1e-3);
  CHECK(fine.lower() <= kBssRateQuarter);
  CHECK(fine.upper() >= kBssRateQuarter);

  CHECK_THROWS_AS(riemann_sandwich(coin, std::vector<double>{0.1, 0.5}), Error);
  CHECK_THROWS_AS(riemann_sandwich(coin, std::vector<double>{0.0, -0.5, -0.2}), Error);
  CHECK_THROWS_AS(riemann_sandwich(coin, std::vector<double>{}), Error);
}

TEST_CASE("kl_free_energy_gap examples") {
  const auto coin = fair_coin();
  CHECK(std::abs(kl_free_energy_gap(coin, coin)) <= 1e-15);
  CHECK(kl_free_energy_gap(FiniteDistributiond::point_mass(0.0), coin) == doctest::Approx(std::log(2.0)));
  VectorXd q(2);
  q << 0.75, 0.25;
  const FiniteDistributiond biased(VectorXd::LinSpaced(2, 0, 1), q);
  CHECK(kl_free_energy_gap(biased, coin) == doctest::Approx(kBssRateQuarter).epsilon(1e-13));
  try {
    kl_free_energy_gap(coin, FiniteDistributiond::point_mass(0.0));
    FAIL("expected SupportMismatch");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::SupportMismatch);
  }
}

TEST_CASE("chernoff properties on random distributions") {
  Generator gen(20240611);
  for (int trial = 0; trial < 200; ++trial) {
    const auto d = gen.distribution();
    const double scale = std::max(1.0, d.values().cwiseAbs().maxCoeff());
    double s1 = gen.uniform(-5, 5);
    double s2 = gen.uniform(-5, 5);
    if (s1 > s2) std::swap(s1, s2);

    // Convexity of phi and monotone tilted mean.
    CHECK(log_mgf(d, (s1 + s2) / 2) <= (log_mgf(d, s1) + log_mgf(d, s2)) / 2 + 1e-12);
    CHECK(tilt_moments(d, s1).mean <= tilt_moments(d, s2).mean + 1e-12);

    // phi' = mean, phi'' = variance.
    const double s = s1;
    const double h = 1e-5;
    const auto m = tilt_moments(d, s);
    const double first = (log_mgf(d, s + h) - log_mgf(d, s - h)) / (2 * h);
    CHECK(std::abs(first - m.mean) <= 1e-7 * scale);
    const double h2nd = 1e-4;
    const double second =
        (log_mgf(d, s + h2nd) - 2 * log_mgf(d, s) + log_mgf(d, s - h2nd)) / (h2nd * h2nd);
    CHECK(std::abs(second - m.variance) <= 1e-6 * scale * scale);

    // Work integral route against the Legendre route.
    CHECK(std::abs(rate_work_integral(d, s, 1e-10) - rate_at_force(d, s).rate) <= 1e-8);

    // Sandwich brackets the rate and tightens under refinement.
    const auto coarse = riemann_sandwich(d, uniform_partition(s, 50));
    const auto fine = riemann_sandwich(d, uniform_partition(s, 100));
    const double rate = rate_at_force(d, s).rate;
    CHECK(coarse.lower() <= rate + 1e-12);
    CHECK(coarse.upper() >= rate - 1e-12);
    CHECK(fine.gap() <= coarse.gap() + 1e-15);

    CHECK(rate >= -1e-12);
    CHECK(kl_free_energy_gap(tilt(d, s).tilted, d) >= -1e-12);
  }
}

TEST_CASE("force_at_level round trip") {
  Generator gen(77);
  for (int trial = 0; trial < 200; ++trial) {
    const auto d = gen.distribution();
    const double s = gen.uniform(-10, 10);
    const auto m = tilt_moments(d, s);
    if (m.mean - d.min_value() <= 1e-9 || d.max_value() - m.mean <= 1e-9) continue;
    const auto r = force_at_level(d, m.mean, 0.0);
    CHECK(std::abs(tilt_moments(d, r.force).mean - m.mean) <= 1e-13 * d.range() + 1e-15);
    // Recovered force is accurate wherever the map s -> <y>_s is not flat.
    if (m.variance > 1e-4) CHECK(std::abs(r.force - s) <= 1e-8);
  }
}

TEST_CASE("the KL gap of a tilted law equals the rate at that force") {
  Generator gen(5);
  for (int trial = 0; trial < 50; ++trial) {
    const auto d = gen.distribution();
    const double s = gen.uniform(-3, 3);
    CHECK(std::abs(kl_free_energy_gap(tilt(d, s).tilted, d) - rate_at_force(d, s).rate) <= 1e-10);
  }
}

TEST_CASE("templates instantiate with long double") {
  using LD = long double;
  const FiniteDistribution<LD> coin(Vector<LD>::LinSpaced(2, 0, 1), Vector<LD>::Constant(2, 0.5L));
  const auto r = force_at_level(coin, 0.25L, 0.0L);
  CHECK(std::abs(static_cast<double>(r.rate) - kBssRateQuarter) <= 1e-15);
}

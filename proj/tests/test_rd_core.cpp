#include "doctest.h"

#include "test_support.hpp"

#include <cmath>

using namespace tiltwork;
using namespace tiltwork::testing;

namespace {

bool same_dist(const FiniteDistributiond& a, const VectorXd& values, const VectorXd& probs) {
  return a.size() == values.size() && (a.values() - values).cwiseAbs().maxCoeff() <= 1e-12 &&
         (a.probs() - probs).cwiseAbs().maxCoeff() <= 1e-12;
}

}  // namespace

TEST_CASE("RdProblem drops zero-probability letters and validates") {
  VectorXd p(3);
  p << 0.5, 0.0, 0.5;
  VectorXd q(2);
  q << 1.0, 0.0;
  MatrixXd d(3, 2);
  d << 0, 1, 5, 5, 2, 3;
  const RdProblemd problem(p, q, d);
  CHECK(problem.source_size() == 2);
  CHECK(problem.coding_size() == 1);
  CHECK(problem.source_index() == std::vector<Eigen::Index>{0, 2});
  CHECK(problem.zero_force_distortion() == doctest::Approx(1.0));

  CHECK_THROWS_AS(RdProblemd(VectorXd::Constant(2, 0.45), q, MatrixXd::Zero(2, 2)), Error);
  CHECK_THROWS_AS(RdProblemd(VectorXd::Constant(2, 0.5), q, MatrixXd::Zero(3, 2)), Error);
  MatrixXd inf_d = MatrixXd::Zero(2, 2);
  inf_d(0, 1) = infinity<double>();
  CHECK_THROWS_AS(RdProblemd(VectorXd::Constant(2, 0.5), VectorXd::Constant(2, 0.5), inf_d), Error);
}

TEST_CASE("build_delta_dists examples") {
  for (const auto& d : build_delta_dists(bss_hamming())) {
    CHECK(same_dist(d, VectorXd::LinSpaced(2, 0, 1), VectorXd::Constant(2, 0.5)));
  }

  MatrixXd single(2, 1);
  single << 0.3, 1.1;
  const RdProblemd one(VectorXd::Constant(2, 0.5), VectorXd::Ones(1), single);
  const auto dists = build_delta_dists(one);
  CHECK(same_dist(dists[0], VectorXd::Constant(1, 0.3), VectorXd::Ones(1)));
  CHECK(same_dist(dists[1], VectorXd::Constant(1, 1.1), VectorXd::Ones(1)));

  MatrixXd d(2, 3);
  d << 0, 1, 1, 1, 0, 1;
  VectorXd q(3);
  q << 0.25, 0.25, 0.5;
  VectorXd grouped(2);
  grouped << 0.25, 0.75;
  for (const auto& dist : build_delta_dists(RdProblemd(VectorXd::Constant(2, 0.5), q, d))) {
    CHECK(same_dist(dist, VectorXd::LinSpaced(2, 0, 1), grouped));
  }
}

TEST_CASE("distortion_at_force examples") {
  const auto bss = bss_hamming();
  const auto zero = distortion_at_force(bss, 0.0);
  CHECK(zero.distortion == 0.5);
  CHECK(zero.rate == 0.0);
  CHECK(zero.mmse == 0.25);

  const auto quarter = distortion_at_force(bss, std::log(1.0 / 3));
  CHECK(quarter.distortion == doctest::Approx(0.25).epsilon(1e-14));
  CHECK(quarter.rate == doctest::Approx(kBssRateQuarter).epsilon(1e-13));

  const auto asym = asymmetric_2x2();
  const auto a0 = distortion_at_force(asym, 0.0);
  CHECK(a0.distortion == doctest::Approx(asym.zero_force_distortion()));
  CHECK(a0.rate == 0.0);
  CHECK_THROWS_AS(distortion_at_force(asym, std::nan("")), Error);
}

TEST_CASE("RdPoint invariants") {
  Generator gen(3);
  for (int trial = 0; trial < 100; ++trial) {
    const auto p = gen.problem();
    const auto pt = distortion_at_force(p, gen.uniform(-10, 0));
    CHECK(std::abs(pt.distortion - p.source_probs().dot(pt.per_symbol_mean)) <= 1e-12);
    CHECK(std::abs(pt.mmse - p.source_probs().dot(pt.per_symbol_var)) <= 1e-12);
    CHECK(pt.rate >= 0);
  }
}

TEST_CASE("force_at_distortion examples and boundaries") {
  const auto bss = bss_hamming();
  const auto at_d0 = force_at_distortion(bss, 0.5);
  CHECK(at_d0.s == 0.0);
  CHECK(at_d0.rate == 0.0);

  const auto quarter = force_at_distortion(bss, 0.25);
  CHECK(quarter.s == doctest::Approx(std::log(1.0 / 3)).epsilon(1e-11));
  CHECK(quarter.rate == doctest::Approx(std::log(2.0) - h2(0.25)).epsilon(1e-12));

  const auto boundary = force_at_distortion(bss, 0.0);
  CHECK(boundary.status == SolveStatus::Extreme);
  CHECK(boundary.s == -infinity<double>());
  CHECK(boundary.rate == doctest::Approx(std::log(2.0)));

  const auto above = force_at_distortion(bss, 0.7);
  CHECK(above.status == SolveStatus::AboveZeroForce);
  CHECK(above.s == 0.0);
  CHECK(above.rate == 0.0);

  try {
    force_at_distortion(asymmetric_2x2(), -0.1);
    FAIL("expected DistortionTooLow");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::DistortionTooLow);
  }
}

TEST_CASE("force_at_distortion meets its tolerance") {
  Generator gen(11);
  for (int trial = 0; trial < 100; ++trial) {
    const auto p = gen.problem();
    const double target = gen.feasible_distortion(p, 0.001, 0.999);
    for (double tol : {1e-6, 1e-10, 1e-13}) {
      const auto pt = force_at_distortion(p, target, tol);
      CHECK(pt.s <= 0);
      CHECK(std::abs(pt.distortion - target) <= tol * p.distortion_range());
    }
  }
}

TEST_CASE("rate_legendre agrees with the dense grid maximum") {
  Generator gen(12);
  for (int trial = 0; trial < 30; ++trial) {
    const auto p = gen.problem(3, 3);
    const double target = gen.feasible_distortion(p, 0.3, 0.7);
    CHECK(std::abs(rate_legendre(p, target) - oracle::legendre_grid_max(p, target)) <= 1e-6);
  }
  const auto bss = bss_hamming();
  CHECK(std::abs(oracle::legendre_grid_max(bss, 0.25) - kBssRateQuarter) <= 1e-6);
  CHECK(std::abs(oracle::legendre_grid_max(bss, 0.5)) <= 1e-6);
}

TEST_CASE("equal_force_allocation examples") {
  const auto bss = bss_hamming();
  const auto sym = equal_force_allocation(bss, 0.25);
  CHECK(sym.allocation.per_symbol_distortion[0] == doctest::Approx(0.25).epsilon(1e-12));
  CHECK(sym.allocation.per_symbol_distortion[1] == doctest::Approx(0.25).epsilon(1e-12));

  const auto asym = asymmetric_2x2();
  const double target = 0.5 * (asym.min_distortion() + asym.zero_force_distortion());
  const auto a = equal_force_allocation(asym, target);
  CHECK(std::abs(a.allocation.average(asym.source_probs()) - target) <= 1e-12);
  CHECK(a.allocation.satisfies(asym.source_probs(), target));
  CHECK(std::abs(a.rate - rate_legendre(asym, target)) <= 1e-10);

  const auto at_d0 = equal_force_allocation(asym, asym.zero_force_distortion());
  CHECK(at_d0.rate == 0.0);
  for (Eigen::Index x = 0; x < 2; ++x) {
    CHECK(at_d0.allocation.per_symbol_distortion[x] == doctest::Approx(asym.delta_dists()[x].mean()));
  }
  const auto boundary = equal_force_allocation(bss, 0.0);
  CHECK(boundary.rate == doctest::Approx(std::log(2.0)));
}

TEST_CASE("mmse examples") {
  const auto bss = bss_hamming();
  for (double s : {-6.0, -1.0, 0.0}) {
    CHECK(mmse(bss, s) == doctest::Approx(std::exp(s) / std::pow(1 + std::exp(s), 2)).epsilon(1e-13));
  }
  MatrixXd single(2, 1);
  single << 0.3, 1.1;
  const RdProblemd point(VectorXd::Constant(2, 0.5), VectorXd::Ones(1), single);
  CHECK(mmse(point, -3.0) == 0.0);
  // Letter 0: {0, 1} halves (var 1/4); letter 1: {0, 2} halves (var 1).
  CHECK(mmse(asymmetric_2x2(), 0.0) == doctest::Approx(0.7 * 0.25 + 0.3 * 1.0));
}

TEST_CASE("integral routes") {
  const auto bss = bss_hamming();
  const double s = std::log(1.0 / 3);
  CHECK(rate_mmse_integral(bss, 0.0) == 0.0);
  CHECK(std::abs(rate_mmse_integral(bss, s, 1e-10) - kBssRateQuarter) <= 1e-9);

  // Reference values for s = -1 from an extended-precision quadrature.
  const auto asym = asymmetric_2x2();
  CHECK(std::abs(rate_mmse_integral(asym, -1.0, 1e-10) - 0.176004847812030459) <= 1e-9);
  CHECK(std::abs(rate_mmse_integral(asym, -1.0, 1e-10) -
                 rate_legendre(asym, distortion_at_force(asym, -1.0).distortion)) <= 1e-7);

  CHECK(distortion_mmse_integral(bss, 0.0) == 0.5);
  CHECK(std::abs(distortion_mmse_integral(bss, s, 1e-10) - 0.25) <= 1e-9);
  CHECK(std::abs(distortion_mmse_integral(asym, -1.0, 1e-10) - 0.259780748172267118) <= 1e-9);
}

TEST_CASE("sandwich_bounds") {
  const auto bss = bss_hamming();
  const double s = std::log(1.0 / 3);
  const auto single = sandwich_bounds(bss, std::vector<double>{0.0, s});
  CHECK(single.left == 0.0);
  CHECK(single.right == doctest::Approx(s * (0.25 - 0.5)));
  CHECK(single.lower() <= kBssRateQuarter);
  CHECK(single.upper() >= kBssRateQuarter);

  const auto b1000 = sandwich_bounds(bss, uniform_partition(s, 1000));
  const auto b2000 = sandwich_bounds(bss, uniform_partition(s, 2000));
  CHECK(std::abs(b1000.left - kBssRateQuarter) <= 1e-3);
  CHECK(std::abs(b1000.right - kBssRateQuarter) <= 1e-3);
  CHECK(b2000.gap() <= b1000.gap());
  CHECK_THROWS_AS(sandwich_bounds(bss, std::vector<double>{0.0, -1.0, -0.5}), Error);
}

TEST_CASE("observable_sweep examples") {
  const auto bss = bss_hamming();
  const double s = -1.3;
  const auto constant = observable_sweep(bss, MatrixXd::Constant(2, 2, 2.5), s);
  CHECK(constant.integral == doctest::Approx(2.5).epsilon(1e-12));
  CHECK(constant.direct == doctest::Approx(2.5).epsilon(1e-12));

  const auto asym = asymmetric_2x2();
  const auto same = observable_sweep(asym, asym.distortion(), -0.8, 1e-11);
  CHECK(std::abs(same.integral - distortion_mmse_integral(asym, -0.8, 1e-11)) <= 1e-9);
  CHECK(std::abs(same.direct - distortion_at_force(asym, -0.8).distortion) <= 1e-12);

  MatrixXd length(2, 2);
  length.rowwise() = (-bss.coding_probs().array().log()).matrix().transpose();
  for (double sv : {-0.5, -2.0, -5.0}) {
    const auto r = observable_sweep(bss, length, sv);
    CHECK(std::abs(r.integral - std::log(2.0)) <= 1e-9);
    CHECK(std::abs(r.direct - std::log(2.0)) <= 1e-12);
  }
  CHECK_THROWS_AS(observable_sweep(bss, MatrixXd::Zero(3, 2), s), Error);
}

TEST_CASE("observable_sweep routes agree on random problems") {
  Generator gen(31);
  for (int trial = 0; trial < 40; ++trial) {
    const auto p = gen.problem();
    const MatrixXd t = gen.matrix(p.source_size(), p.coding_size(), -1, 3);
    const auto r = observable_sweep(p, t, gen.uniform(-6, 0), 1e-10);
    CHECK(std::abs(r.integral - r.direct) <= 1e-10 + 1e-8);
  }
}

TEST_CASE("rd_curve") {
  const auto bss = bss_hamming();
  const auto single = rd_curve(bss, std::vector<double>{0.0});
  REQUIRE(single.size() == 1);
  CHECK(single[0].rate == 0.0);

  std::vector<double> grid;
  for (int i = 0; i < 50; ++i) grid.push_back(-6.0 * i / 49);
  const auto curve = rd_curve(bss, grid);
  REQUIRE(curve.size() == 50);
  for (std::size_t i = 0; i < curve.size(); ++i) {
    CHECK(std::abs(curve[i].rate - (std::log(2.0) - h2(curve[i].distortion))) <= 1e-9);
    if (i > 0) {
      CHECK(curve[i].s < curve[i - 1].s);
      CHECK(curve[i].rate >= curve[i - 1].rate);
      CHECK(curve[i].distortion <= curve[i - 1].distortion);
    }
  }
  CHECK_THROWS_AS(rd_curve(bss, std::vector<double>{0.5}), Error);
}

TEST_CASE("curve shape and derivative identities on random problems") {
  Generator gen(41);
  for (int trial = 0; trial < 60; ++trial) {
    const auto p = gen.problem();
    const double lo = gen.feasible_distortion(p, 0.1, 0.9);
    const double hi = gen.feasible_distortion(p, 0.1, 0.9);
    const double r_lo = rate_legendre(p, std::min(lo, hi));
    const double r_hi = rate_legendre(p, std::max(lo, hi));
    CHECK(r_lo >= r_hi - 1e-12);
    CHECK(rate_legendre(p, (lo + hi) / 2) <= (r_lo + r_hi) / 2 + 1e-9);

    const double s = force_at_distortion(p, lo).s;
    const double h = 1e-5;
    const double scale = std::max(1.0, p.distortion().cwiseAbs().maxCoeff());
    const double slope = (distortion_at_force(p, s + h).distortion -
                          distortion_at_force(p, s - h).distortion) / (2 * h);
    CHECK(std::abs(slope - mmse(p, s)) <= 1e-6 * scale * scale);

    const auto a = distortion_at_force(p, s + h);
    const auto b = distortion_at_force(p, s - h);
    CHECK(std::abs((a.rate - b.rate) / (a.distortion - b.distortion) - s) <= 1e-5);
  }
}

TEST_CASE("rd_core instantiates with long double") {
  using LD = long double;
  Matrix<LD> d(2, 2);
  d << 0, 1, 1, 0;
  const RdProblem<LD> bss(Vector<LD>::Constant(2, 0.5L), Vector<LD>::Constant(2, 0.5L), d);
  CHECK(std::abs(static_cast<double>(rate_legendre(bss, 0.25L, 0.0L)) - kBssRateQuarter) <= 1e-15);
}

#include "lapcert/laplace.hpp"
#include "lapcert/potential.hpp"
#include "lapcert/random.hpp"

#include <doctest.h>

#include <cmath>

using namespace lapcert;

namespace {

TargetPotential linear_potential() {
  TargetPotential f;
  f.name = "linear";
  f.dim = 1;
  f.n = 10.0;
  f.convex = true;
  f.value = [](const Vec& t) { return t[0]; };
  f.gradient = [](const Vec&) { return Vec::Ones(1); };
  f.hessian = [](const Vec&) { return Mat::Zero(1, 1); };
  return f;
}

}  // namespace

TEST_SUITE("laplace") {
  TEST_CASE("Newton lands on the quadratic minimizer") {
    Mat Q(2, 2);
    Q << 2.0, 0.5, 0.5, 1.0;
    Vec a(2);
    a << 0.7, -1.1;
    const LaplaceFit fit = find_mode(make_quadratic(Q, a, 100.0), Vec::Zero(2));
    CHECK((fit.mode - a).norm() < 1e-12);
    CHECK(fit.H.isApprox(Q, 1e-14));
    CHECK(fit.precision().isApprox(100.0 * Q, 1e-14));
    CHECK(fit.iterations <= 2);
  }

  TEST_CASE("Newton meets the gradient tolerance from far starts") {
    Rng rng(4);
    for (int d = 1; d <= 5; ++d) {
      const TargetPotential f = make_cubic_radial(d, 50.0);
      const Vec start = 20.0 * standard_normal(rng, d);
      const LaplaceFit fit = find_mode(f, start);
      CHECK(fit.mode.norm() < 1e-8);
      CHECK(fit.grad_norm <= 1e-8 * (1.0 + fit.initial_grad_norm));
    }
  }

  TEST_CASE("unbounded potentials raise ConvergenceError") {
    CHECK_THROWS_AS(find_mode(linear_potential(), Vec::Zero(1)), ConvergenceError);
  }

  TEST_CASE("start outside the domain is rejected") {
    TargetPotential f = make_cubic_radial(1, 10.0);
    f.in_domain = [](const Vec& t) { return t[0] > 0.0; };
    CHECK_THROWS_AS(find_mode(f, Vec::Constant(1, -1.0)), DomainError);
  }

  TEST_CASE("analytic delta3 for cubic_radial and the empirical search agree") {
    for (int d = 1; d <= 3; ++d) {
      const TargetPotential f = make_cubic_radial(d, 100.0);
      const LaplaceFit fit = find_mode(f, Vec::Ones(d));
      const Delta3Report a = estimate_delta3(f, fit, 6.0);
      CHECK(a.mode == Delta3Mode::analytic);
      CHECK(a.value == 1.0);
      Delta3Options o;
      o.force_empirical = true;
      const Delta3Report e = estimate_delta3(f, fit, 6.0, o);
      CHECK(e.mode == Delta3Mode::empirical);
      CHECK(e.value == doctest::Approx(1.0).epsilon(0.01));
      CHECK(e.value <= 1.0 + 1e-9);
    }
  }

  TEST_CASE("quadratic delta3 is zero") {
    const TargetPotential f = make_quadratic(Mat::Identity(2, 2), Vec::Zero(2), 10.0);
    const LaplaceFit fit = find_mode(f, Vec::Ones(2));
    Delta3Options o;
    o.force_empirical = true;
    CHECK(estimate_delta3(f, fit, 6.0, o).value == 0.0);
  }

  TEST_CASE("certificate terms for cubic_radial d=1, n=400, r=6") {
    const TargetPotential f = make_cubic_radial(1, 400.0);
    const LaplaceFit fit = find_mode(f, Vec::Zero(1));
    const Certificate c = certify(f, fit, 6.0, estimate_delta3(f, fit, 6.0));
    const double lap = 1.0 * 1.0 / std::sqrt(2.0 * 400.0);
    const double tail = 3.0 * std::exp(-1.0 * 36.0 / 9.0);
    CHECK(c.laplace_term == doctest::Approx(lap).epsilon(1e-15));
    CHECK(c.tail_term == doctest::Approx(tail).epsilon(1e-15));
    CHECK(c.total == doctest::Approx(lap + tail).epsilon(1e-15));
    CHECK(c.soundness == Soundness::certified);
  }

  TEST_CASE("r below 6 invalidates the certificate") {
    const TargetPotential f = make_cubic_radial(2, 400.0);
    const LaplaceFit fit = find_mode(f, Vec::Zero(2));
    const Certificate c = certify(f, fit, 5.0, estimate_delta3(f, fit, 5.0));
    CHECK_FALSE(c.r_at_least_6);
    CHECK(c.soundness == Soundness::invalid);
  }

  TEST_CASE("small n breaks the delta3 condition") {
    const TargetPotential f = make_cubic_radial(2, 50.0);
    const LaplaceFit fit = find_mode(f, Vec::Zero(2));
    // 6 * 1 * sqrt(2/50) = 1.2 > 1/2
    const Certificate c = certify(f, fit, 6.0, estimate_delta3(f, fit, 6.0));
    CHECK_FALSE(c.delta3_condition);
    CHECK(c.soundness == Soundness::invalid);
  }

  TEST_CASE("empirical delta3 yields a heuristic certificate") {
    const TargetPotential f = make_ones_cubic(2, 4000.0);
    const LaplaceFit fit = find_mode(f, Vec::Zero(2));
    Delta3Options o;
    o.force_empirical = true;
    const Certificate c = certify(f, fit, 6.0, estimate_delta3(f, fit, 6.0, o));
    CHECK(c.delta3_mode == Delta3Mode::empirical);
    CHECK(c.soundness == Soundness::heuristic);
  }

  TEST_CASE("r strategies") {
    const TargetPotential f = make_cubic_radial(2, 20000.0);
    const LaplaceFit fit = find_mode(f, Vec::Zero(2));
    CHECK(choose_r(f, fit, RStrategy::fixed(7.5)) == 7.5);
    CHECK(choose_r(f, fit, RStrategy::uniform_bound(1.0)) == doctest::Approx(std::sqrt(20000.0 / 2.0) / 2.0));
    const double r = choose_r(f, fit, RStrategy::scan({4.0, 6.0, 8.0, 10.0}));
    // 4 is invalid; among valid r the total 2/sqrt(40000) + 3 exp(-2 r^2 / 9) is smallest at the largest r
    CHECK(r == 10.0);
  }

  TEST_CASE("empirical certificate and growth probes") {
    const TargetPotential f = make_cubic_radial(2, 1000.0);
    const LaplaceFit fit = find_mode(f, Vec::Zero(2));
    const EmpiricalCertificate e = empirical_certificate(f, fit, 6.0, 4000, 3);
    CHECK(std::isfinite(e.total));
    CHECK(e.accepted > 0);
    CHECK(e.hessian_violations == 0);
    const GrowthReport g = check_growth_bound(f, fit, 6.0, 200);
    CHECK(g.growth_violations == 0);
    CHECK(g.hessian_violations == 0);
    CHECK(g.min_hessian_ratio >= 0.5);
  }
}

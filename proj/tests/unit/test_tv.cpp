#include "lapcert/potential.hpp"
#include "lapcert/random.hpp"
#include "lapcert/tv.hpp"

#include <doctest.h>

#include <cmath>

using namespace lapcert;

namespace {

// Trapezoid on a wide fine grid; the reference for 1-d Gaussian TV.
double tv_1d_numeric(double m1, double s1, double m2, double s2) {
  const double lo = std::min(m1 - 40 * s1, m2 - 40 * s2), hi = std::max(m1 + 40 * s1, m2 + 40 * s2);
  const int N = 400000;
  const double h = (hi - lo) / N;
  double acc = 0.0;
  for (int i = 0; i <= N; ++i) {
    const double x = lo + i * h;
    const double p = std::exp(-0.5 * std::pow((x - m1) / s1, 2)) / (s1 * std::sqrt(2 * M_PI));
    const double q = std::exp(-0.5 * std::pow((x - m2) / s2, 2)) / (s2 * std::sqrt(2 * M_PI));
    acc += (i == 0 || i == N ? 0.5 : 1.0) * std::abs(p - q);
  }
  return 0.5 * acc * h;
}

// Gaussian N(a, (n Q)^{-1}) written as a potential.
TargetPotential gaussian_potential(const Vec& a, const Mat& Q, double n) { return make_quadratic(Q, a, n); }

}  // namespace

TEST_SUITE("tv") {
  TEST_CASE("exact 1-d TV matches numeric integration") {
    Rng rng(12);
    std::uniform_real_distribution<double> u(0.2, 3.0);
    for (int k = 0; k < 30; ++k) {
      const double m1 = 2 * u(rng) - 3, m2 = 2 * u(rng) - 3, s1 = u(rng), s2 = k % 3 == 0 ? s1 : u(rng);
      CHECK(tv_gaussian_exact_1d(m1, s1, m2, s2) == doctest::Approx(tv_1d_numeric(m1, s1, m2, s2)).epsilon(1e-7));
    }
    CHECK(tv_gaussian_exact_1d(0, 1, 0, 1) == 0.0);
  }

  TEST_CASE("quadrature of identical densities is zero") {
    Mat Q(2, 2);
    Q << 1.5, 0.2, 0.2, 0.8;
    Vec a(2);
    a << 0.1, 0.2;
    const double n = 50;
    const TvEstimate e = tv_quadrature(gaussian_potential(a, Q, n), Gaussian::from_precision(a, n * Q));
    CHECK(e.value < 1e-12);
    CHECK(e.reliable);
  }

  TEST_CASE("1-d quadrature against the exact formula") {
    const double n = 10.0;
    const TargetPotential f = gaussian_potential(Vec::Constant(1, 0.3), Mat::Constant(1, 1, 2.0), n);
    const double sf = 1 / std::sqrt(n * 2.0);
    for (double sg : {0.8 * sf, sf, 1.3 * sf}) {
      const Gaussian g{Vec::Zero(1), Mat::Constant(1, 1, sg * sg)};
      const TvEstimate e = tv_quadrature(f, g);
      const double exact = tv_gaussian_exact_1d(0.3, sf, 0.0, sg);
      CHECK(std::abs(e.value - exact) <= e.error + 1e-9);
    }
  }

  TEST_CASE("2-d quadrature for shifted isotropic Gaussians") {
    // TV = 2 Phi(|delta| / 2) - 1 in units of the common standard deviation
    Vec delta(2);
    delta << 0.6, -0.8;
    const TargetPotential f = gaussian_potential(delta, Mat::Identity(2, 2), 1.0);
    const Gaussian g{Vec::Zero(2), Mat::Identity(2, 2)};
    const TvEstimate e = tv_quadrature(f, g);
    const double exact = std::erf(1.0 / 2.0 / std::sqrt(2.0));
    CHECK(std::abs(e.value - exact) <= e.error + 1e-9);
    CHECK(e.error < 1e-4);
  }

  TEST_CASE("3-d quadrature stays within its error bound") {
    Vec delta = Vec::Zero(3);
    delta[2] = 0.5;
    const TargetPotential f = gaussian_potential(delta, Mat::Identity(3, 3), 1.0);
    const TvEstimate e = tv_quadrature(f, Gaussian{Vec::Zero(3), Mat::Identity(3, 3)});
    const double exact = std::erf(0.25 / std::sqrt(2.0));
    CHECK(std::abs(e.value - exact) <= e.error + 1e-9);
  }

  TEST_CASE("Monte Carlo agrees with quadrature within its standard error") {
    const TargetPotential f = make_cubic_radial(2, 30.0);
    const Gaussian g = Gaussian::from_precision(Vec::Zero(2), 30.0 * Mat::Identity(2, 2));
    const TvEstimate q = tv_quadrature(f, g);
    McOptions o;
    o.samples = 200000;
    const TvEstimate m = tv_mc(f, g, o);
    CHECK(m.reliable);
    CHECK(m.ess > 1000);
    CHECK(std::abs(m.value - q.value) <= 4 * m.error + q.error);
  }

  TEST_CASE("Monte Carlo is deterministic per seed") {
    const TargetPotential f = make_ones_cubic(2, 30.0);
    const Gaussian g = Gaussian::from_precision(Vec::Zero(2), 30.0 * Mat::Identity(2, 2));
    McOptions o;
    o.samples = 20000;
    CHECK(tv_mc(f, g, o).value == tv_mc(f, g, o).value);
  }

  TEST_CASE("quadrature refuses d > 3") {
    const TargetPotential f = make_cubic_radial(4, 30.0);
    CHECK_THROWS(tv_quadrature(f, Gaussian{Vec::Zero(4), Mat::Identity(4, 4)}));
  }

  TEST_CASE("Gaussian comparison bounds dominate the exact 1-d TV") {
    Rng rng(21);
    std::uniform_real_distribution<double> u(0.05, 5.0);
    for (int k = 0; k < 200; ++k) {
      const double s1 = u(rng), s2 = u(rng);
      const double exact = tv_gaussian_exact_1d(0.0, s1, 0.0, s2);
      CHECK(tv_gaussian_bound(Mat::Constant(1, 1, 1 / (s1 * s1)), Mat::Constant(1, 1, 1 / (s2 * s2))) >= exact);
      CHECK(tv_gaussian_frobenius_bound(Mat::Constant(1, 1, s1 * s1), Mat::Constant(1, 1, s2 * s2)) >= exact);
    }
  }

  TEST_CASE("Gaussian comparison bound formula") {
    Mat P1 = Mat::Identity(2, 2), P2 = Mat::Identity(2, 2);
    P2(0, 0) = 1.1;
    // E = diag(1.1, 1): eps = 0.1, tau = 1
    CHECK(tv_gaussian_bound(P1, P2) == doctest::Approx(2 * 0.1 * std::sqrt(2.0)).epsilon(1e-12));
    CHECK(tv_gaussian_bound(P1, P1) == 0.0);
    P2(0, 0) = 100;
    CHECK(tv_gaussian_bound(P1, P2) == 1.0);
  }
}

#include "lapcert/bvm.hpp"
#include "lapcert/glm.hpp"
#include "lapcert/pmf.hpp"
#include "lapcert/potential.hpp"
#include "lapcert/prior.hpp"
#include "lapcert/random.hpp"

#include <doctest.h>

#include <cmath>

using namespace lapcert;

TEST_SUITE("models") {
  TEST_CASE("synthetic potentials have consistent derivatives") {
    Rng rng(11);
    for (int d = 1; d <= 4; ++d) {
      for (const TargetPotential& f : {make_cubic_radial(d, 100.0), make_ones_cubic(d, 100.0)}) {
        const Vec theta = standard_normal(rng, d);
        const DerivativeCheck c = check_derivatives(f, theta, standard_normal(rng, d));
        CHECK(c.grad_rel_err < 1e-6);
        CHECK(c.hess_rel_err < 1e-6);
        CHECK(c.third_rel_err < 1e-5);
        CHECK(c.hess_asymmetry < 1e-12);
        CHECK(c.min_hess_eig > 0.0);
      }
    }
  }

  TEST_CASE("cubic_radial values match the closed form") {
    const TargetPotential f = make_cubic_radial(3, 50.0);
    Vec t(3);
    t << 1.0, -2.0, 2.0;  // |t| = 3
    CHECK(f.value(t) == doctest::Approx(4.5 + 4.5));
    CHECK(f.hessian(Vec::Zero(3)).isApprox(Mat::Identity(3, 3)));
    REQUIRE(f.delta3_analytic);
    CHECK(f.delta3_analytic(0.7) == 1.0);
    CHECK(f.delta3_analytic(42.0) == 1.0);
  }

  TEST_CASE("ones_cubic third derivative along the ones direction") {
    const int d = 3;
    const TargetPotential f = make_ones_cubic(d, 10.0);
    const Vec u = Vec::Ones(d);
    // <D^3 f(0), u^3> for |1^T t|^3 / 6 at t = 0+ along u: (1^T u)^3 = d^3
    const Vec t = 1e-3 * Vec::Ones(d);
    CHECK(f.third_directional(t, u) == doctest::Approx(std::pow(d, 3)).epsilon(1e-12));
  }

  TEST_CASE("affine pushforward transports the potential") {
    Rng rng(2);
    const TargetPotential f = make_ones_cubic(2, 10.0);
    Mat T(2, 2);
    T << 1.3, 0.2, -0.4, 0.9;
    const Vec b = standard_normal(rng, 2);
    const TargetPotential g = affine_pushforward(f, T, b);
    for (int k = 0; k < 10; ++k) {
      const Vec theta = standard_normal(rng, 2);
      CHECK(g.value(T * theta + b) == doctest::Approx(f.value(theta)).epsilon(1e-12));
    }
    const DerivativeCheck c = check_derivatives(g, standard_normal(rng, 2), standard_normal(rng, 2));
    CHECK(c.hess_rel_err < 1e-6);
  }

  TEST_CASE("GLM Hessian does not depend on the labels") {
    const LinkFamily link = make_link("logistic");
    Vec ts(3);
    ts << 0.5, -0.2, 0.1;
    const Design X = gaussian_design(300, 3, 4);
    const GlmModel a(link, X, ts, glm_sample(link, X, ts, 1));
    const GlmModel b = a.with_labels(glm_sample(link, X, ts, 2));
    CHECK((a.labels().array() != b.labels().array()).any());
    Rng rng(7);
    for (int k = 0; k < 5; ++k) {
      const Vec t = ts + 0.3 * standard_normal(rng, 3);
      CHECK((a.hessian(t).array() == b.hessian(t).array()).all());
    }
    CHECK(a.fisher().isApprox(a.hessian(ts), 1e-14));
  }

  TEST_CASE("GLM potentials have consistent derivatives for every built-in link") {
    Rng rng(8);
    for (const char* name : {"logistic", "poisson", "gaussian", "exponential"}) {
      const LinkFamily link = make_link(name);
      const Design X = gaussian_design(200, 2, 9);
      Vec ts = std::string(name) == "exponential" ? Vec::Zero(2) : Vec(Vec::Constant(2, 0.2));
      Design Xe = X;
      if (std::string(name) == "exponential") {
        // positive rows and a negative parameter keep omega < 0
        Xe.X = X.X.cwiseAbs();
        ts = Vec::Constant(2, -1.0);
      }
      const GlmModel m(link, Xe, ts, glm_sample(link, Xe, ts, 3));
      const DerivativeCheck c = check_derivatives(m.potential(), ts, standard_normal(rng, 2));
      CHECK_MESSAGE(c.grad_rel_err < 1e-6, name);
      CHECK_MESSAGE(c.hess_rel_err < 1e-6, name);
      CHECK_MESSAGE(c.third_rel_err < 1e-4, name);
    }
  }

  TEST_CASE("logistic psi''' supremum") {
    const LinkFamily l = make_link("logistic");
    double best = 0.0;
    for (int i = -20000; i <= 20000; ++i) best = std::max(best, std::abs(l.d3(i * 1e-3)));
    CHECK(logistic_d3_sup() == doctest::Approx(best).epsilon(1e-6));
    CHECK(logistic_d3_sup() == doctest::Approx(1.0 / (6.0 * std::sqrt(3.0))).epsilon(1e-14));
  }

  TEST_CASE("pmf MLE equals the empirical frequencies bitwise") {
    Vec ts(4);
    ts << 0.1, 0.2, 0.3, 0.4;
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
      const PmfModel m(pmf_sample(ts, 5000, seed), ts);
      const LaplaceFit fit = compute_mle(m);
      CHECK((fit.mode.array() == m.nbar().array()).all());
      long long total = 0;
      for (long long c : m.counts()) total += c;
      CHECK(total == 5000);
    }
  }

  TEST_CASE("pmf Fisher information matches diag(1/theta) + 1/theta_0") {
    Vec ts(3);
    ts << 0.5, 0.2, 0.3;
    const PmfModel m(pmf_sample(ts, 100, 1), ts);
    Mat oracle(2, 2);
    oracle << 1 / 0.2 + 1 / 0.5, 1 / 0.5, 1 / 0.5, 1 / 0.3 + 1 / 0.5;
    CHECK(m.fisher().isApprox(oracle, 1e-14));
  }

  TEST_CASE("pmf boundary MLE is rejected") {
    Vec ts(3);
    ts << 0.4, 0.3, 0.3;
    const PmfModel m({0, 5, 5}, ts);
    CHECK(m.mle_on_boundary());
    CHECK_THROWS_AS(compute_mle(m), DomainError);
  }

  TEST_CASE("pmf rejects invalid ground truth") {
    Vec bad(3);
    bad << 0.5, 0.6, -0.1;
    CHECK_THROWS(PmfModel({1, 1, 1}, bad));
  }

  TEST_CASE("Gaussian prior rho is the quadratic form up to a constant") {
    Vec mu(2);
    mu << 0.3, -1.0;
    Mat S(2, 2);
    S << 2.0, 0.3, 0.3, 1.0;
    const PriorSpec p = PriorSpec::gaussian(mu, S);
    const Mat P = S.inverse();
    Vec a(2), b(2);
    a << 1.0, 2.0;
    b << -0.5, 0.1;
    const double oracle = 0.5 * (a - mu).dot(P * (a - mu)) - 0.5 * (b - mu).dot(P * (b - mu));
    CHECK(p.rho(a) - p.rho(b) == doctest::Approx(oracle).epsilon(1e-12));
    CHECK(PriorSpec::flat(2).rho(a) == 0.0);
  }

  TEST_CASE("posterior adds rho / n") {
    const TargetPotential f = make_cubic_radial(2, 40.0);
    const PriorSpec p = PriorSpec::gaussian(Vec::Zero(2), Mat::Identity(2, 2));
    const TargetPotential v = make_posterior(f, p);
    Vec t(2);
    t << 0.3, 0.4;
    CHECK(v.value(t) - f.value(t) == doctest::Approx((p.rho(t)) / 40.0).epsilon(1e-12));
  }
}

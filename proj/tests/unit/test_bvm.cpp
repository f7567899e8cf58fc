#include "lapcert/bvm.hpp"
#include "lapcert/glm.hpp"
#include "lapcert/pmf.hpp"
#include "lapcert/prior.hpp"
#include "lapcert/random.hpp"
#include "lapcert/tv.hpp"

#include <doctest.h>

#include <cmath>

using namespace lapcert;

TEST_SUITE("bvm") {
  TEST_CASE("explicit chain terms") {
    BvmContext c;
    c.d = 2;
    c.n = 1e6;
    c.s = 12;
    c.eps2 = 0.01;
    c.delta3_s = 0.3;
    c.delta3_2s = 0.4;
    c.prior.M0 = 0.1;
    c.prior.delta01 = 2.0;
    const BvmBound b = bvm_bound(c);
    CHECK(b.laplace_local == doctest::Approx(8 * 0.4 * 2 / std::sqrt(2e6)).epsilon(1e-14));
    CHECK(b.laplace_tail == doctest::Approx(3 * std::exp(-2 * 144.0 / 36)).epsilon(1e-14));
    CHECK(b.prior_local == doctest::Approx(2.0 / 1e3).epsilon(1e-14));
    CHECK(b.prior_tail == doctest::Approx(4 * std::exp(2 * (0.1 - 1.0))).epsilon(1e-14));
    CHECK(b.gauss == doctest::Approx(8 * std::sqrt(2.0) * (12 * 0.3 * std::sqrt(2e-6) + 0.01)).epsilon(1e-14));
    CHECK(b.total == doctest::Approx(std::min(1.0, b.laplace() + b.prior() + b.gauss)));
    CHECK(b.valid());
  }

  TEST_CASE("each precondition can fail on its own") {
    BvmContext c;
    c.d = 2;
    c.n = 1e6;
    c.s = 12;
    c.delta3_s = c.delta3_2s = 0.4;
    CHECK(bvm_bound(c).valid());
    BvmContext k = c;
    k.s = 11;
    CHECK_FALSE(bvm_bound(k).s_at_least_12);
    k = c;
    k.neighborhood_in_domain = false;
    CHECK_FALSE(bvm_bound(k).valid());
    k = c;
    k.delta3_2s = 1e3;  // 2 s delta sqrt(d/n) > 1/4
    CHECK_FALSE(bvm_bound(k).delta3_condition);
    k = c;
    k.eps2 = 0.6;
    CHECK_FALSE(bvm_bound(k).eps2_condition);
    k = c;
    k.prior.delta01 = std::sqrt(2e6) / 6 * 1.01;
    CHECK_FALSE(bvm_bound(k).delta01_condition);
  }

  TEST_CASE("log-concave variant uses the capped delta3 and its own flags") {
    BvmContext c;
    c.d = 2;
    c.n = 1e8;
    c.s = 12;
    const BvmBound b = bvm_bound_logconcave(c, 0.5, 1.2);
    CHECK(b.laplace_local == doctest::Approx(8 * 1.0 * 2 / std::sqrt(2e8)).epsilon(1e-14));
    CHECK(b.delta2_condition);
    CHECK(b.radius_condition);
    CHECK_FALSE(bvm_bound_logconcave(c, 0.5, 1.6).delta2_condition);
    CHECK_FALSE(bvm_bound_logconcave(c, 1e3, 1.2).radius_condition);
    CHECK_THROWS(bvm_bound_logconcave(c, 0.0, 1.0));
  }

  TEST_CASE("pmf delta3 bound and containment") {
    Vec ts(3);
    ts << 0.4, 0.3, 0.3;
    const PmfModel m(pmf_sample(ts, 1000000000LL, 5), ts);
    const Delta3StarPmf b = delta3_star_pmf(m, 16.0);
    double oracle = 0.0;
    for (int j = 0; j < 3; ++j) oracle = std::max(oracle, m.nbar_full()[j] / std::pow(ts[j], 1.5));
    CHECK(b.certified == doctest::Approx(16 * oracle).epsilon(1e-15));
    CHECK(b.closed_form == doctest::Approx(2 * (1 - 0.6) / std::sqrt(0.3 * 0.7)).epsilon(1e-12));
    // (2s)^2 d / n = 4 * 144 * 2 / 1e4 = 0.1152 > 0.3 / 4
    const PmfModel small(pmf_sample(ts, 10000, 5), ts);
    CHECK_FALSE(pmf_containment_holds(small, 12.0));
    CHECK_THROWS_AS(delta3_star_pmf(small, 12.0), DomainError);
  }

  TEST_CASE("GLM events: E2 and E3 hold with probability one") {
    const LinkFamily link = make_link("logistic");
    Vec ts(2);
    ts << 0.5, -0.3;
    const Design X = gaussian_design(800, 2, 2);
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
      const GlmModel m(link, X, ts, glm_sample(link, X, ts, seed));
      const EventReport e = check_events(m, 12.0, 50, seed);
      CHECK(e.hess_dev == 0.0);
      CHECK(e.E2);
      CHECK(e.E3);
      CHECK(e.lipschitz <= e.delta3_2s);
      CHECK(e.threshold1 == doctest::Approx(12 * std::sqrt(2.0 / 800)));
    }
  }

  TEST_CASE("certified GLM delta3 dominates the empirical search") {
    const LinkFamily link = make_link("logistic");
    Vec ts(2);
    ts << 0.2, 0.1;
    const Design X = gaussian_design(600, 2, 4);
    const GlmModel m(link, X, ts, glm_sample(link, X, ts, 1));
    const Delta3StarGlm d = delta3_star_glm(m, 12.0, 300);
    CHECK(d.empirical > 0.0);
    CHECK(d.interval_bound >= d.empirical * (1 - 1e-9));
    CHECK(d.logistic_bound >= d.empirical * (1 - 1e-9));
    CHECK(d.certified == std::min(d.interval_bound, d.logistic_bound));
  }

  TEST_CASE("Gaussian-link posterior equals the BvM Gaussian under a flat prior") {
    const LinkFamily link = make_link("gaussian");
    Vec ts(2);
    ts << 0.3, -0.7;
    const Design X = gaussian_design(400, 2, 6);
    const GlmModel m(link, X, ts, glm_sample(link, X, ts, 2));
    const LaplaceFit fit = compute_mle(m, ts);
    const TvEstimate e = tv_quadrature(make_posterior(m.potential(), PriorSpec::flat(2)),
                                       bvm_gaussian_target(fit.mode, m.fisher(), m.n()));
    CHECK(e.value <= e.error + 1e-9);
  }

  TEST_CASE("pmf events include the chi-square event") {
    Vec ts(3);
    ts << 0.4, 0.3, 0.3;
    const PmfModel m(pmf_sample(ts, 1000000000LL, 9), ts);
    const EventReport e = check_events(m, 16.0, 50, 9);
    CHECK(e.has_E0);
    CHECK(e.chi2 == doctest::Approx(chi_square(m.nbar_full(), ts)).epsilon(1e-12));
    CHECK(e.E0 == (e.chi2 <= 256.0 * 2 / 1e9));
  }

  TEST_CASE("U* radius") { CHECK(ustar_radius(12, 2, 800) == doctest::Approx(12 * 0.05)); }
}

#include "lapcert/metrics.hpp"
#include "lapcert/random.hpp"

#include <doctest.h>

#include <cmath>

using namespace lapcert;

TEST_SUITE("metrics") {
  TEST_CASE("weighted norms on a diagonal metric") {
    Mat A = Mat::Zero(2, 2);
    A.diagonal() << 4.0, 9.0;
    const MetricContext ctx(A);
    Vec u(2);
    u << 1.5, -2.0;
    CHECK(ctx.vec_norm(u) == doctest::Approx(std::sqrt(4 * 2.25 + 9 * 4.0)).epsilon(1e-14));
    CHECK(ctx.dual_norm(u) == doctest::Approx(std::sqrt(2.25 / 4 + 4.0 / 9)).epsilon(1e-14));
    CHECK(ctx.lambda_min() == doctest::Approx(4.0));
    CHECK(ctx.lambda_max() == doctest::Approx(9.0));
  }

  TEST_CASE("dual norm is attained by A^{-1} v") {
    Rng rng(3);
    Mat G = Mat::Random(3, 3);
    const Mat A = G * G.transpose() + Mat::Identity(3, 3);
    const MetricContext ctx(A);
    const Vec v = standard_normal(rng, 3);
    const Vec u = A.ldlt().solve(v);
    CHECK(v.dot(u) / ctx.vec_norm(u) == doctest::Approx(ctx.dual_norm(v)).epsilon(1e-12));
    for (int t = 0; t < 50; ++t) {
      const Vec w = standard_normal(rng, 3);
      CHECK(std::abs(v.dot(w)) <= ctx.dual_norm(v) * ctx.vec_norm(w) * (1 + 1e-12));
    }
  }

  TEST_CASE("rejects non-SPD metrics and mismatched vectors") {
    Mat A = Mat::Identity(2, 2);
    A(1, 1) = -1.0;
    CHECK_THROWS(MetricContext(A));
    const MetricContext id = MetricContext::identity(2);
    CHECK_THROWS_AS(id.vec_norm(Vec::Ones(3)), DimensionError);
  }

  TEST_CASE("operator norm of a symmetric matrix") {
    Mat S = Mat::Zero(2, 2);
    S.diagonal() << -3.0, 2.0;
    CHECK(sym_operator_norm(S) == doctest::Approx(3.0));
  }

  TEST_CASE("k = 1 and k = 2 norms reduce to dual norm and weighted eigenvalue") {
    Rng rng(5);
    Mat G = Mat::Random(3, 3);
    const Mat A = G * G.transpose() + 0.5 * Mat::Identity(3, 3);
    const MetricContext ctx(A);
    const Vec v = standard_normal(rng, 3);
    CHECK(tensor_op_norm(SymmetricKForm::vector(v), ctx).value == doctest::Approx(ctx.dual_norm(v)).epsilon(1e-9));

    Mat S = Mat::Random(3, 3);
    S = (S + S.transpose()).eval();
    const Mat W = ctx.invSqrtA() * S * ctx.invSqrtA();
    Eigen::SelfAdjointEigenSolver<Mat> es(W);
    const double oracle = es.eigenvalues().cwiseAbs().maxCoeff();
    const TensorNorm tn = tensor_op_norm(SymmetricKForm::matrix(S), ctx);
    CHECK(tn.value == doctest::Approx(oracle).epsilon(1e-9));
    CHECK(ctx.vec_norm(tn.witness) == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(tn.witness_sign * SymmetricKForm::matrix(S).eval(tn.witness) == doctest::Approx(tn.value).epsilon(1e-9));
  }

  TEST_CASE("k = 3 multistart agrees with a dense angular grid") {
    for (int d = 2; d <= 3; ++d) {
      for (std::uint64_t seed = 1; seed <= 4; ++seed) {
        const SymmetricKForm T = random_symmetric_3form(d, seed);
        Mat G = Mat::Random(d, d);
        const MetricContext ctx(Mat(G * G.transpose() + Mat::Identity(d, d)));
        const TensorNorm tn = tensor_op_norm(T, ctx);
        const double brute = tensor_op_norm_bruteforce(T, ctx, d == 2 ? 20000 : 400);
        CHECK(tn.value >= brute * (1 - 1e-9));
        CHECK(tn.value == doctest::Approx(brute).epsilon(2e-3));
        CHECK(std::abs(T.eval(tn.witness)) == doctest::Approx(tn.value).epsilon(1e-9));
      }
    }
  }

  TEST_CASE("3-form coefficients must be permutation invariant") {
    std::vector<double> c(8, 0.0);
    c[1] = 1.0;  // T[0][0][1] without its permutations
    CHECK_THROWS(SymmetricKForm::tensor3(2, c));
  }

  TEST_CASE("norm scales as |c| under scalar multiplication of the metric") {
    const SymmetricKForm T = random_symmetric_3form(2, 9);
    const double base = tensor_op_norm(T, MetricContext::identity(2)).value;
    // |u|_{cI} = sqrt(c)|u|, so the k=3 norm picks up c^{-3/2}
    const double scaled = tensor_op_norm(T, MetricContext(Mat(4.0 * Mat::Identity(2, 2)))).value;
    CHECK(scaled == doctest::Approx(base / 8.0).epsilon(1e-9));
  }
}

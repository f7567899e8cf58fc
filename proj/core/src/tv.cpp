#include "lapcert/tv.hpp"

#include "lapcert/metrics.hpp"
#include "lapcert/random.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <vector>

namespace lapcert {

namespace {

struct Kahan {
  double sum = 0.0, c = 0.0;
  void add(double x) {
    const double y = x - c;
    const double t = sum + y;
    c = (t - sum) - y;
    sum = t;
  }
};

Mat sym_sqrt(const Mat& S, const char* who) {
  Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (S + S.transpose()));
  if (es.info() != Eigen::Success || !(es.eigenvalues().minCoeff() > 0.0)) {
    throw std::invalid_argument(std::string(who) + ": matrix is not symmetric positive definite");
  }
  return es.eigenvectors() * es.eigenvalues().cwiseSqrt().asDiagonal() * es.eigenvectors().transpose();
}

void check_spd(const Mat& S, const char* who) {
  if (S.rows() != S.cols() || S.rows() == 0) throw DimensionError(std::string(who) + ": matrix must be square");
  if ((S - S.transpose()).cwiseAbs().maxCoeff() > 1e-10 * std::max(1.0, S.cwiseAbs().maxCoeff())) {
    throw std::invalid_argument(std::string(who) + ": matrix is not symmetric");
  }
  Eigen::LLT<Mat> llt(S);
  if (llt.info() != Eigen::Success) throw std::invalid_argument(std::string(who) + ": matrix is not positive definite");
}

std::vector<double> simpson_weights(int m, double h) {
  std::vector<double> w(static_cast<std::size_t>(m));
  for (int i = 0; i < m; ++i) w[static_cast<std::size_t>(i)] = (i == 0 || i == m - 1) ? 1.0 : (i % 2 ? 4.0 : 2.0);
  for (double& x : w) x *= h / 3.0;
  return w;
}

}  // namespace

Gaussian Gaussian::from_precision(const Vec& mean, const Mat& precision) {
  require_dim(precision.rows(), mean.size(), "Gaussian::from_precision");
  check_spd(precision, "Gaussian::from_precision");
  Mat C = precision.llt().solve(Mat::Identity(precision.rows(), precision.cols()));
  return Gaussian{mean, 0.5 * (C + C.transpose())};
}

Mat Gaussian::sqrt_cov() const { return sym_sqrt(cov, "Gaussian"); }

double Gaussian::log_density(const Vec& x) const {
  require_dim(x.size(), mean.size(), "Gaussian::log_density");
  Eigen::LLT<Mat> llt(cov);
  if (llt.info() != Eigen::Success) throw std::invalid_argument("Gaussian: covariance is not positive definite");
  const Vec z = llt.matrixL().solve(x - mean);
  const double logdet = 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
  return -0.5 * z.squaredNorm() - 0.5 * logdet - 0.5 * dim() * std::log(2.0 * std::numbers::pi);
}

std::string to_string(TvMethod m) { return m == TvMethod::quadrature ? "quadrature" : "mc"; }

TvEstimate tv_quadrature(const TargetPotential& f, const Gaussian& g, const QuadratureOptions& opts) {
  const int d = g.dim();
  require_dim(f.dim, d, "tv_quadrature");
  if (d > 3) throw DimensionError("tv_quadrature: only d <= 3 is supported");
  check_spd(g.cov, "tv_quadrature");
  if (!(opts.radius_mult > 0.0)) throw std::invalid_argument("tv_quadrature: radius_mult must be positive");

  int m = opts.grid > 0 ? opts.grid : (d == 1 ? 4001 : d == 2 ? 401 : 101);
  m = std::max(m, 9);
  while (m % 4 != 1) ++m;  // the every-other-point subgrid is again a Simpson grid
  const double R = opts.radius_mult * std::sqrt(static_cast<double>(d));
  const double h = 2.0 * R / (m - 1);
  const Mat L = g.sqrt_cov();

  long long total = 1;
  for (int k = 0; k < d; ++k) total *= m;
  std::vector<double> lp(static_cast<std::size_t>(total));
  std::vector<int> idx(static_cast<std::size_t>(d), 0);
  Vec z(d);
  double lmax = -std::numeric_limits<double>::infinity();
  for (long long p = 0; p < total; ++p) {
    long long q = p;
    for (int k = 0; k < d; ++k) {
      idx[static_cast<std::size_t>(k)] = static_cast<int>(q % m);
      q /= m;
      z[k] = -R + h * idx[static_cast<std::size_t>(k)];
    }
    const Vec theta = g.mean + L * z;
    double v = -std::numeric_limits<double>::infinity();
    if (f.inside(theta)) {
      const double fv = f.value(theta);
      if (!std::isfinite(fv)) throw DomainError("tv_quadrature: non-finite integrand");
      v = -f.n * fv;
    }
    lp[static_cast<std::size_t>(p)] = v;
    lmax = std::max(lmax, v);
  }
  if (!std::isfinite(lmax)) throw DomainError("tv_quadrature: density vanishes on the whole grid");

  const double log_norm = -0.5 * d * std::log(2.0 * std::numbers::pi);
  const std::vector<double> wf = simpson_weights(m, h);
  const int mc = (m + 1) / 2;
  const std::vector<double> wc = simpson_weights(mc, 2.0 * h);

  constexpr double eps = std::numeric_limits<double>::epsilon();
  auto integrate = [&](int stride, const std::vector<double>& w, double* shell_mass, double* rounding) {
    const int mm = stride == 1 ? m : mc;
    long long cnt = 1;
    for (int k = 0; k < d; ++k) cnt *= mm;
    // first pass: normalizer
    Kahan Z;
    std::vector<int> id(static_cast<std::size_t>(d));
    auto locate = [&](long long p, double& weight, double& z2, bool& shell) {
      long long q = p, flat = 0, mult = 1;
      weight = 1.0;
      z2 = 0.0;
      shell = false;
      for (int k = 0; k < d; ++k) {
        const int i = static_cast<int>(q % mm);
        q /= mm;
        weight *= w[static_cast<std::size_t>(i)];
        const int fi = i * stride;
        const double zk = -R + h * fi;
        z2 += zk * zk;
        if (std::abs(zk) >= R * (11.0 / 12.0)) shell = true;
        flat += fi * mult;
        mult *= m;
      }
      return flat;
    };
    for (long long p = 0; p < cnt; ++p) {
      double wt, z2;
      bool shell;
      const long long fl = locate(p, wt, z2, shell);
      Z.add(wt * std::exp(lp[static_cast<std::size_t>(fl)] - lmax));
    }
    Kahan tv, sh, rd;
    for (long long p = 0; p < cnt; ++p) {
      double wt, z2;
      bool shell;
      const long long fl = locate(p, wt, z2, shell);
      const double l = lp[static_cast<std::size_t>(fl)];
      const double pi = std::exp(l - lmax) / Z.sum;
      const double phi = std::exp(log_norm - 0.5 * z2);
      tv.add(wt * std::abs(pi - phi));
      if (shell) sh.add(wt * pi);
      // exp() turns an absolute error in its argument into a relative one; the exponents carry
      // errors of a few ulps of their magnitude (potential evaluation, the affine map, log-sum)
      if (rounding && std::isfinite(l)) {
        rd.add(std::abs(wt) * (pi * (std::abs(l) + std::abs(lmax) + 1.0) + phi * (std::abs(log_norm) + z2 + 1.0)));
      }
    }
    if (shell_mass) *shell_mass = sh.sum;
    if (rounding) *rounding = 0.5 * 8.0 * eps * rd.sum;
    return 0.5 * tv.sum;
  };

  double shell = 0.0, rounding = 0.0;
  const double fine = integrate(1, wf, &shell, &rounding);
  const double coarse = integrate(2, wc, nullptr, nullptr);

  TvEstimate est;
  est.method = TvMethod::quadrature;
  est.size = total;
  est.grid_error = std::abs(fine - coarse);
  // Gaussian mass outside the box, and the target's outer-shell mass as its outside-mass proxy;
  // |TV - TV_box| <= a + b/2 for outside masses a (target) and b (Gaussian).
  const double b = -std::expm1(d * std::log1p(-2.0 * normal_cdf(-R)));
  const double a = std::max(0.0, shell);
  est.truncation_error = a + 0.5 * b;
  est.rounding_error = rounding;
  est.error = est.grid_error + est.truncation_error + est.rounding_error;
  est.value = std::clamp(fine, 0.0, 1.0);
  est.reliable = a < 1e-3;
  return est;
}

TvEstimate tv_mc(const TargetPotential& f, const Gaussian& g, const McOptions& opts) {
  const int d = g.dim();
  require_dim(f.dim, d, "tv_mc");
  if (opts.samples < 2 * opts.blocks || opts.blocks < 2) throw std::invalid_argument("tv_mc: need samples >= 2 * blocks >= 4");
  check_spd(g.cov, "tv_mc");
  const Mat L = g.sqrt_cov();
  const long long N = opts.samples;
  const int B = opts.blocks;
  const long long per = N / B;
  const long long used = per * B;
  const double log_norm = -0.5 * d * std::log(2.0 * std::numbers::pi);
  const double logdet_half = std::log(std::abs(L.determinant()));

  std::vector<double> lw(static_cast<std::size_t>(used));
  double lmax = -std::numeric_limits<double>::infinity();
  for (int b = 0; b < B; ++b) {
    Rng rng(derive_seed(opts.seed, static_cast<std::uint64_t>(b)));
    for (long long i = 0; i < per; ++i) {
      const Vec xi = standard_normal(rng, d);
      const Vec x = g.mean + L * xi;
      double v = -std::numeric_limits<double>::infinity();
      if (f.inside(x)) {
        const double fv = f.value(x);
        if (std::isfinite(fv)) v = -f.n * fv - (log_norm - logdet_half - 0.5 * xi.squaredNorm());
      }
      lw[static_cast<std::size_t>(b * per + i)] = v;
      lmax = std::max(lmax, v);
    }
  }
  if (!std::isfinite(lmax)) throw DomainError("tv_mc: every sample has zero target density");

  std::vector<double> w(lw.size());
  std::vector<Kahan> bsum(static_cast<std::size_t>(B));
  Kahan sw, sw2;
  for (std::size_t i = 0; i < w.size(); ++i) {
    w[i] = std::exp(lw[i] - lmax);
    sw.add(w[i]);
    sw2.add(w[i] * w[i]);
    bsum[i / static_cast<std::size_t>(per)].add(w[i]);
  }

  auto tv_excluding = [&](int skip) {
    double Z = sw.sum;
    long long cnt = used;
    if (skip >= 0) {
      Z -= bsum[static_cast<std::size_t>(skip)].sum;
      cnt -= per;
    }
    Z /= static_cast<double>(cnt);
    Kahan acc;
    for (int b = 0; b < B; ++b) {
      if (b == skip) continue;
      for (long long i = 0; i < per; ++i) acc.add(std::abs(w[static_cast<std::size_t>(b * per + i)] / Z - 1.0));
    }
    return 0.5 * acc.sum / static_cast<double>(cnt);
  };

  TvEstimate est;
  est.method = TvMethod::mc;
  est.size = used;
  est.value = std::clamp(tv_excluding(-1), 0.0, 1.0);
  std::vector<double> jk(static_cast<std::size_t>(B));
  double jmean = 0.0;
  for (int b = 0; b < B; ++b) {
    jk[static_cast<std::size_t>(b)] = tv_excluding(b);
    jmean += jk[static_cast<std::size_t>(b)] / B;
  }
  double ss = 0.0;
  for (double v : jk) ss += (v - jmean) * (v - jmean);
  est.error = std::sqrt((B - 1.0) / B * ss);
  est.ess = sw.sum * sw.sum / sw2.sum;
  est.reliable = est.ess >= opts.min_ess;
  return est;
}

double tv_gaussian_bound(const Mat& prec1, const Mat& prec2) {
  check_spd(prec1, "tv_gaussian_bound");
  check_spd(prec2, "tv_gaussian_bound");
  require_dim(prec2.rows(), prec1.rows(), "tv_gaussian_bound");
  const int d = static_cast<int>(prec1.rows());
  const MetricContext P1(prec1);
  // E = Sigma_1^{1/2} Sigma_2^{-1} Sigma_1^{1/2}
  Mat E = P1.invSqrtA() * prec2 * P1.invSqrtA();
  E = 0.5 * (E + E.transpose());
  Eigen::SelfAdjointEigenSolver<Mat> es(E, Eigen::EigenvaluesOnly);
  const double tau = es.eigenvalues().minCoeff();
  const double eps = sym_operator_norm(E - Mat::Identity(d, d));
  if (eps == 0.0) return 0.0;
  return std::min(1.0, 2.0 * (eps / tau) * std::sqrt(static_cast<double>(d)));
}

double tv_gaussian_frobenius_bound(const Mat& cov1, const Mat& cov2) {
  check_spd(cov1, "tv_gaussian_frobenius_bound");
  check_spd(cov2, "tv_gaussian_frobenius_bound");
  require_dim(cov2.rows(), cov1.rows(), "tv_gaussian_frobenius_bound");
  const MetricContext C1(cov1);
  const Mat E = C1.invSqrtA() * cov2 * C1.invSqrtA();
  return 2.0 * (E - Mat::Identity(cov1.rows(), cov1.cols())).norm();
}

double tv_gaussian_exact_1d(double mu1, double sigma1, double mu2, double sigma2) {
  if (!(sigma1 > 0.0) || !(sigma2 > 0.0)) throw std::invalid_argument("tv_gaussian_exact_1d: sigma must be positive");
  if (sigma1 == sigma2) return std::erf(std::abs(mu1 - mu2) / (2.0 * sigma1 * std::numbers::sqrt2));
  // make sigma1 the narrower one; p1 > p2 exactly between the two density crossings
  if (sigma1 > sigma2) {
    std::swap(mu1, mu2);
    std::swap(sigma1, sigma2);
  }
  const double s1 = sigma1 * sigma1, s2 = sigma2 * sigma2;
  const double A = 0.5 / s1 - 0.5 / s2;
  const double B = -mu1 / s1 + mu2 / s2;
  const double C = 0.5 * mu1 * mu1 / s1 - 0.5 * mu2 * mu2 / s2 + std::log(sigma1 / sigma2);
  const double disc = B * B - 4.0 * A * C;
  const double sq = std::sqrt(std::max(0.0, disc));
  double x1, x2;
  if (B == 0.0) {
    x1 = -sq / (2.0 * A);
    x2 = sq / (2.0 * A);
  } else {
    const double q = -0.5 * (B + std::copysign(sq, B));
    x1 = q / A;
    x2 = C / q;
  }
  if (x1 > x2) std::swap(x1, x2);
  auto mass = [](double mu, double sigma, double a, double b) {
    const double za = (a - mu) / sigma, zb = (b - mu) / sigma;
    // difference of CDFs computed on the side with more precision
    if (za > 0.0) return normal_cdf(-za) - normal_cdf(-zb);
    return normal_cdf(zb) - normal_cdf(za);
  };
  return std::clamp(mass(mu1, sigma1, x1, x2) - mass(mu2, sigma2, x1, x2), 0.0, 1.0);
}

}  // namespace lapcert

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "hscore/distributions.hpp"
#include "hscore/mixture.hpp"
#include "hscore/rng.hpp"

using namespace hscore;

namespace {

GaussianMixture single_component(const VectorXd& mean, const MatrixXd& chol) {
  GaussianMixture g;
  g.log_weights = {0.0};
  g.means = {mean};
  g.chol = {chol};
  return g;
}

}  // namespace

TEST_CASE("single-component log-density matches the normal formula") {
  VectorXd m(2);
  m << 1.0, -2.0;
  MatrixXd L(2, 2);
  L << 1.5, 0.0, 0.3, 0.8;  // covariance = L L^T
  const GaussianMixture g = single_component(m, L);

  VectorXd x(2);
  x << 0.4, -1.1;
  // direct evaluation: log N(x; m, LL^T)
  const MatrixXd cov = L * L.transpose();
  const VectorXd r = x - m;
  const double quad = r.dot(cov.inverse() * r);
  const double want =
      -std::log(2.0 * M_PI) - 0.5 * std::log(cov.determinant()) - 0.5 * quad;
  CHECK(g.log_density(x) == doctest::Approx(want).epsilon(1e-12));
}

TEST_CASE("mixture log-density is a log-sum-exp of its components") {
  VectorXd m1 = VectorXd::Constant(1, -1.0);
  VectorXd m2 = VectorXd::Constant(1, 2.0);
  MatrixXd L1 = MatrixXd::Constant(1, 1, 0.7);
  MatrixXd L2 = MatrixXd::Constant(1, 1, 1.3);
  GaussianMixture g;
  g.log_weights = {std::log(0.25), std::log(0.75)};
  g.means = {m1, m2};
  g.chol = {L1, L2};

  const double x = 0.5;
  const double want = std::log(
      0.25 * std::exp(normal_logpdf(x, -1.0, 0.49)) +
      0.75 * std::exp(normal_logpdf(x, 2.0, 1.69)));
  CHECK(g.log_density(VectorXd::Constant(1, x)) == doctest::Approx(want).epsilon(1e-12));
}

TEST_CASE("sampling recovers component weights and moments") {
  GaussianMixture g;
  g.log_weights = {std::log(0.3), std::log(0.7)};
  g.means = {VectorXd::Constant(1, -4.0), VectorXd::Constant(1, 3.0)};
  g.chol = {MatrixXd::Constant(1, 1, 0.5), MatrixXd::Constant(1, 1, 1.0)};

  Rng rng = derive_rng(61, {1});
  const int n = 200000;
  int left = 0;
  double s = 0;
  for (int i = 0; i < n; ++i) {
    const double x = g.sample(rng)[0];
    if (x < -0.5) ++left;
    s += x;
  }
  CHECK(static_cast<double>(left) / n == doctest::Approx(0.3).epsilon(0.02));
  CHECK(s / n == doctest::Approx(0.3 * -4.0 + 0.7 * 3.0).epsilon(0.03));
}

TEST_CASE("em fit recovers a well-separated two-component target") {
  Rng rng = derive_rng(62, {1});
  const int n = 4000;
  MatrixXd pts(1, n);
  for (int i = 0; i < n; ++i) {
    const bool a = draw_uniform(rng, 0.0, 1.0) < 0.4;
    pts(0, i) = a ? draw_normal(rng, -5.0, 0.6) : draw_normal(rng, 4.0, 0.9);
  }
  const VectorXd w = VectorXd::Constant(n, 1.0 / n);
  const GaussianMixture g = fit_gaussian_mixture(pts, w, 2, rng);
  REQUIRE(g.n_components() == 2);

  // identify components by mean ordering
  const int lo = g.means[0][0] < g.means[1][0] ? 0 : 1;
  const int hi = 1 - lo;
  CHECK(g.means[lo][0] == doctest::Approx(-5.0).epsilon(0.05));
  CHECK(g.means[hi][0] == doctest::Approx(4.0).epsilon(0.05));
  CHECK(std::exp(g.log_weights[lo]) == doctest::Approx(0.4).epsilon(0.08));
  CHECK(g.chol[lo](0, 0) == doctest::Approx(0.6).epsilon(0.15));
  CHECK(g.chol[hi](0, 0) == doctest::Approx(0.9).epsilon(0.15));
}

TEST_CASE("em fit respects particle weights") {
  // two point masses at +-1 with weights favoring +1: a one-component fit
  // must center near the weighted mean
  Rng rng = derive_rng(63, {1});
  const int n = 1000;
  MatrixXd pts(1, n);
  VectorXd w(n);
  for (int i = 0; i < n; ++i) {
    pts(0, i) = (i % 2 == 0) ? 1.0 + 0.01 * draw_normal(rng, 0, 1)
                             : -1.0 + 0.01 * draw_normal(rng, 0, 1);
    w[i] = (i % 2 == 0) ? 3.0 : 1.0;
  }
  w /= w.sum();
  const GaussianMixture g = fit_gaussian_mixture(pts, w, 1, rng);
  CHECK(g.means[0][0] == doctest::Approx(0.5).epsilon(0.05));
}

TEST_CASE("fit handles more components than distinct particles") {
  Rng rng = derive_rng(64, {1});
  MatrixXd pts(1, 3);
  pts << 1.0, 1.0, 1.000001;
  const VectorXd w = VectorXd::Constant(3, 1.0 / 3.0);
  // must not throw: degenerate clusters collapse to a moment-matched fit
  const GaussianMixture g = fit_gaussian_mixture(pts, w, 5, rng);
  CHECK(g.n_components() >= 1);
  Rng r2 = derive_rng(64, {2});
  const VectorXd s = g.sample(r2);
  CHECK(std::isfinite(s[0]));
  CHECK(std::isfinite(g.log_density(s)));
}

TEST_CASE("two-dimensional fit reproduces covariance structure") {
  Rng rng = derive_rng(65, {1});
  const int n = 6000;
  MatrixXd pts(2, n);
  for (int i = 0; i < n; ++i) {
    const double a = draw_normal(rng, 0.0, 1.0);
    const double b = draw_normal(rng, 0.0, 0.5);
    pts(0, i) = a;
    pts(1, i) = 0.8 * a + b;  // cov = [[1, .8], [.8, .89]]
  }
  const VectorXd w = VectorXd::Constant(n, 1.0 / n);
  const GaussianMixture g = fit_gaussian_mixture(pts, w, 1, rng);
  const MatrixXd cov = g.chol[0] * g.chol[0].transpose();
  CHECK(cov(0, 0) == doctest::Approx(1.0).epsilon(0.08));
  CHECK(cov(0, 1) == doctest::Approx(0.8).epsilon(0.08));
  CHECK(cov(1, 1) == doctest::Approx(0.89).epsilon(0.08));
}

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <vector>

#include "hscore/common.hpp"
#include "hscore/scoring.hpp"
#include "support/oracles.hpp"

using namespace hscore;

TEST_CASE("normal divergence gaps hit their closed-form values") {
  // mu*=1, s2*=1: 1/(1*2) - 0 = 0.5
  CHECK(fisher_gap_normal(1.0, 1.0) == doctest::Approx(0.5).epsilon(1e-12));
  // mu*=0, s2*=5: 0 - 16/5 = -3.2
  CHECK(fisher_gap_normal(0.0, 5.0) == doctest::Approx(-3.2).epsilon(1e-12));
  // mu*=4, s2*=3: 16/(3*19) - 4/3
  CHECK(fisher_gap_normal(4.0, 3.0) ==
        doctest::Approx(16.0 / 57.0 - 4.0 / 3.0).epsilon(1e-12));
  CHECK(fisher_gap_normal(4.0, 3.0) == doctest::Approx(-1.05).epsilon(0.01));

  CHECK(kl_gap_normal(0.0, 1.0) == doctest::Approx(0.0));
  CHECK(kl_gap_normal(1.0, 1.0) == doctest::Approx(0.5 * std::log(2.0)).epsilon(1e-12));
  const double kl43 = 0.5 * std::log(19.0 / 3.0) - 0.5 * (2.0 - std::log(3.0));
  CHECK(kl_gap_normal(4.0, 3.0) == doctest::Approx(kl43).epsilon(1e-12));
  CHECK(kl_gap_normal(4.0, 3.0) == doctest::Approx(0.47).epsilon(0.01));
  // the two criteria disagree in sign at (4, 3)
  CHECK(fisher_gap_normal(4.0, 3.0) < 0.0);
  CHECK(kl_gap_normal(4.0, 3.0) > 0.0);

  CHECK(fisher_gap_normal(0.0, 1.0) == doctest::Approx(0.0));
  CHECK_THROWS_AS(fisher_gap_normal(0.0, -1.0), InvalidInput);
  CHECK_THROWS_AS(kl_gap_normal(0.0, 0.0), InvalidInput);
}

TEST_CASE("sign-change boundaries") {
  CHECK(fisher_gap_boundary(1.0) == doctest::Approx(0.0));
  CHECK(kl_gap_boundary(1.0) == doctest::Approx(0.0));
  CHECK(std::isinf(fisher_gap_boundary(2.0)));
  CHECK(std::isinf(fisher_gap_boundary(3.5)));
  CHECK(kl_gap_boundary(3.0) ==
        doctest::Approx(std::sqrt(std::exp(2.0) - 3.0)).epsilon(1e-12));
  // on the boundary the fisher gap vanishes: s2=1.5, |mu| = 0.5/sqrt(0.5)
  const double s2 = 1.5;
  const double b = fisher_gap_boundary(s2);
  CHECK(fisher_gap_normal(b, s2) == doctest::Approx(0.0).epsilon(1e-10));
  const double bkl = kl_gap_boundary(s2);
  CHECK(kl_gap_normal(bkl, s2) == doctest::Approx(0.0).epsilon(1e-10));
}

TEST_CASE("hyvarinen_point is exactly scale-invariant") {
  DensityDerivatives d;
  d.log_density = -1.3;
  d.grad_log = VectorXd::Constant(1, 0.7);
  d.lap_log = -2.0;
  DensityDerivatives shifted = d;
  shifted.log_density += std::log(37.0);  // c * p has identical derivatives
  CHECK(hyvarinen_point(d) == hyvarinen_point(shifted));
  CHECK(hyvarinen_point(d) == doctest::Approx(2.0 * (-2.0) + 0.49).epsilon(1e-14));
}

TEST_CASE("score increment invariant holds for every constructor") {
  std::mt19937_64 gen(99);
  std::normal_distribution<double> nd;
  for (int rep = 0; rep < 20; ++rep) {
    VectorXd d1(3), d2(3);
    for (int k = 0; k < 3; ++k) {
      d1[k] = nd(gen);
      d2[k] = nd(gen);
    }
    const ScoreIncrement inc = score_increment_from_per_dim(d1, d2);
    double direct = 0.0;
    for (int k = 0; k < 3; ++k) direct += 2.0 * d2[k] + d1[k] * d1[k];
    CHECK(inc.value == doctest::Approx(direct).epsilon(1e-14));
  }
}

namespace {

// Two-component equal-variance Gaussian mixture predictive; the posterior
// form must reproduce the analytic score of the mixture density.
struct Mixture2 {
  double w1, m1, m2;  // unit variances

  double logp(double y) const {
    VectorXd lw(2);
    lw << std::log(w1) - 0.5 * (y - m1) * (y - m1),
        std::log(1.0 - w1) - 0.5 * (y - m2) * (y - m2);
    return log_sum_exp(lw) - 0.5 * std::log(2.0 * M_PI);
  }
};

}  // namespace

TEST_CASE("posterior-form increment equals the analytic mixture score") {
  const Mixture2 mix{0.3, -1.0, 2.0};
  for (double y : {-2.0, -0.5, 0.0, 1.3, 3.0}) {
    // component responsibilities given y (updated weights)
    VectorXd lw(2);
    lw << std::log(mix.w1) - 0.5 * (y - mix.m1) * (y - mix.m1),
        std::log(1.0 - mix.w1) - 0.5 * (y - mix.m2) * (y - mix.m2);
    const VectorXd w = softmax(lw);
    MatrixXd d1(2, 1), d2(2, 1);
    d1 << -(y - mix.m1), -(y - mix.m2);
    d2 << -1.0, -1.0;
    const ScoreIncrement inc = hscore_increment_from_posterior(d1, d2, w);

    auto logp = [&](double v) { return mix.logp(v); };
    const double ref =
        2.0 * testref::fd_lap(logp, y) +
        testref::fd_grad(logp, y) * testref::fd_grad(logp, y);
    CHECK(inc.value == doctest::Approx(ref).epsilon(1e-5));
    CHECK(inc.value ==
          doctest::Approx(2.0 * inc.per_dim_d2[0] + inc.per_dim_d1[0] * inc.per_dim_d1[0])
              .epsilon(1e-14));
  }
}

TEST_CASE("posterior and variance forms agree to round-off") {
  std::mt19937_64 gen(4321);
  std::normal_distribution<double> nd;
  std::uniform_real_distribution<double> ud(0.1, 1.0);
  for (int rep = 0; rep < 50; ++rep) {
    const int n = 2 + rep % 7;
    MatrixXd d1(n, 1), d2(n, 1);
    VectorXd w(n), h(n);
    for (int i = 0; i < n; ++i) {
      d1(i, 0) = nd(gen);
      d2(i, 0) = nd(gen);
      w[i] = ud(gen);
      h[i] = 2.0 * d2(i, 0) + d1(i, 0) * d1(i, 0);
    }
    w /= w.sum();
    const ScoreIncrement a = hscore_increment_from_posterior(d1, d2, w);
    const double b = hscore_increment_variance_form(h, d1.col(0), w);
    CHECK(a.value == doctest::Approx(b).epsilon(1e-10));
  }
  // one-point posterior: both reduce to the plain pointwise score
  MatrixXd d1(1, 1), d2(1, 1);
  d1 << 0.4;
  d2 << -0.9;
  VectorXd w1 = VectorXd::Ones(1);
  const double point = 2.0 * -0.9 + 0.16;
  CHECK(hscore_increment_from_posterior(d1, d2, w1).value ==
        doctest::Approx(point).epsilon(1e-14));
  VectorXd h1(1);
  h1 << point;
  CHECK(hscore_increment_variance_form(h1, d1.col(0), w1) ==
        doctest::Approx(point).epsilon(1e-14));
  // two equal-weight samples with d1 = +-a add a variance term a^2
  MatrixXd d1b(2, 1), d2b(2, 1);
  d1b << 0.8, -0.8;
  d2b << -1.0, -1.0;
  VectorXd wb = VectorXd::Constant(2, 0.5);
  const double expect = (2.0 * -1.0 + 0.64) + 0.64;
  CHECK(hscore_increment_from_posterior(d1b, d2b, wb).value ==
        doctest::Approx(expect).epsilon(1e-12));
}

namespace {

LogPmf dense_pmf(const std::vector<double>& p) {
  return [p](std::span<const std::int64_t> y) {
    const std::int64_t k = y[0];
    if (k < 0 || k >= static_cast<std::int64_t>(p.size())) return hscore::kNegInf;
    return std::log(p[static_cast<std::size_t>(k)]);
  };
}

}  // namespace

TEST_CASE("discrete score: frozen Poisson oracle value") {
  // Poisson(3) truncated to [0,20] at y=3; the central-difference formulas
  // evaluate to -497/960 (hand computation in probability space).
  auto lp = [](std::span<const std::int64_t> y) {
    const double k = static_cast<double>(y[0]);
    return k * std::log(3.0) - std::lgamma(k + 1.0);
  };
  const double v = discrete_hscore(std::vector<std::int64_t>{3}, lp,
                                   DiscreteSupport::box(0, 20, 1));
  CHECK(v == doctest::Approx(-497.0 / 960.0).epsilon(1e-12));
}

TEST_CASE("discrete score: uniform pmf scores zero everywhere") {
  const std::vector<double> u(11, 1.0 / 11.0);
  const LogPmf lp = dense_pmf(u);
  const DiscreteSupport s = DiscreteSupport::box(0, 10, 1);
  for (std::int64_t y = 0; y <= 10; ++y)
    CHECK(discrete_hscore(std::vector<std::int64_t>{y}, lp, s) ==
          doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("discrete score matches the independent reference on random pmfs") {
  std::mt19937_64 gen(2024);
  std::uniform_real_distribution<double> ud(0.05, 1.0);
  for (int rep = 0; rep < 30; ++rep) {
    std::vector<double> p(13);
    double s = 0;
    for (double& v : p) {
      v = ud(gen);
      s += v;
    }
    for (double& v : p) v /= s;
    const LogPmf lp = dense_pmf(p);
    auto pf = [&](std::int64_t k) { return p[static_cast<std::size_t>(k)]; };
    const DiscreteSupport sup = DiscreteSupport::box(0, 12, 1);
    for (std::int64_t y = 0; y <= 12; ++y) {
      const double mine = discrete_hscore(std::vector<std::int64_t>{y}, lp, sup);
      const double ref = testref::ref_discrete_hscore_1d(pf, y, 0, 12);
      CHECK(mine == doctest::Approx(ref).epsilon(1e-10));
    }
  }
}

TEST_CASE("discrete score on an unbounded side uses interior formulas") {
  // Poisson(2.5) on the nonnegative integers: y>=2 is interior
  auto lp = [](std::span<const std::int64_t> y) {
    const double k = static_cast<double>(y[0]);
    return k * std::log(2.5) - std::lgamma(k + 1.0);
  };
  auto pf = [](std::int64_t k) {
    return std::exp(k * std::log(2.5) - std::lgamma(static_cast<double>(k) + 1.0));
  };
  const DiscreteSupport s = DiscreteSupport::nonnegative(1);
  for (std::int64_t y : {0, 1, 2, 5, 9}) {
    const double mine = discrete_hscore(std::vector<std::int64_t>{y}, lp, s);
    const double ref = testref::ref_discrete_hscore_1d(pf, y, 0, std::nullopt);
    CHECK(mine == doctest::Approx(ref).epsilon(1e-10));
  }
}

TEST_CASE("discrete score: homogeneity") {
  std::vector<double> p{0.1, 0.3, 0.2, 0.15, 0.25};
  const LogPmf lp = dense_pmf(p);
  // Power-of-two log-shift: x + 2^-6 is exact for these magnitudes, so the
  // scale constant cancels bitwise and equality is exact.
  const LogPmf lp_pow2 = [lp](std::span<const std::int64_t> y) {
    return lp(y) + 0.015625;
  };
  const LogPmf lp_generic = [lp](std::span<const std::int64_t> y) {
    return lp(y) + 7.77;
  };
  const DiscreteSupport s = DiscreteSupport::box(0, 4, 1);
  for (std::int64_t y = 0; y <= 4; ++y) {
    const double a = discrete_hscore(std::vector<std::int64_t>{y}, lp, s);
    CHECK(a == discrete_hscore(std::vector<std::int64_t>{y}, lp_pow2, s));
    CHECK(discrete_hscore(std::vector<std::int64_t>{y}, lp_generic, s) ==
          doctest::Approx(a).epsilon(1e-12));
  }
}

TEST_CASE("discrete score: propriety by enumeration on [0,6]") {
  std::mt19937_64 gen(777);
  std::uniform_real_distribution<double> ud(0.05, 1.0);
  std::vector<double> pstar(7);
  double s = 0;
  for (double& v : pstar) {
    v = ud(gen);
    s += v;
  }
  for (double& v : pstar) v /= s;

  const double self = testref::ref_expected_discrete_score(pstar, pstar);
  {
    // the library agrees with the reference on the expected self-score
    const LogPmf lp = dense_pmf(pstar);
    const DiscreteSupport sup = DiscreteSupport::box(0, 6, 1);
    double acc = 0;
    for (std::int64_t y = 0; y <= 6; ++y)
      acc += pstar[static_cast<std::size_t>(y)] *
             discrete_hscore(std::vector<std::int64_t>{y}, lp, sup);
    CHECK(acc == doctest::Approx(self).epsilon(1e-10));
  }
  int strict = 0;
  for (int rep = 0; rep < 100; ++rep) {
    std::vector<double> q(7);
    double qs = 0;
    for (double& v : q) {
      v = ud(gen);
      qs += v;
    }
    for (double& v : q) v /= qs;
    const double other = testref::ref_expected_discrete_score(pstar, q);
    CHECK(other >= self - 1e-12);
    if (other > self + 1e-9) ++strict;
  }
  CHECK(strict == 100);  // random alternatives are a.s. distinct from pstar
  // scaled pstar attains the minimum exactly (score ignores normalization)
  std::vector<double> scaled = pstar;
  for (double& v : scaled) v *= 3.0;
  CHECK(testref::ref_expected_discrete_score(pstar, scaled) ==
        doctest::Approx(self).epsilon(1e-12));
}

TEST_CASE("discrete score: short supports drop out-of-range stencils") {
  // two-point support: both ends are boundary; dlog needs [y-1, y+1] inside,
  // impossible, so every term is dropped
  std::vector<double> p2{0.4, 0.6};
  CHECK(discrete_hscore(std::vector<std::int64_t>{0}, dense_pmf(p2),
                        DiscreteSupport::box(0, 1, 1)) == doctest::Approx(0.0));
  CHECK(discrete_hscore(std::vector<std::int64_t>{1}, dense_pmf(p2),
                        DiscreteSupport::box(0, 1, 1)) == doctest::Approx(0.0));
  // three-point support: the midpoint has a full central stencil
  std::vector<double> p3{0.2, 0.5, 0.3};
  auto pf3 = [&](std::int64_t k) { return p3[static_cast<std::size_t>(k)]; };
  for (std::int64_t y = 0; y <= 2; ++y)
    CHECK(discrete_hscore(std::vector<std::int64_t>{y}, dense_pmf(p3),
                          DiscreteSupport::box(0, 2, 1)) ==
          doctest::Approx(testref::ref_discrete_hscore_1d(pf3, y, 0, 2)).epsilon(1e-12));
  // single point: scores zero
  std::vector<double> p1{1.0};
  CHECK(discrete_hscore(std::vector<std::int64_t>{0}, dense_pmf(p1),
                        DiscreteSupport::box(0, 0, 1)) == doctest::Approx(0.0));
}

TEST_CASE("discrete score: bivariate product pmf sums coordinate scores") {
  std::vector<double> pa{0.1, 0.2, 0.3, 0.25, 0.15};
  std::vector<double> pb{0.3, 0.4, 0.2, 0.1};
  const LogPmf joint = [&](std::span<const std::int64_t> y) {
    return std::log(pa[static_cast<std::size_t>(y[0])]) +
           std::log(pb[static_cast<std::size_t>(y[1])]);
  };
  DiscreteSupport s;
  s.lower = {std::int64_t{0}, std::int64_t{0}};
  s.upper = {std::int64_t{4}, std::int64_t{3}};
  auto paf = [&](std::int64_t k) { return pa[static_cast<std::size_t>(k)]; };
  auto pbf = [&](std::int64_t k) { return pb[static_cast<std::size_t>(k)]; };
  for (std::int64_t i = 0; i <= 4; ++i)
    for (std::int64_t j = 0; j <= 3; ++j) {
      const double mine = discrete_hscore(std::vector<std::int64_t>{i, j}, joint, s);
      const double ref = testref::ref_discrete_hscore_1d(paf, i, 0, 4) +
                         testref::ref_discrete_hscore_1d(pbf, j, 0, 3);
      CHECK(mine == doctest::Approx(ref).epsilon(1e-10));
    }
}

TEST_CASE("discrete score error cases") {
  std::vector<double> p{0.5, 0.0, 0.5};
  const DiscreteSupport s = DiscreteSupport::box(0, 2, 1);
  CHECK_THROWS_AS(
      discrete_hscore(std::vector<std::int64_t>{5}, dense_pmf(p), s), ScoringError);
  CHECK_THROWS_AS(
      discrete_hscore(std::vector<std::int64_t>{1}, dense_pmf(p), s), ScoringError);
  CHECK_THROWS_AS(discrete_hscore(std::vector<std::int64_t>{0, 0}, dense_pmf(p), s),
                  InvalidInput);
}

TEST_CASE("discrete increment keeps the per-dim invariant") {
  std::vector<double> p{0.1, 0.2, 0.3, 0.25, 0.15};
  const ScoreIncrement inc = discrete_score_increment(
      std::vector<std::int64_t>{2}, dense_pmf(p), DiscreteSupport::box(0, 4, 1));
  CHECK(inc.value ==
        doctest::Approx(2.0 * inc.per_dim_d2[0] + inc.per_dim_d1[0] * inc.per_dim_d1[0])
            .epsilon(1e-14));
}

#include "hscore/kde.hpp"

#include <cmath>

#include "hscore/distributions.hpp"

namespace hscore {

void KdeEstimate::validate() const {
  if (draws.size() < 1) throw InvalidInput("KdeEstimate: need at least one draw");
  if (!(bandwidth > 0.0)) throw InvalidInput("KdeEstimate: bandwidth must be positive");
  require_finite(draws, "KdeEstimate draws");
}

DensityDerivatives kde_logdensity_and_derivs(const KdeEstimate& est, double y) {
  est.validate();
  if (!std::isfinite(y)) throw InvalidInput("kde_logdensity_and_derivs: non-finite y");
  const int n = static_cast<int>(est.draws.size());
  const double h = est.bandwidth;

  VectorXd u(n), logk(n);
  for (int i = 0; i < n; ++i) {
    u[i] = (y - est.draws[i]) / h;
    logk[i] = -0.5 * u[i] * u[i] - 0.5 * kLogTwoPi;
  }
  const double lse = log_sum_exp(logk);
  const double log_density = lse - std::log(static_cast<double>(n) * h);
  if (!(log_density > -700.0))
    throw KdeUnderflow("kde_logdensity_and_derivs: density underflow at y=" +
                       std::to_string(y));

  // kernel-weighted moments of u, computed on the shifted scale
  double s0 = 0.0, s1 = 0.0, s2 = 0.0;
  for (int i = 0; i < n; ++i) {
    const double w = std::exp(logk[i] - lse);
    s0 += w;
    s1 += w * u[i];
    s2 += w * u[i] * u[i];
  }
  const double eu = s1 / s0;
  const double eu2 = s2 / s0;

  DensityDerivatives d;
  d.log_density = log_density;
  d.grad_log = VectorXd::Constant(1, -eu / h);
  const double ratio2 = (eu2 - 1.0) / (h * h);  // p-hat'' / p-hat
  d.lap_log = ratio2 - (eu / h) * (eu / h);
  return d;
}

ScoreIncrement kde_hscore_increment(const std::vector<KdeEstimate>& per_theta_draws,
                                    const VectorXd& theta_weights, double y,
                                    int* n_excluded, bool* unreliable) {
  const int n = static_cast<int>(per_theta_draws.size());
  if (n == 0) throw InvalidInput("kde_hscore_increment: no theta particles");
  if (theta_weights.size() != n)
    throw InvalidInput("kde_hscore_increment: weight length mismatch");

  MatrixXd d1(n, 1), d2(n, 1);
  std::vector<bool> ok(n, false);
  int excluded = 0;
  for (int i = 0; i < n; ++i) {
    try {
      const DensityDerivatives d = kde_logdensity_and_derivs(per_theta_draws[i], y);
      d1(i, 0) = d.grad_log[0];
      d2(i, 0) = d.lap_log;
      ok[i] = true;
    } catch (const KdeUnderflow&) {
      ++excluded;
    }
  }
  if (excluded == n)
    throw DegeneracyError("kde_hscore_increment: every theta particle underflowed at y=" +
                          std::to_string(y));

  VectorXd w = theta_weights;
  if (excluded > 0) {
    for (int i = 0; i < n; ++i)
      if (!ok[i]) w[i] = 0.0;
    const double s = w.sum();
    if (!(s > 0.0))
      throw DegeneracyError("kde_hscore_increment: surviving theta particles carry no weight");
    w /= s;
    for (int i = 0; i < n; ++i)
      if (!ok[i]) {
        d1(i, 0) = 0.0;  // zero-weight rows; values are never used
        d2(i, 0) = 0.0;
      }
  }

  if (n_excluded) *n_excluded = excluded;
  if (unreliable) *unreliable = excluded > n / 10;
  return hscore_increment_from_posterior(d1, d2, w);
}

}  // namespace hscore

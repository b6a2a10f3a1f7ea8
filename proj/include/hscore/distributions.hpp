#ifndef HSCORE_DISTRIBUTIONS_HPP
#define HSCORE_DISTRIBUTIONS_HPP

#include <cmath>

#include "hscore/common.hpp"
#include "hscore/rng.hpp"

namespace hscore {

inline constexpr double kLogTwoPi = 1.8378770664093454836;

inline double normal_logpdf(double y, double mean, double var) {
  const double r = y - mean;
  return -0.5 * (kLogTwoPi + std::log(var) + r * r / var);
}

inline double draw_normal(Rng& rng, double mean, double sd) {
  std::normal_distribution<double> d(mean, sd);
  return d(rng);
}

inline double draw_uniform(Rng& rng, double lo, double hi) {
  std::uniform_real_distribution<double> d(lo, hi);
  return d(rng);
}

inline double draw_exponential(Rng& rng, double rate) {
  std::exponential_distribution<double> d(rate);
  return d(rng);
}

inline double draw_gamma(Rng& rng, double shape, double rate) {
  std::gamma_distribution<double> d(shape, 1.0 / rate);
  return d(rng);
}

inline long long draw_poisson(Rng& rng, double mean) {
  std::poisson_distribution<long long> d(mean);
  return d(rng);
}

// Student-t with location, scale^2 and dof: loc + scale * t_nu.
inline double student_t_logpdf(double y, double nu, double loc, double scale_sq) {
  const double r2 = (y - loc) * (y - loc) / scale_sq;
  return std::lgamma(0.5 * (nu + 1.0)) - std::lgamma(0.5 * nu) -
         0.5 * std::log(nu * M_PI * scale_sq) -
         0.5 * (nu + 1.0) * std::log1p(r2 / nu);
}

// Scaled inverse chi-squared with dof nu and scale s2.
inline double scaled_inv_chi2_logpdf(double x, double nu, double s2) {
  if (x <= 0.0) return kNegInf;
  const double h = 0.5 * nu;
  return h * std::log(h * s2) - std::lgamma(h) - (h + 1.0) * std::log(x) - h * s2 / x;
}

inline double lognormal_logpdf(double x, double mu, double var) {
  if (x <= 0.0) return kNegInf;
  const double l = std::log(x);
  return normal_logpdf(l, mu, var) - l;
}

inline double draw_lognormal(Rng& rng, double mu, double sd) {
  return std::exp(draw_normal(rng, mu, sd));
}

// Negative binomial parametrized by mean m and variance v > m:
// number of failures r = m^2/(v-m), success probability of the counted
// event p = (v-m)/v, giving pmf C(k+r-1,k) (1-p)^r p^k with the stated
// mean and variance.
inline double nb_logpmf_mean_var(long long k, double m, double v) {
  if (k < 0) return kNegInf;
  if (!(v > m) || !(m > 0.0)) throw InvalidInput("nb_logpmf_mean_var: need v > m > 0");
  const double r = m * m / (v - m);
  const double log_p = std::log(v - m) - std::log(v);
  const double log_1mp = std::log(m) - std::log(v);
  const double kd = static_cast<double>(k);
  return std::lgamma(kd + r) - std::lgamma(r) - std::lgamma(kd + 1.0) + r * log_1mp +
         kd * log_p;
}

// Gamma-Poisson draw matching nb_logpmf_mean_var.
inline long long draw_nb_mean_var(Rng& rng, double m, double v) {
  if (!(v > m) || !(m > 0.0)) throw InvalidInput("draw_nb_mean_var: need v > m > 0");
  const double r = m * m / (v - m);
  const double scale = (v - m) / m;  // p/(1-p)
  std::gamma_distribution<double> g(r, scale);
  const double lambda = g(rng);
  if (lambda <= 0.0) return 0;
  std::poisson_distribution<long long> d(lambda);
  return d(rng);
}

}  // namespace hscore

#endif

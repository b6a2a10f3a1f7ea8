#ifndef HSCORE_ORACLE_HPP
#define HSCORE_ORACLE_HPP

#include <span>
#include <utility>

#include "hscore/common.hpp"
#include "hscore/scoring.hpp"
#include "hscore/trace.hpp"

namespace hscore {

struct GaussianPredictive {
  double mean = 0.0;
  double variance = 0.0;
};

// One-step-ahead predictive of the Normal mean model after assimilating
// y_prefix: N(mu_t, sigma_t^2 + 1) with sigma_t^2 = (t + sigma0^-2)^-1 and
// mu_t = sigma_t^2 * sum(y).  sigma0_sq may be +inf (flat prior); the
// prefix must then be nonempty.
GaussianPredictive conjugate_m1_predictive(std::span<const double> y_prefix, double sigma0_sq);

// Exact predictive of the Normal variance model: a scaled Student-t with
// nu_t = nu0 + t and nu_t s_t^2 = nu0 s0^2 + sum(y^2), evaluated at y with
// closed-form observation derivatives.
DensityDerivatives conjugate_m2_predictive_logpdf_and_derivs(std::span<const double> y_prefix,
                                                             double nu0, double s0_sq,
                                                             double y);

struct LgssmParams {
  double phi = 0.5;
  double sigma_x = 1.0;
  double sigma_y = 1.0;
};

// Scalar Kalman filter for the linear-Gaussian model, stationary start.
class KalmanFilter {
 public:
  explicit KalmanFilter(const LgssmParams& params);

  // Predictive law of the next observation (before assimilating it).
  GaussianPredictive predictive() const;
  // Assimilates one observation; returns its predictive log-density.
  double step(double y);
  double loglik_cum() const { return loglik_cum_; }

 private:
  LgssmParams p_;
  double mean_ = 0.0;      // filtered state mean
  double var_ = 0.0;       // filtered state variance
  bool first_ = true;
  double loglik_cum_ = 0.0;
};

GaussianPredictive kalman_predictive(const LgssmParams& params, std::span<const double> y_prefix);

// Exact prequential traces (log-evidence and H-score) for the two Normal
// models on shared data, from the closed-form predictives.  For a flat M1
// prior (sigma0_sq = +inf) the t=1 row carries the limiting H increment 0
// and an undefined (-inf) evidence increment, with tau = 1.
std::pair<PrequentialTrace, PrequentialTrace> exact_prequential_scores_m1_m2(
    std::span<const double> data, double sigma0_sq, double nu0, double s0_sq);

// Exact trace for the linear-Gaussian model at a fixed theta = phi.
PrequentialTrace lgssm_exact_trace(const LgssmParams& params, std::span<const double> data);

// Exact trace with phi marginalized over its Unif(-0.95, 0.95) prior by
// Gauss-Legendre quadrature; reference for the SMC2 estimators.
PrequentialTrace lgssm_marginal_exact_trace(double sigma_x, double sigma_y,
                                            std::span<const double> data, int n_nodes = 512);

}  // namespace hscore

#endif

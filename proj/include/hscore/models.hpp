#ifndef HSCORE_MODELS_HPP
#define HSCORE_MODELS_HPP

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "hscore/common.hpp"
#include "hscore/rng.hpp"
#include "hscore/scoring.hpp"

namespace hscore {

struct ParamVector {
  VectorXd values;
  std::vector<std::string> names;

  int dim() const { return static_cast<int>(values.size()); }
};

// Behavioral description of an i.i.d. model: prior, pointwise likelihood
// and its observation-derivatives.  prior_sampler/likelihood_sampler may be
// absent (improper prior, or no simulation support).  first_proper_index is
// the number of observations needed before the posterior is proper; score
// accumulation starts after it.
struct IidModelSpec {
  std::string name;
  int dim_theta = 0;
  int dim_y = 1;
  int first_proper_index = 0;
  std::vector<std::string> param_names;
  ParamVector default_theta;

  std::function<double(const ConstVecRef& theta)> prior_log_density;
  std::function<VectorXd(Rng&)> prior_sampler;
  std::function<double(const ConstVecRef& y, const ConstVecRef& theta)> likelihood_log_density;
  std::function<DensityDerivatives(const ConstVecRef& y, const ConstVecRef& theta)>
      likelihood_y_derivs;
  std::function<VectorXd(const ConstVecRef& theta, Rng&)> likelihood_sampler;
};

enum class ObservationKind { kContinuous, kDiscrete };

// State-space model: only simulation of the latent process is required;
// the measurement density must be evaluable.  transition_sampler moves the
// state from observation index t to t+1 (0-based t), which lets models with
// irregular observation times pick the right integration span.
struct SsmSpec {
  std::string name;
  int dim_theta = 0;
  int dim_x = 0;
  int dim_y = 1;
  std::vector<std::string> param_names;
  ParamVector default_theta;

  std::function<double(const ConstVecRef& theta)> prior_log_density;
  std::function<VectorXd(Rng&)> prior_sampler;
  std::function<VectorXd(const ConstVecRef& theta, Rng&)> init_sampler;
  std::function<VectorXd(const ConstVecRef& x, const ConstVecRef& theta, int t, Rng&)>
      transition_sampler;
  std::function<double(const ConstVecRef& y, const ConstVecRef& x, const ConstVecRef& theta)>
      measurement_log_density;
  // Exact observation-derivatives of log g(y|x,theta); unset when they are
  // unusable (heavy tails, discrete observations) and the KDE or discrete
  // path must be taken instead.
  std::function<DensityDerivatives(const ConstVecRef& y, const ConstVecRef& x,
                                   const ConstVecRef& theta)>
      measurement_y_derivs;
  std::function<VectorXd(const ConstVecRef& x, const ConstVecRef& theta, Rng&)>
      measurement_sampler;

  ObservationKind observation_kind = ObservationKind::kContinuous;
  std::optional<DiscreteSupport> support;  // set iff observation_kind is discrete
};

// Normal mean model: Y ~ N(theta, 1) with theta ~ N(0, sigma0_sq).
IidModelSpec normal_m1_spec(double sigma0_sq = 10.0);

// Normal variance model: Y ~ N(0, theta) with theta ~ Inv-chi^2(nu0, s0_sq).
IidModelSpec normal_m2_spec(double nu0 = 0.1, double s0_sq = 1.0);

// Scalar linear-Gaussian state space:
//   X_{t+1} = phi X_t + sigma_x W,  Y_t = X_t + sigma_y V,
// stationary initialization, phi free with a Unif(-0.95, 0.95) prior and
// the noise scales held fixed.  The phi argument only seeds default_theta.
SsmSpec lgssm_spec(double phi = 0.5, double sigma_x = 1.0, double sigma_y = 1.0);

// One recursion of the Levy-driven volatility dynamics: returns the new
// background level z and the integrated variance v over the unit interval.
struct LevyStep {
  double v = 0.0;
  double z = 0.0;
};
LevyStep levy_sv_transition(double z_prev, double lambda, double xi, double omega_sq, Rng& rng);

// Single-factor stochastic volatility model; theta = (lambda, xi, omega_sq,
// mu, beta), state (Z_t, V_t), measurement Y_t | V_t ~ N(mu + beta V_t, V_t).
SsmSpec levy_sv_m1_spec();

// Two-factor variant; theta = (lambda1, lambda2, w, xi, omega_sq, mu, beta)
// with lambda2 > lambda1 and factor shares (w, 1-w); state (Z1, Z2, V).
SsmSpec levy_sv_m2_spec();

enum class KangarooVariant { kM1, kM2, kM3 };

// Logistic-diffusion population model with bivariate negative-binomial
// counts.  theta is (sigma, tau, r, b) for M1, (sigma, tau, r) for M2
// (b = 0), (sigma, tau) for M3 (b = r = 0).  The latent SDE is integrated
// by Euler-Maruyama on log X with step delta_t; `times` carries the
// observation epochs so transitions span the actual gaps (unit spacing
// when empty).  r_halfwidth widens the Unif(-r_halfwidth, r_halfwidth)
// prior on the growth rate for prior-sensitivity sweeps.
SsmSpec kangaroo_spec(KangarooVariant variant, double delta_t,
                      std::vector<double> times = {}, double r_halfwidth = 10.0);

MatrixXd simulate_dataset(const IidModelSpec& spec, const ParamVector& theta, int T, Rng& rng);
MatrixXd simulate_dataset(const SsmSpec& spec, const ParamVector& theta, int T, Rng& rng);

}  // namespace hscore

#endif

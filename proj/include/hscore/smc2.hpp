#ifndef HSCORE_SMC2_HPP
#define HSCORE_SMC2_HPP

#include <cstdint>
#include <tuple>
#include <vector>

#include "hscore/common.hpp"
#include "hscore/kde.hpp"
#include "hscore/models.hpp"
#include "hscore/rng.hpp"
#include "hscore/trace.hpp"

namespace hscore {

// Bootstrap particle filter state for one theta-particle.  log_weights are
// kept normalized between steps; loglik_cum is this filter's running
// log-likelihood estimate.  step_index counts assimilated observations;
// a freshly initialized cloud (step_index 0) holds draws from the initial
// state law that have not been weighted yet.
struct XCloud {
  MatrixXd states;  // dim_x x n_x
  VectorXd log_weights;
  double loglik_cum = 0.0;
  int step_index = 0;
  bool degenerate = false;

  int n() const { return static_cast<int>(states.cols()); }
};

// Per-x-particle observation derivatives of the measurement log-density
// with the post-update normalized weights; the weighted means give the
// filtered expectations E[d log g / dy | y_{1:t}, theta] and
// E[d2 log g / dy2 + (d log g / dy)^2 | y_{1:t}, theta].  Univariate
// observations only.
struct FilteredDerivs {
  VectorXd weights;
  VectorXd d1;
  VectorXd d2;

  double mean_d1() const { return weights.dot(d1); }
  double mean_h() const {
    return (weights.array() * (d2.array() + d1.array().square())).sum();
  }
};

enum class HscoreMode { kDerivative, kKde };

struct KdeParams {
  int n_draws = 1024;
  double bandwidth = 0.1;
};

struct Smc2Config {
  int n_theta = 1024;
  int n_x_init = 128;
  double ess_threshold_ratio = 0.5;
  double acceptance_floor = 0.15;
  int mh_steps = 3;
  int mixture_components = 5;
  HscoreMode hscore_mode = HscoreMode::kDerivative;
  KdeParams kde;
  std::uint64_t seed = 0;
  int n_x_max = 4096;

  void validate() const;
};

// Theta-cloud where every particle carries its own particle filter, the
// cached log-prior, and the assimilated data prefix (needed by the
// rejuvenation target and by filter rebuilds).  x_rngs hold one stream per
// theta-particle; rng_epoch is bumped whenever particles are cloned or
// rebuilt so no two filters ever share a stream.
struct Smc2Cloud {
  MatrixXd theta_particles;  // dim_theta x n_theta
  VectorXd theta_log_weights;
  std::vector<XCloud> x_clouds;
  int n_x_current = 0;

  VectorXd prior_log;
  std::vector<VectorXd> history;
  int step_index = 0;
  std::uint64_t seed = 0;
  std::uint64_t rng_epoch = 0;
  std::vector<Rng> x_rngs;

  int n() const { return static_cast<int>(theta_particles.cols()); }
  int dim() const { return static_cast<int>(theta_particles.rows()); }
  void reseed_x_rngs();
};

XCloud pf_init(const ConstVecRef& theta, const SsmSpec& spec, int n_x, Rng& rng);

// Draws the one-step-ahead states: transition applied to every particle
// (or the untouched initial draws when nothing has been assimilated yet).
// Together with the carried weights these approximate p(dx_t | y_{1:t-1}).
MatrixXd pf_propagate(const XCloud& xc, const ConstVecRef& theta, const SsmSpec& spec,
                      Rng& rng);

// Completes an assimilation step for pre-propagated states: weight by the
// measurement density, record filtered derivatives, resample when the ESS
// drops below half the particle count.  A fully incompatible observation
// (all weights zero) yields a -inf increment and a degenerate flag instead
// of an error.
std::tuple<XCloud, double, FilteredDerivs> pf_step_with_states(
    const XCloud& xc, const MatrixXd& propagated, const ConstVecRef& theta,
    const VectorXd& y, const SsmSpec& spec, Rng& rng, bool want_derivs = true);

// propagate + weight in one call.
std::tuple<XCloud, double, FilteredDerivs> pf_step(const XCloud& xc, const ConstVecRef& theta,
                                                   const VectorXd& y, const SsmSpec& spec,
                                                   Rng& rng);

Smc2Cloud init_smc2_cloud(const SsmSpec& spec, const Smc2Config& config);

// One prequential step: propagate every filter, update theta-weights by the
// per-theta likelihood increments, assemble the evidence and H-score
// increments (joint-posterior form, computed before any rejuvenation), then
// rejuvenate and adapt the inner particle count when the theta-ESS falls
// below the threshold.
TraceRow smc2_assimilate(Smc2Cloud& cloud, const VectorXd& y, const SsmSpec& spec,
                         const Smc2Config& config);

// Independent-proposal particle-marginal MH sweep: proposals come from a
// mixture fitted on the theta-cloud, each proposal runs a fresh filter over
// the whole prefix, and acceptance uses the filters' likelihood estimates.
// Returns the acceptance rate.
double pmmh_rejuvenate(Smc2Cloud& cloud, const std::vector<VectorXd>& y_prefix,
                       const SsmSpec& spec, const Smc2Config& config, Rng& rng);

// Doubles the inner particle count and rebuilds every filter over the
// assimilated prefix when the rejuvenation acceptance rate sits below
// config.acceptance_floor.  Theta-weights are untouched.  n_x is capped at
// config.n_x_max.
void adapt_nx(Smc2Cloud& cloud, double acceptance_rate, const SsmSpec& spec,
              const Smc2Config& config, Rng& rng);

// Discrete H-score increment from the predictive particle cloud: the
// predictive pmf at the observation and its probed neighbors is estimated
// by averaging the measurement pmf over propagated x-particles (carried
// weights) and theta-particles (pre-update weights).  `predictive_states`
// must hold the propagated states for each theta (the cloud itself still
// sits at t-1).  A zero estimated pmf at y flags the increment degenerate
// and returns zero instead of throwing.
ScoreIncrement discrete_hscore_increment_smc2(const Smc2Cloud& cloud,
                                              const std::vector<MatrixXd>& predictive_states,
                                              const VectorXd& y, const SsmSpec& spec,
                                              bool* degenerate = nullptr);

// Full prequential run.  `progress` as in run_smc.
PrequentialTrace run_smc2(const SsmSpec& spec, const MatrixXd& data, const Smc2Config& config,
                          PrequentialTrace* progress = nullptr);

}  // namespace hscore

#endif

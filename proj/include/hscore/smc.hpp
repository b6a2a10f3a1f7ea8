#ifndef HSCORE_SMC_HPP
#define HSCORE_SMC_HPP

#include <cstdint>
#include <functional>
#include <vector>

#include "hscore/common.hpp"
#include "hscore/mixture.hpp"
#include "hscore/models.hpp"
#include "hscore/rng.hpp"
#include "hscore/trace.hpp"

namespace hscore {

// Weighted parameter particles (one per column) plus the cached per-particle
// state the sampler needs between observations: log-prior, cumulative
// likelihood over the assimilated prefix, and the prefix itself.
struct ThetaCloud {
  MatrixXd particles;     // dim_theta x n
  VectorXd log_weights;   // normalized after each assimilation
  bool normalized = false;
  int step_index = 0;     // observations assimilated so far

  VectorXd prior_log;
  VectorXd cum_loglik;
  std::vector<VectorXd> history;  // assimilated observations, in order

  int n() const { return static_cast<int>(particles.cols()); }
  int dim() const { return static_cast<int>(particles.rows()); }
  void validate() const;
};

struct TemperingLadder {
  std::vector<double> gammas;  // 0 = gamma_0 < ... < gamma_J = 1
};

struct InitProposal {
  std::function<VectorXd(Rng&)> sampler;
  std::function<double(const ConstVecRef&)> log_density;

  explicit operator bool() const { return static_cast<bool>(sampler); }
};

struct SmcConfig {
  int n_theta = 1024;
  double ess_threshold_ratio = 0.5;
  int mh_steps_per_temper = 3;
  int mixture_components = 5;
  InitProposal init_proposal;  // defaults to the prior when unset
  std::uint64_t seed = 0;
  int max_temper_steps = 200;

  void validate() const;
};

// Effective sample size (sum w)^2 / sum w^2 of exponentiated log-weights;
// invariant to adding a constant.
double ess(const VectorXd& log_weights);

// Largest gamma' in (current_gamma, 1] such that reweighting by
// (gamma' - current_gamma) * loglik keeps the ESS at or above target_ess,
// found by bisection to absolute tolerance 1e-6.  Falls back to a minimal
// increment of 1e-4 when even tiny steps violate the target.
double next_temperature(double current_gamma, const VectorXd& loglik_increment,
                        const VectorXd& log_weights, double target_ess);

// Srinivasan sampling process: offspring counts with sum n, each in
// {floor(n w_i), ceil(n w_i)}, expectation n w_i.
std::vector<int> ssp_resample(const VectorXd& weights, Rng& rng);

GaussianMixture fit_mixture_proposal(const ThetaCloud& cloud, int n_components, Rng& rng);

struct MhStats {
  double acceptance_rate = kNaN;
  int n_proposals = 0;
};

// Independent-proposal Metropolis-Hastings sweep over all particles.
// Invalidates the cloud's likelihood caches; the internal assimilation
// path maintains them itself.
MhStats mh_rejuvenate(ThetaCloud& cloud,
                      const std::function<double(const ConstVecRef&)>& target_log_density,
                      const GaussianMixture& proposal, int n_steps, Rng& rng);

ThetaCloud init_cloud(const IidModelSpec& model, const SmcConfig& config, Rng& rng);

// Moves the cloud from p(theta | y_{1:t-1}) to p(theta | y_{1:t}) through
// the adaptive tempering ladder; returns the trace row with the evidence
// and H increments (posterior form, post-update weights).
TraceRow assimilate_observation(ThetaCloud& cloud, const VectorXd& y, const IidModelSpec& model,
                                const SmcConfig& config, Rng& rng,
                                TemperingLadder* ladder_out = nullptr);

// Full prequential run over (optionally permuted) data rows.  When
// `progress` is non-null it is refreshed after every observation so a
// caller can persist a partial trace if a later step degenerates.
PrequentialTrace run_smc(const IidModelSpec& model, const MatrixXd& data,
                         const SmcConfig& config,
                         const std::vector<int>* permutation = nullptr,
                         PrequentialTrace* progress = nullptr);

std::vector<int> random_permutation(int n, Rng& rng);

}  // namespace hscore

#endif

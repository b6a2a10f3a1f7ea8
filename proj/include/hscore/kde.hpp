#ifndef HSCORE_KDE_HPP
#define HSCORE_KDE_HPP

#include <vector>

#include "hscore/common.hpp"
#include "hscore/scoring.hpp"

namespace hscore {

// Gaussian-kernel density estimate of a univariate predictive density,
// built from simulated draws.  Bandwidth is taken from configuration; no
// plug-in rule is applied.
struct KdeEstimate {
  VectorXd draws;
  double bandwidth = 0.1;

  void validate() const;
};

// log p-hat(y) together with d log p-hat / dy and d^2 log p-hat / dy^2,
// computed from the exact derivatives of the kernel sum.  Throws
// KdeUnderflow when p-hat(y) underflows to zero (log below -700),
// signalling an out-of-support evaluation.
DensityDerivatives kde_logdensity_and_derivs(const KdeEstimate& est, double y);

// Posterior-form H-score increment with per-theta predictive densities
// replaced by their KDE estimates.  Theta particles whose estimate
// underflows at y are excluded and the remaining weights renormalized;
// when more than 10% are excluded the increment is flagged unreliable.
// All excluded -> DegeneracyError.  n_excluded / unreliable report the
// exclusion outcome when non-null.
ScoreIncrement kde_hscore_increment(const std::vector<KdeEstimate>& per_theta_draws,
                                    const VectorXd& theta_weights, double y,
                                    int* n_excluded = nullptr, bool* unreliable = nullptr);

}  // namespace hscore

#endif

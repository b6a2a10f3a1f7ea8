#ifndef HSCORE_MIXTURE_HPP
#define HSCORE_MIXTURE_HPP

#include <vector>

#include "hscore/common.hpp"
#include "hscore/rng.hpp"

namespace hscore {

// Gaussian mixture with Cholesky-factored covariances; used as an
// independent MH proposal fitted on weighted particles.
struct GaussianMixture {
  std::vector<double> log_weights;
  std::vector<VectorXd> means;
  std::vector<MatrixXd> chol;  // lower-triangular factors of the covariances

  int n_components() const { return static_cast<int>(means.size()); }
  int dim() const { return means.empty() ? 0 : static_cast<int>(means[0].size()); }
  double log_density(const ConstVecRef& x) const;
  VectorXd sample(Rng& rng) const;
};

// Weighted EM fit (20 iterations, k-means++ initialization, +1e-6 diagonal
// regularization).  Falls back to a single moment-matched Gaussian when the
// mixture fit degenerates; throws if even that covariance is singular.
// particles holds one particle per column (dim x n).
GaussianMixture fit_gaussian_mixture(const MatrixXd& particles, const VectorXd& weights,
                                     int n_components, Rng& rng);

}  // namespace hscore

#endif

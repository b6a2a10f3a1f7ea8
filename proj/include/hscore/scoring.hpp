#ifndef HSCORE_SCORING_HPP
#define HSCORE_SCORING_HPP

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "hscore/common.hpp"

namespace hscore {

// Log-density value together with its gradient and Laplacian in the
// observation argument.  lap_log is the sum of second partials.
struct DensityDerivatives {
  double log_density = 0.0;
  VectorXd grad_log;
  double lap_log = 0.0;
};

// One prequential score increment, kept per observation dimension so that
// traces can be inspected coordinate-wise.  The invariant
//   value == sum_k (2 * per_dim_d2[k] + per_dim_d1[k]^2)
// holds for every constructor in this module.
struct ScoreIncrement {
  double value = 0.0;
  VectorXd per_dim_d1;
  VectorXd per_dim_d2;
};

inline ScoreIncrement score_increment_from_per_dim(const VectorXd& d1, const VectorXd& d2) {
  ScoreIncrement inc;
  inc.per_dim_d1 = d1;
  inc.per_dim_d2 = d2;
  inc.value = (2.0 * d2.array() + d1.array().square()).sum();
  return inc;
}

// Pointwise Hyvarinen score 2 * lap log p + |grad log p|^2.
inline double hyvarinen_point(const DensityDerivatives& d) {
  return 2.0 * d.lap_log + d.grad_log.squaredNorm();
}

inline ScoreIncrement score_increment_from_derivatives(const DensityDerivatives& d) {
  VectorXd d1 = d.grad_log;
  // Attribute the Laplacian evenly is wrong in general; callers with a
  // genuine per-dimension split should pass it.  Scalar observations are
  // exact: the whole Laplacian belongs to the single coordinate.
  if (d1.size() != 1) throw InvalidInput("score_increment_from_derivatives: scalar only");
  VectorXd d2(1);
  d2[0] = d.lap_log;
  return score_increment_from_per_dim(d1, d2);
}

inline double log_score_point(double log_density) { return -log_density; }

// Mixture-form score increment from posterior samples.  d1 and d2 are
// n_samples x dim_y matrices of per-sample first and second log-derivatives
// of the conditional density  (d/dy_k) log p(y|theta) and (d^2/dy_k^2);
// w holds normalized weights.  Per dimension k the increment is
//   2 E[d2_k + d1_k^2] - (E[d1_k])^2,
// the posterior-expectation form of the score of the mixture predictive.
ScoreIncrement hscore_increment_from_posterior(const MatrixXd& d1, const MatrixXd& d2,
                                               const VectorXd& w);

// Same quantity per dimension through the expectation/variance
// decomposition E_w[h] + Var_w[d1], where h_i = 2 d2_i + d1_i^2 is the
// per-sample conditional score.  Agrees with the form above to round-off;
// exposed for cross-checking.
double hscore_increment_variance_form(const VectorXd& h_samples, const VectorXd& d1_samples,
                                      const VectorXd& w);

// Integer support box; unset bounds mean the support is unbounded on that
// side.
struct DiscreteSupport {
  std::vector<std::optional<std::int64_t>> lower;
  std::vector<std::optional<std::int64_t>> upper;

  int dim() const { return static_cast<int>(lower.size()); }
  bool contains(std::span<const std::int64_t> y) const;
  static DiscreteSupport unbounded(int dim);
  static DiscreteSupport box(std::int64_t lo, std::int64_t hi, int dim);
  static DiscreteSupport nonnegative(int dim);
  void validate() const;
};

using LogPmf = std::function<double(std::span<const std::int64_t>)>;

// Discrete Hyvarinen-type score built from central differences of the pmf,
// with one-sided variants at and next to the support boundary.  Coordinates
// whose difference formulas would step outside the support (possible only
// when a side has fewer than four points) contribute zero.
double discrete_hscore(std::span<const std::int64_t> y, const LogPmf& log_pmf,
                       const DiscreteSupport& support);

ScoreIncrement discrete_score_increment(std::span<const std::int64_t> y, const LogPmf& log_pmf,
                                        const DiscreteSupport& support);

// Asymptotic per-observation divergence gaps d(p*, M2) - d(p*, M1) under an
// N(mu*, s2*) data process, where M1 fits a free mean with unit variance and
// M2 fits a free variance with zero mean.  fisher_gap_normal uses the
// relative Fisher divergence tied to the Hyvarinen score, kl_gap_normal the
// Kullback-Leibler divergence tied to the log score.  Positive values mean
// the criterion asymptotically prefers M1.
double fisher_gap_normal(double mu_star, double s2_star);
double kl_gap_normal(double mu_star, double s2_star);

// Boundaries |mu*| = B(s2*) where each gap changes sign.  The Fisher
// boundary is finite only for s2* in (0,2) and +inf beyond; between the two
// curves the criteria disagree about which model is closer.
double fisher_gap_boundary(double s2_star);
double kl_gap_boundary(double s2_star);

}  // namespace hscore

#endif

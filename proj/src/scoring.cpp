#include "hscore/scoring.hpp"

#include <cmath>

namespace hscore {

namespace {

void check_posterior_inputs(const MatrixXd& d1, const MatrixXd& d2, const VectorXd& w) {
  if (d1.rows() != d2.rows() || d1.cols() != d2.cols())
    throw InvalidInput("hscore increment: d1/d2 shape mismatch");
  if (w.size() != d1.rows()) throw InvalidInput("hscore increment: weight length mismatch");
  if (d1.rows() < 1) throw InvalidInput("hscore increment: empty sample");
  if (!d1.allFinite() || !d2.allFinite() || !w.allFinite())
    throw InvalidInput("hscore increment: non-finite inputs");
  if ((w.array() < 0.0).any()) throw InvalidInput("hscore increment: negative weight");
  if (std::abs(w.sum() - 1.0) > 1e-10)
    throw InvalidInput("hscore increment: weights must sum to one within 1e-10");
}

}  // namespace

ScoreIncrement hscore_increment_from_posterior(const MatrixXd& d1, const MatrixXd& d2,
                                               const VectorXd& w) {
  check_posterior_inputs(d1, d2, w);
  const VectorXd m1 = d1.transpose() * w;                              // E[d1_k]
  const VectorXd m_sq = (d2 + d1.cwiseProduct(d1)).transpose() * w;    // E[d2_k + d1_k^2]
  ScoreIncrement inc;
  inc.per_dim_d1 = m1;
  inc.per_dim_d2 = m_sq - m1.cwiseProduct(m1);
  inc.value = (2.0 * inc.per_dim_d2.array() + inc.per_dim_d1.array().square()).sum();
  return inc;
}

double hscore_increment_variance_form(const VectorXd& h_samples, const VectorXd& d1_samples,
                                      const VectorXd& w) {
  if (h_samples.size() != d1_samples.size() || h_samples.size() != w.size())
    throw InvalidInput("hscore_increment_variance_form: length mismatch");
  if (h_samples.size() < 1) throw InvalidInput("hscore_increment_variance_form: empty sample");
  if (!h_samples.allFinite() || !d1_samples.allFinite() || !w.allFinite())
    throw InvalidInput("hscore_increment_variance_form: non-finite inputs");
  if ((w.array() < 0.0).any())
    throw InvalidInput("hscore_increment_variance_form: negative weight");
  if (std::abs(w.sum() - 1.0) > 1e-10)
    throw InvalidInput("hscore_increment_variance_form: weights must sum to one within 1e-10");
  const double e_h = h_samples.dot(w);
  const double m1 = d1_samples.dot(w);
  const double var_d1 = (d1_samples.array() - m1).square().matrix().dot(w);
  return e_h + var_d1;
}

bool DiscreteSupport::contains(std::span<const std::int64_t> y) const {
  if (static_cast<int>(y.size()) != dim()) return false;
  for (int k = 0; k < dim(); ++k) {
    if (lower[k] && y[k] < *lower[k]) return false;
    if (upper[k] && y[k] > *upper[k]) return false;
  }
  return true;
}

DiscreteSupport DiscreteSupport::unbounded(int dim) {
  DiscreteSupport s;
  s.lower.assign(dim, std::nullopt);
  s.upper.assign(dim, std::nullopt);
  return s;
}

DiscreteSupport DiscreteSupport::box(std::int64_t lo, std::int64_t hi, int dim) {
  DiscreteSupport s;
  s.lower.assign(dim, lo);
  s.upper.assign(dim, hi);
  return s;
}

DiscreteSupport DiscreteSupport::nonnegative(int dim) {
  DiscreteSupport s;
  s.lower.assign(dim, std::int64_t{0});
  s.upper.assign(dim, std::nullopt);
  return s;
}

void DiscreteSupport::validate() const {
  if (lower.size() != upper.size()) throw InvalidInput("DiscreteSupport: bound size mismatch");
  if (lower.empty()) throw InvalidInput("DiscreteSupport: empty support");
  for (size_t k = 0; k < lower.size(); ++k)
    if (lower[k] && upper[k] && *lower[k] > *upper[k])
      throw InvalidInput("DiscreteSupport: lower bound above upper bound");
}

ScoreIncrement discrete_score_increment(std::span<const std::int64_t> y, const LogPmf& log_pmf,
                                        const DiscreteSupport& support) {
  support.validate();
  const int dim = support.dim();
  if (static_cast<int>(y.size()) != dim)
    throw InvalidInput("discrete_score_increment: dimension mismatch");
  if (!support.contains(y)) throw ScoringError("discrete_score_increment: y outside support");

  std::vector<std::int64_t> z(y.begin(), y.end());
  const double lp_y = log_pmf(z);
  if (std::isnan(lp_y)) throw ScoringError("discrete_score_increment: pmf returned NaN");
  if (!std::isfinite(lp_y)) throw ScoringError("discrete_score_increment: zero pmf at y");

  ScoreIncrement inc;
  inc.per_dim_d1 = VectorXd::Zero(dim);
  inc.per_dim_d2 = VectorXd::Zero(dim);
  inc.value = 0.0;

  for (int k = 0; k < dim; ++k) {
    const auto lo = support.lower[k];
    const auto hi = support.upper[k];
    const std::int64_t yk = y[k];
    auto in_k = [&](std::int64_t v) {
      return (!lo || v >= *lo) && (!hi || v <= *hi);
    };
    auto lp_off = [&](std::int64_t off) {
      z[k] = yk + off;
      const double v = log_pmf(z);
      z[k] = yk;
      if (std::isnan(v)) throw ScoringError("discrete_score_increment: pmf returned NaN");
      if (!std::isfinite(v))
        throw ScoringError("discrete_score_increment: zero pmf at a probed point");
      return v;
    };
    // Central difference of log pmf in coordinate k at offset o from y,
    // i.e. (p(.+e_k) - p(.-e_k)) / (2 p(.)), or nullopt when the stencil
    // would leave the support (possible only on supports with < 4 points
    // on the relevant side).
    auto dlog = [&](std::int64_t o) -> std::optional<double> {
      if (!in_k(yk + o - 1) || !in_k(yk + o + 1)) return std::nullopt;
      const double lpc = (o == 0) ? lp_y : lp_off(o);
      const double lpp = lp_off(o + 1);
      const double lpm = lp_off(o - 1);
      return 0.5 * (std::exp(lpp - lpc) - std::exp(lpm - lpc));
    };

    const bool at_lo = lo && yk == *lo;
    const bool at_hi = hi && yk == *hi;
    const bool lo1 = lo && yk == *lo + 1;
    const bool hi1 = hi && yk == *hi - 1;
    const bool interior = (!lo || yk >= *lo + 2) && (!hi || yk <= *hi - 2);

    std::optional<double> hk;
    std::optional<double> d1k;
    if (interior) {
      const auto dp = dlog(+1), dm = dlog(-1), d0 = dlog(0);
      hk = (*dp - *dm) + (*d0) * (*d0);
      d1k = d0;
    } else if (at_lo && at_hi) {
      hk = std::nullopt;  // single-point support: nothing to score
    } else if (at_lo) {
      hk = dlog(+1);
    } else if (at_hi) {
      if (const auto dm = dlog(-1)) hk = -*dm;
    } else if (lo1) {
      const auto dp = dlog(+1), d0 = dlog(0);
      if (dp && d0) {
        hk = *dp + (*d0) * (*d0);
        d1k = d0;
      }
    } else if (hi1) {
      const auto dm = dlog(-1), d0 = dlog(0);
      if (dm && d0) {
        hk = -*dm + (*d0) * (*d0);
        d1k = d0;
      }
    }

    const double h_val = hk.value_or(0.0);
    const double g = d1k.value_or(0.0);
    inc.per_dim_d1[k] = g;
    inc.per_dim_d2[k] = 0.5 * (h_val - g * g);
    inc.value += h_val;
  }
  return inc;
}

double discrete_hscore(std::span<const std::int64_t> y, const LogPmf& log_pmf,
                       const DiscreteSupport& support) {
  return discrete_score_increment(y, log_pmf, support).value;
}

double fisher_gap_normal(double mu_star, double s2_star) {
  if (!(s2_star > 0.0)) throw InvalidInput("fisher_gap_normal: s2_star must be positive");
  const double m2 = mu_star * mu_star;
  const double a = m2 / (s2_star * (m2 + s2_star));
  const double b = (s2_star - 1.0) * (s2_star - 1.0) / s2_star;
  return a - b;
}

double kl_gap_normal(double mu_star, double s2_star) {
  if (!(s2_star > 0.0)) throw InvalidInput("kl_gap_normal: s2_star must be positive");
  const double m2 = mu_star * mu_star;
  return 0.5 * std::log((m2 + s2_star) / s2_star) -
         0.5 * ((s2_star - 1.0) - std::log(s2_star));
}

double fisher_gap_boundary(double s2_star) {
  if (!(s2_star > 0.0)) throw InvalidInput("fisher_gap_boundary: s2_star must be positive");
  if (s2_star >= 2.0) return kPosInf;
  return std::abs(s2_star - 1.0) / std::sqrt(2.0 - s2_star);
}

double kl_gap_boundary(double s2_star) {
  if (!(s2_star > 0.0)) throw InvalidInput("kl_gap_boundary: s2_star must be positive");
  return std::sqrt(std::exp(s2_star - 1.0) - s2_star);
}

}  // namespace hscore

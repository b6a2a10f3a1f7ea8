#ifndef HSCORE_COMMON_HPP
#define HSCORE_COMMON_HPP

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace hscore {

using Eigen::MatrixXd;
using Eigen::VectorXd;
using ConstVecRef = Eigen::Ref<const Eigen::VectorXd>;

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();
inline constexpr double kPosInf = std::numeric_limits<double>::infinity();
inline constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Invalid caller-supplied values (non-finite inputs, bad dimensions, ...).
struct InvalidInput : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// All particle weights collapsed to zero; the run cannot continue.
struct DegeneracyError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// A score is undefined at the requested point (zero pmf, out of support).
struct ScoringError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Kernel density estimate underflowed to zero at the evaluation point.
struct KdeUnderflow : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline double log_sum_exp(std::span<const double> v) {
  double m = kNegInf;
  for (double x : v) m = std::max(m, x);
  if (!std::isfinite(m)) return m;  // all -inf (or a stray +inf)
  double s = 0.0;
  for (double x : v) s += std::exp(x - m);
  return m + std::log(s);
}

inline double log_sum_exp(const VectorXd& v) {
  return log_sum_exp(std::span<const double>(v.data(), static_cast<size_t>(v.size())));
}

// Shifts log-weights so that exp() sums to one; returns the log normalizer.
inline double normalize_log_weights(VectorXd& lw) {
  const double lse = log_sum_exp(lw);
  if (!std::isfinite(lse)) return lse;
  lw.array() -= lse;
  return lse;
}

inline VectorXd softmax(const VectorXd& lw) {
  const double lse = log_sum_exp(lw);
  if (!std::isfinite(lse)) throw DegeneracyError("softmax: all weights are zero");
  VectorXd w(lw.size());
  // Scalar std::exp: Eigen's vectorized exp clamps very negative arguments
  // (including -inf) to a positive denormal instead of underflowing to zero,
  // which would give dead particles a nonzero weight.
  for (Eigen::Index i = 0; i < lw.size(); ++i) w[i] = std::exp(lw[i] - lse);
  return w;
}

inline bool all_finite(const VectorXd& v) { return v.allFinite(); }

inline void require_finite(double x, const char* what) {
  if (!std::isfinite(x)) throw InvalidInput(std::string(what) + ": non-finite value");
}

inline void require_finite(const VectorXd& v, const char* what) {
  if (!v.allFinite()) throw InvalidInput(std::string(what) + ": non-finite entries");
}

// Weighted mean of a sample column; weights assumed normalized.
inline double weighted_mean(const VectorXd& x, const VectorXd& w) { return x.dot(w); }

inline double weighted_var(const VectorXd& x, const VectorXd& w) {
  const double m = x.dot(w);
  return (x.array() - m).square().matrix().dot(w);
}

}  // namespace hscore

#endif

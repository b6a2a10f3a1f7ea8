#include "hscore/oracle.hpp"

#include <cmath>
#include <vector>

#include "hscore/distributions.hpp"

namespace hscore {

namespace {

struct QuadRule {
  std::vector<double> nodes;    // on [-1, 1]
  std::vector<double> weights;
};

// Gauss-Legendre nodes/weights by Newton iteration on the Legendre
// recurrence.
QuadRule gauss_legendre(int n) {
  QuadRule q;
  q.nodes.resize(n);
  q.weights.resize(n);
  const int m = (n + 1) / 2;
  for (int i = 0; i < m; ++i) {
    double x = std::cos(M_PI * (i + 0.75) / (n + 0.5));
    double pp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = 0.0;
      for (int j = 0; j < n; ++j) {
        const double p2 = p1;
        p1 = p0;
        p0 = ((2.0 * j + 1.0) * x * p1 - j * p2) / (j + 1.0);
      }
      pp = n * (x * p0 - p1) / (x * x - 1.0);
      const double dx = p0 / pp;
      x -= dx;
      if (std::abs(dx) < 1e-15) break;
    }
    q.nodes[i] = -x;
    q.nodes[n - 1 - i] = x;
    const double w = 2.0 / ((1.0 - x * x) * pp * pp);
    q.weights[i] = w;
    q.weights[n - 1 - i] = w;
  }
  return q;
}

}  // namespace

GaussianPredictive conjugate_m1_predictive(std::span<const double> y_prefix, double sigma0_sq) {
  if (!(sigma0_sq > 0.0)) throw InvalidInput("conjugate_m1_predictive: sigma0_sq must be > 0");
  const auto t = static_cast<double>(y_prefix.size());
  const double prior_prec = std::isinf(sigma0_sq) ? 0.0 : 1.0 / sigma0_sq;
  if (t == 0.0 && prior_prec == 0.0)
    throw InvalidInput("conjugate_m1_predictive: flat prior needs a nonempty prefix");
  double sum = 0.0;
  for (double y : y_prefix) sum += y;
  const double post_var = 1.0 / (t + prior_prec);
  return {post_var * sum, post_var + 1.0};
}

DensityDerivatives conjugate_m2_predictive_logpdf_and_derivs(std::span<const double> y_prefix,
                                                             double nu0, double s0_sq,
                                                             double y) {
  if (!(nu0 > 0.0) || !(s0_sq > 0.0))
    throw InvalidInput("conjugate_m2_predictive: hyperparameters must be positive");
  double ss = 0.0;
  for (double v : y_prefix) ss += v * v;
  const double nu = nu0 + static_cast<double>(y_prefix.size());
  const double nu_s_sq = nu0 * s0_sq + ss;  // nu_t * s_t^2
  DensityDerivatives d;
  d.log_density = student_t_logpdf(y, nu, 0.0, nu_s_sq / nu);
  const double denom = nu_s_sq + y * y;
  d.grad_log = VectorXd::Constant(1, -(nu + 1.0) * y / denom);
  d.lap_log = -(nu + 1.0) * (nu_s_sq - y * y) / (denom * denom);
  return d;
}

KalmanFilter::KalmanFilter(const LgssmParams& params) : p_(params) {
  if (!(std::abs(p_.phi) < 1.0)) throw InvalidInput("KalmanFilter: need |phi| < 1");
  if (!(p_.sigma_x > 0.0) || !(p_.sigma_y > 0.0))
    throw InvalidInput("KalmanFilter: noise scales must be positive");
  mean_ = 0.0;
  var_ = p_.sigma_x * p_.sigma_x / (1.0 - p_.phi * p_.phi);
}

GaussianPredictive KalmanFilter::predictive() const {
  return {mean_, var_ + p_.sigma_y * p_.sigma_y};
}

double KalmanFilter::step(double y) {
  const double s = var_ + p_.sigma_y * p_.sigma_y;
  const double ll = normal_logpdf(y, mean_, s);
  const double gain = var_ / s;
  const double m_filt = mean_ + gain * (y - mean_);
  const double p_filt = (1.0 - gain) * var_;
  mean_ = p_.phi * m_filt;
  var_ = p_.phi * p_.phi * p_filt + p_.sigma_x * p_.sigma_x;
  loglik_cum_ += ll;
  return ll;
}

GaussianPredictive kalman_predictive(const LgssmParams& params,
                                     std::span<const double> y_prefix) {
  KalmanFilter kf(params);
  for (double y : y_prefix) kf.step(y);
  return kf.predictive();
}

namespace {

TraceRow gaussian_exact_row(int t, double y, const GaussianPredictive& pred) {
  TraceRow row;
  row.t = t;
  row.logev_inc = normal_logpdf(y, pred.mean, pred.variance);
  const double d1 = -(y - pred.mean) / pred.variance;
  const double d2 = -1.0 / pred.variance;
  row.h_inc = score_increment_from_per_dim(VectorXd::Constant(1, d1),
                                           VectorXd::Constant(1, d2));
  return row;
}

}  // namespace

std::pair<PrequentialTrace, PrequentialTrace> exact_prequential_scores_m1_m2(
    std::span<const double> data, double sigma0_sq, double nu0, double s0_sq) {
  const bool flat = std::isinf(sigma0_sq);
  PrequentialTrace m1, m2;
  m1.tau = flat ? 1 : 0;
  m2.tau = 0;
  const auto T = static_cast<int>(data.size());
  for (int t = 1; t <= T; ++t) {
    const auto prefix = data.subspan(0, static_cast<size_t>(t - 1));
    const double y = data[t - 1];

    TraceRow r1;
    if (flat && t == 1) {
      // sigma0 -> inf limit: the H increment vanishes, the evidence
      // increment diverges.
      r1.t = 1;
      r1.logev_inc = kNegInf;
      r1.h_inc = score_increment_from_per_dim(VectorXd::Zero(1), VectorXd::Zero(1));
    } else {
      r1 = gaussian_exact_row(t, y, conjugate_m1_predictive(prefix, sigma0_sq));
    }
    m1.rows.push_back(r1);

    const DensityDerivatives d = conjugate_m2_predictive_logpdf_and_derivs(prefix, nu0, s0_sq, y);
    TraceRow r2;
    r2.t = t;
    r2.logev_inc = d.log_density;
    r2.h_inc = score_increment_from_per_dim(d.grad_log, VectorXd::Constant(1, d.lap_log));
    m2.rows.push_back(r2);
  }
  m1.recompute_cumulative();
  m2.recompute_cumulative();
  return {std::move(m1), std::move(m2)};
}

PrequentialTrace lgssm_exact_trace(const LgssmParams& params, std::span<const double> data) {
  PrequentialTrace out;
  KalmanFilter kf(params);
  int t = 0;
  for (double y : data) {
    ++t;
    out.rows.push_back(gaussian_exact_row(t, y, kf.predictive()));
    kf.step(y);
  }
  out.recompute_cumulative();
  return out;
}

PrequentialTrace lgssm_marginal_exact_trace(double sigma_x, double sigma_y,
                                            std::span<const double> data, int n_nodes) {
  if (n_nodes < 2) throw InvalidInput("lgssm_marginal_exact_trace: need >= 2 nodes");
  const QuadRule q = gauss_legendre(n_nodes);
  const double half_width = 0.95;
  std::vector<KalmanFilter> filters;
  filters.reserve(n_nodes);
  VectorXd log_node_w(n_nodes);  // quadrature weight x prior density
  for (int j = 0; j < n_nodes; ++j) {
    LgssmParams p{half_width * q.nodes[j], sigma_x, sigma_y};
    filters.emplace_back(p);
    log_node_w[j] = std::log(half_width * q.weights[j] / (2.0 * half_width));
  }

  PrequentialTrace out;
  VectorXd cum_ll = VectorXd::Zero(n_nodes);
  int t = 0;
  for (double y : data) {
    ++t;
    VectorXd ll(n_nodes), d1(n_nodes), d2(n_nodes);
    for (int j = 0; j < n_nodes; ++j) {
      const GaussianPredictive pred = filters[j].predictive();
      ll[j] = normal_logpdf(y, pred.mean, pred.variance);
      d1[j] = -(y - pred.mean) / pred.variance;
      d2[j] = -1.0 / pred.variance;
    }
    const VectorXd before = log_node_w + cum_ll;
    const VectorXd after = before + ll;
    TraceRow row;
    row.t = t;
    row.logev_inc = log_sum_exp(after) - log_sum_exp(before);
    const VectorXd post_w = softmax(after);
    row.h_inc = hscore_increment_from_posterior(d1, d2, post_w);
    out.rows.push_back(row);
    cum_ll += ll;
    for (auto& kf : filters) kf.step(y);
  }
  out.recompute_cumulative();
  return out;
}

}  // namespace hscore

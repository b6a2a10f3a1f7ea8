#include "hscore/mixture.hpp"

#include <cmath>

#include "hscore/distributions.hpp"

namespace hscore {

namespace {

constexpr double kCovReg = 1e-6;
constexpr int kEmIterations = 20;

// Log-density of N(mean, L L^T) at x.
double mvn_logpdf(const ConstVecRef& x, const VectorXd& mean, const MatrixXd& L) {
  const int d = static_cast<int>(mean.size());
  const VectorXd z = L.template triangularView<Eigen::Lower>().solve(x - mean);
  double log_det = 0.0;
  for (int i = 0; i < d; ++i) log_det += std::log(L(i, i));
  return -0.5 * d * kLogTwoPi - log_det - 0.5 * z.squaredNorm();
}

MatrixXd regularized_chol(MatrixXd cov) {
  cov.diagonal().array() += kCovReg;
  Eigen::LLT<MatrixXd> llt(cov);
  if (llt.info() != Eigen::Success)
    throw InvalidInput("fit_gaussian_mixture: singular covariance after regularization");
  return llt.matrixL();
}

GaussianMixture moment_matched_gaussian(const MatrixXd& particles, const VectorXd& w) {
  const VectorXd mean = particles * w;
  MatrixXd centered = particles.colwise() - mean;
  MatrixXd cov = centered * w.asDiagonal() * centered.transpose();
  GaussianMixture g;
  g.log_weights = {0.0};
  g.means = {mean};
  g.chol = {regularized_chol(std::move(cov))};
  return g;
}

// k-means++ style seeding on the weighted particles.
std::vector<int> seed_centers(const MatrixXd& x, const VectorXd& w, int k, Rng& rng) {
  const int n = static_cast<int>(x.cols());
  std::vector<int> centers;
  std::discrete_distribution<int> first(w.data(), w.data() + n);
  centers.push_back(first(rng));
  VectorXd d2 = VectorXd::Constant(n, kPosInf);
  while (static_cast<int>(centers.size()) < k) {
    const VectorXd& c = x.col(centers.back());
    for (int i = 0; i < n; ++i)
      d2[i] = std::min(d2[i], (x.col(i) - c).squaredNorm());
    VectorXd probs = w.cwiseProduct(d2);
    const double s = probs.sum();
    if (!(s > 0.0)) {
      // all particles coincide with a center; reuse the first one
      centers.push_back(centers[0]);
      continue;
    }
    std::discrete_distribution<int> pick(probs.data(), probs.data() + n);
    centers.push_back(pick(rng));
  }
  return centers;
}

}  // namespace

double GaussianMixture::log_density(const ConstVecRef& x) const {
  const int k = n_components();
  VectorXd terms(k);
  for (int c = 0; c < k; ++c) terms[c] = log_weights[c] + mvn_logpdf(x, means[c], chol[c]);
  return log_sum_exp(terms);
}

VectorXd GaussianMixture::sample(Rng& rng) const {
  const int k = n_components();
  int c = 0;
  if (k > 1) {
    std::vector<double> w(k);
    for (int i = 0; i < k; ++i) w[i] = std::exp(log_weights[i]);
    std::discrete_distribution<int> pick(w.begin(), w.end());
    c = pick(rng);
  }
  const int d = dim();
  VectorXd z(d);
  for (int i = 0; i < d; ++i) z[i] = draw_normal(rng, 0.0, 1.0);
  return means[c] + chol[c] * z;
}

GaussianMixture fit_gaussian_mixture(const MatrixXd& particles, const VectorXd& weights,
                                     int n_components, Rng& rng) {
  const int n = static_cast<int>(particles.cols());
  const int d = static_cast<int>(particles.rows());
  if (n < 2) throw InvalidInput("fit_gaussian_mixture: need at least two particles");
  if (weights.size() != n) throw InvalidInput("fit_gaussian_mixture: weight length mismatch");
  VectorXd w = weights / weights.sum();
  if (n_components <= 1 || n <= d + 1) return moment_matched_gaussian(particles, w);

  const int k = std::min(n_components, n);
  std::vector<int> centers = seed_centers(particles, w, k, rng);
  std::vector<double> comp_logw(k, -std::log(static_cast<double>(k)));
  std::vector<VectorXd> means(k);
  std::vector<MatrixXd> chols(k);
  // init: shared moment-matched covariance around the seeded centers
  GaussianMixture init = moment_matched_gaussian(particles, w);
  for (int c = 0; c < k; ++c) {
    means[c] = particles.col(centers[c]);
    chols[c] = init.chol[0];
  }

  MatrixXd resp(n, k);
  for (int it = 0; it < kEmIterations; ++it) {
    // E-step
    for (int i = 0; i < n; ++i) {
      VectorXd terms(k);
      for (int c = 0; c < k; ++c)
        terms[c] = comp_logw[c] + mvn_logpdf(particles.col(i), means[c], chols[c]);
      const double lse = log_sum_exp(terms);
      if (!std::isfinite(lse)) return moment_matched_gaussian(particles, w);
      for (int c = 0; c < k; ++c) resp(i, c) = std::exp(terms[c] - lse);
    }
    // M-step with the particle weights folded in
    for (int c = 0; c < k; ++c) {
      VectorXd rc = resp.col(c).cwiseProduct(w);
      const double mass = rc.sum();
      if (!(mass > 1e-12)) return moment_matched_gaussian(particles, w);
      rc /= mass;
      const VectorXd mean = particles * rc;
      MatrixXd centered = particles.colwise() - mean;
      MatrixXd cov = centered * rc.asDiagonal() * centered.transpose();
      cov.diagonal().array() += kCovReg;
      Eigen::LLT<MatrixXd> llt(cov);
      if (llt.info() != Eigen::Success) return moment_matched_gaussian(particles, w);
      comp_logw[c] = std::log(mass);
      means[c] = mean;
      chols[c] = llt.matrixL();
    }
    // renormalize component weights
    const double lse = log_sum_exp(std::span<const double>(comp_logw.data(), comp_logw.size()));
    for (double& lw : comp_logw) lw -= lse;
  }

  GaussianMixture g;
  g.log_weights = std::move(comp_logw);
  g.means = std::move(means);
  g.chol = std::move(chols);
  return g;
}

}  // namespace hscore

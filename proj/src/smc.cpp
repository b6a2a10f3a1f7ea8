#include "hscore/smc.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "hscore/distributions.hpp"

namespace hscore {

void ThetaCloud::validate() const {
  if (n() < 2) throw InvalidInput("ThetaCloud: need at least two particles");
  if (log_weights.size() != n()) throw InvalidInput("ThetaCloud: weight length mismatch");
  for (int i = 0; i < n(); ++i)
    if (std::isnan(log_weights[i])) throw InvalidInput("ThetaCloud: NaN log-weight");
  if (normalized) {
    double s = 0.0;
    for (int i = 0; i < n(); ++i) s += std::exp(log_weights[i]);
    if (std::abs(s - 1.0) > 1e-12)
      throw InvalidInput("ThetaCloud: normalized weights must sum to 1 within 1e-12");
  }
}

void SmcConfig::validate() const {
  if (n_theta < 2) throw InvalidInput("SmcConfig: n_theta must be >= 2");
  if (!(ess_threshold_ratio > 0.0 && ess_threshold_ratio < 1.0))
    throw InvalidInput("SmcConfig: ess_threshold_ratio must lie in (0,1)");
  if (mh_steps_per_temper < 0) throw InvalidInput("SmcConfig: negative mh_steps_per_temper");
  if (mixture_components < 1) throw InvalidInput("SmcConfig: mixture_components must be >= 1");
  if (max_temper_steps < 1) throw InvalidInput("SmcConfig: max_temper_steps must be >= 1");
}

double ess(const VectorXd& log_weights) {
  const int n = static_cast<int>(log_weights.size());
  if (n == 0) throw InvalidInput("ess: empty weights");
  double m = kNegInf;
  for (int i = 0; i < n; ++i) {
    if (std::isnan(log_weights[i])) throw InvalidInput("ess: NaN log-weight");
    m = std::max(m, log_weights[i]);
  }
  if (m == kNegInf) throw DegeneracyError("ess: all weights are zero");
  double s1 = 0.0, s2 = 0.0;
  for (int i = 0; i < n; ++i) {
    const double w = std::exp(log_weights[i] - m);
    s1 += w;
    s2 += w * w;
  }
  return s1 * s1 / s2;
}

double next_temperature(double current_gamma, const VectorXd& loglik_increment,
                        const VectorXd& log_weights, double target_ess) {
  if (!(current_gamma < 1.0)) throw InvalidInput("next_temperature: current_gamma must be < 1");
  auto ess_at = [&](double gamma) {
    return ess(log_weights + (gamma - current_gamma) * loglik_increment);
  };
  if (ess_at(1.0) >= target_ess) return 1.0;
  double lo = current_gamma, hi = 1.0;
  while (hi - lo > 1e-6) {
    const double mid = 0.5 * (lo + hi);
    if (ess_at(mid) >= target_ess)
      lo = mid;
    else
      hi = mid;
  }
  if (lo - current_gamma < 1e-4) return std::min(current_gamma + 1e-4, 1.0);
  return lo;
}

std::vector<int> ssp_resample(const VectorXd& weights, Rng& rng) {
  const int n = static_cast<int>(weights.size());
  if (n == 0) throw InvalidInput("ssp_resample: empty weights");
  if ((weights.array() < 0.0).any() || std::abs(weights.sum() - 1.0) > 1e-8)
    throw InvalidInput("ssp_resample: weights must be normalized");

  std::vector<int> counts(n);
  std::vector<double> frac(n);
  for (int i = 0; i < n; ++i) {
    const double xi = n * weights[i];
    double fl = std::floor(xi);
    double r = xi - fl;
    if (r > 1.0 - 1e-9) {
      fl += 1.0;
      r = 0.0;
    } else if (r < 1e-9) {
      r = 0.0;
    }
    counts[i] = static_cast<int>(fl);
    frac[i] = r;
  }

  // Pairwise martingale rounding of the fractional parts.
  int open = -1;
  auto settle = [&](int idx) {
    if (frac[idx] >= 1.0 - 1e-9) {
      counts[idx] += 1;
      frac[idx] = 0.0;
    } else if (frac[idx] <= 1e-9) {
      frac[idx] = 0.0;
    }
  };
  for (int i = 0; i < n; ++i) {
    if (frac[i] == 0.0) continue;
    if (open < 0) {
      open = i;
      continue;
    }
    const double ra = frac[open], rb = frac[i];
    const double eps_up = std::min(1.0 - ra, rb);   // raise open, lower i
    const double eps_dn = std::min(ra, 1.0 - rb);   // lower open, raise i
    std::uniform_real_distribution<double> u(0.0, 1.0);
    if (u(rng) * (eps_up + eps_dn) < eps_dn) {
      frac[open] = ra + eps_up;
      frac[i] = rb - eps_up;
    } else {
      frac[open] = ra - eps_dn;
      frac[i] = rb + eps_dn;
    }
    settle(open);
    settle(i);
    if (frac[open] == 0.0) open = (frac[i] > 0.0) ? i : -1;
  }
  if (open >= 0) {
    counts[open] += static_cast<int>(std::llround(frac[open]));
    frac[open] = 0.0;
  }

  const int total = std::accumulate(counts.begin(), counts.end(), 0);
  if (total != n) {
    // float drift: charge the difference to the heaviest index
    int imax = 0;
    for (int i = 1; i < n; ++i)
      if (weights[i] > weights[imax]) imax = i;
    counts[imax] += n - total;
  }
  return counts;
}

GaussianMixture fit_mixture_proposal(const ThetaCloud& cloud, int n_components, Rng& rng) {
  if (cloud.n() <= cloud.dim())
    throw InvalidInput("fit_mixture_proposal: need more particles than dimensions");
  const VectorXd w = softmax(cloud.log_weights);
  return fit_gaussian_mixture(cloud.particles, w, n_components, rng);
}

MhStats mh_rejuvenate(ThetaCloud& cloud,
                      const std::function<double(const ConstVecRef&)>& target_log_density,
                      const GaussianMixture& proposal, int n_steps, Rng& rng) {
  MhStats stats;
  if (n_steps <= 0) return stats;
  std::uniform_real_distribution<double> u(0.0, 1.0);
  int accepted = 0;
  for (int i = 0; i < cloud.n(); ++i) {
    double cur_t = target_log_density(cloud.particles.col(i));
    double cur_q = proposal.log_density(cloud.particles.col(i));
    for (int s = 0; s < n_steps; ++s) {
      const VectorXd prop = proposal.sample(rng);
      const double prop_t = target_log_density(prop);
      const double prop_q = proposal.log_density(prop);
      const double log_alpha = (prop_t - prop_q) - (cur_t - cur_q);
      ++stats.n_proposals;
      if (std::log(u(rng)) < log_alpha) {
        cloud.particles.col(i) = prop;
        cur_t = prop_t;
        cur_q = prop_q;
        ++accepted;
      }
    }
  }
  // caches no longer match the moved particles
  cloud.prior_log.resize(0);
  cloud.cum_loglik.resize(0);
  if (stats.n_proposals > 0)
    stats.acceptance_rate = static_cast<double>(accepted) / stats.n_proposals;
  return stats;
}

ThetaCloud init_cloud(const IidModelSpec& model, const SmcConfig& config, Rng& rng) {
  config.validate();
  const int n = config.n_theta;
  ThetaCloud cloud;
  cloud.particles.resize(model.dim_theta, n);
  cloud.log_weights.resize(n);
  cloud.prior_log.resize(n);
  cloud.cum_loglik = VectorXd::Zero(n);

  const bool use_q = static_cast<bool>(config.init_proposal);
  if (!use_q && !model.prior_sampler)
    throw InvalidInput("init_cloud: model has no prior sampler; supply an init proposal");
  for (int i = 0; i < n; ++i) {
    const VectorXd th = use_q ? config.init_proposal.sampler(rng) : model.prior_sampler(rng);
    if (th.size() != model.dim_theta) throw InvalidInput("init_cloud: sampler dimension");
    cloud.particles.col(i) = th;
    cloud.prior_log[i] = model.prior_log_density(th);
    cloud.log_weights[i] =
        use_q ? cloud.prior_log[i] - config.init_proposal.log_density(th) : 0.0;
  }
  if (normalize_log_weights(cloud.log_weights) == kNegInf)
    throw DegeneracyError("init_cloud: init proposal missed the prior support");
  cloud.normalized = true;
  return cloud;
}

namespace {

// Rebuilds particle storage and caches from SSP offspring counts.
template <typename... Vecs>
void apply_counts(MatrixXd& particles, const std::vector<int>& counts, Vecs&... caches) {
  const int n = static_cast<int>(counts.size());
  MatrixXd np(particles.rows(), n);
  auto gather = [&](VectorXd& v) {
    VectorXd nv(n);
    int k = 0;
    for (int i = 0; i < n; ++i)
      for (int c = 0; c < counts[i]; ++c) nv[k++] = v[i];
    v = std::move(nv);
  };
  int k = 0;
  for (int i = 0; i < n; ++i)
    for (int c = 0; c < counts[i]; ++c) np.col(k++) = particles.col(i);
  particles = std::move(np);
  (gather(caches), ...);
}

}  // namespace

TraceRow assimilate_observation(ThetaCloud& cloud, const VectorXd& y, const IidModelSpec& model,
                                const SmcConfig& config, Rng& rng,
                                TemperingLadder* ladder_out) {
  config.validate();
  if (model.dim_y != 1)
    throw InvalidInput("assimilate_observation: only scalar observations are supported");
  if (cloud.prior_log.size() != cloud.n() || cloud.cum_loglik.size() != cloud.n())
    throw InvalidInput("assimilate_observation: cloud caches missing (use init_cloud)");
  const int n = cloud.n();
  const double target_ess = config.ess_threshold_ratio * n;
  const int t = cloud.step_index + 1;

  VectorXd ell(n);
  for (int i = 0; i < n; ++i)
    ell[i] = model.likelihood_log_density(y, cloud.particles.col(i));

  TraceRow row;
  row.t = t;
  {
    VectorXd jump = cloud.log_weights + ell;
    bool any = false;
    for (int i = 0; i < n; ++i) any = any || std::isfinite(jump[i]);
    if (!any)
      throw DegeneracyError("assimilate_observation: all weights vanished at t=" +
                            std::to_string(t));
    row.ess_before_temper = ess(jump);
  }

  TemperingLadder ladder;
  ladder.gammas.push_back(0.0);
  double gamma = 0.0;
  double logev_inc = 0.0;
  int stages = 0;
  long long mh_accepted = 0, mh_proposed = 0;
  std::uniform_real_distribution<double> unif(0.0, 1.0);

  while (gamma < 1.0) {
    if (++stages > config.max_temper_steps)
      throw DegeneracyError("assimilate_observation: tempering ladder exceeded " +
                            std::to_string(config.max_temper_steps) + " stages at t=" +
                            std::to_string(t));
    const double next = next_temperature(gamma, ell, cloud.log_weights, target_ess);
    const double delta = next - gamma;
    const double lse_before = log_sum_exp(cloud.log_weights);
    cloud.log_weights += delta * ell;
    const double lse_after = log_sum_exp(cloud.log_weights);
    if (!std::isfinite(lse_after))
      throw DegeneracyError("assimilate_observation: all weights vanished at t=" +
                            std::to_string(t));
    logev_inc += lse_after - lse_before;
    ladder.gammas.push_back(next);

    const bool need_move = next < 1.0 || ess(cloud.log_weights) < target_ess;
    if (need_move && config.mh_steps_per_temper > 0) {
      VectorXd w = softmax(cloud.log_weights);
      const GaussianMixture proposal =
          fit_gaussian_mixture(cloud.particles, w, config.mixture_components, rng);
      const std::vector<int> counts = ssp_resample(w, rng);
      apply_counts(cloud.particles, counts, cloud.prior_log, cloud.cum_loglik, ell);
      cloud.log_weights.setZero();

      // Independent MH at the tempered target
      //   log p(theta) + sum_{s<t} log p(y_s|theta) + gamma * log p(y_t|theta).
      for (int i = 0; i < n; ++i) {
        double cur_t = cloud.prior_log[i] + cloud.cum_loglik[i] + next * ell[i];
        double cur_q = proposal.log_density(cloud.particles.col(i));
        for (int s = 0; s < config.mh_steps_per_temper; ++s) {
          const VectorXd prop = proposal.sample(rng);
          const double prop_prior = model.prior_log_density(prop);
          double prop_t = kNegInf, prop_cum = 0.0, prop_ell = kNegInf;
          if (std::isfinite(prop_prior)) {
            prop_cum = 0.0;
            for (const VectorXd& ys : cloud.history)
              prop_cum += model.likelihood_log_density(ys, prop);
            prop_ell = model.likelihood_log_density(y, prop);
            prop_t = prop_prior + prop_cum + next * prop_ell;
          }
          const double prop_q = proposal.log_density(prop);
          const double log_alpha = (prop_t - prop_q) - (cur_t - cur_q);
          ++mh_proposed;
          if (std::log(unif(rng)) < log_alpha) {
            cloud.particles.col(i) = prop;
            cloud.prior_log[i] = prop_prior;
            cloud.cum_loglik[i] = prop_cum;
            ell[i] = prop_ell;
            cur_t = prop_t;
            cur_q = prop_q;
            ++mh_accepted;
          }
        }
      }
    }
    gamma = next;
  }

  normalize_log_weights(cloud.log_weights);
  cloud.normalized = true;
  cloud.cum_loglik += ell;
  cloud.history.push_back(y);
  cloud.step_index = t;

  row.logev_inc = logev_inc;
  row.n_temper_steps = stages;
  if (mh_proposed > 0)
    row.acceptance_rate = static_cast<double>(mh_accepted) / mh_proposed;

  const VectorXd w = softmax(cloud.log_weights);
  MatrixXd d1(n, 1), d2(n, 1);
  for (int i = 0; i < n; ++i) {
    const DensityDerivatives d = model.likelihood_y_derivs(y, cloud.particles.col(i));
    d1(i, 0) = d.grad_log[0];
    d2(i, 0) = d.lap_log;
  }
  row.h_inc = hscore_increment_from_posterior(d1, d2, w);

  if (ladder_out) *ladder_out = std::move(ladder);
  return row;
}

PrequentialTrace run_smc(const IidModelSpec& model, const MatrixXd& data,
                         const SmcConfig& config, const std::vector<int>* permutation,
                         PrequentialTrace* progress) {
  if (data.rows() == 0) throw InvalidInput("run_smc: empty data");
  if (data.cols() != model.dim_y) throw InvalidInput("run_smc: data dimension mismatch");
  const int T = static_cast<int>(data.rows());
  std::vector<int> order(T);
  std::iota(order.begin(), order.end(), 0);
  if (permutation) {
    if (static_cast<int>(permutation->size()) != T)
      throw InvalidInput("run_smc: permutation length mismatch");
    std::vector<bool> seen(T, false);
    for (int idx : *permutation) {
      if (idx < 0 || idx >= T || seen[idx]) throw InvalidInput("run_smc: invalid permutation");
      seen[idx] = true;
    }
    order = *permutation;
  }

  Rng rng_init = derive_rng(config.seed, {stream::kThetaInit});
  Rng rng_assim = derive_rng(config.seed, {stream::kTemper});
  ThetaCloud cloud = init_cloud(model, config, rng_init);

  PrequentialTrace trace;
  trace.tau = model.first_proper_index;
  for (int t = 0; t < T; ++t) {
    const VectorXd y = data.row(order[t]).transpose();
    TraceRow row = assimilate_observation(cloud, y, model, config, rng_assim);
    if (row.t <= trace.tau) {
      // score accumulation starts after the first proper posterior
      row.h_inc = ScoreIncrement{};
      row.h_inc.per_dim_d1 = VectorXd::Zero(model.dim_y);
      row.h_inc.per_dim_d2 = VectorXd::Zero(model.dim_y);
    }
    trace.rows.push_back(std::move(row));
    if (progress) {
      *progress = trace;
      progress->recompute_cumulative();
    }
  }
  trace.recompute_cumulative();
  return trace;
}

std::vector<int> random_permutation(int n, Rng& rng) {
  std::vector<int> p(n);
  std::iota(p.begin(), p.end(), 0);
  for (int i = n - 1; i > 0; --i) {
    std::uniform_int_distribution<int> d(0, i);
    std::swap(p[i], p[d(rng)]);
  }
  return p;
}

}  // namespace hscore

#include "hscore/smc2.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <iostream>
#include <numeric>
#include <string>
#include <utility>

#include "hscore/mixture.hpp"
#include "hscore/smc.hpp"

namespace hscore {

namespace {

constexpr double kXEssRatio = 0.5;  // inner-filter resampling threshold

MatrixXd gather_columns(const MatrixXd& m, const std::vector<int>& counts) {
  const int n = static_cast<int>(counts.size());
  MatrixXd out(m.rows(), n);
  int k = 0;
  for (int i = 0; i < n; ++i)
    for (int c = 0; c < counts[i]; ++c) out.col(k++) = m.col(i);
  return out;
}

}  // namespace

void Smc2Config::validate() const {
  if (n_theta < 2) throw InvalidInput("Smc2Config: n_theta must be >= 2");
  if (n_x_init < 2) throw InvalidInput("Smc2Config: n_x_init must be >= 2");
  if (!(ess_threshold_ratio > 0.0 && ess_threshold_ratio < 1.0))
    throw InvalidInput("Smc2Config: ess_threshold_ratio must lie in (0,1)");
  if (!(acceptance_floor > 0.0 && acceptance_floor < 1.0))
    throw InvalidInput("Smc2Config: acceptance_floor must lie in (0,1)");
  if (mh_steps < 0) throw InvalidInput("Smc2Config: negative mh_steps");
  if (mixture_components < 1) throw InvalidInput("Smc2Config: mixture_components must be >= 1");
  if (kde.n_draws < 2) throw InvalidInput("Smc2Config: kde.n_draws must be >= 2");
  if (!(kde.bandwidth > 0.0)) throw InvalidInput("Smc2Config: kde.bandwidth must be positive");
  if (n_x_max < n_x_init) throw InvalidInput("Smc2Config: n_x_max below n_x_init");
}

void Smc2Cloud::reseed_x_rngs() {
  ++rng_epoch;
  x_rngs.resize(n());
  for (int i = 0; i < n(); ++i)
    x_rngs[i] = derive_rng(seed, {stream::kXParticle, rng_epoch,
                                  static_cast<std::uint64_t>(i)});
}

XCloud pf_init(const ConstVecRef& theta, const SsmSpec& spec, int n_x, Rng& rng) {
  if (n_x < 2) throw InvalidInput("pf_init: need at least two particles");
  if (!spec.init_sampler) throw InvalidInput("pf_init: model lacks an init sampler");
  XCloud xc;
  xc.states.resize(spec.dim_x, n_x);
  for (int j = 0; j < n_x; ++j) xc.states.col(j) = spec.init_sampler(theta, rng);
  xc.log_weights = VectorXd::Constant(n_x, -std::log(static_cast<double>(n_x)));
  return xc;
}

MatrixXd pf_propagate(const XCloud& xc, const ConstVecRef& theta, const SsmSpec& spec,
                      Rng& rng) {
  if (xc.step_index == 0) return xc.states;  // fresh initial draws, nothing to move
  MatrixXd out(xc.states.rows(), xc.n());
  for (int j = 0; j < xc.n(); ++j)
    out.col(j) = spec.transition_sampler(xc.states.col(j), theta, xc.step_index - 1, rng);
  return out;
}

std::tuple<XCloud, double, FilteredDerivs> pf_step_with_states(
    const XCloud& xc, const MatrixXd& propagated, const ConstVecRef& theta,
    const VectorXd& y, const SsmSpec& spec, Rng& rng, bool want_derivs) {
  const int n = xc.n();
  if (propagated.cols() != n || propagated.rows() != spec.dim_x)
    throw InvalidInput("pf_step_with_states: propagated state shape mismatch");
  if (want_derivs) {
    if (!spec.measurement_y_derivs)
      throw InvalidInput("pf_step_with_states: model has no measurement derivatives");
    if (spec.dim_y != 1)
      throw InvalidInput("pf_step_with_states: derivative path is univariate only");
  }

  VectorXd lw(n);
  for (int j = 0; j < n; ++j)
    lw[j] = xc.log_weights[j] + spec.measurement_log_density(y, propagated.col(j), theta);
  const double inc = log_sum_exp(lw);

  XCloud out;
  out.loglik_cum = xc.loglik_cum + inc;
  out.step_index = xc.step_index + 1;

  FilteredDerivs fd;
  fd.d1 = VectorXd::Zero(n);
  fd.d2 = VectorXd::Zero(n);

  if (!std::isfinite(inc)) {
    out.states = propagated;
    out.log_weights = VectorXd::Constant(n, -std::log(static_cast<double>(n)));
    out.degenerate = true;
    fd.weights = out.log_weights.array().exp();
    return {std::move(out), kNegInf, std::move(fd)};
  }

  const VectorXd w = softmax(lw);
  fd.weights = w;
  if (want_derivs) {
    for (int j = 0; j < n; ++j) {
      // Zero-weight particles contribute nothing and may sit outside the
      // observation model's support, where derivatives are undefined.
      if (w[j] <= 0.0 || !std::isfinite(lw[j])) continue;
      const DensityDerivatives d = spec.measurement_y_derivs(y, propagated.col(j), theta);
      fd.d1[j] = d.grad_log[0];
      fd.d2[j] = d.lap_log;
    }
  }

  if (ess(lw) < kXEssRatio * n) {
    const std::vector<int> counts = ssp_resample(w, rng);
    out.states = gather_columns(propagated, counts);
    out.log_weights = VectorXd::Constant(n, -std::log(static_cast<double>(n)));
  } else {
    out.states = propagated;
    out.log_weights = lw.array() - inc;
  }
  return {std::move(out), inc, std::move(fd)};
}

std::tuple<XCloud, double, FilteredDerivs> pf_step(const XCloud& xc, const ConstVecRef& theta,
                                                   const VectorXd& y, const SsmSpec& spec,
                                                   Rng& rng) {
  const MatrixXd propagated = pf_propagate(xc, theta, spec, rng);
  return pf_step_with_states(xc, propagated, theta, y, spec, rng,
                             static_cast<bool>(spec.measurement_y_derivs) && spec.dim_y == 1);
}

namespace {

// Fresh filter over a data prefix; derivatives skipped.
XCloud pf_run_prefix(const ConstVecRef& theta, const std::vector<VectorXd>& prefix,
                     const SsmSpec& spec, int n_x, Rng& rng) {
  XCloud xc = pf_init(theta, spec, n_x, rng);
  for (const VectorXd& y : prefix) {
    const MatrixXd propagated = pf_propagate(xc, theta, spec, rng);
    auto step = pf_step_with_states(xc, propagated, theta, y, spec, rng, false);
    xc = std::move(std::get<0>(step));
  }
  return xc;
}

}  // namespace

Smc2Cloud init_smc2_cloud(const SsmSpec& spec, const Smc2Config& config) {
  config.validate();
  if (!spec.prior_sampler) throw InvalidInput("init_smc2_cloud: model lacks a prior sampler");
  const int n = config.n_theta;

  Smc2Cloud cloud;
  cloud.seed = config.seed;
  cloud.n_x_current = config.n_x_init;
  cloud.theta_particles.resize(spec.dim_theta, n);
  cloud.theta_log_weights = VectorXd::Constant(n, -std::log(static_cast<double>(n)));
  cloud.prior_log.resize(n);

  Rng rng = derive_rng(config.seed, {stream::kThetaInit});
  for (int i = 0; i < n; ++i) {
    const VectorXd th = spec.prior_sampler(rng);
    if (th.size() != spec.dim_theta) throw InvalidInput("init_smc2_cloud: sampler dimension");
    cloud.theta_particles.col(i) = th;
    cloud.prior_log[i] = spec.prior_log_density(th);
  }

  cloud.reseed_x_rngs();
  cloud.x_clouds.reserve(n);
  for (int i = 0; i < n; ++i)
    cloud.x_clouds.push_back(
        pf_init(cloud.theta_particles.col(i), spec, config.n_x_init, cloud.x_rngs[i]));
  return cloud;
}

double pmmh_rejuvenate(Smc2Cloud& cloud, const std::vector<VectorXd>& y_prefix,
                       const SsmSpec& spec, const Smc2Config& config, Rng& rng) {
  const int n = cloud.n();
  const VectorXd w = softmax(cloud.theta_log_weights);
  const GaussianMixture proposal =
      fit_gaussian_mixture(cloud.theta_particles, w, config.mixture_components, rng);

  std::uniform_real_distribution<double> u(0.0, 1.0);
  long long proposed = 0, accepted = 0;
  for (int i = 0; i < n; ++i) {
    for (int s = 0; s < config.mh_steps; ++s) {
      ++proposed;
      const VectorXd prop = proposal.sample(rng);
      const double prop_prior = spec.prior_log_density(prop);
      if (!std::isfinite(prop_prior)) continue;  // outside the prior support
      const double prop_q = proposal.log_density(prop);
      const XCloud fresh = pf_run_prefix(prop, y_prefix, spec, cloud.n_x_current, rng);

      const double cur_t = cloud.prior_log[i] + cloud.x_clouds[i].loglik_cum;
      const double cur_q = proposal.log_density(cloud.theta_particles.col(i));
      const double log_alpha = (prop_prior + fresh.loglik_cum - prop_q) - (cur_t - cur_q);
      if (std::log(u(rng)) < log_alpha) {
        cloud.theta_particles.col(i) = prop;
        cloud.prior_log[i] = prop_prior;
        cloud.x_clouds[i] = fresh;
        ++accepted;
      }
    }
  }
  return proposed > 0 ? static_cast<double>(accepted) / proposed : kNaN;
}

void adapt_nx(Smc2Cloud& cloud, double acceptance_rate, const SsmSpec& spec,
              const Smc2Config& config, Rng& rng) {
  if (!(acceptance_rate < config.acceptance_floor)) return;
  if (cloud.n_x_current >= config.n_x_max) {
    std::cerr << "adapt_nx: inner particle count already at cap " << config.n_x_max << "\n";
    return;
  }
  const int n_new = std::min(2 * cloud.n_x_current, config.n_x_max);
  for (int i = 0; i < cloud.n(); ++i)
    cloud.x_clouds[i] =
        pf_run_prefix(cloud.theta_particles.col(i), cloud.history, spec, n_new, rng);
  cloud.n_x_current = n_new;
  cloud.reseed_x_rngs();
}

ScoreIncrement discrete_hscore_increment_smc2(const Smc2Cloud& cloud,
                                              const std::vector<MatrixXd>& predictive_states,
                                              const VectorXd& y, const SsmSpec& spec,
                                              bool* degenerate) {
  if (spec.observation_kind != ObservationKind::kDiscrete || !spec.support)
    throw InvalidInput("discrete_hscore_increment_smc2: model is not discrete");
  if (static_cast<int>(predictive_states.size()) != cloud.n())
    throw InvalidInput("discrete_hscore_increment_smc2: predictive state count mismatch");
  const int d = spec.dim_y;
  if (y.size() != d) throw InvalidInput("discrete_hscore_increment_smc2: observation dim");

  std::vector<std::int64_t> y_int(d);
  for (int k = 0; k < d; ++k) {
    const double r = std::llround(y[k]);
    if (std::abs(y[k] - r) > 1e-9)
      throw InvalidInput("discrete_hscore_increment_smc2: non-integer observation");
    y_int[k] = static_cast<std::int64_t>(r);
  }

  const VectorXd& theta_lw = cloud.theta_log_weights;
  const LogPmf log_pmf = [&](std::span<const std::int64_t> yp) {
    VectorXd yv(d);
    for (int k = 0; k < d; ++k) yv[k] = static_cast<double>(yp[k]);
    VectorXd per_theta(cloud.n());
    for (int i = 0; i < cloud.n(); ++i) {
      if (theta_lw[i] == kNegInf) {
        per_theta[i] = kNegInf;
        continue;
      }
      const VectorXd& xlw = cloud.x_clouds[i].log_weights;
      const MatrixXd& xs = predictive_states[i];
      VectorXd terms(xs.cols());
      for (int j = 0; j < xs.cols(); ++j)
        terms[j] =
            xlw[j] + spec.measurement_log_density(yv, xs.col(j), cloud.theta_particles.col(i));
      per_theta[i] = theta_lw[i] + log_sum_exp(terms);
    }
    return log_sum_exp(per_theta);
  };

  if (degenerate) *degenerate = false;
  try {
    return discrete_score_increment(y_int, log_pmf, *spec.support);
  } catch (const ScoringError&) {
    if (degenerate) *degenerate = true;
    ScoreIncrement zero;
    zero.per_dim_d1 = VectorXd::Zero(d);
    zero.per_dim_d2 = VectorXd::Zero(d);
    return zero;
  }
}

TraceRow smc2_assimilate(Smc2Cloud& cloud, const VectorXd& y, const SsmSpec& spec,
                         const Smc2Config& config) {
  config.validate();
  if (y.size() != spec.dim_y) throw InvalidInput("smc2_assimilate: observation dimension");
  const int n = cloud.n();
  const int t = cloud.step_index + 1;
  const bool discrete = spec.observation_kind == ObservationKind::kDiscrete;
  const bool use_kde = !discrete && config.hscore_mode == HscoreMode::kKde;
  const bool use_derivs = !discrete && config.hscore_mode == HscoreMode::kDerivative;
  if (use_derivs && !spec.measurement_y_derivs)
    throw InvalidInput("smc2_assimilate: model lacks measurement derivatives; use kde mode");
  if (use_kde && !spec.measurement_sampler)
    throw InvalidInput("smc2_assimilate: kde mode needs a measurement sampler");
  if ((use_kde || use_derivs) && spec.dim_y != 1)
    throw InvalidInput("smc2_assimilate: continuous scoring is univariate only");

  TraceRow row;
  row.t = t;

  // one-step-ahead states per theta: the predictive cloud
  std::vector<MatrixXd> pred(n);
  for (int i = 0; i < n; ++i)
    pred[i] = pf_propagate(cloud.x_clouds[i], cloud.theta_particles.col(i), spec,
                           cloud.x_rngs[i]);

  ScoreIncrement discrete_inc;
  bool discrete_degen = false;
  if (discrete)
    discrete_inc = discrete_hscore_increment_smc2(cloud, pred, y, spec, &discrete_degen);

  std::vector<KdeEstimate> kde_per_theta;
  if (use_kde) {
    kde_per_theta.resize(n);
    for (int i = 0; i < n; ++i) {
      const VectorXd wx = softmax(cloud.x_clouds[i].log_weights);
      std::discrete_distribution<int> pick(wx.data(), wx.data() + wx.size());
      VectorXd draws(config.kde.n_draws);
      for (int r = 0; r < config.kde.n_draws; ++r) {
        const int j = pick(cloud.x_rngs[i]);
        draws[r] = spec.measurement_sampler(pred[i].col(j), cloud.theta_particles.col(i),
                                            cloud.x_rngs[i])[0];
      }
      kde_per_theta[i] = KdeEstimate{std::move(draws), config.kde.bandwidth};
    }
  }

  VectorXd ell(n);
  std::vector<FilteredDerivs> derivs(n);
  for (int i = 0; i < n; ++i) {
    auto [next, inc, fd] = pf_step_with_states(cloud.x_clouds[i], pred[i],
                                               cloud.theta_particles.col(i), y, spec,
                                               cloud.x_rngs[i], use_derivs);
    cloud.x_clouds[i] = std::move(next);
    ell[i] = inc;
    derivs[i] = std::move(fd);
  }

  VectorXd lw_new = cloud.theta_log_weights + ell;
  const double lse = log_sum_exp(lw_new);
  if (!std::isfinite(lse))
    throw DegeneracyError("smc2_assimilate: every theta-particle died at t=" +
                          std::to_string(t));
  row.logev_inc = lse;  // previous weights were normalized
  row.ess_before_temper = ess(lw_new);
  lw_new.array() -= lse;
  cloud.theta_log_weights = std::move(lw_new);
  cloud.history.push_back(y);
  cloud.step_index = t;

  // H increment on the updated joint posterior, before any rejuvenation
  const VectorXd w = softmax(cloud.theta_log_weights);
  if (discrete) {
    row.h_inc = discrete_inc;
    row.degenerate = discrete_degen;
  } else if (use_kde) {
    row.h_inc = kde_hscore_increment(kde_per_theta, w, y[0], &row.n_kde_excluded,
                                     &row.unreliable);
  } else {
    double e1 = 0.0, e2 = 0.0;
    for (int i = 0; i < n; ++i) {
      if (w[i] <= 0.0) continue;
      e1 += w[i] * derivs[i].mean_d1();
      e2 += w[i] * derivs[i].mean_h();
    }
    ScoreIncrement inc;
    inc.per_dim_d1 = VectorXd::Constant(1, e1);
    inc.per_dim_d2 = VectorXd::Constant(1, e2 - e1 * e1);
    inc.value = 2.0 * e2 - e1 * e1;
    row.h_inc = inc;
  }

  // rejuvenation
  if (ess(cloud.theta_log_weights) < config.ess_threshold_ratio * n) {
    row.n_temper_steps = 1;
    Rng rng_theta = derive_rng(cloud.seed, {stream::kRejuvenate, static_cast<std::uint64_t>(t)});
    const std::vector<int> counts = ssp_resample(softmax(cloud.theta_log_weights), rng_theta);
    cloud.theta_particles = gather_columns(cloud.theta_particles, counts);
    VectorXd new_prior(n);
    std::vector<XCloud> new_xc;
    new_xc.reserve(n);
    int k = 0;
    for (int i = 0; i < n; ++i)
      for (int c = 0; c < counts[i]; ++c) {
        new_prior[k++] = cloud.prior_log[i];
        new_xc.push_back(cloud.x_clouds[i]);
      }
    cloud.prior_log = std::move(new_prior);
    cloud.x_clouds = std::move(new_xc);
    cloud.theta_log_weights = VectorXd::Constant(n, -std::log(static_cast<double>(n)));
    cloud.reseed_x_rngs();

    if (config.mh_steps > 0) {
      row.acceptance_rate = pmmh_rejuvenate(cloud, cloud.history, spec, config, rng_theta);
      adapt_nx(cloud, row.acceptance_rate, spec, config, rng_theta);
    }
  }
  return row;
}

PrequentialTrace run_smc2(const SsmSpec& spec, const MatrixXd& data, const Smc2Config& config,
                          PrequentialTrace* progress) {
  config.validate();
  if (data.rows() == 0) throw InvalidInput("run_smc2: empty data");
  if (data.cols() != spec.dim_y) throw InvalidInput("run_smc2: data dimension mismatch");
  const int T = static_cast<int>(data.rows());

  Smc2Cloud cloud = init_smc2_cloud(spec, config);
  PrequentialTrace trace;
  trace.tau = 0;
  for (int t = 0; t < T; ++t) {
    const VectorXd y = data.row(t).transpose();
    trace.rows.push_back(smc2_assimilate(cloud, y, spec, config));
    if (progress) {
      *progress = trace;
      progress->recompute_cumulative();
    }
  }
  trace.recompute_cumulative();
  return trace;
}

}  // namespace hscore

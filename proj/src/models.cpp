#include "hscore/models.hpp"

#include <cmath>
#include <utility>

#include "hscore/distributions.hpp"

namespace hscore {

namespace {

constexpr double kLogXFloor = -18.420680743952367;  // log(1e-8)
constexpr double kLogXCeil = 27.631021115928547;    // log(1e12)

// Beyond this many jumps per interval the Poisson sum in the volatility
// recursion is replaced by its central-limit Gaussian approximation; the
// threshold is far above anything the posterior visits, it only guards
// against extreme prior draws.
constexpr long long kMaxExactJumps = 10000;

double exp_logpdf(double x, double rate) {
  if (x <= 0.0) return kNegInf;
  return std::log(rate) - rate * x;
}

DensityDerivatives gaussian_y_derivs(double y, double mean, double var) {
  DensityDerivatives d;
  d.log_density = normal_logpdf(y, mean, var);
  d.grad_log = VectorXd::Constant(1, -(y - mean) / var);
  d.lap_log = -1.0 / var;
  return d;
}

}  // namespace

IidModelSpec normal_m1_spec(double sigma0_sq) {
  if (!(sigma0_sq > 0.0)) throw InvalidInput("normal_m1_spec: sigma0_sq must be positive");
  IidModelSpec spec;
  spec.name = "normal_m1";
  spec.dim_theta = 1;
  spec.dim_y = 1;
  spec.first_proper_index = 0;
  spec.param_names = {"mu"};
  spec.default_theta = {VectorXd::Zero(1), spec.param_names};
  spec.prior_log_density = [sigma0_sq](const ConstVecRef& th) {
    return normal_logpdf(th[0], 0.0, sigma0_sq);
  };
  spec.prior_sampler = [sigma0_sq](Rng& rng) {
    return VectorXd::Constant(1, draw_normal(rng, 0.0, std::sqrt(sigma0_sq)));
  };
  spec.likelihood_log_density = [](const ConstVecRef& y, const ConstVecRef& th) {
    return normal_logpdf(y[0], th[0], 1.0);
  };
  spec.likelihood_y_derivs = [](const ConstVecRef& y, const ConstVecRef& th) {
    return gaussian_y_derivs(y[0], th[0], 1.0);
  };
  spec.likelihood_sampler = [](const ConstVecRef& th, Rng& rng) {
    return VectorXd::Constant(1, draw_normal(rng, th[0], 1.0));
  };
  return spec;
}

IidModelSpec normal_m2_spec(double nu0, double s0_sq) {
  if (!(nu0 > 0.0) || !(s0_sq > 0.0))
    throw InvalidInput("normal_m2_spec: hyperparameters must be positive");
  IidModelSpec spec;
  spec.name = "normal_m2";
  spec.dim_theta = 1;
  spec.dim_y = 1;
  spec.first_proper_index = 0;
  spec.param_names = {"sigma_sq"};
  spec.default_theta = {VectorXd::Constant(1, 1.0), spec.param_names};
  spec.prior_log_density = [nu0, s0_sq](const ConstVecRef& th) {
    return scaled_inv_chi2_logpdf(th[0], nu0, s0_sq);
  };
  spec.prior_sampler = [nu0, s0_sq](Rng& rng) {
    return VectorXd::Constant(1, 1.0 / draw_gamma(rng, 0.5 * nu0, 0.5 * nu0 * s0_sq));
  };
  spec.likelihood_log_density = [](const ConstVecRef& y, const ConstVecRef& th) {
    if (!(th[0] > 0.0)) return kNegInf;
    return normal_logpdf(y[0], 0.0, th[0]);
  };
  spec.likelihood_y_derivs = [](const ConstVecRef& y, const ConstVecRef& th) {
    if (!(th[0] > 0.0)) throw InvalidInput("normal_m2: nonpositive variance");
    return gaussian_y_derivs(y[0], 0.0, th[0]);
  };
  spec.likelihood_sampler = [](const ConstVecRef& th, Rng& rng) {
    return VectorXd::Constant(1, draw_normal(rng, 0.0, std::sqrt(th[0])));
  };
  return spec;
}

SsmSpec lgssm_spec(double phi, double sigma_x, double sigma_y) {
  if (!(std::abs(phi) < 1.0)) throw InvalidInput("lgssm_spec: need |phi| < 1");
  if (!(sigma_x > 0.0) || !(sigma_y > 0.0))
    throw InvalidInput("lgssm_spec: noise scales must be positive");
  const double vx = sigma_x * sigma_x;
  const double vy = sigma_y * sigma_y;
  SsmSpec spec;
  spec.name = "lgssm";
  spec.dim_theta = 1;
  spec.dim_x = 1;
  spec.dim_y = 1;
  spec.param_names = {"phi"};
  spec.default_theta = {VectorXd::Constant(1, phi), spec.param_names};
  spec.prior_log_density = [](const ConstVecRef& th) {
    return std::abs(th[0]) < 0.95 ? -std::log(1.9) : kNegInf;
  };
  spec.prior_sampler = [](Rng& rng) {
    return VectorXd::Constant(1, draw_uniform(rng, -0.95, 0.95));
  };
  spec.init_sampler = [vx](const ConstVecRef& th, Rng& rng) {
    const double sd = std::sqrt(vx / (1.0 - th[0] * th[0]));
    return VectorXd::Constant(1, draw_normal(rng, 0.0, sd));
  };
  spec.transition_sampler = [sigma_x](const ConstVecRef& x, const ConstVecRef& th, int,
                                      Rng& rng) {
    return VectorXd::Constant(1, draw_normal(rng, th[0] * x[0], sigma_x));
  };
  spec.measurement_log_density = [vy](const ConstVecRef& y, const ConstVecRef& x,
                                      const ConstVecRef&) {
    return normal_logpdf(y[0], x[0], vy);
  };
  spec.measurement_y_derivs = [vy](const ConstVecRef& y, const ConstVecRef& x,
                                   const ConstVecRef&) {
    return gaussian_y_derivs(y[0], x[0], vy);
  };
  spec.measurement_sampler = [sigma_y](const ConstVecRef& x, const ConstVecRef&, Rng& rng) {
    return VectorXd::Constant(1, draw_normal(rng, x[0], sigma_y));
  };
  spec.observation_kind = ObservationKind::kContinuous;
  return spec;
}

LevyStep levy_sv_transition(double z_prev, double lambda, double xi, double omega_sq,
                            Rng& rng) {
  if (!(lambda > 0.0) || !(xi > 0.0) || !(omega_sq > 0.0))
    throw InvalidInput("levy_sv_transition: parameters must be positive");
  const double jump_rate = lambda * xi * xi / omega_sq;
  const double e_rate = xi / omega_sq;
  const long long k = draw_poisson(rng, jump_rate);

  double sum_decayed = 0.0;  // sum of exp(-lambda u_j) E_j with u_j ~ U(0,1)
  double sum_e = 0.0;
  if (k <= kMaxExactJumps) {
    for (long long j = 0; j < k; ++j) {
      const double u = draw_uniform(rng, 0.0, 1.0);
      const double e = draw_exponential(rng, e_rate);
      sum_decayed += std::exp(-lambda * u) * e;
      sum_e += e;
    }
  } else {
    // Gaussian approximation of (sum_decayed, sum_e) from the per-jump
    // moments; accurate at this jump count and bounds the cost of extreme
    // prior draws.
    const double me = 1.0 / e_rate;
    const double md = -std::expm1(-lambda) / lambda;          // E[exp(-lambda U)]
    const double m2d = -std::expm1(-2.0 * lambda) / (2.0 * lambda);
    const double kd = static_cast<double>(k);
    const double mean_e = kd * me;
    const double var_e = kd * me * me;
    const double mean_d = kd * md * me;
    const double var_d = kd * (2.0 * m2d * me * me - md * md * me * me);
    const double cov = kd * md * me * me;
    const double n1 = draw_normal(rng, 0.0, 1.0);
    const double n2 = draw_normal(rng, 0.0, 1.0);
    sum_e = mean_e + std::sqrt(var_e) * n1;
    const double cond_var = std::max(var_d - cov * cov / var_e, 0.0);
    sum_decayed = mean_d + (cov / var_e) * (sum_e - mean_e) + std::sqrt(cond_var) * n2;
    sum_e = std::max(sum_e, 0.0);
    sum_decayed = std::min(std::max(sum_decayed, sum_e * std::exp(-lambda)), sum_e);
  }

  LevyStep out;
  out.z = std::exp(-lambda) * z_prev + sum_decayed;
  out.v = (z_prev - out.z + sum_e) / lambda;
  if (out.v < 0.0) out.v = 0.0;  // guard round-off; the expression is >= 0
  return out;
}

namespace {

double sv_common_prior_logdensity(double xi, double omega_sq, double mu, double beta) {
  return exp_logpdf(xi, 0.2) + exp_logpdf(omega_sq, 0.2) + normal_logpdf(mu, 0.0, 10.0) +
         normal_logpdf(beta, 0.0, 10.0);
}

double sv_measurement_logdensity(double y, double v, double mu, double beta) {
  if (!(v > 0.0)) return kNegInf;
  return normal_logpdf(y, mu + beta * v, v);
}

}  // namespace

SsmSpec levy_sv_m1_spec() {
  SsmSpec spec;
  spec.name = "sv_m1";
  spec.dim_theta = 5;
  spec.dim_x = 2;  // (Z_t, V_t)
  spec.dim_y = 1;
  spec.param_names = {"lambda", "xi", "omega_sq", "mu", "beta"};
  VectorXd def(5);
  def << 0.01, 0.5, 0.0625, 0.0, 0.0;
  spec.default_theta = {def, spec.param_names};
  spec.prior_log_density = [](const ConstVecRef& th) {
    return exp_logpdf(th[0], 1.0) + sv_common_prior_logdensity(th[1], th[2], th[3], th[4]);
  };
  spec.prior_sampler = [](Rng& rng) {
    VectorXd th(5);
    th[0] = draw_exponential(rng, 1.0);
    th[1] = draw_exponential(rng, 0.2);
    th[2] = draw_exponential(rng, 0.2);
    th[3] = draw_normal(rng, 0.0, std::sqrt(10.0));
    th[4] = draw_normal(rng, 0.0, std::sqrt(10.0));
    return th;
  };
  spec.init_sampler = [](const ConstVecRef& th, Rng& rng) {
    const double shape = th[1] * th[1] / th[2];
    const double rate = th[1] / th[2];
    const double z0 = draw_gamma(rng, shape, rate);
    const LevyStep s = levy_sv_transition(z0, th[0], th[1], th[2], rng);
    VectorXd x(2);
    x << s.z, s.v;
    return x;
  };
  spec.transition_sampler = [](const ConstVecRef& x, const ConstVecRef& th, int, Rng& rng) {
    const LevyStep s = levy_sv_transition(x[0], th[0], th[1], th[2], rng);
    VectorXd nx(2);
    nx << s.z, s.v;
    return nx;
  };
  spec.measurement_log_density = [](const ConstVecRef& y, const ConstVecRef& x,
                                    const ConstVecRef& th) {
    return sv_measurement_logdensity(y[0], x[1], th[3], th[4]);
  };
  spec.measurement_y_derivs = [](const ConstVecRef& y, const ConstVecRef& x,
                                 const ConstVecRef& th) {
    if (!(x[1] > 0.0)) throw InvalidInput("sv_m1: nonpositive volatility");
    return gaussian_y_derivs(y[0], th[3] + th[4] * x[1], x[1]);
  };
  spec.measurement_sampler = [](const ConstVecRef& x, const ConstVecRef& th, Rng& rng) {
    // v == 0 (z underflow with no jumps) degenerates to a point mass at mu.
    if (!(x[1] > 0.0)) return VectorXd::Constant(1, th[3]);
    return VectorXd::Constant(
        1, draw_normal(rng, th[3] + th[4] * x[1], std::sqrt(x[1])));
  };
  spec.observation_kind = ObservationKind::kContinuous;
  return spec;
}

SsmSpec levy_sv_m2_spec() {
  SsmSpec spec;
  spec.name = "sv_m2";
  spec.dim_theta = 7;
  spec.dim_x = 3;  // (Z_1, Z_2, V_1 + V_2)
  spec.dim_y = 1;
  spec.param_names = {"lambda1", "lambda2", "w", "xi", "omega_sq", "mu", "beta"};
  VectorXd def(7);
  def << 0.01, 0.02, 0.5, 0.5, 0.0625, 0.0, 0.0;
  spec.default_theta = {def, spec.param_names};
  spec.prior_log_density = [](const ConstVecRef& th) {
    if (!(th[1] > th[0])) return kNegInf;
    if (!(th[2] > 0.0) || !(th[2] < 1.0)) return kNegInf;
    return exp_logpdf(th[0], 1.0) + exp_logpdf(th[1] - th[0], 0.5) +
           sv_common_prior_logdensity(th[3], th[4], th[5], th[6]);
  };
  spec.prior_sampler = [](Rng& rng) {
    VectorXd th(7);
    th[0] = draw_exponential(rng, 1.0);
    th[1] = th[0] + draw_exponential(rng, 0.5);
    th[2] = draw_uniform(rng, 0.0, 1.0);
    th[3] = draw_exponential(rng, 0.2);
    th[4] = draw_exponential(rng, 0.2);
    th[5] = draw_normal(rng, 0.0, std::sqrt(10.0));
    th[6] = draw_normal(rng, 0.0, std::sqrt(10.0));
    return th;
  };
  // Factor i carries (lambda_i, xi w_i, omega_sq w_i): the stationary laws
  // are Gamma((xi^2/omega_sq) w_i, xi/omega_sq), so Z_1 + Z_2 reproduces
  // the single-factor marginal and M1 nests inside M2 at lambda1 = lambda2.
  auto factor_step = [](double z, const ConstVecRef& th, int i, Rng& rng) {
    const double wi = (i == 0) ? th[2] : 1.0 - th[2];
    return levy_sv_transition(z, th[i], th[3] * wi, th[4] * wi, rng);
  };
  spec.init_sampler = [factor_step](const ConstVecRef& th, Rng& rng) {
    VectorXd x(3);
    double v = 0.0;
    for (int i = 0; i < 2; ++i) {
      const double wi = (i == 0) ? th[2] : 1.0 - th[2];
      const double shape = (th[3] * th[3] / th[4]) * wi;
      const double rate = th[3] / th[4];
      const double z0 = draw_gamma(rng, shape, rate);
      const LevyStep s = factor_step(z0, th, i, rng);
      x[i] = s.z;
      v += s.v;
    }
    x[2] = v;
    return x;
  };
  spec.transition_sampler = [factor_step](const ConstVecRef& x, const ConstVecRef& th, int,
                                          Rng& rng) {
    VectorXd nx(3);
    double v = 0.0;
    for (int i = 0; i < 2; ++i) {
      const LevyStep s = factor_step(x[i], th, i, rng);
      nx[i] = s.z;
      v += s.v;
    }
    nx[2] = v;
    return nx;
  };
  spec.measurement_log_density = [](const ConstVecRef& y, const ConstVecRef& x,
                                    const ConstVecRef& th) {
    return sv_measurement_logdensity(y[0], x[2], th[5], th[6]);
  };
  spec.measurement_y_derivs = [](const ConstVecRef& y, const ConstVecRef& x,
                                 const ConstVecRef& th) {
    if (!(x[2] > 0.0)) throw InvalidInput("sv_m2: nonpositive volatility");
    return gaussian_y_derivs(y[0], th[5] + th[6] * x[2], x[2]);
  };
  spec.measurement_sampler = [](const ConstVecRef& x, const ConstVecRef& th, Rng& rng) {
    // v == 0 (z underflow with no jumps) degenerates to a point mass at mu.
    if (!(x[2] > 0.0)) return VectorXd::Constant(1, th[5]);
    return VectorXd::Constant(
        1, draw_normal(rng, th[5] + th[6] * x[2], std::sqrt(x[2])));
  };
  spec.observation_kind = ObservationKind::kContinuous;
  return spec;
}

namespace {

struct KangarooTheta {
  double sigma = 0.0, tau = 0.0, r = 0.0, b = 0.0;
};

KangarooTheta unpack_kangaroo(const ConstVecRef& th, KangarooVariant variant) {
  KangarooTheta k;
  k.sigma = th[0];
  k.tau = th[1];
  switch (variant) {
    case KangarooVariant::kM1:
      k.r = th[2];
      k.b = th[3];
      break;
    case KangarooVariant::kM2:
      k.r = th[2];
      break;
    case KangarooVariant::kM3:
      break;
  }
  return k;
}

}  // namespace

SsmSpec kangaroo_spec(KangarooVariant variant, double delta_t, std::vector<double> times,
                      double r_halfwidth) {
  if (!(delta_t > 0.0)) throw InvalidInput("kangaroo_spec: delta_t must be positive");
  if (!(r_halfwidth > 0.0)) throw InvalidInput("kangaroo_spec: r_halfwidth must be positive");
  SsmSpec spec;
  spec.dim_x = 1;
  spec.dim_y = 2;
  switch (variant) {
    case KangarooVariant::kM1:
      spec.name = "kangaroo_m1";
      spec.dim_theta = 4;
      spec.param_names = {"sigma", "tau", "r", "b"};
      break;
    case KangarooVariant::kM2:
      spec.name = "kangaroo_m2";
      spec.dim_theta = 3;
      spec.param_names = {"sigma", "tau", "r"};
      break;
    case KangarooVariant::kM3:
      spec.name = "kangaroo_m3";
      spec.dim_theta = 2;
      spec.param_names = {"sigma", "tau"};
      break;
  }
  VectorXd def = VectorXd::Zero(spec.dim_theta);
  def[0] = 0.2;
  def[1] = 0.07;
  spec.default_theta = {def, spec.param_names};

  spec.prior_log_density = [variant, r_halfwidth](const ConstVecRef& th) {
    const int d = th.size();
    for (int i = 0; i < d; ++i)
      if (!std::isfinite(th[i])) return kNegInf;
    if (!(th[0] > 0.0 && th[0] < 10.0)) return kNegInf;  // sigma
    if (!(th[1] > 0.0 && th[1] < 10.0)) return kNegInf;  // tau
    double lp = 2.0 * -std::log(10.0);
    if (variant != KangarooVariant::kM3) {
      if (!(th[2] > -r_halfwidth && th[2] < r_halfwidth)) return kNegInf;  // r
      lp += -std::log(2.0 * r_halfwidth);
    }
    if (variant == KangarooVariant::kM1) {
      if (!(th[3] > 0.0 && th[3] < 10.0)) return kNegInf;  // b
      lp += -std::log(10.0);
    }
    return lp;
  };
  spec.prior_sampler = [variant, r_halfwidth](Rng& rng) {
    int d = variant == KangarooVariant::kM1 ? 4 : (variant == KangarooVariant::kM2 ? 3 : 2);
    VectorXd th(d);
    th[0] = draw_uniform(rng, 0.0, 10.0);
    th[1] = draw_uniform(rng, 0.0, 10.0);
    if (variant != KangarooVariant::kM3) th[2] = draw_uniform(rng, -r_halfwidth, r_halfwidth);
    if (variant == KangarooVariant::kM1) th[3] = draw_uniform(rng, 0.0, 10.0);
    return th;
  };
  spec.init_sampler = [](const ConstVecRef&, Rng& rng) {
    double lx = draw_normal(rng, 0.0, std::sqrt(5.0));
    lx = std::clamp(lx, kLogXFloor, kLogXCeil);
    return VectorXd::Constant(1, std::exp(lx));
  };
  spec.transition_sampler = [variant, delta_t, times = std::move(times)](
                                const ConstVecRef& x, const ConstVecRef& th, int t,
                                Rng& rng) {
    const KangarooTheta k = unpack_kangaroo(th, variant);
    double gap = 1.0;
    if (!times.empty()) {
      if (t + 1 >= static_cast<int>(times.size()))
        throw InvalidInput("kangaroo transition: step index beyond observation times");
      gap = times[t + 1] - times[t];
      if (!(gap > 0.0)) throw InvalidInput("kangaroo transition: nonincreasing times");
    }
    const int n_sub = std::max(1, static_cast<int>(std::ceil(gap / delta_t - 1e-9)));
    const double h = gap / n_sub;
    const double sqh = std::sqrt(h);
    double lx = std::log(x[0]);
    double cur = x[0];
    // d log X = (r - b X) dt + sigma dW: the sigma^2/2 drift of dX/X
    // cancels against the Ito correction.
    for (int s = 0; s < n_sub; ++s) {
      lx += (k.r - k.b * cur) * h + k.sigma * sqh * draw_normal(rng, 0.0, 1.0);
      lx = std::clamp(lx, kLogXFloor, kLogXCeil);
      cur = std::exp(lx);
    }
    return VectorXd::Constant(1, cur);
  };
  spec.measurement_log_density = [variant](const ConstVecRef& y, const ConstVecRef& x,
                                           const ConstVecRef& th) {
    const KangarooTheta k = unpack_kangaroo(th, variant);
    const double m = x[0];
    const double v = m + k.tau * m * m;
    if (!(v > m) || !(m > 0.0)) return kNegInf;
    double lp = 0.0;
    for (int i = 0; i < 2; ++i) {
      const auto yi = static_cast<long long>(std::llround(y[i]));
      if (yi < 0) return kNegInf;
      lp += nb_logpmf_mean_var(yi, m, v);
    }
    return lp;
  };
  spec.measurement_sampler = [variant](const ConstVecRef& x, const ConstVecRef& th,
                                       Rng& rng) {
    const KangarooTheta k = unpack_kangaroo(th, variant);
    const double m = x[0];
    const double v = m + k.tau * m * m;
    VectorXd y(2);
    y[0] = static_cast<double>(draw_nb_mean_var(rng, m, v));
    y[1] = static_cast<double>(draw_nb_mean_var(rng, m, v));
    return y;
  };
  spec.observation_kind = ObservationKind::kDiscrete;
  spec.support = DiscreteSupport::nonnegative(2);
  return spec;
}

MatrixXd simulate_dataset(const IidModelSpec& spec, const ParamVector& theta, int T,
                          Rng& rng) {
  if (T < 0) throw InvalidInput("simulate_dataset: negative T");
  if (theta.dim() != spec.dim_theta) throw InvalidInput("simulate_dataset: theta dimension");
  if (!spec.likelihood_sampler) throw InvalidInput("simulate_dataset: model lacks a sampler");
  MatrixXd out(T, spec.dim_y);
  for (int t = 0; t < T; ++t) out.row(t) = spec.likelihood_sampler(theta.values, rng);
  return out;
}

MatrixXd simulate_dataset(const SsmSpec& spec, const ParamVector& theta, int T, Rng& rng) {
  if (T < 0) throw InvalidInput("simulate_dataset: negative T");
  if (theta.dim() != spec.dim_theta) throw InvalidInput("simulate_dataset: theta dimension");
  if (!spec.measurement_sampler)
    throw InvalidInput("simulate_dataset: model lacks a measurement sampler");
  MatrixXd out(T, spec.dim_y);
  if (T == 0) return out;
  VectorXd x = spec.init_sampler(theta.values, rng);
  out.row(0) = spec.measurement_sampler(x, theta.values, rng);
  for (int t = 0; t + 1 < T; ++t) {
    x = spec.transition_sampler(x, theta.values, t, rng);
    out.row(t + 1) = spec.measurement_sampler(x, theta.values, rng);
  }
  return out;
}

}  // namespace hscore

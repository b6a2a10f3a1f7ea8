#include "hscore/experiments.hpp"

#include <cmath>
#include <string>
#include <utility>

#include "hscore/distributions.hpp"
#include "hscore/models.hpp"
#include "hscore/rng.hpp"
#include "hscore/smc.hpp"
#include "hscore/smc2.hpp"

namespace hscore {

namespace {

// study tags for seed-stream derivation
constexpr std::uint64_t kTagNormal = 100;
constexpr std::uint64_t kTagSv = 101;
constexpr std::uint64_t kTagKangaroo = 102;

VectorXd cum_column(const PrequentialTrace& tr, bool h) {
  VectorXd out(tr.size());
  for (int i = 0; i < tr.size(); ++i)
    out[i] = h ? tr.rows[i].h_cum : tr.rows[i].logev_cum;
  return out;
}

double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return v.empty() ? kNaN : s / static_cast<double>(v.size());
}

}  // namespace

VectorXd h_factor_series(const PrequentialTrace& m1, const PrequentialTrace& m2) {
  if (m1.size() != m2.size()) throw InvalidInput("h_factor_series: length mismatch");
  return cum_column(m2, true) - cum_column(m1, true);
}

VectorXd log_bf_series(const PrequentialTrace& m1, const PrequentialTrace& m2) {
  if (m1.size() != m2.size()) throw InvalidInput("log_bf_series: length mismatch");
  return cum_column(m1, false) - cum_column(m2, false);
}

double slope_estimate(const VectorXd& series, int t_begin, int t_end) {
  if (t_begin < 1 || t_end > series.size() || t_end - t_begin < 1)
    throw InvalidInput("slope_estimate: window must hold at least two trace points");
  const int n = t_end - t_begin + 1;
  double st = 0.0, sy = 0.0, stt = 0.0, sty = 0.0;
  for (int t = t_begin; t <= t_end; ++t) {
    const double y = series[t - 1];
    st += t;
    sy += y;
    stt += static_cast<double>(t) * t;
    sty += t * y;
  }
  const double denom = n * stt - st * st;
  return (n * sty - st * sy) / denom;
}

std::pair<double, double> normal_case_params(int case_id) {
  switch (case_id) {
    case 1: return {1.0, 1.0};
    case 2: return {0.0, 5.0};
    case 3: return {4.0, 3.0};
    case 4: return {0.0, 1.0};
    default: throw InvalidInput("normal_case_params: case must be 1..4");
  }
}

StudyResult run_normal_cases(int case_id, const NormalStudyConfig& config) {
  const auto [mu_star, s2_star] = normal_case_params(case_id);
  const auto cid = static_cast<std::uint64_t>(case_id);
  if (config.T < 2 || config.n_reps < 1) throw InvalidInput("run_normal_cases: bad sizes");

  MatrixXd data(config.T, 1);
  {
    Rng rng = derive_rng(config.seed, {kTagNormal, cid, stream::kSimulate});
    for (int t = 0; t < config.T; ++t)
      data(t, 0) = draw_normal(rng, mu_star, std::sqrt(s2_star));
  }

  const IidModelSpec m1 = normal_m1_spec(config.sigma0_sq);
  const IidModelSpec m2 = normal_m2_spec(config.nu0, config.s0_sq);

  StudyResult result;
  result.study = "normal_case" + std::to_string(case_id);
  result.models.resize(2);
  result.models[0].model = m1.name;
  result.models[1].model = m2.name;

  std::vector<double> h_slopes, bf_slopes, h_finals, bf_finals;
  const int t_begin = config.T / 2, t_end = config.T;
  for (int rep = 0; rep < config.n_reps; ++rep) {
    const auto r = static_cast<std::uint64_t>(rep);
    Rng perm_rng = derive_rng(config.seed, {kTagNormal, cid, r, stream::kPermutation});
    const std::vector<int> perm = random_permutation(config.T, perm_rng);

    SmcConfig c1;
    c1.n_theta = config.n_theta;
    c1.seed = derive_seed(config.seed, {kTagNormal, cid, r, 1});
    SmcConfig c2 = c1;
    c2.seed = derive_seed(config.seed, {kTagNormal, cid, r, 2});

    PrequentialTrace t1 = run_smc(m1, data, c1, &perm);
    PrequentialTrace t2 = run_smc(m2, data, c2, &perm);
    const VectorXd hf = h_factor_series(t1, t2);
    const VectorXd bf = log_bf_series(t1, t2);
    h_slopes.push_back(slope_estimate(hf, t_begin, t_end));
    bf_slopes.push_back(slope_estimate(bf, t_begin, t_end));
    h_finals.push_back(hf[hf.size() - 1]);
    bf_finals.push_back(bf[bf.size() - 1]);
    result.models[0].traces.push_back(std::move(t1));
    result.models[1].traces.push_back(std::move(t2));

    const std::string sfx = "_rep" + std::to_string(rep);
    result.summary["h_slope" + sfx] = h_slopes.back();
    result.summary["bf_slope" + sfx] = bf_slopes.back();
  }
  result.summary["h_slope_mean"] = mean_of(h_slopes);
  result.summary["bf_slope_mean"] = mean_of(bf_slopes);
  result.summary["h_factor_final_mean"] = mean_of(h_finals);
  result.summary["log_bf_final_mean"] = mean_of(bf_finals);
  result.summary["fisher_gap_limit"] = fisher_gap_normal(mu_star, s2_star);
  result.summary["kl_gap_limit"] = kl_gap_normal(mu_star, s2_star);
  return result;
}

PhasePlaneResult run_phase_plane(int n_mu, int n_s2, double mu_max, double s2_max) {
  if (n_mu < 2 || n_s2 < 2 || !(mu_max > 0.0) || !(s2_max > 0.0))
    throw InvalidInput("run_phase_plane: bad grid");
  PhasePlaneResult r;
  r.mu_grid.resize(n_mu);
  r.s2_grid.resize(n_s2);
  r.fisher_gap.resize(n_mu, n_s2);
  r.kl_gap.resize(n_mu, n_s2);
  for (int i = 0; i < n_mu; ++i)
    r.mu_grid[i] = mu_max * (i + 1) / static_cast<double>(n_mu);
  for (int j = 0; j < n_s2; ++j)
    r.s2_grid[j] = s2_max * (j + 1) / static_cast<double>(n_s2);
  for (int i = 0; i < n_mu; ++i)
    for (int j = 0; j < n_s2; ++j) {
      r.fisher_gap(i, j) = fisher_gap_normal(r.mu_grid[i], r.s2_grid[j]);
      r.kl_gap(i, j) = kl_gap_normal(r.mu_grid[i], r.s2_grid[j]);
    }
  return r;
}

SvStudyConfig SvStudyConfig::at_scale(StudyScale scale) {
  SvStudyConfig c;
  if (scale == StudyScale::kPaper) {
    c.T = 1000;
    c.n_reps = 15;
    c.n_theta = 1024;
    c.n_x = 128;
  }
  return c;
}

StudyResult run_sv_study(const SvStudyConfig& config) {
  if (config.T < 2 || config.n_reps < 1) throw InvalidInput("run_sv_study: bad sizes");
  const SsmSpec m1 = levy_sv_m1_spec();
  const SsmSpec m2 = levy_sv_m2_spec();

  MatrixXd data;
  {
    Rng rng = derive_rng(config.seed, {kTagSv, stream::kSimulate});
    data = simulate_dataset(m1, m1.default_theta, config.T, rng);
  }

  StudyResult result;
  result.study = "sv";
  result.models.resize(2);
  result.models[0].model = m1.name;
  result.models[1].model = m2.name;

  std::vector<double> h_finals, bf_finals;
  for (int rep = 0; rep < config.n_reps; ++rep) {
    const auto r = static_cast<std::uint64_t>(rep);
    Smc2Config c;
    c.n_theta = config.n_theta;
    c.n_x_init = config.n_x;
    c.hscore_mode = HscoreMode::kKde;
    c.kde.n_draws = config.kde_n;
    c.kde.bandwidth = config.kde_h;
    c.seed = derive_seed(config.seed, {kTagSv, r, 1});
    PrequentialTrace t1 = run_smc2(m1, data, c);
    c.seed = derive_seed(config.seed, {kTagSv, r, 2});
    PrequentialTrace t2 = run_smc2(m2, data, c);
    h_finals.push_back(t2.final_h() - t1.final_h());
    bf_finals.push_back(t1.final_logev() - t2.final_logev());
    result.models[0].traces.push_back(std::move(t1));
    result.models[1].traces.push_back(std::move(t2));

    const std::string sfx = "_rep" + std::to_string(rep);
    result.summary["h_factor_final" + sfx] = h_finals.back();
    result.summary["log_bf_final" + sfx] = bf_finals.back();
  }
  result.summary["h_factor_final_mean"] = mean_of(h_finals);
  result.summary["log_bf_final_mean"] = mean_of(bf_finals);
  return result;
}

KangarooStudyConfig KangarooStudyConfig::at_scale(StudyScale scale) {
  KangarooStudyConfig c;
  if (scale == StudyScale::kPaper) {
    c.n_reps = 5;
    c.n_theta = 16384;
    c.n_x = 32;
    c.delta_t = 0.001;
  }
  return c;
}

StudyResult run_kangaroo_study(const KangarooStudyConfig& config) {
  const int T = static_cast<int>(config.counts.rows());
  if (T < 2 || config.counts.cols() != 2)
    throw InvalidInput("run_kangaroo_study: counts must be T x 2");
  if (static_cast<int>(config.times.size()) != T)
    throw InvalidInput("run_kangaroo_study: times length mismatch");
  if (config.n_reps < 1) throw InvalidInput("run_kangaroo_study: bad replication count");

  std::vector<SsmSpec> specs;
  specs.push_back(kangaroo_spec(KangarooVariant::kM1, config.delta_t, config.times));
  specs.push_back(kangaroo_spec(KangarooVariant::kM2, config.delta_t, config.times));
  specs.push_back(kangaroo_spec(KangarooVariant::kM3, config.delta_t, config.times));
  std::vector<std::string> labels = {"kangaroo_m1", "kangaroo_m2", "kangaroo_m3"};
  if (config.include_wide_prior) {
    specs.push_back(kangaroo_spec(KangarooVariant::kM2, config.delta_t, config.times,
                                  config.wide_r_halfwidth));
    labels.push_back("kangaroo_m2_wide");
  }

  StudyResult result;
  result.study = "kangaroo";
  result.models.resize(specs.size());
  for (size_t m = 0; m < specs.size(); ++m) result.models[m].model = labels[m];

  for (size_t m = 0; m < specs.size(); ++m) {
    std::vector<double> h_finals, ev_finals;
    for (int rep = 0; rep < config.n_reps; ++rep) {
      Smc2Config c;
      c.n_theta = config.n_theta;
      c.n_x_init = config.n_x;
      c.seed = derive_seed(config.seed,
                           {kTagKangaroo, static_cast<std::uint64_t>(rep),
                            static_cast<std::uint64_t>(m)});
      PrequentialTrace tr = run_smc2(specs[m], config.counts, c);
      h_finals.push_back(tr.final_h());
      ev_finals.push_back(tr.final_logev());
      result.models[m].traces.push_back(std::move(tr));
    }
    result.summary["h_final_mean_" + labels[m]] = mean_of(h_finals);
    result.summary["logev_final_mean_" + labels[m]] = mean_of(ev_finals);
    double vh = 0.0;
    for (double h : h_finals) {
      const double d = h - mean_of(h_finals);
      vh += d * d;
    }
    if (h_finals.size() > 1)
      result.summary["h_final_var_" + labels[m]] =
          vh / static_cast<double>(h_finals.size() - 1);
  }
  if (config.include_wide_prior) {
    result.summary["wide_prior_logev_shift"] =
        result.summary["logev_final_mean_kangaroo_m2_wide"] -
        result.summary["logev_final_mean_kangaroo_m2"];
    result.summary["wide_prior_h_shift"] =
        result.summary["h_final_mean_kangaroo_m2_wide"] -
        result.summary["h_final_mean_kangaroo_m2"];
  }
  return result;
}

}  // namespace hscore

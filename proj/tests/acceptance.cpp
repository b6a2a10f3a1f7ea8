// Acceptance gate: desk-scale reproduction criteria, one PASS/FAIL line each.
// Exit 0 iff every criterion holds.
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <cstring>
#include <string>
#include <vector>

#include "hscore/distributions.hpp"
#include "hscore/experiments.hpp"
#include "hscore/io.hpp"
#include "hscore/models.hpp"
#include "hscore/oracle.hpp"
#include "hscore/rng.hpp"
#include "hscore/scoring.hpp"
#include "hscore/smc.hpp"
#include "hscore/smc2.hpp"

using namespace hscore;
using Clock = std::chrono::steady_clock;

namespace {

struct Gate {
  int failed = 0;
  Clock::time_point t0 = Clock::now();

  void report(const std::string& id, bool ok, const std::string& detail) {
    const double elapsed = std::chrono::duration<double>(Clock::now() - t0).count();
    std::printf("%-4s %s: %s  [t=%.0fs]\n", id.c_str(), ok ? "PASS" : "FAIL",
                detail.c_str(), elapsed);
    std::fflush(stdout);
    if (!ok) ++failed;
  }
};

double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

double sd_of(const std::vector<double>& v) {
  const double m = mean_of(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(v.size() - 1));
}

double mean_abs(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += std::abs(x);
  return s / static_cast<double>(v.size());
}

std::string fmt(const char* f, ...) {
  char buf[512];
  va_list ap;
  va_start(ap, f);
  std::vsnprintf(buf, sizeof buf, f, ap);
  va_end(ap);
  return buf;
}

// ---- C1-C4: mean-versus-variance cases, slope of the score differences ----

void normal_cases(Gate& g) {
  NormalStudyConfig cfg;  // T=1000, n_reps=5, n_theta=1024
  cfg.seed = 1;

  struct CaseSpec {
    int id;
    const char* gate;
  };
  for (const CaseSpec cs : {CaseSpec{1, "C1"}, CaseSpec{2, "C2"}, CaseSpec{3, "C3"},
                            CaseSpec{4, "C4"}}) {
    const StudyResult r = run_normal_cases(cs.id, cfg);
    const double hs = r.summary.at("h_slope_mean");
    const double bs = r.summary.at("bf_slope_mean");
    const double h_lim = r.summary.at("fisher_gap_limit");
    const double b_lim = r.summary.at("kl_gap_limit");
    switch (cs.id) {
      case 1:
        g.report(cs.gate, std::abs(hs - 0.5) <= 0.1,
                 fmt("case 1 H-slope %.3f vs %.3f (tol 0.1)", hs, h_lim));
        break;
      case 2:
        g.report(cs.gate, std::abs(hs - (-3.2)) <= 0.3,
                 fmt("case 2 H-slope %.3f vs %.3f (tol 0.3)", hs, h_lim));
        break;
      case 3: {
        bool signs_ok = true;
        for (int rep = 0; rep < cfg.n_reps; ++rep) {
          const double hr = r.summary.at("h_slope_rep" + std::to_string(rep));
          const double br = r.summary.at("bf_slope_rep" + std::to_string(rep));
          if (!(hr < 0.0 && br > 0.0)) signs_ok = false;
        }
        const bool ok = std::abs(hs - h_lim) <= 0.25 && std::abs(bs - b_lim) <= 0.15 &&
                        signs_ok;
        g.report(cs.gate, ok,
                 fmt("case 3 H-slope %.3f vs %.3f, BF-slope %.3f vs %.3f, "
                     "signs disagree in all %d reps: %s",
                     hs, h_lim, bs, b_lim, cfg.n_reps, signs_ok ? "yes" : "no"));
        break;
      }
      case 4:
        g.report(cs.gate, std::abs(hs) <= 0.1 && std::abs(bs) <= 0.1,
                 fmt("case 4 H-slope %.3f, BF-slope %.3f (tol 0.1 about 0)", hs, bs));
        break;
    }
  }
}

// ---- C5: prior-scale (Bartlett) sensitivity of evidence but not H ----

void bartlett(Gate& g) {
  const int T = 200;
  MatrixXd y(T, 1);
  {
    Rng rng = derive_rng(31, {stream::kSimulate});
    for (int t = 0; t < T; ++t) y(t, 0) = draw_normal(rng, 1.0, 1.0);
  }
  const IidModelSpec tight = normal_m1_spec(10.0);
  const IidModelSpec vague = normal_m1_spec(1e6);

  const int n_seeds = 5;
  std::vector<std::vector<double>> h_diff(T);  // per t, across seeds
  std::vector<double> ev_diff;
  for (int s = 0; s < n_seeds; ++s) {
    SmcConfig c;
    c.n_theta = 1024;
    c.seed = derive_seed(77, {static_cast<std::uint64_t>(s), 1});
    const PrequentialTrace a = run_smc(tight, y, c);
    c.seed = derive_seed(77, {static_cast<std::uint64_t>(s), 2});
    const PrequentialTrace b = run_smc(vague, y, c);
    for (int t = 0; t < T; ++t) h_diff[t].push_back(a.rows[t].h_cum - b.rows[t].h_cum);
    ev_diff.push_back(a.final_logev() - b.final_logev());
  }

  double worst_ratio = 0.0;
  int worst_t = -1;
  for (int t = 4; t < T; ++t) {
    const double m = std::abs(mean_of(h_diff[t]));
    const double se = sd_of(h_diff[t]) / std::sqrt(static_cast<double>(n_seeds));
    const double ratio = se > 0.0 ? m / (3.0 * se) : (m == 0.0 ? 0.0 : kPosInf);
    if (ratio > worst_ratio) {
      worst_ratio = ratio;
      worst_t = t + 1;
    }
  }
  const double target = 0.5 * std::log(1e5);
  const double ev = mean_of(ev_diff);
  const bool ok = worst_ratio <= 1.0 && std::abs(ev - target) <= 0.1 * target;
  g.report("C5", ok,
           fmt("prior widening: H-trace max |mean|/3SE ratio %.2f (worst t=%d), "
               "evidence shift %.3f vs %.3f (tol 10%%)",
               worst_ratio, worst_t, ev, target));
}

// mean-error significance against an exact value: |mean| <= 3 SE
struct BiasCheck {
  double mean, se;
  bool ok() const { return std::abs(mean) <= 3.0 * se; }
};

BiasCheck bias_check(const std::vector<double>& errs) {
  return {mean_of(errs), sd_of(errs) / std::sqrt(static_cast<double>(errs.size()))};
}

// ---- C6: conjugate oracle agreement for the tractable pair ----

void conjugate_oracle(Gate& g) {
  const int T = 50;
  VectorXd yv(T);
  {
    Rng rng = derive_rng(9, {stream::kSimulate});
    for (int t = 0; t < T; ++t) yv[t] = draw_normal(rng, 0.5, std::sqrt(1.3));
  }
  const MatrixXd y = yv;
  const auto [ex1, ex2] = exact_prequential_scores_m1_m2(
      std::span<const double>(yv.data(), static_cast<std::size_t>(T)), 10.0, 0.1, 1.0);

  const IidModelSpec m1 = normal_m1_spec(10.0);
  const IidModelSpec m2 = normal_m2_spec(0.1, 1.0);
  std::vector<double> e1_ev, e1_h, e2_ev, e2_h;
  for (int s = 0; s < 20; ++s) {
    SmcConfig c;
    c.n_theta = 4096;
    c.seed = derive_seed(101, {static_cast<std::uint64_t>(s), 1});
    const PrequentialTrace t1 = run_smc(m1, y, c);
    c.seed = derive_seed(101, {static_cast<std::uint64_t>(s), 2});
    const PrequentialTrace t2 = run_smc(m2, y, c);
    e1_ev.push_back(t1.final_logev() - ex1.final_logev());
    e1_h.push_back(t1.final_h() - ex1.final_h());
    e2_ev.push_back(t2.final_logev() - ex2.final_logev());
    e2_h.push_back(t2.final_h() - ex2.final_h());
  }
  const BiasCheck b1e = bias_check(e1_ev), b1h = bias_check(e1_h);
  const BiasCheck b2e = bias_check(e2_ev), b2h = bias_check(e2_h);
  g.report("C6", b1e.ok() && b1h.ok() && b2e.ok() && b2h.ok(),
           fmt("conjugate oracle, 20 seeds, mean err vs 3SE: logev M1 %+.4f/%.4f "
               "H M1 %+.3f/%.3f logev M2 %+.4f/%.4f H M2 %+.3f/%.3f",
               b1e.mean, 3 * b1e.se, b1h.mean, 3 * b1h.se, b2e.mean, 3 * b2e.se,
               b2h.mean, 3 * b2h.se));
}

// ---- C7: Kalman-marginal oracle agreement for nested filtering ----

void kalman_oracle(Gate& g, MatrixXd& y_out) {
  const SsmSpec spec = lgssm_spec();
  Rng rng = derive_rng(55, {stream::kSimulate});
  const MatrixXd y = simulate_dataset(spec, spec.default_theta, 100, rng);
  y_out = y;
  const PrequentialTrace exact = lgssm_marginal_exact_trace(
      1.0, 1.0, std::span<const double>(y.data(), static_cast<std::size_t>(y.rows())));

  std::vector<double> e_ev, e_h;
  for (int s = 0; s < 20; ++s) {
    Smc2Config c;
    c.n_theta = 512;
    c.n_x_init = 128;
    c.seed = derive_seed(201, {static_cast<std::uint64_t>(s)});
    const PrequentialTrace tr = run_smc2(spec, y, c);
    e_ev.push_back(tr.final_logev() - exact.final_logev());
    e_h.push_back(tr.final_h() - exact.final_h());
  }
  const BiasCheck be = bias_check(e_ev), bh = bias_check(e_h);
  g.report("C7", be.ok() && bh.ok(),
           fmt("nested filtering vs quadrature oracle, 20 seeds, mean err vs 3SE: "
               "logev %+.4f/%.4f H %+.3f/%.3f",
               be.mean, 3 * be.se, bh.mean, 3 * bh.se));
}

// ---- C8: derivative-mode and KDE-mode scores agree ----

void cross_mode(Gate& g, const MatrixXd& y_full) {
  const SsmSpec spec = lgssm_spec();
  const MatrixXd y = y_full.topRows(50);
  std::vector<double> diff;
  for (int s = 0; s < 5; ++s) {
    Smc2Config c;
    c.n_theta = 256;
    c.n_x_init = 128;
    c.seed = derive_seed(301, {static_cast<std::uint64_t>(s)});
    const PrequentialTrace td = run_smc2(spec, y, c);
    c.hscore_mode = HscoreMode::kKde;
    c.kde.n_draws = 4096;
    c.kde.bandwidth = 0.05;
    const PrequentialTrace tk = run_smc2(spec, y, c);
    diff.push_back(tk.final_h() - td.final_h());
  }
  const double m = mean_of(diff);
  const double se = sd_of(diff) / std::sqrt(5.0);
  const bool ok = std::abs(m) <= 3.0 * std::max(se, 1e-6);
  g.report("C8", ok,
           fmt("KDE vs derivative H, 5 paired seeds: mean diff %.3f, 3*SE %.3f", m,
               3.0 * se));
}

// ---- C9: volatility-factor comparison favors the generating model ----

void sv_study(Gate& g) {
  SvStudyConfig cfg;  // desk: T=200, 3 reps, 256x64, KDE scoring
  cfg.seed = 1;
  const StudyResult r = run_sv_study(cfg);
  const double hf = r.summary.at("h_factor_final_mean");
  const double bf = r.summary.at("log_bf_final_mean");
  g.report("C9", hf > 0.0,
           fmt("volatility study: mean H-factor %.2f (want > 0), mean log-BF %.2f", hf,
               bf));
}

// ---- C10: count-data comparison and the prior-widening sweep ----

void kangaroo_study(Gate& g, const std::string& data_dir) {
  const Dataset d = read_dataset_csv(data_dir + "/kangaroo.csv");
  KangarooStudyConfig cfg;  // desk: n_theta=2048, n_x=32, delta_t=0.01
  cfg.counts = d.y;
  cfg.times.assign(d.t.data(), d.t.data() + d.t.size());
  cfg.seed = 1;
  const StudyResult r = run_kangaroo_study(cfg);

  const double h1 = r.summary.at("h_final_mean_kangaroo_m1");
  const double h2 = r.summary.at("h_final_mean_kangaroo_m2");
  const double h3 = r.summary.at("h_final_mean_kangaroo_m3");
  const bool rank_ok = h3 < h1 && h3 < h2;

  const double ev_shift = r.summary.at("wide_prior_logev_shift");
  const double target = -std::log(10.0);
  const bool ev_ok = std::abs(ev_shift - target) <= 0.25 * std::abs(target);

  const double h_shift = r.summary.at("wide_prior_h_shift");
  const double pooled_var = 0.5 * (r.summary.at("h_final_var_kangaroo_m2") +
                                   r.summary.at("h_final_var_kangaroo_m2_wide"));
  const double se = std::sqrt(2.0 * pooled_var / static_cast<double>(cfg.n_reps));
  const bool h_ok = std::abs(h_shift) <= 3.0 * std::max(se, 1e-9);

  g.report("C10", rank_ok && ev_ok && h_ok,
           fmt("counts study: H means M1 %.4f M2 %.4f M3 %.4f (M3 lowest: %s); "
               "wide-prior evidence shift %.3f vs %.3f (tol 25%%): %s; "
               "H shift %.4f vs 3*SE %.4f: %s",
               h1, h2, h3, rank_ok ? "yes" : "no", ev_shift, target, ev_ok ? "ok" : "BAD",
               h_shift, 3.0 * se, h_ok ? "ok" : "BAD"));
}

// ---- C11: structural invariants of the scoring and resampling machinery ----

void properties(Gate& g) {
  Rng rng = derive_rng(999, {1});
  bool ok = true;
  std::string why = "all hold";
  const auto fail = [&](const std::string& w) {
    ok = false;
    why = w;
  };

  // increment identities: posterior form == variance form == per-dim sum
  for (int rep = 0; rep < 20 && ok; ++rep) {
    const int n = 64;
    MatrixXd d1(n, 1), d2(n, 1);
    VectorXd lw(n), h_pts(n);
    for (int i = 0; i < n; ++i) {
      d1(i, 0) = draw_normal(rng, 0.0, 1.0);
      d2(i, 0) = draw_normal(rng, -1.0, 0.5);
      lw[i] = draw_normal(rng, 0.0, 1.0);
      h_pts[i] = 2.0 * d2(i, 0) + d1(i, 0) * d1(i, 0);
    }
    const VectorXd w = softmax(lw);
    const ScoreIncrement inc = hscore_increment_from_posterior(d1, d2, w);
    const double var_form = hscore_increment_variance_form(h_pts, d1.col(0), w);
    const double per_dim = 2.0 * inc.per_dim_d2.sum() + inc.per_dim_d1.squaredNorm();
    if (std::abs(inc.value - var_form) > 1e-10) fail("posterior vs variance form broke");
    if (std::abs(inc.value - per_dim) > 1e-10) fail("per-dim decomposition broke");
  }

  // homogeneity: scaling the pmf leaves the discrete score unchanged bitwise
  // for a power-of-two scale factor
  if (ok) {
    std::vector<double> logp(31);
    for (auto& v : logp) v = draw_normal(rng, 0.0, 1.0);
    const DiscreteSupport sup = DiscreteSupport::box(0, 30, 1);
    const auto pmf = [&](std::span<const std::int64_t> y) { return logp[y[0]]; };
    const auto pmf_scaled = [&](std::span<const std::int64_t> y) {
      return logp[y[0]] + 0.015625;
    };
    for (std::int64_t y = 0; y <= 30 && ok; ++y) {
      const std::int64_t pt[1] = {y};
      if (discrete_hscore(pt, pmf, sup) != discrete_hscore(pt, pmf_scaled, sup))
        fail(fmt("homogeneity broke at y=%lld", static_cast<long long>(y)));
    }
  }

  // propriety by enumeration on the 7-point support
  if (ok) {
    const DiscreteSupport sup = DiscreteSupport::box(0, 6, 1);
    std::vector<double> pstar(7);
    double z = 0.0;
    for (int k = 0; k <= 6; ++k) {
      pstar[k] = std::exp(nb_logpmf_mean_var(k, 2.0, 3.5));
      z += pstar[k];
    }
    for (auto& v : pstar) v /= z;
    const auto expected_score = [&](const std::vector<double>& q) {
      const auto pmf = [&](std::span<const std::int64_t> y) {
        return std::log(q[static_cast<size_t>(y[0])]);
      };
      double s = 0.0;
      for (std::int64_t k = 0; k <= 6; ++k) {
        const std::int64_t pt[1] = {k};
        s += pstar[static_cast<size_t>(k)] * discrete_hscore(pt, pmf, sup);
      }
      return s;
    };
    const double self = expected_score(pstar);
    for (int alt = 0; alt < 50 && ok; ++alt) {
      std::vector<double> q(7);
      double zq = 0.0;
      for (int k = 0; k <= 6; ++k) {
        q[k] = pstar[k] * std::exp(0.3 * draw_normal(rng, 0.0, 1.0));
        zq += q[k];
      }
      for (auto& v : q) v /= zq;
      if (expected_score(q) <= self)
        fail("propriety broke: alternative scored below the generator");
    }
  }

  // ESS shift-invariance (exact) and equal-weight value
  if (ok) {
    VectorXd lw(16);
    for (int i = 0; i < 16; ++i) lw[i] = draw_normal(rng, 0.0, 2.0);
    if (ess(lw) != ess((lw.array() + 123.5).matrix())) fail("ESS shift-invariance broke");
    if (std::abs(ess(VectorXd::Zero(16)) - 16.0) > 1e-12) fail("equal-weight ESS broke");
  }

  // SSP resampling: count bounds (exact) and unbiasedness (MC)
  if (ok) {
    VectorXd w(6);
    w << 0.30, 0.25, 0.20, 0.15, 0.10, 0.0;
    VectorXd avg = VectorXd::Zero(6);
    const int reps = 20000;
    for (int r = 0; r < reps && ok; ++r) {
      const std::vector<int> counts = ssp_resample(w, rng);
      int total = 0;
      for (int i = 0; i < 6; ++i) {
        const double target = w[i] * 6.0;
        if (counts[i] < std::floor(target) || counts[i] > std::ceil(target))
          fail("SSP count bounds broke");
        total += counts[i];
        avg[i] += counts[i];
      }
      if (total != 6) fail("SSP total count broke");
    }
    avg /= static_cast<double>(reps);
    for (int i = 0; i < 6 && ok; ++i)
      if (std::abs(avg[i] - w[i] * 6.0) > 0.03) fail("SSP unbiasedness broke");
  }

  // derivative finite-difference consistency on a model density
  if (ok) {
    const IidModelSpec m2 = normal_m2_spec(0.1, 1.0);
    VectorXd th(1);
    th << 1.7;
    for (int i = 0; i < 20 && ok; ++i) {
      VectorXd y(1);
      y << draw_normal(rng, 0.0, 1.5);
      const DensityDerivatives d = m2.likelihood_y_derivs(y, th);
      const double h = 1e-5;
      VectorXd yp = y, ym = y;
      yp[0] += h;
      ym[0] -= h;
      const double lp = m2.likelihood_log_density(yp, th);
      const double lm = m2.likelihood_log_density(ym, th);
      const double l0 = m2.likelihood_log_density(y, th);
      const double fd1 = (lp - lm) / (2.0 * h);
      const double fd2 = (lp - 2.0 * l0 + lm) / (h * h);
      if (std::abs(fd1 - d.grad_log[0]) > 1e-5 * std::max(1.0, std::abs(fd1)))
        fail("gradient FD check broke");
      if (std::abs(fd2 - d.lap_log) > 1e-3 * std::max(1.0, std::abs(fd2)))
        fail("laplacian FD check broke");
    }
  }

  // telescoping of cumulative traces
  if (ok) {
    MatrixXd y(10, 1);
    for (int t = 0; t < 10; ++t) y(t, 0) = draw_normal(rng, 0.0, 1.0);
    SmcConfig c;
    c.n_theta = 256;
    c.seed = 5;
    const PrequentialTrace tr = run_smc(normal_m1_spec(10.0), y, c);
    double ev = 0.0, h = 0.0;
    for (const TraceRow& row : tr.rows) {
      ev += row.logev_inc;
      h += row.h_inc.value;
      if (std::abs(ev - row.logev_cum) > 1e-9 || std::abs(h - row.h_cum) > 1e-9)
        fail("telescoping broke");
    }
  }

  g.report("C11", ok, why);
}

}  // namespace

int main(int argc, char** argv) {
  std::string data_dir = "data";
  for (int i = 1; i < argc; ++i) {
    if (std::strcmp(argv[i], "--data-dir") == 0 && i + 1 < argc) data_dir = argv[++i];
  }

  Gate g;
  normal_cases(g);
  bartlett(g);
  conjugate_oracle(g);
  MatrixXd lgssm_y;
  kalman_oracle(g, lgssm_y);
  cross_mode(g, lgssm_y);
  sv_study(g);
  kangaroo_study(g, data_dir);
  properties(g);

  std::printf("%s (%d criteria failed)\n", g.failed == 0 ? "ALL PASS" : "GATE FAILED",
              g.failed);
  return g.failed == 0 ? 0 : 1;
}

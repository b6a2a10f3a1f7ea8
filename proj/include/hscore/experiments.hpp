#ifndef HSCORE_EXPERIMENTS_HPP
#define HSCORE_EXPERIMENTS_HPP

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "hscore/common.hpp"
#include "hscore/trace.hpp"

namespace hscore {

// All replications of one model inside a study.
struct ReplicationSet {
  std::string model;
  std::vector<PrequentialTrace> traces;
};

struct StudyResult {
  std::string study;
  std::vector<ReplicationSet> models;
  std::map<std::string, double> summary;
};

// Cumulative H-factor of the first model against the second: H_t(M2) - H_t(M1)
// per step (positive favors M1).  Both traces must cover the same prefix.
VectorXd h_factor_series(const PrequentialTrace& m1, const PrequentialTrace& m2);

// Cumulative log-Bayes factor of the first model against the second:
// log-evidence(M1) - log-evidence(M2) per step.
VectorXd log_bf_series(const PrequentialTrace& m1, const PrequentialTrace& m2);

// Least-squares slope of series[t-1] against t over the inclusive window
// [t_begin, t_end] (1-based).
double slope_estimate(const VectorXd& series, int t_begin, int t_end);

// i.i.d. Normal mean-versus-variance comparison.  One dataset per case,
// n_reps sampler replications with random data permutations, both models
// scored on the same permutation within a replication.
struct NormalStudyConfig {
  int T = 1000;
  int n_reps = 5;
  int n_theta = 1024;
  double sigma0_sq = 10.0;   // M1 prior variance
  double nu0 = 0.1;          // M2 prior dof
  double s0_sq = 1.0;        // M2 prior scale
  std::uint64_t seed = 0;
};
StudyResult run_normal_cases(int case_id, const NormalStudyConfig& config);

// The (mu*, sigma*^2) generating parameters of the four cases.
std::pair<double, double> normal_case_params(int case_id);

// Analytic divergence-gap phase plane over a (mu*, sigma*^2) grid.
struct PhasePlaneResult {
  VectorXd mu_grid;
  VectorXd s2_grid;
  MatrixXd fisher_gap;  // n_mu x n_s2
  MatrixXd kl_gap;
};
PhasePlaneResult run_phase_plane(int n_mu = 50, int n_s2 = 50, double mu_max = 4.0,
                                 double s2_max = 5.0);

enum class StudyScale { kDesk, kPaper };

// Single- versus multi-factor volatility comparison on data simulated from
// the single-factor model; KDE-mode scoring.
struct SvStudyConfig {
  int T = 200;
  int n_reps = 3;
  int n_theta = 256;
  int n_x = 64;
  int kde_n = 1024;
  double kde_h = 0.1;
  std::uint64_t seed = 0;

  static SvStudyConfig at_scale(StudyScale scale);
};
StudyResult run_sv_study(const SvStudyConfig& config);

// Population-dynamics comparison on observed count data with discrete
// H-scores, plus the widened-growth-rate-prior rerun of the middle model.
struct KangarooStudyConfig {
  MatrixXd counts;            // T x 2
  std::vector<double> times;  // observation epochs, length T
  int n_reps = 3;
  int n_theta = 2048;
  int n_x = 32;
  double delta_t = 0.01;
  double wide_r_halfwidth = 100.0;
  bool include_wide_prior = true;
  std::uint64_t seed = 0;

  static KangarooStudyConfig at_scale(StudyScale scale);
};
StudyResult run_kangaroo_study(const KangarooStudyConfig& config);

}  // namespace hscore

#endif

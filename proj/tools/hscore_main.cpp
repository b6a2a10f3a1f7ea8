#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "hscore/config.hpp"
#include "hscore/experiments.hpp"
#include "hscore/io.hpp"
#include "hscore/models.hpp"
#include "hscore/rng.hpp"
#include "hscore/smc.hpp"
#include "hscore/smc2.hpp"
#include "hscore/trace.hpp"

namespace fs = std::filesystem;
using namespace hscore;

namespace {

constexpr const char* kVersion = "hscore 0.1.0";

struct AnyModel {
  std::optional<IidModelSpec> iid;
  std::optional<SsmSpec> ssm;
};

AnyModel make_model(const std::string& name, const ExperimentConfig& cfg,
                    const std::vector<double>& times) {
  AnyModel m;
  if (name == "normal_m1")
    m.iid = normal_m1_spec(cfg.sigma0_sq);
  else if (name == "normal_m2")
    m.iid = normal_m2_spec(cfg.nu0, cfg.s0_sq);
  else if (name == "lgssm")
    m.ssm = lgssm_spec();
  else if (name == "sv_m1")
    m.ssm = levy_sv_m1_spec();
  else if (name == "sv_m2")
    m.ssm = levy_sv_m2_spec();
  else if (name == "kangaroo_m1")
    m.ssm = kangaroo_spec(KangarooVariant::kM1, cfg.delta_t, times, cfg.r_halfwidth);
  else if (name == "kangaroo_m2")
    m.ssm = kangaroo_spec(KangarooVariant::kM2, cfg.delta_t, times, cfg.r_halfwidth);
  else if (name == "kangaroo_m3")
    m.ssm = kangaroo_spec(KangarooVariant::kM3, cfg.delta_t, times, cfg.r_halfwidth);
  else
    throw InvalidInput("unknown model '" + name + "'");
  return m;
}

Metadata base_metadata(const ExperimentConfig& cfg) {
  return {{"version", kVersion},
          {"config_hash", config_hash(cfg)},
          {"seed", std::to_string(cfg.seed)}};
}

void write_outputs(const ExperimentConfig& cfg, const StudyResult& result,
                   const std::string& stem) {
  fs::create_directories(cfg.out_dir);
  const Metadata meta = base_metadata(cfg);
  write_study_csv((fs::path(cfg.out_dir) / (stem + ".csv")).string(), result, meta);
  write_summary_json((fs::path(cfg.out_dir) / (stem + ".json")).string(), result, meta);
}

int run_study(const ExperimentConfig& cfg) {
  if (cfg.study == "normal") {
    NormalStudyConfig n;
    if (cfg.T > 0) n.T = cfg.T;
    if (cfg.replications > 0) n.n_reps = cfg.replications;
    if (cfg.n_theta > 0) n.n_theta = cfg.n_theta;
    n.sigma0_sq = cfg.sigma0_sq;
    n.nu0 = cfg.nu0;
    n.s0_sq = cfg.s0_sq;
    n.seed = cfg.seed;
    const StudyResult r = run_normal_cases(cfg.case_id, n);
    write_outputs(cfg, r, "normal_case" + std::to_string(cfg.case_id));
    return 0;
  }
  if (cfg.study == "phase_plane") {
    const PhasePlaneResult p = run_phase_plane();
    fs::create_directories(cfg.out_dir);
    write_phase_plane_csv((fs::path(cfg.out_dir) / "phase_plane.csv").string(), p,
                          base_metadata(cfg));
    StudyResult summary;
    summary.study = "phase_plane";
    for (int k = 1; k <= 4; ++k) {
      const auto [mu, s2] = normal_case_params(k);
      summary.summary["fisher_gap_case" + std::to_string(k)] = fisher_gap_normal(mu, s2);
      summary.summary["kl_gap_case" + std::to_string(k)] = kl_gap_normal(mu, s2);
    }
    write_summary_json((fs::path(cfg.out_dir) / "phase_plane.json").string(), summary,
                       base_metadata(cfg));
    return 0;
  }
  if (cfg.study == "sv") {
    SvStudyConfig s = SvStudyConfig::at_scale(cfg.scale == "paper" ? StudyScale::kPaper
                                                                   : StudyScale::kDesk);
    if (cfg.T > 0) s.T = cfg.T;
    if (cfg.replications > 0) s.n_reps = cfg.replications;
    if (cfg.n_theta > 0) s.n_theta = cfg.n_theta;
    if (cfg.n_x > 0) s.n_x = cfg.n_x;
    s.kde_n = cfg.kde_n;
    s.kde_h = cfg.kde_h;
    s.seed = cfg.seed;
    const StudyResult r = run_sv_study(s);
    write_outputs(cfg, r, "sv");
    return 0;
  }
  // kangaroo
  const Dataset data = read_dataset_csv(cfg.data_path);
  if (data.dim_y() != 2) throw InvalidInput("kangaroo study needs two count columns");
  KangarooStudyConfig k = KangarooStudyConfig::at_scale(
      cfg.scale == "paper" ? StudyScale::kPaper : StudyScale::kDesk);
  k.counts = data.y;
  k.times.assign(data.t.data(), data.t.data() + data.t.size());
  if (cfg.replications > 0) k.n_reps = cfg.replications;
  if (cfg.n_theta > 0) k.n_theta = cfg.n_theta;
  if (cfg.n_x > 0) k.n_x = cfg.n_x;
  k.delta_t = cfg.delta_t;
  k.seed = cfg.seed;
  const StudyResult r = run_kangaroo_study(k);
  write_outputs(cfg, r, "kangaroo");
  return 0;
}

int run_single(const ExperimentConfig& cfg) {
  const Dataset data = read_dataset_csv(cfg.data_path);
  MatrixXd y = data.y;
  if (cfg.T > 0 && cfg.T < y.rows()) y = y.topRows(cfg.T).eval();
  std::vector<double> times(data.t.data(), data.t.data() + data.t.size());
  times.resize(static_cast<size_t>(y.rows()));
  const AnyModel model = make_model(cfg.model, cfg, times);

  const int reps = cfg.replications > 0 ? cfg.replications : 1;
  StudyResult result;
  result.study = "single";
  result.models.resize(1);
  result.models[0].model = cfg.model;

  for (int rep = 0; rep < reps; ++rep) {
    const std::uint64_t rep_seed = derive_seed(cfg.seed, {static_cast<std::uint64_t>(rep)});
    PrequentialTrace partial;
    try {
      PrequentialTrace trace;
      if (model.iid) {
        if (y.cols() != model.iid->dim_y)
          throw InvalidInput("dataset dimension does not match model " + cfg.model);
        SmcConfig c;
        if (cfg.n_theta > 0) c.n_theta = cfg.n_theta;
        c.ess_threshold_ratio = cfg.ess_ratio;
        if (cfg.mh_steps >= 0) c.mh_steps_per_temper = cfg.mh_steps;
        c.mixture_components = cfg.mixture_components;
        c.seed = rep_seed;
        std::vector<int> perm;
        const std::vector<int>* perm_ptr = nullptr;
        if (cfg.permutation == "random") {
          Rng prng = derive_rng(rep_seed, {stream::kPermutation});
          perm = random_permutation(static_cast<int>(y.rows()), prng);
          perm_ptr = &perm;
        }
        trace = run_smc(*model.iid, y, c, perm_ptr, &partial);
      } else {
        if (y.cols() != model.ssm->dim_y)
          throw InvalidInput("dataset dimension does not match model " + cfg.model);
        Smc2Config c;
        if (cfg.n_theta > 0) c.n_theta = cfg.n_theta;
        if (cfg.n_x > 0) c.n_x_init = cfg.n_x;
        c.ess_threshold_ratio = cfg.ess_ratio;
        if (cfg.mh_steps >= 0) c.mh_steps = cfg.mh_steps;
        c.mixture_components = cfg.mixture_components;
        c.hscore_mode =
            cfg.hscore_mode == "kde" ? HscoreMode::kKde : HscoreMode::kDerivative;
        c.kde.n_draws = cfg.kde_n;
        c.kde.bandwidth = cfg.kde_h;
        c.seed = rep_seed;
        trace = run_smc2(*model.ssm, y, c, &partial);
      }
      result.models[0].traces.push_back(std::move(trace));
      const std::string sfx = "_rep" + std::to_string(rep);
      result.summary["log_evidence_final" + sfx] =
          result.models[0].traces.back().final_logev();
      result.summary["h_final" + sfx] = result.models[0].traces.back().final_h();
    } catch (const DegeneracyError& e) {
      result.models[0].traces.push_back(std::move(partial));
      result.summary["degenerate_rep" + std::to_string(rep)] = 1.0;
      write_outputs(cfg, result, cfg.model);
      std::cerr << "degeneracy: " << e.what() << " (partial trace persisted)\n";
      return 3;
    }
  }
  write_outputs(cfg, result, cfg.model);
  return 0;
}

int cmd_run(const std::string& config_path, bool dry_run) {
  ExperimentConfig cfg;
  try {
    cfg = parse_config_file(config_path);
    validate_config(cfg);
    if (!cfg.data_path.empty() && !fs::exists(cfg.data_path))
      throw InvalidInput("data file not found: " + cfg.data_path);
  } catch (const InvalidInput& e) {
    std::cerr << "invalid config: " << e.what() << "\n";
    return 2;
  }
  if (dry_run) {
    std::cout << describe_config(cfg);
    return 0;
  }
  try {
    return cfg.kind == "study" ? run_study(cfg) : run_single(cfg);
  } catch (const InvalidInput& e) {
    std::cerr << "invalid config: " << e.what() << "\n";
    return 2;
  } catch (const DegeneracyError& e) {
    std::cerr << "degeneracy: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}

int cmd_simulate(const std::string& model_name, const std::string& theta_str, int T,
                 std::uint64_t seed, const std::string& out_path, double delta_t) {
  try {
    if (T < 0) throw InvalidInput("T must be >= 0");
    ExperimentConfig cfg;
    cfg.delta_t = delta_t;
    // unit-spaced epochs for simulation
    std::vector<double> times(static_cast<size_t>(std::max(T, 1)));
    for (size_t i = 0; i < times.size(); ++i) times[i] = static_cast<double>(i + 1);
    const AnyModel model = make_model(model_name, cfg, times);

    ParamVector theta = model.iid ? model.iid->default_theta : model.ssm->default_theta;
    if (!theta_str.empty()) {
      std::vector<double> vals;
      std::istringstream ss(theta_str);
      std::string tok;
      while (std::getline(ss, tok, ','))
        try {
          vals.push_back(std::stod(tok));
        } catch (const std::exception&) {
          throw InvalidInput("theta entries must be numeric, got '" + tok + "'");
        }
      const int want = model.iid ? model.iid->dim_theta : model.ssm->dim_theta;
      if (static_cast<int>(vals.size()) != want)
        throw InvalidInput("model " + model_name + " takes " + std::to_string(want) +
                           " parameters, got " + std::to_string(vals.size()));
      theta.values = Eigen::Map<VectorXd>(vals.data(), static_cast<int>(vals.size()));
    }

    Rng rng = derive_rng(seed, {stream::kSimulate});
    Dataset data;
    data.y = model.iid ? simulate_dataset(*model.iid, theta, T, rng)
                       : simulate_dataset(*model.ssm, theta, T, rng);
    data.t.resize(T);
    for (int t = 0; t < T; ++t) data.t[t] = t + 1;

    std::ostringstream th;
    th.precision(17);
    for (int i = 0; i < theta.values.size(); ++i) {
      if (i) th << ",";
      th << theta.values[i];
    }
    const Metadata meta = {{"version", kVersion},
                           {"model", model_name},
                           {"theta", th.str()},
                           {"seed", std::to_string(seed)}};
    if (const fs::path dir = fs::path(out_path).parent_path(); !dir.empty())
      fs::create_directories(dir);
    write_dataset_csv(out_path, data, meta);
    return 0;
  } catch (const InvalidInput& e) {
    std::cerr << "invalid request: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Prequential Hyvarinen-score and log-evidence estimation"};
  app.require_subcommand(1);

  std::string config_path;
  CLI::App* run = app.add_subcommand("run", "execute an experiment config");
  run->add_option("config", config_path, "config file")->required();

  std::string vconfig_path;
  CLI::App* validate = app.add_subcommand("validate", "check a config and print defaults");
  validate->add_option("config", vconfig_path, "config file")->required();

  std::string sim_model, sim_theta, sim_out;
  int sim_T = 100;
  std::uint64_t sim_seed = 0;
  double sim_delta_t = 0.01;
  CLI::App* simulate = app.add_subcommand("simulate", "draw a synthetic dataset");
  simulate->add_option("model", sim_model, "model id")->required();
  simulate->add_option("--theta", sim_theta, "comma-separated parameters (default: canonical)");
  simulate->add_option("--T", sim_T, "number of observations")->required();
  simulate->add_option("--seed", sim_seed, "root seed");
  simulate->add_option("--out", sim_out, "output CSV path")->required();
  simulate->add_option("--delta-t", sim_delta_t, "integration step (diffusion models)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  if (run->parsed()) return cmd_run(config_path, false);
  if (validate->parsed()) return cmd_run(vconfig_path, true);
  return cmd_simulate(sim_model, sim_theta, sim_T, sim_seed, sim_out, sim_delta_t);
}

#ifndef HSCORE_CONFIG_HPP
#define HSCORE_CONFIG_HPP

#include <cstdint>
#include <string>

namespace hscore {

// Flat key=value experiment description.  Two kinds: `study` dispatches one
// of the canned studies (normal | phase_plane | sv | kangaroo), `single`
// scores one model on one dataset.  Negative integers / NaN-like sentinels
// mean "use the study-scale default".
struct ExperimentConfig {
  std::string kind;  // study | single
  std::uint64_t seed = 0;
  std::string out_dir = ".";
  bool reproducible = true;

  std::string study;  // kind=study
  int case_id = 1;
  std::string scale = "desk";  // desk | paper
  std::string data_path;
  int replications = -1;

  std::string model;  // kind=single
  std::string permutation = "identity";  // identity | random
  int T = -1;
  int n_theta = -1;
  int n_x = -1;
  double ess_ratio = 0.5;
  int mh_steps = -1;
  int mixture_components = 5;
  std::string hscore_mode = "derivative";  // derivative | kde
  int kde_n = 1024;
  double kde_h = 0.1;
  double delta_t = 0.01;
  double r_halfwidth = 10.0;
  double sigma0_sq = 10.0;
  double nu0 = 0.1;
  double s0_sq = 1.0;
};

// Parses the key=value document; `#` starts a comment, blank lines are
// skipped, unknown or duplicate keys are errors (InvalidInput).
ExperimentConfig parse_config_text(const std::string& text);
ExperimentConfig parse_config_file(const std::string& path);

// Cross-field validation; throws InvalidInput with a diagnostic.
void validate_config(const ExperimentConfig& config);

// Stable hex digest of the resolved configuration, for output metadata.
std::string config_hash(const ExperimentConfig& config);

// Human-readable dump of the resolved configuration (validate command).
std::string describe_config(const ExperimentConfig& config);

}  // namespace hscore

#endif

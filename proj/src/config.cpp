#include "hscore/config.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include "hscore/common.hpp"
#include "hscore/rng.hpp"

namespace hscore {

namespace {

std::string trim(const std::string& s) {
  size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

int parse_int(const std::string& key, const std::string& v) {
  try {
    size_t pos = 0;
    const int x = std::stoi(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    throw InvalidInput("config: key '" + key + "' needs an integer, got '" + v + "'");
  }
}

std::uint64_t parse_u64(const std::string& key, const std::string& v) {
  try {
    size_t pos = 0;
    const unsigned long long x = std::stoull(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return static_cast<std::uint64_t>(x);
  } catch (const std::exception&) {
    throw InvalidInput("config: key '" + key + "' needs an unsigned integer, got '" + v + "'");
  }
}

double parse_real(const std::string& key, const std::string& v) {
  try {
    size_t pos = 0;
    const double x = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    throw InvalidInput("config: key '" + key + "' needs a number, got '" + v + "'");
  }
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw InvalidInput("config: key '" + key + "' needs true/false, got '" + v + "'");
}

void expect_one_of(const std::string& key, const std::string& v,
                   std::initializer_list<const char*> allowed) {
  for (const char* a : allowed)
    if (v == a) return;
  std::string msg = "config: key '" + key + "' must be one of {";
  bool first = true;
  for (const char* a : allowed) {
    if (!first) msg += ", ";
    msg += a;
    first = false;
  }
  throw InvalidInput(msg + "}, got '" + v + "'");
}

}  // namespace

ExperimentConfig parse_config_text(const std::string& text) {
  ExperimentConfig cfg;
  std::set<std::string> seen;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const size_t hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw InvalidInput("config: line " + std::to_string(line_no) + " is not key=value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty() || value.empty())
      throw InvalidInput("config: line " + std::to_string(line_no) + " has empty key or value");
    if (!seen.insert(key).second)
      throw InvalidInput("config: duplicate key '" + key + "'");

    if (key == "kind") {
      expect_one_of(key, value, {"study", "single"});
      cfg.kind = value;
    } else if (key == "seed") {
      cfg.seed = parse_u64(key, value);
    } else if (key == "out_dir") {
      cfg.out_dir = value;
    } else if (key == "reproducible") {
      cfg.reproducible = parse_bool(key, value);
    } else if (key == "study") {
      expect_one_of(key, value, {"normal", "phase_plane", "sv", "kangaroo"});
      cfg.study = value;
    } else if (key == "case") {
      cfg.case_id = parse_int(key, value);
    } else if (key == "scale") {
      expect_one_of(key, value, {"desk", "paper"});
      cfg.scale = value;
    } else if (key == "data") {
      cfg.data_path = value;
    } else if (key == "replications") {
      cfg.replications = parse_int(key, value);
    } else if (key == "model") {
      cfg.model = value;
    } else if (key == "permutation") {
      expect_one_of(key, value, {"identity", "random"});
      cfg.permutation = value;
    } else if (key == "T") {
      cfg.T = parse_int(key, value);
    } else if (key == "n_theta") {
      cfg.n_theta = parse_int(key, value);
    } else if (key == "n_x") {
      cfg.n_x = parse_int(key, value);
    } else if (key == "ess_ratio") {
      cfg.ess_ratio = parse_real(key, value);
    } else if (key == "mh_steps") {
      cfg.mh_steps = parse_int(key, value);
    } else if (key == "mixture_components") {
      cfg.mixture_components = parse_int(key, value);
    } else if (key == "hscore_mode") {
      expect_one_of(key, value, {"derivative", "kde"});
      cfg.hscore_mode = value;
    } else if (key == "kde_n") {
      cfg.kde_n = parse_int(key, value);
    } else if (key == "kde_h") {
      cfg.kde_h = parse_real(key, value);
    } else if (key == "delta_t") {
      cfg.delta_t = parse_real(key, value);
    } else if (key == "r_halfwidth") {
      cfg.r_halfwidth = parse_real(key, value);
    } else if (key == "sigma0_sq") {
      cfg.sigma0_sq = parse_real(key, value);
    } else if (key == "nu0") {
      cfg.nu0 = parse_real(key, value);
    } else if (key == "s0_sq") {
      cfg.s0_sq = parse_real(key, value);
    } else {
      throw InvalidInput("config: unknown key '" + key + "'");
    }
  }
  return cfg;
}

ExperimentConfig parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("cannot open config: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str());
}

void validate_config(const ExperimentConfig& cfg) {
  if (cfg.kind != "study" && cfg.kind != "single")
    throw InvalidInput("config: 'kind' must be set to study or single");
  if (!(cfg.ess_ratio > 0.0 && cfg.ess_ratio < 1.0))
    throw InvalidInput("config: ess_ratio must lie in (0,1)");
  if (cfg.mixture_components < 1)
    throw InvalidInput("config: mixture_components must be >= 1");
  if (cfg.kde_n < 2) throw InvalidInput("config: kde_n must be >= 2");
  if (!(cfg.kde_h > 0.0)) throw InvalidInput("config: kde_h must be positive");
  if (!(cfg.delta_t > 0.0)) throw InvalidInput("config: delta_t must be positive");
  if (!(cfg.r_halfwidth > 0.0)) throw InvalidInput("config: r_halfwidth must be positive");
  if (!(cfg.sigma0_sq > 0.0)) throw InvalidInput("config: sigma0_sq must be positive");
  if (!(cfg.nu0 > 0.0 && cfg.s0_sq > 0.0))
    throw InvalidInput("config: nu0 and s0_sq must be positive");
  if (cfg.replications == 0 || cfg.replications < -1)
    throw InvalidInput("config: replications must be >= 1");
  if (cfg.T == 0 || cfg.T < -1) throw InvalidInput("config: T must be >= 1");
  if (cfg.n_theta != -1 && cfg.n_theta < 2)
    throw InvalidInput("config: n_theta must be >= 2");
  if (cfg.n_x != -1 && cfg.n_x < 2) throw InvalidInput("config: n_x must be >= 2");
  if (cfg.mh_steps < -1) throw InvalidInput("config: mh_steps must be >= 0");

  if (cfg.kind == "study") {
    if (cfg.study.empty()) throw InvalidInput("config: kind=study needs a 'study' key");
    if (cfg.study == "normal" && (cfg.case_id < 1 || cfg.case_id > 4))
      throw InvalidInput("config: case must be 1..4");
    if (cfg.study == "kangaroo" && cfg.data_path.empty())
      throw InvalidInput("config: kangaroo study needs a 'data' path");
  } else {
    if (cfg.model.empty()) throw InvalidInput("config: kind=single needs a 'model' key");
    static const std::set<std::string> known = {
        "normal_m1", "normal_m2", "lgssm",       "sv_m1",
        "sv_m2",     "kangaroo_m1", "kangaroo_m2", "kangaroo_m3"};
    if (!known.count(cfg.model))
      throw InvalidInput("config: unknown model '" + cfg.model + "'");
    if (cfg.data_path.empty())
      throw InvalidInput("config: kind=single needs a 'data' path");
  }
}

std::string config_hash(const ExperimentConfig& c) {
  std::ostringstream ss;
  ss.precision(17);
  ss << c.kind << '|' << c.seed << '|' << c.out_dir << '|' << c.reproducible << '|' << c.study
     << '|' << c.case_id << '|' << c.scale << '|' << c.data_path << '|' << c.replications
     << '|' << c.model << '|' << c.permutation << '|' << c.T << '|' << c.n_theta << '|'
     << c.n_x << '|' << c.ess_ratio << '|' << c.mh_steps << '|' << c.mixture_components << '|'
     << c.hscore_mode << '|' << c.kde_n << '|' << c.kde_h << '|' << c.delta_t << '|'
     << c.r_halfwidth << '|' << c.sigma0_sq << '|' << c.nu0 << '|' << c.s0_sq;
  const std::string s = ss.str();
  std::uint64_t h = 1469598103934665603ULL;  // FNV-1a
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 1099511628211ULL;
  }
  std::ostringstream hex;
  hex << std::hex << h;
  return hex.str();
}

std::string describe_config(const ExperimentConfig& c) {
  std::ostringstream ss;
  ss << "kind=" << c.kind << "\nseed=" << c.seed << "\nout_dir=" << c.out_dir
     << "\nreproducible=" << (c.reproducible ? "true" : "false");
  if (c.kind == "study") {
    ss << "\nstudy=" << c.study;
    if (c.study == "normal") ss << "\ncase=" << c.case_id;
    if (c.study == "sv" || c.study == "kangaroo") ss << "\nscale=" << c.scale;
    if (!c.data_path.empty()) ss << "\ndata=" << c.data_path;
    if (c.replications > 0) ss << "\nreplications=" << c.replications;
  } else {
    ss << "\nmodel=" << c.model << "\ndata=" << c.data_path
       << "\npermutation=" << c.permutation << "\nhscore_mode=" << c.hscore_mode;
  }
  ss << "\nn_theta=" << c.n_theta << "\nn_x=" << c.n_x << "\ness_ratio=" << c.ess_ratio
     << "\nmh_steps=" << c.mh_steps << "\nmixture_components=" << c.mixture_components
     << "\nkde_n=" << c.kde_n << "\nkde_h=" << c.kde_h << "\ndelta_t=" << c.delta_t
     << "\nr_halfwidth=" << c.r_halfwidth << "\nsigma0_sq=" << c.sigma0_sq
     << "\nnu0=" << c.nu0 << "\ns0_sq=" << c.s0_sq << "\nconfig_hash=" << config_hash(c)
     << "\n";
  return ss.str();
}

}  // namespace hscore

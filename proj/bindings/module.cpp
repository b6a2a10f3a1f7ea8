#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "hscore/experiments.hpp"
#include "hscore/models.hpp"
#include "hscore/oracle.hpp"
#include "hscore/rng.hpp"
#include "hscore/scoring.hpp"
#include "hscore/smc.hpp"
#include "hscore/smc2.hpp"
#include "hscore/trace.hpp"

namespace py = pybind11;
using namespace hscore;

namespace {

struct NamedModel {
  std::optional<IidModelSpec> iid;
  std::optional<SsmSpec> ssm;
};

NamedModel resolve_model(const std::string& name, double sigma0_sq, double nu0, double s0_sq,
                         double delta_t, const std::vector<double>& times,
                         double r_halfwidth) {
  NamedModel m;
  if (name == "normal_m1")
    m.iid = normal_m1_spec(sigma0_sq);
  else if (name == "normal_m2")
    m.iid = normal_m2_spec(nu0, s0_sq);
  else if (name == "lgssm")
    m.ssm = lgssm_spec();
  else if (name == "sv_m1")
    m.ssm = levy_sv_m1_spec();
  else if (name == "sv_m2")
    m.ssm = levy_sv_m2_spec();
  else if (name == "kangaroo_m1")
    m.ssm = kangaroo_spec(KangarooVariant::kM1, delta_t, times, r_halfwidth);
  else if (name == "kangaroo_m2")
    m.ssm = kangaroo_spec(KangarooVariant::kM2, delta_t, times, r_halfwidth);
  else if (name == "kangaroo_m3")
    m.ssm = kangaroo_spec(KangarooVariant::kM3, delta_t, times, r_halfwidth);
  else
    throw InvalidInput("unknown model '" + name + "'");
  return m;
}

py::dict trace_to_dict(const PrequentialTrace& tr) {
  const int n = tr.size();
  VectorXd t(n), logev_inc(n), logev_cum(n), h_inc(n), h_cum(n), ess(n), acc(n);
  for (int i = 0; i < n; ++i) {
    const TraceRow& r = tr.rows[i];
    t[i] = r.t;
    logev_inc[i] = r.logev_inc;
    logev_cum[i] = r.logev_cum;
    h_inc[i] = r.h_inc.value;
    h_cum[i] = r.h_cum;
    ess[i] = r.ess_before_temper;
    acc[i] = r.acceptance_rate;
  }
  py::dict d;
  d["t"] = t;
  d["logev_inc"] = logev_inc;
  d["logev_cum"] = logev_cum;
  d["h_inc"] = h_inc;
  d["h_cum"] = h_cum;
  d["ess"] = ess;
  d["acceptance"] = acc;
  d["tau"] = tr.tau;
  return d;
}

}  // namespace

PYBIND11_MODULE(_hscore, m) {
  m.doc() = "Prequential Hyvarinen-score and log-evidence estimation";

  py::register_exception<InvalidInput>(m, "InvalidInput", PyExc_ValueError);
  py::register_exception<DegeneracyError>(m, "DegeneracyError", PyExc_RuntimeError);
  py::register_exception<ScoringError>(m, "ScoringError", PyExc_RuntimeError);

  m.def(
      "simulate",
      [](const std::string& model, int T, std::uint64_t seed,
         std::optional<std::vector<double>> theta, double sigma0_sq, double nu0, double s0_sq,
         double delta_t, std::optional<std::vector<double>> times, double r_halfwidth) {
        std::vector<double> tvec;
        if (times)
          tvec = *times;
        else
          for (int i = 0; i < std::max(T, 1); ++i) tvec.push_back(i + 1.0);
        const NamedModel nm =
            resolve_model(model, sigma0_sq, nu0, s0_sq, delta_t, tvec, r_halfwidth);
        ParamVector pv = nm.iid ? nm.iid->default_theta : nm.ssm->default_theta;
        if (theta) {
          if (static_cast<int>(theta->size()) != pv.dim())
            throw InvalidInput("theta has wrong length for model " + model);
          pv.values = Eigen::Map<const VectorXd>(theta->data(),
                                                 static_cast<int>(theta->size()));
        }
        Rng rng = derive_rng(seed, {stream::kSimulate});
        return nm.iid ? simulate_dataset(*nm.iid, pv, T, rng)
                      : simulate_dataset(*nm.ssm, pv, T, rng);
      },
      py::arg("model"), py::arg("T"), py::arg("seed") = 0, py::arg("theta") = py::none(),
      py::arg("sigma0_sq") = 10.0, py::arg("nu0") = 0.1, py::arg("s0_sq") = 1.0,
      py::arg("delta_t") = 0.01, py::arg("times") = py::none(),
      py::arg("r_halfwidth") = 10.0);

  m.def(
      "run_smc",
      [](const std::string& model, const MatrixXd& data, int n_theta, std::uint64_t seed,
         double ess_ratio, int mh_steps, double sigma0_sq, double nu0, double s0_sq,
         std::optional<std::vector<int>> permutation) {
        const NamedModel nm = resolve_model(model, sigma0_sq, nu0, s0_sq, 0.01, {}, 10.0);
        if (!nm.iid) throw InvalidInput("run_smc needs an i.i.d. model");
        SmcConfig c;
        c.n_theta = n_theta;
        c.seed = seed;
        c.ess_threshold_ratio = ess_ratio;
        c.mh_steps_per_temper = mh_steps;
        const std::vector<int>* perm = permutation ? &*permutation : nullptr;
        return trace_to_dict(run_smc(*nm.iid, data, c, perm));
      },
      py::arg("model"), py::arg("data"), py::arg("n_theta") = 1024, py::arg("seed") = 0,
      py::arg("ess_ratio") = 0.5, py::arg("mh_steps") = 3, py::arg("sigma0_sq") = 10.0,
      py::arg("nu0") = 0.1, py::arg("s0_sq") = 1.0, py::arg("permutation") = py::none());

  m.def(
      "run_smc2",
      [](const std::string& model, const MatrixXd& data, int n_theta, int n_x,
         std::uint64_t seed, const std::string& hscore_mode, int kde_n, double kde_h,
         double delta_t, std::optional<std::vector<double>> times, double r_halfwidth,
         double ess_ratio, int mh_steps) {
        std::vector<double> tvec;
        if (times)
          tvec = *times;
        else
          for (int i = 0; i < static_cast<int>(data.rows()); ++i) tvec.push_back(i + 1.0);
        const NamedModel nm = resolve_model(model, 10.0, 0.1, 1.0, delta_t, tvec, r_halfwidth);
        if (!nm.ssm) throw InvalidInput("run_smc2 needs a state-space model");
        Smc2Config c;
        c.n_theta = n_theta;
        c.n_x_init = n_x;
        c.seed = seed;
        c.ess_threshold_ratio = ess_ratio;
        c.mh_steps = mh_steps;
        c.hscore_mode = hscore_mode == "kde" ? HscoreMode::kKde : HscoreMode::kDerivative;
        c.kde.n_draws = kde_n;
        c.kde.bandwidth = kde_h;
        return trace_to_dict(run_smc2(*nm.ssm, data, c));
      },
      py::arg("model"), py::arg("data"), py::arg("n_theta") = 1024, py::arg("n_x") = 128,
      py::arg("seed") = 0, py::arg("hscore_mode") = "derivative", py::arg("kde_n") = 1024,
      py::arg("kde_h") = 0.1, py::arg("delta_t") = 0.01, py::arg("times") = py::none(),
      py::arg("r_halfwidth") = 10.0, py::arg("ess_ratio") = 0.5, py::arg("mh_steps") = 1);

  m.def(
      "exact_normal_traces",
      [](const VectorXd& data, double sigma0_sq, double nu0, double s0_sq) {
        const std::span<const double> span(data.data(), static_cast<std::size_t>(data.size()));
        const auto [t1, t2] = exact_prequential_scores_m1_m2(span, sigma0_sq, nu0, s0_sq);
        py::dict d;
        d["m1"] = trace_to_dict(t1);
        d["m2"] = trace_to_dict(t2);
        return d;
      },
      py::arg("data"), py::arg("sigma0_sq") = 10.0, py::arg("nu0") = 0.1,
      py::arg("s0_sq") = 1.0);

  m.def(
      "lgssm_exact_trace",
      [](double phi, double sigma_x, double sigma_y, const VectorXd& data) {
        LgssmParams p;
        p.phi = phi;
        p.sigma_x = sigma_x;
        p.sigma_y = sigma_y;
        const std::span<const double> span(data.data(), static_cast<std::size_t>(data.size()));
        return trace_to_dict(lgssm_exact_trace(p, span));
      },
      py::arg("phi"), py::arg("sigma_x"), py::arg("sigma_y"), py::arg("data"));

  m.def(
      "hscore_increment_from_posterior",
      [](const MatrixXd& d1, const MatrixXd& d2, const VectorXd& w) {
        const ScoreIncrement inc = hscore_increment_from_posterior(d1, d2, w);
        py::dict d;
        d["value"] = inc.value;
        d["per_dim_d1"] = inc.per_dim_d1;
        d["per_dim_d2"] = inc.per_dim_d2;
        return d;
      },
      py::arg("d1"), py::arg("d2"), py::arg("w"));

  m.def("fisher_gap_normal", &fisher_gap_normal, py::arg("mu_star"), py::arg("s2_star"));
  m.def("kl_gap_normal", &kl_gap_normal, py::arg("mu_star"), py::arg("s2_star"));
  m.def("fisher_gap_boundary", &fisher_gap_boundary, py::arg("s2_star"));
  m.def("kl_gap_boundary", &kl_gap_boundary, py::arg("s2_star"));

  m.def(
      "slope_estimate",
      [](const VectorXd& series, int t_begin, int t_end) {
        return slope_estimate(series, t_begin, t_end);
      },
      py::arg("series"), py::arg("t_begin"), py::arg("t_end"));

  m.attr("__version__") = "0.1.0";
}

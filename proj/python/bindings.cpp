#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "mtefree/bootstrap.hpp"
#include "mtefree/common.hpp"
#include "mtefree/data.hpp"
#include "mtefree/diagnostics.hpp"
#include "mtefree/effects.hpp"
#include "mtefree/liv.hpp"
#include "mtefree/pipeline.hpp"
#include "mtefree/propensity.hpp"
#include "mtefree/report.hpp"
#include "mtefree/separate.hpp"
#include "mtefree/simulate.hpp"
#include "mtefree/smoothing.hpp"

namespace py = pybind11;
using namespace mtefree;

namespace {

KernelSpec kernel_arg(const std::string& name) { return {kernel_from_string(name)}; }

BandwidthSpec bandwidth_arg(const py::object& value) {
  if (py::isinstance<py::str>(value)) {
    const auto text = value.cast<std::string>();
    if (text == "rule_of_thumb" || text == "rot") return BandwidthSpec::rot();
    if (text == "rot_derivative" || text == "rule_of_thumb_derivative")
      return BandwidthSpec::rot_derivative();
    throw ConfigError("python", "unknown bandwidth mode: " + text);
  }
  return BandwidthSpec::fixed(value.cast<double>());
}

ParametricSpec parametric_arg(const std::string& family, int degree) {
  ParametricSpec spec;
  if (family == "normal" || family == "normal_polynomial") {
    spec.family = ParametricFamily::normal_polynomial;
  } else if (family == "polynomial") {
    spec.family = ParametricFamily::polynomial;
  } else {
    throw ConfigError("python", "unknown parametric family: " + family);
  }
  spec.degree = degree;
  return spec;
}

PropensityOptions propensity_options(const std::string& kernel, const py::object& bandwidth,
                                     bool leave_one_out, int min_cell_size, int threads) {
  PropensityOptions opt;
  opt.kernel = kernel_arg(kernel);
  if (py::isinstance<py::list>(bandwidth) || py::isinstance<py::tuple>(bandwidth)) {
    opt.fixed_bandwidths = bandwidth.cast<std::vector<double>>();
  } else {
    opt.bandwidth = bandwidth_arg(bandwidth);
  }
  opt.leave_one_out = leave_one_out;
  opt.min_cell_size = min_cell_size;
  opt.threads = threads;
  return opt;
}

py::dict summary_dict(const CausalSummary& p) {
  py::dict out;
  out["ate"] = p.ate;
  out["tt"] = p.tt;
  out["tut"] = p.tut;
  out["late"] = p.late;
  out["pi_x"] = p.pi_x;
  out["late_bounds"] = py::make_tuple(p.late_v1, p.late_v2);
  out["boundary_extrapolated"] = p.boundary_extrapolated;
  return out;
}

py::dict bands_dict(const BootstrapBands& bands) {
  py::dict blocks;
  for (const auto& [name, block] : bands.blocks) {
    py::list rows;
    for (const auto& s : block) {
      py::dict row;
      row["se"] = s.se;
      row["ci_lo"] = s.ci_lo;
      row["ci_hi"] = s.ci_hi;
      rows.append(row);
    }
    blocks[py::str(name)] = rows;
  }
  py::dict out;
  out["requested"] = bands.requested;
  out["completed"] = bands.completed;
  out["level"] = bands.level;
  out["failures"] = bands.failures;
  out["blocks"] = blocks;
  return out;
}

py::dict diagnostics_dict(const DiagnosticReport& report) {
  py::dict out;
  out["cell_size"] = report.cell_size;
  out["cell_key"] = report.cell_key;
  if (report.nl1) {
    const auto& f = *report.nl1;
    py::dict nl1;
    nl1["detected"] = f.detected;
    nl1["degenerate_constant"] = f.degenerate_constant;
    nl1["witness_x"] = f.witness_x;
    nl1["witness_x_tilde"] = f.witness_x_tilde;
    nl1["score_gap"] = f.score_gap;
    nl1["tolerance"] = f.tolerance;
    nl1["grid_x"] = f.grid_x;
    nl1["grid_score"] = f.grid_score;
    out["nl1"] = nl1;
  }
  if (report.nl2) {
    const auto& f = *report.nl2;
    py::dict nl2;
    nl2["detected"] = f.detected;
    nl2["ratio_at_a"] = f.ratio_at_a;
    nl2["ratio_at_b"] = f.ratio_at_b;
    nl2["clauses_nonzero"] = py::make_tuple(f.nonzero_clauses[0], f.nonzero_clauses[1],
                                            f.nonzero_clauses[2], f.nonzero_clauses[3]);
    nl2["ratio_clause"] = f.ratio_clause;
    out["nl2"] = nl2;
  }
  if (report.stationary) {
    const auto& f = *report.stationary;
    py::dict st;
    st["detected"] = f.detected;
    st["degenerate_constant"] = f.degenerate_constant;
    st["location"] = f.location;
    st["min_abs_slope"] = f.min_abs_slope;
    out["stationary_point"] = st;
  }
  py::dict support;
  support["p_lo"] = report.support.p_lo;
  support["p_hi"] = report.support.p_hi;
  support["n_total"] = report.support.n_total;
  support["n_kept"] = report.support.n_kept;
  support["n_trimmed_low"] = report.support.n_trimmed_low;
  support["n_trimmed_high"] = report.support.n_trimmed_high;
  out["support"] = support;
  return out;
}

RunConfig config_from_kwargs(const py::kwargs& kwargs) {
  RunConfig cfg;
  for (const auto& item : kwargs) {
    const auto key = item.first.cast<std::string>();
    const py::object value = py::reinterpret_borrow<py::object>(item.second);
    if (key == "procedure") {
      cfg.procedure = procedure_from_string(value.cast<std::string>());
    } else if (key == "second_step") {
      cfg.second_step = second_step_from_string(value.cast<std::string>());
    } else if (key == "poly_degree") {
      cfg.poly_degree = value.cast<int>();
    } else if (key == "kernel_propensity") {
      cfg.kernel_propensity = kernel_arg(value.cast<std::string>());
    } else if (key == "kernel_pairwise") {
      cfg.kernel_pairwise = kernel_arg(value.cast<std::string>());
    } else if (key == "kernel_local_linear") {
      cfg.kernel_local_linear = kernel_arg(value.cast<std::string>());
    } else if (key == "bw_propensity") {
      if (py::isinstance<py::list>(value) || py::isinstance<py::tuple>(value)) {
        cfg.propensity_fixed_bandwidths = value.cast<std::vector<double>>();
      } else {
        cfg.bw_propensity = bandwidth_arg(value);
      }
    } else if (key == "bw_pairwise") {
      cfg.bw_pairwise = bandwidth_arg(value);
    } else if (key == "bw_local_linear") {
      cfg.bw_local_linear = bandwidth_arg(value);
    } else if (key == "trim_lower") {
      cfg.trim_lower = value.cast<double>();
    } else if (key == "trim_upper") {
      cfg.trim_upper = value.cast<double>();
    } else if (key == "leave_one_out") {
      cfg.leave_one_out = value.cast<bool>();
    } else if (key == "min_cell_size") {
      cfg.min_cell_size = value.cast<int>();
    } else if (key == "grid_size") {
      cfg.grid_size = value.cast<int>();
    } else if (key == "late") {
      const auto pair = value.cast<std::pair<double, double>>();
      cfg.late_v1 = pair.first;
      cfg.late_v2 = pair.second;
    } else if (key == "profile") {
      cfg.profile = value.cast<Eigen::VectorXd>();
    } else if (key == "pi_x") {
      cfg.pi_x = value.cast<double>();
    } else if (key == "bootstrap") {
      cfg.bootstrap = value.cast<int>();
    } else if (key == "seed") {
      cfg.seed = value.cast<std::uint64_t>();
    } else if (key == "ci_level") {
      cfg.ci_level = value.cast<double>();
    } else if (key == "threads") {
      cfg.threads = value.cast<int>();
    } else if (key == "diagnostics") {
      cfg.with_diagnostics = value.cast<bool>();
    } else if (key == "diagnostics_tolerance") {
      cfg.diagnostics.tolerance = value.cast<double>();
    } else {
      throw ConfigError("python", "unknown estimate() option: " + key);
    }
  }
  return cfg;
}

py::dict result_dict(const Sample& s, const PipelineResult& r) {
  py::dict out;
  out["v_grid"] = r.v_grid;
  out["profile"] = r.profile;
  out["pi_x"] = r.pi_x;
  out["scores"] = r.propensity.scores;
  out["kept"] = r.propensity.kept;
  out["support"] = py::make_tuple(r.propensity.support_lo, r.propensity.support_hi);
  py::dict meta;
  meta["h1"] = r.meta.h1;
  meta["h2"] = r.meta.h2;
  meta["h3"] = r.meta.h3;
  meta["n_total"] = r.meta.n_total;
  meta["n_kept"] = r.meta.n_kept;
  meta["n_kept_treated"] = r.meta.n_kept_treated;
  meta["n_kept_untreated"] = r.meta.n_kept_untreated;
  meta["seed"] = r.meta.seed;
  meta["version"] = r.meta.version;
  meta["warnings"] = r.meta.warnings;
  out["metadata"] = meta;

  if (r.separate) {
    const auto& sep = *r.separate;
    py::dict block;
    block["beta0"] = sep.arm0.beta;
    block["beta1"] = sep.arm1.beta;
    block["params"] = summary_dict(sep.params);
    block["mte"] = sep.mte.values;
    block["mte_flagged"] = sep.mte.flagged;
    block["g0"] = sep.g0;
    block["g0_deriv"] = sep.g0_deriv;
    block["g1"] = sep.g1;
    block["g1_deriv"] = sep.g1_deriv;
    block["eu0"] = sep.eu0;
    block["eu1"] = sep.eu1;
    block["structural0"] = sep.structural0;
    block["structural1"] = sep.structural1;
    block["response_participation"] = sep.response.prob_participation;
    block["response_outcome"] = sep.response.expected_outcome;
    if (sep.theta0) block["theta0"] = *sep.theta0;
    if (sep.theta1) block["theta1"] = *sep.theta1;
    out["separate"] = block;
  }
  if (r.liv) {
    const auto& liv = *r.liv;
    py::dict block;
    block["beta0"] = liv.fit.beta0;
    block["delta"] = liv.fit.delta;
    block["params"] = summary_dict(liv.params);
    block["mte"] = liv.mte.values;
    block["r"] = liv.fit.r;
    block["q_deriv"] = liv.fit.q_deriv;
    if (liv.alpha0) block["alpha0"] = *liv.alpha0;
    if (liv.theta) block["theta"] = *liv.theta;
    out["liv"] = block;
  }
  if (r.diagnostics) out["diagnostics"] = diagnostics_dict(*r.diagnostics);
  if (r.bands) out["bands"] = bands_dict(*r.bands);
  out["coefficient_table"] = format_coefficient_table(s, r);
  return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Marginal treatment effects without instrumental variables";
  m.attr("__version__") = kVersion;

  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<EstimationError>(m, "EstimationError", PyExc_RuntimeError);

  py::class_<Sample>(m, "Sample")
      .def(py::init([](Eigen::VectorXd y, Eigen::VectorXi d, Eigen::MatrixXd x_cont,
                       Eigen::MatrixXi x_disc, std::vector<std::string> cont_names,
                       std::vector<std::string> disc_names) {
             Sample s;
             s.y = std::move(y);
             s.d = std::move(d);
             s.x_cont = std::move(x_cont);
             if (x_disc.size() == 0) x_disc.resize(s.y.size(), 0);
             s.x_disc = std::move(x_disc);
             if (cont_names.empty())
               for (int c = 0; c < s.dim_cont(); ++c)
                 cont_names.push_back("x" + std::to_string(c + 1));
             if (disc_names.empty())
               for (int c = 0; c < s.dim_disc(); ++c)
                 disc_names.push_back("z" + std::to_string(c + 1));
             s.cont_names = std::move(cont_names);
             s.disc_names = std::move(disc_names);
             s.validate();
             return s;
           }),
           py::arg("y"), py::arg("d"), py::arg("x_cont"),
           py::arg("x_disc") = Eigen::MatrixXi(),
           py::arg("cont_names") = std::vector<std::string>{},
           py::arg("disc_names") = std::vector<std::string>{})
      .def_readonly("y", &Sample::y)
      .def_readonly("d", &Sample::d)
      .def_readonly("x_cont", &Sample::x_cont)
      .def_readonly("x_disc", &Sample::x_disc)
      .def_readonly("cont_names", &Sample::cont_names)
      .def_readonly("disc_names", &Sample::disc_names)
      .def("__len__", [](const Sample& s) { return s.size(); })
      .def("covariate_names", &Sample::covariate_names)
      .def("covariate_means", py::overload_cast<>(&Sample::covariate_means, py::const_))
      .def("subset", &Sample::subset, py::arg("rows"));

  m.def(
      "load_csv",
      [](const std::string& path, const std::string& outcome, const std::string& treatment,
         std::vector<std::string> continuous, std::vector<std::string> discrete,
         const std::string& treated_label, const std::string& control_label) {
        ColumnConfig config;
        config.outcome = outcome;
        config.treatment = treatment;
        config.continuous = std::move(continuous);
        config.discrete = std::move(discrete);
        config.treated_label = treated_label;
        config.control_label = control_label;
        LoadReport report;
        Sample s = load_csv(path, config, &report);
        py::dict rep;
        rep["rows_read"] = report.rows_read;
        rep["rows_dropped"] = report.rows_dropped;
        rep["discrete_levels"] = report.discrete_levels;
        return py::make_tuple(std::move(s), rep);
      },
      py::arg("path"), py::arg("outcome"), py::arg("treatment"),
      py::arg("continuous") = std::vector<std::string>{},
      py::arg("discrete") = std::vector<std::string>{}, py::arg("treated_label") = "",
      py::arg("control_label") = "",
      "Read a CSV with a header row; returns (Sample, report dict)");

  m.def("split_cells", [](const Sample& s) {
    py::list out;
    for (const Cell& cell : split_cells(s)) out.append(py::make_tuple(cell.key, cell.rows));
    return out;
  });

  m.def(
      "kernel_eval",
      [](const std::string& family, double u) { return kernel_eval(kernel_arg(family), u); },
      py::arg("family"), py::arg("u"));
  m.def("rule_of_thumb", [](const std::vector<double>& v) { return rule_of_thumb(v); });
  m.def("rule_of_thumb_derivative",
        [](const std::vector<double>& v) { return rule_of_thumb_derivative(v); });

  py::class_<OracleMte>(m, "OracleMte")
      .def_readonly("alpha0", &OracleMte::alpha0)
      .def_readonly("alpha1", &OracleMte::alpha1)
      .def_readonly("beta0", &OracleMte::beta0)
      .def_readonly("beta1", &OracleMte::beta1)
      .def_readonly("rho0", &OracleMte::rho0)
      .def_readonly("rho1", &OracleMte::rho1)
      .def("beta_diff", &OracleMte::beta_diff)
      .def("mte", &OracleMte::mte, py::arg("x"), py::arg("v"))
      .def("ate", &OracleMte::ate, py::arg("x"))
      .def("tt", &OracleMte::tt, py::arg("x"), py::arg("pi_x"))
      .def("tut", &OracleMte::tut, py::arg("x"), py::arg("pi_x"))
      .def("late", &OracleMte::late, py::arg("x"), py::arg("v1"), py::arg("v2"))
      .def("structural", &OracleMte::structural, py::arg("arm"), py::arg("mean_x"),
           py::arg("v"));

  m.def(
      "simulate",
      [](const std::string& preset, int n, std::uint64_t seed, py::kwargs kwargs) {
        DgpSpec spec = preset_dgp(preset, n, seed);
        for (const auto& item : kwargs) {
          const auto key = item.first.cast<std::string>();
          const py::object value = py::reinterpret_borrow<py::object>(item.second);
          if (key == "alpha0") {
            spec.alpha0 = value.cast<double>();
          } else if (key == "alpha1") {
            spec.alpha1 = value.cast<double>();
          } else if (key == "rho0") {
            spec.rho0 = value.cast<double>();
          } else if (key == "rho1") {
            spec.rho1 = value.cast<double>();
          } else if (key == "noise") {
            spec.noise_scale = value.cast<double>();
          } else if (key == "beta0") {
            spec.beta0 = value.cast<Eigen::VectorXd>();
          } else if (key == "beta1") {
            spec.beta1 = value.cast<Eigen::VectorXd>();
          } else if (key == "disc_shift") {
            spec.disc_shift = value.cast<double>();
          } else {
            throw ConfigError("python", "unknown simulate() option: " + key);
          }
        }
        auto [sample, oracle] = generate(spec);
        return py::make_tuple(std::move(sample), std::move(oracle));
      },
      py::arg("preset") = "separable", py::arg("n") = 1000, py::arg("seed") = 1,
      "Generate a synthetic sample with a closed-form oracle MTE");
  m.def("dgp_presets", &preset_names);

  py::class_<PropensityFit>(m, "PropensityFit")
      .def_readonly("scores", &PropensityFit::scores)
      .def_readonly("kept", &PropensityFit::kept)
      .def_readonly("support_lo", &PropensityFit::support_lo)
      .def_readonly("support_hi", &PropensityFit::support_hi)
      .def_readonly("bandwidths", &PropensityFit::bandwidths)
      .def_readonly("warnings", &PropensityFit::warnings)
      .def("kept_rows", &PropensityFit::kept_rows)
      .def(
          "evaluate",
          [](const PropensityFit& fit, const Eigen::VectorXd& xc, const Eigen::VectorXi& xd) {
            return fit.evaluator(xc, xd);
          },
          py::arg("x_cont"), py::arg("x_disc") = Eigen::VectorXi());

  m.def(
      "fit_propensity",
      [](const Sample& s, const std::string& kernel, const py::object& bandwidth,
         bool leave_one_out, int min_cell_size, int threads) {
        return fit_propensity(
            s, propensity_options(kernel, bandwidth, leave_one_out, min_cell_size, threads));
      },
      py::arg("sample"), py::arg("kernel") = "gaussian",
      py::arg("bandwidth") = py::str("rule_of_thumb"), py::arg("leave_one_out") = false,
      py::arg("min_cell_size") = 10, py::arg("threads") = 0);

  m.def(
      "trim",
      [](const PropensityFit& fit, double lower, double upper, const Sample& s) {
        return trim(fit, lower, upper, s);
      },
      py::arg("fit"), py::arg("lower"), py::arg("upper"), py::arg("sample"));

  m.def(
      "pairwise_difference_beta",
      [](const Sample& s, const PropensityFit& fit, int arm, const std::string& kernel,
         double h2, int threads) {
        return pairwise_difference_beta(s, fit, arm, kernel_arg(kernel), h2, threads);
      },
      py::arg("sample"), py::arg("fit"), py::arg("arm"), py::arg("kernel") = "gaussian",
      py::arg("h2") = 0.0, py::arg("threads") = 0);

  m.def(
      "local_linear_g",
      [](const Sample& s, const PropensityFit& fit, int arm, const Eigen::VectorXd& beta,
         const Eigen::VectorXd& p_grid, const std::string& kernel, double h3, int threads) {
        const LocalLinearCurve curve =
            local_linear_g(s, fit, arm, beta, p_grid, kernel_arg(kernel), h3, threads);
        return py::make_tuple(curve.g, curve.g_deriv, curve.flagged);
      },
      py::arg("sample"), py::arg("fit"), py::arg("arm"), py::arg("beta"), py::arg("p_grid"),
      py::arg("kernel") = "gaussian", py::arg("h3") = 0.0, py::arg("threads") = 0);

  m.def(
      "parametric_second_step",
      [](const Sample& s, const PropensityFit& fit, int arm, const std::string& family,
         int degree) {
        const ParametricFit pfit =
            parametric_second_step(s, fit, arm, parametric_arg(family, degree));
        return py::make_tuple(pfit.beta, pfit.theta);
      },
      py::arg("sample"), py::arg("fit"), py::arg("arm"), py::arg("family") = "normal",
      py::arg("degree") = 1);

  m.def(
      "liv_pairwise",
      [](const Sample& s, const PropensityFit& fit, const std::string& kernel, double h2,
         int threads) {
        auto [beta0, delta] = liv_pairwise(s, fit, kernel_arg(kernel), h2, threads);
        return py::make_tuple(std::move(beta0), std::move(delta));
      },
      py::arg("sample"), py::arg("fit"), py::arg("kernel") = "gaussian", py::arg("h2") = 0.0,
      py::arg("threads") = 0);

  m.def(
      "liv_local_linear",
      [](const Sample& s, const PropensityFit& fit, const Eigen::VectorXd& beta0,
         const Eigen::VectorXd& delta, const Eigen::VectorXd& p_grid,
         const std::string& kernel, double h3, int threads) {
        const LocalLinearCurve curve =
            liv_local_linear(s, fit, beta0, delta, p_grid, kernel_arg(kernel), h3, threads);
        return py::make_tuple(curve.g, curve.g_deriv, curve.flagged);
      },
      py::arg("sample"), py::arg("fit"), py::arg("beta0"), py::arg("delta"),
      py::arg("p_grid"), py::arg("kernel") = "gaussian", py::arg("h3") = 0.0,
      py::arg("threads") = 0);

  m.def(
      "assemble_mte",
      [](const Eigen::VectorXd& beta0, const Eigen::VectorXd& beta1,
         const Eigen::VectorXd& g0, const Eigen::VectorXd& g0_deriv,
         const Eigen::VectorXd& g1, const Eigen::VectorXd& g1_deriv,
         const Eigen::VectorXd& x, const Eigen::VectorXd& v_grid) {
        return assemble_mte(beta0, beta1, g0, g0_deriv, g1, g1_deriv, x, v_grid).values;
      },
      py::arg("beta0"), py::arg("beta1"), py::arg("g0"), py::arg("g0_deriv"), py::arg("g1"),
      py::arg("g1_deriv"), py::arg("x"), py::arg("v_grid"));

  m.def("normal_pdf", &normal_pdf);
  m.def("normal_cdf", &normal_cdf);
  m.def("normal_quantile", &normal_quantile);

  m.def(
      "estimate",
      [](const Sample& s, py::kwargs kwargs) {
        const RunConfig cfg = config_from_kwargs(kwargs);
        const PipelineResult result = run_pipeline(s, cfg);
        return result_dict(s, result);
      },
      py::arg("sample"),
      "Run the full pipeline; accepts RunConfig fields as keyword options");

  m.def(
      "diagnose",
      [](const Sample& s, const PropensityFit& fit, double tolerance, int grid_size,
         int cont_index) {
        DiagnosticsConfig cfg;
        cfg.tolerance = tolerance;
        cfg.grid_size = grid_size;
        cfg.cont_index = cont_index;
        return diagnostics_dict(run_diagnostics(s, fit, cfg));
      },
      py::arg("sample"), py::arg("fit"), py::arg("tolerance") = 0.02,
      py::arg("grid_size") = 201, py::arg("cont_index") = 0);
}

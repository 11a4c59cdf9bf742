#include <CLI11.hpp>
#include <Eigen/Dense>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "mtefree/common.hpp"
#include "mtefree/data.hpp"
#include "mtefree/pipeline.hpp"
#include "mtefree/report.hpp"
#include "mtefree/simulate.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitEstimation = 3;
constexpr int kExitDiagnostics = 4;

mtefree::BandwidthSpec parse_bandwidth(const std::string& text) {
  if (text == "rule_of_thumb" || text == "rot") return mtefree::BandwidthSpec::rot();
  if (text == "rot_derivative" || text == "rule_of_thumb_derivative")
    return mtefree::BandwidthSpec::rot_derivative();
  try {
    return mtefree::BandwidthSpec::fixed(std::stod(text));
  } catch (...) {
    throw mtefree::ConfigError("cli", "cannot parse bandwidth '" + text +
                                          "' (expected rule_of_thumb, rot_derivative, "
                                          "or a number)");
  }
}

std::vector<double> parse_number_list(const std::string& text) {
  std::vector<double> out;
  std::string token;
  std::istringstream in(text);
  while (std::getline(in, token, ',')) out.push_back(std::stod(token));
  return out;
}

// Flags shared by estimate and diagnose.
struct CommonArgs {
  std::string input;
  std::string config_path;
  std::string out_dir = ".";
  std::string outcome, treatment;
  std::vector<std::string> continuous, discrete;
  std::string treated_label, control_label;
  std::string kernel_propensity, kernel_pairwise, kernel_local_linear;
  std::string bw_propensity, bw_pairwise, bw_local_linear;
  double trim_lower = -1.0, trim_upper = -1.0;  // negative: not set
  int min_cell_size = -1;
  bool leave_one_out = false;
  int threads = -1;
  int grid_size = -1;
};

void add_common_flags(CLI::App* cmd, CommonArgs* args) {
  cmd->add_option("--input", args->input, "Input CSV file")->required();
  cmd->add_option("--config", args->config_path,
                  "JSON config file (flags override its values)");
  cmd->add_option("--out", args->out_dir, "Output directory");
  cmd->add_option("--outcome", args->outcome, "Outcome column");
  cmd->add_option("--treatment", args->treatment, "Treatment column (0/1)");
  cmd->add_option("--continuous", args->continuous, "Continuous covariate column(s)");
  cmd->add_option("--discrete", args->discrete, "Discrete covariate column(s)");
  cmd->add_option("--treated-label", args->treated_label,
                  "Raw value meaning treated (with --control-label)");
  cmd->add_option("--control-label", args->control_label, "Raw value meaning control");
  cmd->add_option("--kernel-propensity", args->kernel_propensity,
                  "gaussian|epanechnikov");
  cmd->add_option("--kernel-pairwise", args->kernel_pairwise, "gaussian|epanechnikov");
  cmd->add_option("--kernel-local-linear", args->kernel_local_linear,
                  "gaussian|epanechnikov");
  cmd->add_option("--bw-propensity", args->bw_propensity,
                  "rule_of_thumb or fixed value(s), comma separated per dim");
  cmd->add_option("--bw-pairwise", args->bw_pairwise, "rule_of_thumb or fixed value");
  cmd->add_option("--bw-local-linear", args->bw_local_linear,
                  "rot_derivative, rule_of_thumb, or fixed value");
  cmd->add_option("--trim-lower", args->trim_lower, "Lower trim fraction (default 0.01)");
  cmd->add_option("--trim-upper", args->trim_upper, "Upper trim fraction (default 0.01)");
  cmd->add_option("--min-cell-size", args->min_cell_size,
                  "Smallest usable discrete cell (default 10)");
  cmd->add_flag("--leave-one-out", args->leave_one_out,
                "Exclude each row from its own fitted score");
  cmd->add_option("--threads", args->threads, "Worker thread cap (0 = all cores)");
  cmd->add_option("--grid", args->grid_size, "Curve grid size (default 101)");
}

json load_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw mtefree::ConfigError("cli", "cannot open config file: " + path);
  json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    throw mtefree::ConfigError("cli", std::string("config parse error: ") + e.what());
  }
  return j;
}

// Layered config: JSON file first, then command-line flags on top.
void apply_config_json(const json& j, mtefree::ColumnConfig* columns,
                       mtefree::RunConfig* cfg) {
  if (j.contains("columns")) {
    const auto& c = j.at("columns");
    if (c.contains("outcome")) columns->outcome = c.at("outcome").get<std::string>();
    if (c.contains("treatment")) columns->treatment = c.at("treatment").get<std::string>();
    if (c.contains("continuous"))
      columns->continuous = c.at("continuous").get<std::vector<std::string>>();
    if (c.contains("discrete"))
      columns->discrete = c.at("discrete").get<std::vector<std::string>>();
    if (c.contains("treated_label"))
      columns->treated_label = c.at("treated_label").get<std::string>();
    if (c.contains("control_label"))
      columns->control_label = c.at("control_label").get<std::string>();
  }
  if (j.contains("procedure"))
    cfg->procedure = mtefree::procedure_from_string(j.at("procedure").get<std::string>());
  if (j.contains("second_step"))
    cfg->second_step =
        mtefree::second_step_from_string(j.at("second_step").get<std::string>());
  if (j.contains("poly_degree")) cfg->poly_degree = j.at("poly_degree").get<int>();
  if (j.contains("kernels")) {
    const auto& k = j.at("kernels");
    if (k.contains("propensity"))
      cfg->kernel_propensity.family =
          mtefree::kernel_from_string(k.at("propensity").get<std::string>());
    if (k.contains("pairwise"))
      cfg->kernel_pairwise.family =
          mtefree::kernel_from_string(k.at("pairwise").get<std::string>());
    if (k.contains("local_linear"))
      cfg->kernel_local_linear.family =
          mtefree::kernel_from_string(k.at("local_linear").get<std::string>());
  }
  if (j.contains("bandwidths")) {
    const auto& b = j.at("bandwidths");
    auto parse_json_bw = [](const json& v) -> mtefree::BandwidthSpec {
      if (v.is_number()) return mtefree::BandwidthSpec::fixed(v.get<double>());
      return parse_bandwidth(v.get<std::string>());
    };
    if (b.contains("propensity")) {
      if (b.at("propensity").is_array()) {
        cfg->propensity_fixed_bandwidths =
            b.at("propensity").get<std::vector<double>>();
      } else {
        cfg->bw_propensity = parse_json_bw(b.at("propensity"));
      }
    }
    if (b.contains("pairwise")) cfg->bw_pairwise = parse_json_bw(b.at("pairwise"));
    if (b.contains("local_linear"))
      cfg->bw_local_linear = parse_json_bw(b.at("local_linear"));
  }
  if (j.contains("trim")) {
    cfg->trim_lower = j.at("trim").value("lower", cfg->trim_lower);
    cfg->trim_upper = j.at("trim").value("upper", cfg->trim_upper);
  }
  if (j.contains("grid_size")) cfg->grid_size = j.at("grid_size").get<int>();
  if (j.contains("bootstrap")) cfg->bootstrap = j.at("bootstrap").get<int>();
  if (j.contains("seed")) cfg->seed = j.at("seed").get<std::uint64_t>();
  if (j.contains("ci_level")) cfg->ci_level = j.at("ci_level").get<double>();
  if (j.contains("threads")) cfg->threads = j.at("threads").get<int>();
  if (j.contains("leave_one_out")) cfg->leave_one_out = j.at("leave_one_out").get<bool>();
  if (j.contains("min_cell_size")) cfg->min_cell_size = j.at("min_cell_size").get<int>();
  if (j.contains("late")) {
    cfg->late_v1 = j.at("late").at(0).get<double>();
    cfg->late_v2 = j.at("late").at(1).get<double>();
  }
  if (j.contains("profile")) {
    const auto values = j.at("profile").get<std::vector<double>>();
    cfg->profile = Eigen::Map<const Eigen::VectorXd>(values.data(), values.size());
  }
  if (j.contains("pi_x")) cfg->pi_x = j.at("pi_x").get<double>();
  if (j.contains("diagnostics")) {
    const auto& d = j.at("diagnostics");
    if (d.contains("grid_size")) cfg->diagnostics.grid_size = d.at("grid_size").get<int>();
    if (d.contains("tolerance"))
      cfg->diagnostics.tolerance = d.at("tolerance").get<double>();
    if (d.contains("cont_index"))
      cfg->diagnostics.cont_index = d.at("cont_index").get<int>();
    if (d.contains("cell_key")) {
      const auto key = d.at("cell_key").get<std::vector<int>>();
      Eigen::VectorXi k(key.size());
      for (size_t i = 0; i < key.size(); ++i) k[static_cast<Eigen::Index>(i)] = key[i];
      cfg->diagnostics.cell_key = k;
    }
  }
}

void apply_common_flags(const CommonArgs& args, mtefree::ColumnConfig* columns,
                        mtefree::RunConfig* cfg) {
  if (!args.outcome.empty()) columns->outcome = args.outcome;
  if (!args.treatment.empty()) columns->treatment = args.treatment;
  if (!args.continuous.empty()) columns->continuous = args.continuous;
  if (!args.discrete.empty()) columns->discrete = args.discrete;
  if (!args.treated_label.empty()) columns->treated_label = args.treated_label;
  if (!args.control_label.empty()) columns->control_label = args.control_label;
  if (!args.kernel_propensity.empty())
    cfg->kernel_propensity.family = mtefree::kernel_from_string(args.kernel_propensity);
  if (!args.kernel_pairwise.empty())
    cfg->kernel_pairwise.family = mtefree::kernel_from_string(args.kernel_pairwise);
  if (!args.kernel_local_linear.empty())
    cfg->kernel_local_linear.family =
        mtefree::kernel_from_string(args.kernel_local_linear);
  if (!args.bw_propensity.empty()) {
    if (args.bw_propensity.find(',') != std::string::npos ||
        std::isdigit(static_cast<unsigned char>(args.bw_propensity[0]))) {
      cfg->propensity_fixed_bandwidths = parse_number_list(args.bw_propensity);
      if (cfg->propensity_fixed_bandwidths.size() == 1) {
        cfg->bw_propensity =
            mtefree::BandwidthSpec::fixed(cfg->propensity_fixed_bandwidths[0]);
        cfg->propensity_fixed_bandwidths.clear();
      }
    } else {
      cfg->bw_propensity = parse_bandwidth(args.bw_propensity);
    }
  }
  if (!args.bw_pairwise.empty()) cfg->bw_pairwise = parse_bandwidth(args.bw_pairwise);
  if (!args.bw_local_linear.empty())
    cfg->bw_local_linear = parse_bandwidth(args.bw_local_linear);
  if (args.trim_lower >= 0.0) cfg->trim_lower = args.trim_lower;
  if (args.trim_upper >= 0.0) cfg->trim_upper = args.trim_upper;
  if (args.min_cell_size >= 0) cfg->min_cell_size = args.min_cell_size;
  if (args.leave_one_out) cfg->leave_one_out = true;
  if (args.threads >= 0) cfg->threads = args.threads;
  if (args.grid_size > 0) cfg->grid_size = args.grid_size;
}

mtefree::Sample load_input(const CommonArgs& args, const mtefree::ColumnConfig& columns,
                           mtefree::LoadReport* report) {
  if (columns.outcome.empty() || columns.treatment.empty())
    throw mtefree::ConfigError(
        "cli", "outcome and treatment columns are required (flags or config file)");
  return mtefree::load_csv(args.input, columns, report);
}

void write_sample_csv(const std::string& path, const mtefree::Sample& s) {
  std::ofstream out(path);
  if (!out) throw mtefree::ConfigError("cli", "cannot write file: " + path);
  out << "y,d";
  for (const auto& n : s.cont_names) out << "," << n;
  for (const auto& n : s.disc_names) out << "," << n;
  out << "\n";
  out << std::setprecision(17);
  for (Eigen::Index i = 0; i < s.size(); ++i) {
    out << s.y[i] << "," << s.d[i];
    for (int c = 0; c < s.dim_cont(); ++c) out << "," << s.x_cont(i, c);
    for (int c = 0; c < s.dim_disc(); ++c) out << "," << s.x_disc(i, c);
    out << "\n";
  }
}

int run_simulate(const std::string& preset, int n, std::uint64_t seed,
                 const std::string& out_dir, const json& overrides) {
  mtefree::DgpSpec spec = mtefree::preset_dgp(preset, n, seed);
  if (overrides.contains("alpha0")) spec.alpha0 = overrides.at("alpha0").get<double>();
  if (overrides.contains("alpha1")) spec.alpha1 = overrides.at("alpha1").get<double>();
  if (overrides.contains("rho0")) spec.rho0 = overrides.at("rho0").get<double>();
  if (overrides.contains("rho1")) spec.rho1 = overrides.at("rho1").get<double>();
  if (overrides.contains("noise")) spec.noise_scale = overrides.at("noise").get<double>();
  if (overrides.contains("beta0")) {
    const auto v = overrides.at("beta0").get<std::vector<double>>();
    spec.beta0 = Eigen::Map<const Eigen::VectorXd>(v.data(), v.size());
  }
  if (overrides.contains("beta1")) {
    const auto v = overrides.at("beta1").get<std::vector<double>>();
    spec.beta1 = Eigen::Map<const Eigen::VectorXd>(v.data(), v.size());
  }

  const auto [sample, oracle] = mtefree::generate(spec);
  fs::create_directories(out_dir);
  write_sample_csv((fs::path(out_dir) / "sample.csv").string(), sample);

  json j;
  j["preset"] = preset;
  j["n"] = spec.n;
  j["seed"] = spec.seed;
  j["alpha0"] = oracle.alpha0;
  j["alpha1"] = oracle.alpha1;
  j["rho0"] = oracle.rho0;
  j["rho1"] = oracle.rho1;
  j["noise_scale"] = spec.noise_scale;
  j["beta0"] = std::vector<double>(oracle.beta0.data(),
                                   oracle.beta0.data() + oracle.beta0.size());
  j["beta1"] = std::vector<double>(oracle.beta1.data(),
                                   oracle.beta1.data() + oracle.beta1.size());
  j["alpha_diff"] = oracle.alpha1 - oracle.alpha0;
  j["rho_diff"] = oracle.rho1 - oracle.rho0;
  const Eigen::VectorXd beta_diff = oracle.beta_diff();
  j["beta_diff"] = std::vector<double>(beta_diff.data(), beta_diff.data() + beta_diff.size());
  j["mte"] = "alpha_diff + x . beta_diff + rho_diff * normal_quantile(v)";
  std::ofstream out(fs::path(out_dir) / "oracle.json");
  out << j.dump(2) << "\n";
  std::cout << "wrote " << (fs::path(out_dir) / "sample.csv").string() << " ("
            << sample.size() << " rows) and oracle.json\n";
  return 0;
}

int run_estimate(const CommonArgs& args, const std::string& procedure,
                 const std::string& second_step, int poly_degree, int bootstrap,
                 std::uint64_t seed, double ci_level, const std::vector<double>& late,
                 const std::vector<double>& profile, double pi_x, int hist_bins,
                 bool skip_diagnostics) {
  mtefree::ColumnConfig columns;
  mtefree::RunConfig cfg;
  if (!args.config_path.empty())
    apply_config_json(load_json_file(args.config_path), &columns, &cfg);
  apply_common_flags(args, &columns, &cfg);
  if (!procedure.empty()) cfg.procedure = mtefree::procedure_from_string(procedure);
  if (!second_step.empty())
    cfg.second_step = mtefree::second_step_from_string(second_step);
  if (poly_degree > 0) cfg.poly_degree = poly_degree;
  if (bootstrap >= 0) cfg.bootstrap = bootstrap;
  cfg.seed = seed;
  if (ci_level > 0.0) cfg.ci_level = ci_level;
  if (!late.empty()) {
    if (late.size() != 2)
      throw mtefree::ConfigError("cli", "--late needs two values v1 v2");
    cfg.late_v1 = late[0];
    cfg.late_v2 = late[1];
  }
  if (!profile.empty())
    cfg.profile = Eigen::Map<const Eigen::VectorXd>(profile.data(), profile.size());
  if (pi_x > 0.0) cfg.pi_x = pi_x;
  if (skip_diagnostics) cfg.with_diagnostics = false;

  mtefree::LoadReport report;
  const mtefree::Sample sample = load_input(args, columns, &report);
  if (report.rows_dropped > 0)
    std::cerr << report.rows_dropped << " row(s) dropped (missing values)\n";

  const mtefree::PipelineResult result = mtefree::run_pipeline(sample, cfg);

  fs::create_directories(args.out_dir);
  const fs::path dir(args.out_dir);
  mtefree::write_coefficients_txt((dir / "coefficients.txt").string(), sample, result);
  mtefree::write_coefficients_csv((dir / "coefficients.csv").string(), sample, result);
  mtefree::write_histogram_csv((dir / "score_histogram.csv").string(), sample, result,
                               hist_bins);
  if (result.separate) {
    mtefree::write_mte_curve_csv((dir / "mte_curve.csv").string(), result, false);
    mtefree::write_g_curves_csv((dir / "g_curves.csv").string(), result);
    mtefree::write_structural_csv((dir / "structural_curves.csv").string(), result);
    mtefree::write_response_csv((dir / "response_curves.csv").string(), result);
  }
  if (result.liv) {
    mtefree::write_mte_curve_csv((dir / "liv_mte_curve.csv").string(), result, true);
    mtefree::write_r_curve_csv((dir / "r_curve.csv").string(), result);
  }
  if (result.separate && result.liv)
    mtefree::write_mte_comparison_csv((dir / "mte_comparison.csv").string(), result);
  if (result.diagnostics) {
    mtefree::write_diagnostics((dir / "diagnostics.json").string(),
                               (dir / "diagnostics.txt").string(), *result.diagnostics);
    mtefree::write_nl1_curve_csv((dir / "nl1_curve.csv").string(), *result.diagnostics);
  }
  mtefree::write_summary_json((dir / "summary.json").string(), sample, result);
  mtefree::write_metadata_json((dir / "run_metadata.json").string(), cfg, result);

  std::cout << mtefree::format_coefficient_table(sample, result);
  if (result.diagnostics)
    std::cout << "\n" << mtefree::format_diagnostics_text(*result.diagnostics);
  std::cout << "\nartifacts written to " << fs::absolute(dir).string() << "\n";
  return 0;
}

int run_diagnose(const CommonArgs& args, bool strict, int bootstrap, std::uint64_t seed,
                 double tolerance, const std::vector<int>& cell_key) {
  mtefree::ColumnConfig columns;
  mtefree::RunConfig cfg;
  if (!args.config_path.empty())
    apply_config_json(load_json_file(args.config_path), &columns, &cfg);
  apply_common_flags(args, &columns, &cfg);

  mtefree::LoadReport report;
  const mtefree::Sample sample = load_input(args, columns, &report);

  mtefree::PropensityOptions popt;
  popt.kernel = cfg.kernel_propensity;
  popt.bandwidth = cfg.bw_propensity;
  popt.fixed_bandwidths = cfg.propensity_fixed_bandwidths;
  popt.leave_one_out = cfg.leave_one_out;
  popt.min_cell_size = cfg.min_cell_size;
  popt.threads = cfg.threads;

  mtefree::DiagnosticsConfig dcfg = cfg.diagnostics;
  if (tolerance > 0.0) dcfg.tolerance = tolerance;
  if (!cell_key.empty()) {
    Eigen::VectorXi key(cell_key.size());
    for (size_t i = 0; i < cell_key.size(); ++i)
      key[static_cast<Eigen::Index>(i)] = cell_key[i];
    dcfg.cell_key = key;
  }
  if (bootstrap > 0)
    dcfg.tolerance = mtefree::bootstrap_score_tolerance(sample, popt, dcfg, bootstrap,
                                                        seed, cfg.threads);

  mtefree::PropensityFit fit = mtefree::fit_propensity(sample, popt);
  fit = mtefree::trim(fit, cfg.trim_lower, cfg.trim_upper, sample);
  const mtefree::DiagnosticReport diag = mtefree::run_diagnostics(sample, fit, dcfg);

  fs::create_directories(args.out_dir);
  const fs::path dir(args.out_dir);
  mtefree::write_diagnostics((dir / "diagnostics.json").string(),
                             (dir / "diagnostics.txt").string(), diag);
  mtefree::write_nl1_curve_csv((dir / "nl1_curve.csv").string(), diag);
  std::cout << mtefree::format_diagnostics_text(diag);

  if (strict) {
    const bool nl_ok = (diag.nl1 && diag.nl1->detected) || (diag.nl2 && diag.nl2->detected);
    if (!nl_ok) {
      std::cerr << "strict mode: no nonlinearity evidence found (NL1/NL2 not detected)\n";
      return kExitDiagnostics;
    }
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Marginal treatment effects without instrumental variables"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(mtefree::kVersion));

  // simulate
  auto* sim = app.add_subcommand("simulate", "Generate a synthetic sample with a known MTE");
  std::string sim_preset = "separable";
  int sim_n = 0;
  std::uint64_t sim_seed = 1;
  std::string sim_out = ".";
  std::string sim_overrides;
  sim->add_option("--preset", sim_preset, "DGP preset name");
  sim->add_option("--n", sim_n, "Sample size")->required();
  sim->add_option("--seed", sim_seed, "RNG seed");
  sim->add_option("--out", sim_out, "Output directory");
  sim->add_option("--set", sim_overrides,
                  "JSON object overriding DGP fields, e.g. '{\"rho1\":0.3}'");

  // estimate
  auto* est = app.add_subcommand("estimate", "Run the full estimation pipeline");
  CommonArgs est_args;
  add_common_flags(est, &est_args);
  std::string est_procedure, est_second_step;
  int est_poly_degree = 0;
  int est_bootstrap = -1;
  std::uint64_t est_seed = 1;
  double est_ci = 0.0;
  std::vector<double> est_late, est_profile;
  double est_pi_x = 0.0;
  int est_hist_bins = 20;
  bool est_no_diag = false;
  est->add_option("--procedure", est_procedure, "separate|liv|both");
  est->add_option("--second-step", est_second_step, "semiparametric|normal|polynomial");
  est->add_option("--poly-degree", est_poly_degree, "Degree J for parametric second steps");
  est->add_option("--bootstrap", est_bootstrap, "Bootstrap replications B (0 disables)");
  est->add_option("--seed", est_seed, "Bootstrap seed");
  est->add_option("--ci-level", est_ci, "Confidence level (default 0.90)");
  est->add_option("--late", est_late, "LATE bounds v1 v2 (default 0.25 0.75)")
      ->expected(2);
  est->add_option("--profile", est_profile,
                  "Covariate profile for evaluation (default: sample means)");
  est->add_option("--pi-x", est_pi_x,
                  "pi(x) used by TT/TUT (default: mean fitted score)");
  est->add_option("--hist-bins", est_hist_bins, "Score histogram bins");
  est->add_flag("--no-diagnostics", est_no_diag, "Skip assumption diagnostics");

  // diagnose
  auto* diag = app.add_subcommand("diagnose", "Run assumption diagnostics only");
  CommonArgs diag_args;
  add_common_flags(diag, &diag_args);
  bool diag_strict = false;
  int diag_bootstrap = 0;
  std::uint64_t diag_seed = 1;
  double diag_tolerance = 0.0;
  std::vector<int> diag_cell;
  diag->add_flag("--strict", diag_strict,
                 "Exit 4 when no nonlinearity evidence is detected");
  diag->add_option("--bootstrap", diag_bootstrap,
                   "Calibrate the tolerance from B bootstrap replications");
  diag->add_option("--seed", diag_seed, "Bootstrap seed");
  diag->add_option("--tolerance", diag_tolerance, "Detection tolerance (default 0.02)");
  diag->add_option("--cell", diag_cell, "Discrete cell key (default: largest cell)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (sim->parsed()) {
      const json overrides =
          sim_overrides.empty() ? json::object() : json::parse(sim_overrides);
      return run_simulate(sim_preset, sim_n, sim_seed, sim_out, overrides);
    }
    if (est->parsed())
      return run_estimate(est_args, est_procedure, est_second_step, est_poly_degree,
                          est_bootstrap, est_seed, est_ci, est_late, est_profile,
                          est_pi_x, est_hist_bins, est_no_diag);
    if (diag->parsed())
      return run_diagnose(diag_args, diag_strict, diag_bootstrap, diag_seed,
                          diag_tolerance, diag_cell);
  } catch (const mtefree::ConfigError& e) {
    std::cerr << "config error [" << e.module() << "]: " << e.what() << "\n";
    return kExitConfig;
  } catch (const mtefree::EstimationError& e) {
    std::cerr << "estimation error [" << e.module() << "]: " << e.what()
              << "\nhint: check bandwidths, trimming, and cell sizes in run_metadata\n";
    return kExitEstimation;
  } catch (const json::exception& e) {
    std::cerr << "config error [cli]: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitEstimation;
  }
  return 0;
}

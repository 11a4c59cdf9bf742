#pragma once

#include <Eigen/Dense>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "mtefree/bootstrap.hpp"
#include "mtefree/data.hpp"
#include "mtefree/diagnostics.hpp"
#include "mtefree/effects.hpp"
#include "mtefree/liv.hpp"
#include "mtefree/propensity.hpp"
#include "mtefree/separate.hpp"
#include "mtefree/smoothing.hpp"

namespace mtefree {

enum class Procedure { separate, liv, both };
enum class SecondStep { semiparametric, normal, polynomial };

Procedure procedure_from_string(const std::string& name);
SecondStep second_step_from_string(const std::string& name);
std::string to_string(Procedure p);
std::string to_string(SecondStep s);

struct RunConfig {
  Procedure procedure = Procedure::separate;
  SecondStep second_step = SecondStep::semiparametric;
  int poly_degree = 1;

  KernelSpec kernel_propensity{KernelFamily::gaussian};
  KernelSpec kernel_pairwise{KernelFamily::gaussian};
  KernelSpec kernel_local_linear{KernelFamily::gaussian};
  BandwidthSpec bw_propensity = BandwidthSpec::rot();
  std::vector<double> propensity_fixed_bandwidths;  // per-dim override
  BandwidthSpec bw_pairwise = BandwidthSpec::rot();
  // Slope estimation wants a wider window; see README on bandwidths.
  BandwidthSpec bw_local_linear = BandwidthSpec::rot_derivative();

  double trim_lower = 0.01;
  double trim_upper = 0.01;
  bool leave_one_out = false;
  int min_cell_size = 10;
  int grid_size = 101;
  double late_v1 = 0.25;
  double late_v2 = 0.75;
  // Evaluation profile; kept-row covariate means when unset.
  std::optional<Eigen::VectorXd> profile;
  // pi(x) for TT/TUT; mean kept score when unset.
  std::optional<double> pi_x;
  // Internal: bootstrap replications reuse the point run's grid.
  std::optional<Eigen::VectorXd> fixed_v_grid;

  int bootstrap = 0;  // replication count B; 0 disables
  std::uint64_t seed = 1;
  double ci_level = 0.90;
  int threads = 0;
  bool with_diagnostics = true;
  DiagnosticsConfig diagnostics;

  void validate() const;
  ParametricSpec parametric_spec() const;
};

// Separate-procedure estimates, all curves on the common v_grid.
struct SeparateEstimates {
  ArmFit arm0, arm1;
  std::optional<Eigen::VectorXd> theta0, theta1;  // parametric second step
  Eigen::VectorXd g0, g0_deriv, g1, g1_deriv;     // evaluated on v_grid
  std::vector<std::uint8_t> v_flags;              // clamped outside arm support
  MteCurve mte;
  CausalSummary params;
  Eigen::VectorXd eu0, eu1;  // E[U_d | V = v] on v_grid
  Eigen::VectorXd structural0, structural1;
  ResponseCurves response;
};

struct LivEstimates {
  LivFit fit;
  std::optional<double> alpha0;           // parametric second step only
  std::optional<Eigen::VectorXd> theta;
  MteCurve mte;
  CausalSummary params;
};

struct RunMetadata {
  std::vector<double> h1;
  double h2 = 0.0, h3 = 0.0;
  int n_total = 0, n_kept = 0;
  int n_trimmed_low = 0, n_trimmed_high = 0, n_dropped_cell_rows = 0;
  int n_kept_treated = 0, n_kept_untreated = 0;
  std::uint64_t seed = 0;
  std::string version;
  std::vector<std::string> warnings;
};

struct BootstrapBands {
  int requested = 0;
  int completed = 0;
  double level = 0.90;
  std::vector<std::string> failures;
  // Per-target component summaries, keyed by block name, e.g.
  // "separate.beta1", "separate.ate", "separate.mte", "liv.delta".
  std::map<std::string, std::vector<BootstrapSummary>> blocks;

  const std::vector<BootstrapSummary>* find(const std::string& name) const;
};

struct PipelineResult {
  Eigen::VectorXd v_grid;
  Eigen::VectorXd profile;
  double pi_x = 0.0;
  PropensityFit propensity;
  std::optional<SeparateEstimates> separate;
  std::optional<LivEstimates> liv;
  std::optional<DiagnosticReport> diagnostics;
  std::optional<BootstrapBands> bands;
  RunMetadata meta;
};

// Full run: propensity fit and trim, second step(s), effect assembly,
// diagnostics, and the optional bootstrap over the whole thing.
PipelineResult run_pipeline(const Sample& s, const RunConfig& config);

}  // namespace mtefree

#pragma once

#include <Eigen/Dense>
#include <array>
#include <optional>
#include <string>
#include <vector>

#include "mtefree/data.hpp"
#include "mtefree/propensity.hpp"

namespace mtefree {

// All checks read the fitted score function pi0 along continuous
// covariates inside one discrete-covariate cell; derivatives come from
// central finite differences of the (smooth) evaluator.

struct Nl1Finding {
  bool detected = false;
  bool degenerate_constant = false;  // everywhere-equal scores: any pair ties
  double witness_x = 0.0;
  double witness_x_tilde = 0.0;
  double score_gap = 0.0;            // |pi(x) - pi(x_tilde)| at the witness pair
  double tolerance = 0.0;
  int cont_index = 0;
  Eigen::VectorXi cell_key;
  Eigen::VectorXd grid_x;            // score curve for plotting
  Eigen::VectorXd grid_score;
};

// Nonmonotonicity of pi0 over one continuous covariate: grid points
// a < b < c with opposite-signed moves larger than the tolerance, plus a
// level-matched witness pair refined by bisection.
Nl1Finding check_nl1(const Sample& s, const PropensityFit& fit, const Cell& cell,
                     int cont_index, int grid_size = 201, double tolerance = 0.02);

struct Nl2Finding {
  bool detected = false;
  std::array<bool, 4> nonzero_clauses{};  // clauses (i)-(iv)
  bool ratio_clause = false;              // clause (v)
  double dk_at_a = 0.0, dj_at_a = 0.0, dk_at_b = 0.0, dj_at_b = 0.0;
  double ratio_at_a = 0.0, ratio_at_b = 0.0;
  Eigen::VectorXd point_a, point_b;
  double tolerance = 0.0;
  int index_k = 0, index_j = 0;
  Eigen::VectorXi cell_key;
};

// Gradient-ratio check at two evaluation points: partials along k and j
// nonzero at both points and the ratios differing by more than the
// tolerance. A near-zero partial is a reported clause failure, not an
// exception.
Nl2Finding check_nl2(const Sample& s, const PropensityFit& fit, const Cell& cell,
                     int index_k, int index_j, const Eigen::VectorXd& point_a,
                     const Eigen::VectorXd& point_b, double tolerance = 0.02);

struct StationaryFinding {
  bool detected = false;
  bool degenerate_constant = false;  // slope ~ 0 everywhere
  double location = 0.0;
  double min_abs_slope = 0.0;
  double tolerance = 0.0;
  int cont_index = 0;
  Eigen::VectorXi cell_key;
  Eigen::VectorXd grid_x;
  Eigen::VectorXd grid_slope;
};

// Searches for a zero of the score slope along one continuous covariate:
// a sign change between grid points or a slope below the tolerance.
StationaryFinding check_stationary(const Sample& s, const PropensityFit& fit,
                                   const Cell& cell, int cont_index,
                                   int grid_size = 201, double tolerance = 0.02);

struct SupportReport {
  double p_lo = 0.0, p_hi = 1.0;
  int n_total = 0, n_kept = 0;
  int n_trimmed_low = 0, n_trimmed_high = 0;
  int n_dropped_cell_rows = 0;
  int n_kept_treated = 0, n_kept_untreated = 0;
};

SupportReport support_report(const Sample& s, const PropensityFit& fit);

struct DiagnosticsConfig {
  int grid_size = 201;
  double tolerance = 0.02;
  int cont_index = 0;
  int nl2_k = 0, nl2_j = 1;
  std::optional<Eigen::VectorXi> cell_key;  // default: the largest fitted cell
};

struct DiagnosticReport {
  std::optional<Nl1Finding> nl1;
  std::optional<Nl2Finding> nl2;              // only when dim(X^C) >= 2
  std::optional<StationaryFinding> stationary;  // only when dim(X^C) == 1
  SupportReport support;
  Eigen::VectorXi cell_key;
  int cell_size = 0;
};

// Runs the applicable checks on one cell (largest fitted cell by default;
// NL2 evaluation points default to the cell's 0.3/0.7 covariate quantiles).
DiagnosticReport run_diagnostics(const Sample& s, const PropensityFit& fit,
                                 const DiagnosticsConfig& config = {});

// Tolerance rule when the bootstrap is on: twice the median pointwise
// bootstrap SE of the score curve on the NL1 grid.
double bootstrap_score_tolerance(const Sample& s, const PropensityOptions& options,
                                 const DiagnosticsConfig& config, int B,
                                 std::uint64_t seed, int threads = 0);

}  // namespace mtefree

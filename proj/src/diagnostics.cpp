#include "mtefree/diagnostics.hpp"

#include <algorithm>
#include <cmath>

#include "mtefree/bootstrap.hpp"
#include "mtefree/common.hpp"

namespace mtefree {

namespace {

// Evaluation frame along one continuous covariate inside a cell: the other
// continuous dims are pinned at their cell medians, the discrete dims at
// the cell key.
struct CellFrame {
  Eigen::VectorXd base;  // continuous point with medians filled in
  Eigen::VectorXi key;
  int cont_index = 0;
  double lo = 0.0, hi = 0.0;  // inner quantile range of the covariate
  double fd_step = 0.0;
};

double quantile_of(std::vector<double> v, double q) {
  std::sort(v.begin(), v.end());
  const double pos = q * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<size_t>(pos);
  const size_t hi = std::min(lo + 1, v.size() - 1);
  const double f = pos - static_cast<double>(lo);
  return v[lo] + f * (v[hi] - v[lo]);
}

CellFrame make_frame(const Sample& s, const PropensityFit& fit, const Cell& cell,
                     int cont_index) {
  if (cont_index < 0 || cont_index >= s.dim_cont())
    throw ConfigError("diagnostics", "continuous covariate index out of range");
  if (cell.rows.size() < 2)
    throw EstimationError("diagnostics", "insufficient data in cell");

  CellFrame frame;
  frame.key = cell.key;
  frame.cont_index = cont_index;
  frame.base.resize(s.dim_cont());
  for (int l = 0; l < s.dim_cont(); ++l) {
    std::vector<double> col;
    col.reserve(cell.rows.size());
    for (int i : cell.rows) col.push_back(s.x_cont(i, l));
    frame.base[l] = quantile_of(col, 0.5);
    if (l == cont_index) {
      // Inner quantiles: the kernel estimate is unstable at the very edge
      // of the cell's data.
      frame.lo = quantile_of(col, 0.025);
      frame.hi = quantile_of(col, 0.975);
    }
  }
  if (!(frame.hi > frame.lo))
    throw EstimationError("diagnostics", "covariate has no spread inside the cell");
  const double h = cont_index < static_cast<int>(fit.bandwidths.size())
                       ? fit.bandwidths[cont_index]
                       : 0.0;
  frame.fd_step = h > 0.0 ? 1e-3 * h : 1e-5 * (frame.hi - frame.lo);
  return frame;
}

double score_at(const PropensityFit& fit, const CellFrame& frame, double x) {
  Eigen::VectorXd point = frame.base;
  point[frame.cont_index] = x;
  return fit.evaluator(point, frame.key);
}

double partial_at(const PropensityFit& fit, const CellFrame& frame, int dim,
                  const Eigen::VectorXd& xc) {
  const double h = dim < static_cast<int>(fit.bandwidths.size()) && fit.bandwidths[dim] > 0.0
                       ? 1e-3 * fit.bandwidths[dim]
                       : 1e-5 * (std::abs(xc[dim]) + 1.0);
  Eigen::VectorXd plus = xc, minus = xc;
  plus[dim] += h;
  minus[dim] -= h;
  return (fit.evaluator(plus, frame.key) - fit.evaluator(minus, frame.key)) / (2.0 * h);
}

// Bisection for pi(x) = level between bracketing grid abscissae.
double bisect_level(const PropensityFit& fit, const CellFrame& frame, double a, double b,
                    double level) {
  double fa = score_at(fit, frame, a) - level;
  for (int it = 0; it < 60; ++it) {
    const double mid = 0.5 * (a + b);
    const double fm = score_at(fit, frame, mid) - level;
    if ((fa <= 0.0) == (fm <= 0.0)) {
      a = mid;
      fa = fm;
    } else {
      b = mid;
    }
  }
  return 0.5 * (a + b);
}

}  // namespace

Nl1Finding check_nl1(const Sample& s, const PropensityFit& fit, const Cell& cell,
                     int cont_index, int grid_size, double tolerance) {
  if (grid_size < 3) throw ConfigError("diagnostics", "grid_size must be at least 3");
  const CellFrame frame = make_frame(s, fit, cell, cont_index);

  Nl1Finding out;
  out.tolerance = tolerance;
  out.cont_index = cont_index;
  out.cell_key = cell.key;
  out.grid_x.resize(grid_size);
  out.grid_score.resize(grid_size);
  for (int i = 0; i < grid_size; ++i) {
    out.grid_x[i] = frame.lo + (frame.hi - frame.lo) * i / (grid_size - 1);
    out.grid_score[i] = score_at(fit, frame, out.grid_x[i]);
  }

  const double span = out.grid_score.maxCoeff() - out.grid_score.minCoeff();
  if (span <= tolerance) {
    out.detected = true;
    out.degenerate_constant = true;
    out.witness_x = out.grid_x[0];
    out.witness_x_tilde = out.grid_x[grid_size - 1];
    out.score_gap = std::abs(out.grid_score[grid_size - 1] - out.grid_score[0]);
    return out;
  }

  // Peak case: a rise above tolerance before b and a fall above tolerance
  // after b (valley case mirrored). Prefix/suffix extremes give the
  // flanking points for the witness construction in one pass.
  auto scan = [&](bool peak) -> bool {
    const double sign = peak ? 1.0 : -1.0;
    std::vector<double> prefix_ext(grid_size), suffix_ext(grid_size);
    std::vector<int> prefix_arg(grid_size), suffix_arg(grid_size);
    prefix_ext[0] = sign * out.grid_score[0];
    prefix_arg[0] = 0;
    for (int i = 1; i < grid_size; ++i) {
      if (sign * out.grid_score[i] < prefix_ext[i - 1]) {
        prefix_ext[i] = sign * out.grid_score[i];
        prefix_arg[i] = i;
      } else {
        prefix_ext[i] = prefix_ext[i - 1];
        prefix_arg[i] = prefix_arg[i - 1];
      }
    }
    suffix_ext[grid_size - 1] = sign * out.grid_score[grid_size - 1];
    suffix_arg[grid_size - 1] = grid_size - 1;
    for (int i = grid_size - 2; i >= 0; --i) {
      if (sign * out.grid_score[i] < suffix_ext[i + 1]) {
        suffix_ext[i] = sign * out.grid_score[i];
        suffix_arg[i] = i;
      } else {
        suffix_ext[i] = suffix_ext[i + 1];
        suffix_arg[i] = suffix_arg[i + 1];
      }
    }
    for (int b = 1; b + 1 < grid_size; ++b) {
      const double here = sign * out.grid_score[b];
      if (here - prefix_ext[b - 1] > tolerance && here - suffix_ext[b + 1] > tolerance) {
        const int a = prefix_arg[b - 1];
        const int c = suffix_arg[b + 1];
        // Level between the higher shoulder and the extremum, matched on
        // both flanks by bisection.
        const double shoulder =
            std::max(sign * out.grid_score[a], sign * out.grid_score[c]);
        const double level = sign * 0.5 * (shoulder + here);
        out.witness_x =
            bisect_level(fit, frame, out.grid_x[a], out.grid_x[b], level);
        out.witness_x_tilde =
            bisect_level(fit, frame, out.grid_x[b], out.grid_x[c], level);
        out.score_gap = std::abs(score_at(fit, frame, out.witness_x) -
                                 score_at(fit, frame, out.witness_x_tilde));
        out.detected = true;
        return true;
      }
    }
    return false;
  };

  if (!scan(true)) scan(false);
  return out;
}

Nl2Finding check_nl2(const Sample& s, const PropensityFit& fit, const Cell& cell,
                     int index_k, int index_j, const Eigen::VectorXd& point_a,
                     const Eigen::VectorXd& point_b, double tolerance) {
  if (s.dim_cont() < 2)
    throw ConfigError("diagnostics", "NL2 needs at least two continuous covariates");
  if (index_k == index_j || index_k < 0 || index_j < 0 || index_k >= s.dim_cont() ||
      index_j >= s.dim_cont())
    throw ConfigError("diagnostics", "invalid covariate indices for NL2");
  if (point_a.size() != s.dim_cont() || point_b.size() != s.dim_cont())
    throw ConfigError("diagnostics", "NL2 evaluation points have wrong dimension");

  const CellFrame frame = make_frame(s, fit, cell, index_k);

  Nl2Finding out;
  out.tolerance = tolerance;
  out.index_k = index_k;
  out.index_j = index_j;
  out.point_a = point_a;
  out.point_b = point_b;
  out.cell_key = cell.key;
  out.dk_at_a = partial_at(fit, frame, index_k, point_a);
  out.dj_at_a = partial_at(fit, frame, index_j, point_a);
  out.dk_at_b = partial_at(fit, frame, index_k, point_b);
  out.dj_at_b = partial_at(fit, frame, index_j, point_b);

  out.nonzero_clauses[0] = std::abs(out.dk_at_a) > tolerance;
  out.nonzero_clauses[1] = std::abs(out.dj_at_a) > tolerance;
  out.nonzero_clauses[2] = std::abs(out.dk_at_b) > tolerance;
  out.nonzero_clauses[3] = std::abs(out.dj_at_b) > tolerance;

  const bool denominators_ok = out.nonzero_clauses[1] && out.nonzero_clauses[3];
  if (denominators_ok) {
    out.ratio_at_a = out.dk_at_a / out.dj_at_a;
    out.ratio_at_b = out.dk_at_b / out.dj_at_b;
    out.ratio_clause = std::abs(out.ratio_at_a - out.ratio_at_b) > tolerance;
  }
  out.detected = out.nonzero_clauses[0] && out.nonzero_clauses[1] &&
                 out.nonzero_clauses[2] && out.nonzero_clauses[3] && out.ratio_clause;
  return out;
}

StationaryFinding check_stationary(const Sample& s, const PropensityFit& fit,
                                   const Cell& cell, int cont_index, int grid_size,
                                   double tolerance) {
  if (grid_size < 3) throw ConfigError("diagnostics", "grid_size must be at least 3");
  const CellFrame frame = make_frame(s, fit, cell, cont_index);

  StationaryFinding out;
  out.tolerance = tolerance;
  out.cont_index = cont_index;
  out.cell_key = cell.key;
  out.grid_x.resize(grid_size);
  out.grid_slope.resize(grid_size);
  for (int i = 0; i < grid_size; ++i) {
    const double x = frame.lo + (frame.hi - frame.lo) * i / (grid_size - 1);
    const double step = frame.fd_step;
    out.grid_x[i] = x;
    out.grid_slope[i] =
        (score_at(fit, frame, x + step) - score_at(fit, frame, x - step)) / (2.0 * step);
  }

  out.min_abs_slope = out.grid_slope.cwiseAbs().minCoeff();
  if (out.grid_slope.cwiseAbs().maxCoeff() <= tolerance) {
    out.detected = true;
    out.degenerate_constant = true;
    out.location = out.grid_x[0];
    return out;
  }
  for (int i = 0; i < grid_size; ++i) {
    if (std::abs(out.grid_slope[i]) <= tolerance) {
      out.detected = true;
      out.location = out.grid_x[i];
      return out;
    }
    if (i + 1 < grid_size && out.grid_slope[i] * out.grid_slope[i + 1] < 0.0) {
      const double f =
          out.grid_slope[i] / (out.grid_slope[i] - out.grid_slope[i + 1]);
      out.detected = true;
      out.location = out.grid_x[i] + f * (out.grid_x[i + 1] - out.grid_x[i]);
      return out;
    }
  }
  return out;
}

SupportReport support_report(const Sample& s, const PropensityFit& fit) {
  SupportReport out;
  out.p_lo = fit.support_lo;
  out.p_hi = fit.support_hi;
  out.n_total = static_cast<int>(s.size());
  out.n_kept = fit.kept_count();
  out.n_trimmed_low = fit.n_trimmed_low;
  out.n_trimmed_high = fit.n_trimmed_high;
  for (const Cell& cell : fit.dropped_cells)
    out.n_dropped_cell_rows += static_cast<int>(cell.rows.size());
  for (int i : fit.kept_rows())
    (s.d[i] == 1 ? out.n_kept_treated : out.n_kept_untreated) += 1;
  return out;
}

namespace {

const Cell& pick_cell(const PropensityFit& fit, const DiagnosticsConfig& config) {
  if (config.cell_key) {
    for (const Cell& cell : fit.cells)
      if (cell.key == *config.cell_key) return cell;
    throw ConfigError("diagnostics", "requested cell key not found among fitted cells");
  }
  const Cell* best = nullptr;
  for (const Cell& cell : fit.cells)
    if (!best || cell.rows.size() > best->rows.size()) best = &cell;
  if (!best) throw EstimationError("diagnostics", "no fitted cells");
  return *best;
}

}  // namespace

DiagnosticReport run_diagnostics(const Sample& s, const PropensityFit& fit,
                                 const DiagnosticsConfig& config) {
  const Cell& cell = pick_cell(fit, config);

  DiagnosticReport report;
  report.cell_key = cell.key;
  report.cell_size = static_cast<int>(cell.rows.size());
  report.support = support_report(s, fit);
  report.nl1 = check_nl1(s, fit, cell, config.cont_index, config.grid_size,
                         config.tolerance);
  if (s.dim_cont() == 1) {
    report.stationary = check_stationary(s, fit, cell, config.cont_index,
                                         config.grid_size, config.tolerance);
  } else {
    Eigen::VectorXd a(s.dim_cont()), b(s.dim_cont());
    for (int l = 0; l < s.dim_cont(); ++l) {
      std::vector<double> col;
      col.reserve(cell.rows.size());
      for (int i : cell.rows) col.push_back(s.x_cont(i, l));
      a[l] = quantile_of(col, 0.3);
      b[l] = quantile_of(col, 0.7);
    }
    report.nl2 = check_nl2(s, fit, cell, config.nl2_k, config.nl2_j, a, b,
                           config.tolerance);
  }
  return report;
}

double bootstrap_score_tolerance(const Sample& s, const PropensityOptions& options,
                                 const DiagnosticsConfig& config, int B,
                                 std::uint64_t seed, int threads) {
  PropensityFit fit = fit_propensity(s, options);
  const Cell& cell = pick_cell(fit, config);
  const CellFrame frame = make_frame(s, fit, cell, config.cont_index);
  Eigen::VectorXd grid(config.grid_size);
  for (int i = 0; i < config.grid_size; ++i)
    grid[i] = frame.lo + (frame.hi - frame.lo) * i / (config.grid_size - 1);

  const auto stat = [&](const std::vector<int>& rows) -> Eigen::VectorXd {
    const Sample resampled = s.subset(rows);
    const PropensityFit refit = fit_propensity(resampled, options);
    Eigen::VectorXd values(grid.size());
    Eigen::VectorXd point = frame.base;
    for (Eigen::Index i = 0; i < grid.size(); ++i) {
      point[config.cont_index] = grid[i];
      values[i] = refit.evaluator(point, frame.key);
    }
    return values;
  };
  const BootstrapDraws draws = bootstrap_statistic(static_cast<int>(s.size()), B, seed,
                                                   stat, config.grid_size, threads);
  std::vector<double> ses;
  for (int i = 0; i < config.grid_size; ++i) ses.push_back(draws.se(i));
  return 2.0 * quantile_of(ses, 0.5);
}

}  // namespace mtefree

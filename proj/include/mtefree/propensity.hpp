#pragma once

#include <Eigen/Dense>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "mtefree/data.hpp"
#include "mtefree/smoothing.hpp"

namespace mtefree {

struct PropensityOptions {
  KernelSpec kernel;                       // k1, applied per continuous dim
  BandwidthSpec bandwidth;                 // resolved per dim on the full column
  std::vector<double> fixed_bandwidths;    // per-dim override when nonempty
  bool leave_one_out = false;              // default: own row contributes
  int min_cell_size = 10;                  // smaller cells are dropped with a warning
  int threads = 0;
};

// First-step fit: kernel-weighted mean of D within the discrete-covariate
// cell, product kernel over the continuous covariates.
struct PropensityFit {
  Eigen::VectorXd scores;            // fitted score per sample row, in [0, 1]
  std::vector<std::uint8_t> kept;    // false for trimmed rows and dropped cells
  double support_lo = 0.0;           // [min, max] of kept scores
  double support_hi = 1.0;
  std::vector<double> bandwidths;    // resolved h_1l per continuous dim
  std::function<double(const Eigen::VectorXd&, const Eigen::VectorXi&)> evaluator;
  std::vector<Cell> cells;           // fitted cells
  std::vector<Cell> dropped_cells;   // below min_cell_size
  std::vector<std::string> warnings;
  int n_trimmed_low = 0;
  int n_trimmed_high = 0;

  int kept_count() const;
  std::vector<int> kept_rows() const;
  std::vector<int> kept_rows_arm(const Sample& s, int arm) const;
  std::vector<double> kept_scores() const;
};

PropensityFit fit_propensity(const Sample& s, const PropensityOptions& options = {});

// Marks excluded the ceil(lower_pct * n) smallest and ceil(upper_pct * n)
// largest scores among currently kept rows; ties break by (score, row
// index). Support becomes the kept-score range. Errors if a treatment arm
// would be emptied.
PropensityFit trim(const PropensityFit& fit, double lower_pct, double upper_pct,
                   const Sample& s);

struct HistogramRow {
  double lo = 0.0, hi = 0.0;
  int count_treated = 0, count_untreated = 0;
};

// Frequency table of kept fitted scores by treatment status over [0, 1].
std::vector<HistogramRow> score_histogram(const PropensityFit& fit, const Sample& s,
                                          int bins = 20);

}  // namespace mtefree

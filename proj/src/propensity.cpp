#include "mtefree/propensity.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "mtefree/common.hpp"

namespace mtefree {

namespace {

// Data the evaluator needs after the Sample may be gone.
struct EvalData {
  Eigen::MatrixXd x_cont;
  Eigen::VectorXi d;
  std::vector<double> bandwidths;
  KernelSpec kernel;
  // Fitted cells keyed for lookup; dropped cells map to -1.
  std::map<std::vector<int>, int> cell_index;
  std::vector<std::vector<int>> cell_rows;
};

std::vector<int> key_of(const Eigen::VectorXi& key) {
  return std::vector<int>(key.data(), key.data() + key.size());
}

// Nadaraya-Watson mean of D at xc within one cell. skip_row excludes one
// observation (leave-one-out fitting); pass -1 to include all.
double nw_score(const EvalData& data, const std::vector<int>& rows,
                const Eigen::VectorXd& xc, int skip_row) {
  double mass = 0.0, hit = 0.0;
  const int dims = static_cast<int>(data.bandwidths.size());
  for (int i : rows) {
    if (i == skip_row) continue;
    double w = 1.0;
    for (int l = 0; l < dims && w > 0.0; ++l)
      w *= kernel_eval(data.kernel, (data.x_cont(i, l) - xc[l]) / data.bandwidths[l]);
    mass += w;
    hit += w * data.d[i];
  }
  if (!(mass > 0.0))
    throw EstimationError("propensity", "no local data: zero kernel mass at evaluation point");
  // Weights are nonnegative, so this clips only floating-point spill.
  return std::clamp(hit / mass, 0.0, 1.0);
}

}  // namespace

int PropensityFit::kept_count() const {
  int c = 0;
  for (auto k : kept) c += (k != 0);
  return c;
}

std::vector<int> PropensityFit::kept_rows() const {
  std::vector<int> rows;
  rows.reserve(kept.size());
  for (size_t i = 0; i < kept.size(); ++i)
    if (kept[i]) rows.push_back(static_cast<int>(i));
  return rows;
}

std::vector<int> PropensityFit::kept_rows_arm(const Sample& s, int arm) const {
  std::vector<int> rows;
  for (size_t i = 0; i < kept.size(); ++i)
    if (kept[i] && s.d[static_cast<Eigen::Index>(i)] == arm)
      rows.push_back(static_cast<int>(i));
  return rows;
}

std::vector<double> PropensityFit::kept_scores() const {
  std::vector<double> out;
  out.reserve(kept.size());
  for (size_t i = 0; i < kept.size(); ++i)
    if (kept[i]) out.push_back(scores[static_cast<Eigen::Index>(i)]);
  return out;
}

PropensityFit fit_propensity(const Sample& s, const PropensityOptions& options) {
  s.validate();
  s.require_both_arms("propensity");
  if (options.min_cell_size < 2)
    throw ConfigError("propensity", "min_cell_size must be at least 2");

  auto data = std::make_shared<EvalData>();
  data->x_cont = s.x_cont;
  data->d = s.d;
  data->kernel = options.kernel;

  // Bandwidth per continuous dim, resolved once on the full column.
  const int dims = s.dim_cont();
  if (!options.fixed_bandwidths.empty() &&
      static_cast<int>(options.fixed_bandwidths.size()) != dims)
    throw ConfigError("propensity", "fixed_bandwidths length must match dim(X^C)");
  for (int l = 0; l < dims; ++l) {
    double h;
    if (!options.fixed_bandwidths.empty()) {
      h = options.fixed_bandwidths[l];
      if (!(h > 0.0) || !std::isfinite(h))
        throw ConfigError("propensity", "fixed bandwidth must be positive and finite");
    } else {
      const Eigen::VectorXd col = s.x_cont.col(l);
      h = resolve_bandwidth(options.bandwidth, std::span<const double>(col.data(), col.size()));
    }
    data->bandwidths.push_back(h);
  }

  PropensityFit fit;
  fit.bandwidths = data->bandwidths;
  fit.scores.setZero(s.size());
  fit.kept.assign(static_cast<size_t>(s.size()), 1);

  const std::vector<Cell> cells = split_cells(s);
  const int min_size = std::max(2, options.min_cell_size);
  for (const Cell& cell : cells) {
    if (static_cast<int>(cell.rows.size()) < min_size) {
      fit.dropped_cells.push_back(cell);
      std::string key_str;
      for (Eigen::Index k = 0; k < cell.key.size(); ++k)
        key_str += (k ? "," : "") + std::to_string(cell.key[k]);
      fit.warnings.push_back("cell (" + key_str + ") has " +
                             std::to_string(cell.rows.size()) +
                             " rows, below minimum " + std::to_string(min_size) +
                             "; rows excluded");
      // Unfit rows keep the cell mean of D as a placeholder score but are
      // excluded from estimation.
      double mean_d = 0.0;
      for (int i : cell.rows) mean_d += s.d[i];
      mean_d /= static_cast<double>(cell.rows.size());
      for (int i : cell.rows) {
        fit.scores[i] = mean_d;
        fit.kept[i] = 0;
      }
      continue;
    }
    fit.cells.push_back(cell);
    data->cell_index[key_of(cell.key)] = static_cast<int>(data->cell_rows.size());
    data->cell_rows.push_back(cell.rows);
  }
  if (fit.cells.empty())
    throw EstimationError("propensity", "all cells fall below the minimum cell size");

  // Fitted score per row; pure per-point computation, so the parallel
  // schedule cannot change the result.
  const bool loo = options.leave_one_out;
  for (const Cell& cell : fit.cells) {
    const auto& rows = cell.rows;
    parallel_for(static_cast<int>(rows.size()), options.threads, [&](int r) {
      const int i = rows[r];
      fit.scores[i] = nw_score(*data, rows, s.x_cont.row(i).transpose(), loo ? i : -1);
    });
  }

  fit.evaluator = [data](const Eigen::VectorXd& xc, const Eigen::VectorXi& xd) {
    if (xc.size() != static_cast<Eigen::Index>(data->bandwidths.size()))
      throw ConfigError("propensity", "evaluation point has wrong continuous dimension");
    auto it = data->cell_index.find(key_of(xd));
    if (it == data->cell_index.end())
      throw EstimationError("propensity", "empty cell at evaluation point");
    return nw_score(*data, data->cell_rows[it->second], xc, -1);
  };

  double lo = 1.0, hi = 0.0;
  for (Eigen::Index i = 0; i < s.size(); ++i) {
    if (!fit.kept[i]) continue;
    lo = std::min(lo, fit.scores[i]);
    hi = std::max(hi, fit.scores[i]);
  }
  fit.support_lo = lo;
  fit.support_hi = hi;
  return fit;
}

PropensityFit trim(const PropensityFit& fit, double lower_pct, double upper_pct,
                   const Sample& s) {
  if (!(lower_pct >= 0.0 && lower_pct < 0.5) || !(upper_pct >= 0.0 && upper_pct < 0.5))
    throw ConfigError("propensity", "trim fractions must lie in [0, 0.5)");

  PropensityFit out = fit;
  std::vector<int> rows = fit.kept_rows();
  const auto n = static_cast<double>(rows.size());
  const int n_lo = static_cast<int>(std::ceil(lower_pct * n - 1e-12));
  const int n_hi = static_cast<int>(std::ceil(upper_pct * n - 1e-12));
  if (n_lo + n_hi >= static_cast<int>(rows.size()))
    throw EstimationError("propensity", "trimming would remove every observation");

  std::sort(rows.begin(), rows.end(), [&](int a, int b) {
    if (fit.scores[a] != fit.scores[b]) return fit.scores[a] < fit.scores[b];
    return a < b;
  });
  for (int k = 0; k < n_lo; ++k) out.kept[rows[k]] = 0;
  for (int k = 0; k < n_hi; ++k) out.kept[rows[rows.size() - 1 - k]] = 0;
  out.n_trimmed_low = fit.n_trimmed_low + n_lo;
  out.n_trimmed_high = fit.n_trimmed_high + n_hi;

  int arm1 = 0, arm0 = 0;
  double lo = 1.0, hi = 0.0;
  for (size_t i = 0; i < out.kept.size(); ++i) {
    if (!out.kept[i]) continue;
    const auto row = static_cast<Eigen::Index>(i);
    (s.d[row] == 1 ? arm1 : arm0) += 1;
    lo = std::min(lo, out.scores[row]);
    hi = std::max(hi, out.scores[row]);
  }
  if (arm1 == 0 || arm0 == 0)
    throw EstimationError("propensity", "trimming emptied a treatment arm");
  out.support_lo = lo;
  out.support_hi = hi;
  return out;
}

std::vector<HistogramRow> score_histogram(const PropensityFit& fit, const Sample& s,
                                          int bins) {
  if (bins < 1) throw ConfigError("propensity", "histogram needs at least one bin");
  std::vector<HistogramRow> table(bins);
  const double width = 1.0 / bins;
  for (int b = 0; b < bins; ++b) {
    table[b].lo = b * width;
    table[b].hi = (b + 1) * width;
  }
  for (size_t i = 0; i < fit.kept.size(); ++i) {
    if (!fit.kept[i]) continue;
    const auto row = static_cast<Eigen::Index>(i);
    int b = std::min(bins - 1, static_cast<int>(fit.scores[row] / width));
    (s.d[row] == 1 ? table[b].count_treated : table[b].count_untreated) += 1;
  }
  return table;
}

}  // namespace mtefree

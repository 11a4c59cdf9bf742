#pragma once

// Internal machinery shared by the separate and LIV second steps: blocked
// weighted pair sums and the pointwise local-linear solver. Pair blocks are
// fixed by item count and the block partials are reduced in a fixed
// pairwise tree, so the result is bit-identical for any thread count.

#include <Eigen/Dense>
#include <algorithm>
#include <span>
#include <vector>

#include "mtefree/common.hpp"
#include "mtefree/data.hpp"
#include "mtefree/propensity.hpp"
#include "mtefree/separate.hpp"
#include "mtefree/smoothing.hpp"

namespace mtefree::detail {

struct PairInputs {
  std::vector<double> score;  // ascending; ties keep original row order
  Eigen::MatrixXd x;          // covariates aligned with score
  std::vector<double> y;
};

inline PairInputs make_pair_inputs(const Sample& s, const PropensityFit& fit,
                                   const std::vector<int>& rows) {
  std::vector<int> order = rows;
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    if (fit.scores[a] != fit.scores[b]) return fit.scores[a] < fit.scores[b];
    return a < b;
  });
  PairInputs in;
  const auto m = static_cast<Eigen::Index>(order.size());
  in.score.resize(m);
  in.y.resize(m);
  in.x.resize(m, s.dim_x());
  for (Eigen::Index r = 0; r < m; ++r) {
    const int i = order[r];
    in.score[r] = fit.scores[i];
    in.y[r] = s.y[i];
    in.x.row(r) = s.covariate_row(i).transpose();
  }
  return in;
}

// Accumulates gram += w rr', rhs += w r (y_i - y_j) over pairs i < j with
// w = k2((p_i - p_j) / h2). build(i, j, reg) fills the regressor. With the
// compact epanechnikov kernel the sorted scores let the inner loop stop at
// the first pair outside the bandwidth.
template <typename BuildRegressor>
void weighted_pair_sums(const PairInputs& in, const KernelSpec& k2, double h2,
                        int dim, BuildRegressor build, int threads,
                        Eigen::MatrixXd* gram, Eigen::VectorXd* rhs,
                        double* total_weight) {
  const int m = static_cast<int>(in.score.size());
  const bool compact = k2.family == KernelFamily::epanechnikov;

  struct Partial {
    Eigen::MatrixXd gram;
    Eigen::VectorXd rhs;
    double weight = 0.0;
  };
  const int n_blocks = std::max(1, std::min(m, 128));
  std::vector<Partial> partials(n_blocks);
  for (auto& p : partials) {
    p.gram = Eigen::MatrixXd::Zero(dim, dim);
    p.rhs = Eigen::VectorXd::Zero(dim);
  }

  parallel_for(n_blocks, threads, [&](int b) {
    const int lo = static_cast<int>(static_cast<long long>(b) * m / n_blocks);
    const int hi = static_cast<int>(static_cast<long long>(b + 1) * m / n_blocks);
    Partial& part = partials[b];
    Eigen::VectorXd reg(dim);
    for (int i = lo; i < hi; ++i) {
      for (int j = i + 1; j < m; ++j) {
        const double u = (in.score[i] - in.score[j]) / h2;
        if (compact && u <= -1.0) break;  // scores ascending: done with i
        const double w = kernel_eval(k2, u);
        if (w <= 0.0) continue;
        build(i, j, reg);
        part.gram.template selfadjointView<Eigen::Lower>().rankUpdate(reg, w);
        part.rhs.noalias() += (w * (in.y[i] - in.y[j])) * reg;
        part.weight += w;
      }
    }
  });

  for (int stride = 1; stride < n_blocks; stride *= 2)
    for (int b = 0; b + stride < n_blocks; b += 2 * stride) {
      partials[b].gram += partials[b + stride].gram;
      partials[b].rhs += partials[b + stride].rhs;
      partials[b].weight += partials[b + stride].weight;
    }

  *gram = partials[0].gram.template selfadjointView<Eigen::Lower>();
  *rhs = partials[0].rhs;
  *total_weight = partials[0].weight;
}

// Solves gram * x = rhs after a rank check; `singular_message` becomes the
// error text when the (normalized) gram is rank deficient.
Eigen::VectorXd solve_pair_system(const Eigen::MatrixXd& gram, const Eigen::VectorXd& rhs,
                                  double total_weight, const char* module,
                                  const std::string& singular_message);

// Local-linear level/slope of `value` on `score` at each grid point, with
// singular points flagged and linearly filled from unflagged neighbours.
LocalLinearCurve local_linear_points(std::span<const double> score,
                                     std::span<const double> value,
                                     const Eigen::VectorXd& p_grid,
                                     const KernelSpec& k3, double h3, int threads,
                                     const char* module);

}  // namespace mtefree::detail

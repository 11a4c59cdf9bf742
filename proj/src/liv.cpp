#include "mtefree/liv.hpp"

#include "mtefree/common.hpp"
#include "second_step_internal.hpp"

namespace mtefree {

std::pair<Eigen::VectorXd, Eigen::VectorXd> liv_pairwise(const Sample& s,
                                                         const PropensityFit& fit,
                                                         const KernelSpec& k2, double h2,
                                                         int threads) {
  if (!(h2 > 0.0)) throw ConfigError("liv", "h2 must be positive");
  s.require_both_arms("liv");
  const std::vector<int> rows = fit.kept_rows();
  const int k = s.dim_x();
  const int dim = 2 * k;
  if (static_cast<int>(rows.size()) < dim + 1)
    throw EstimationError("liv", "need at least 2 dim(X)+1 kept rows");

  const detail::PairInputs in = detail::make_pair_inputs(s, fit, rows);
  Eigen::MatrixXd gram;
  Eigen::VectorXd rhs;
  double weight = 0.0;
  detail::weighted_pair_sums(
      in, k2, h2, dim,
      [&](int i, int j, Eigen::VectorXd& reg) {
        reg.head(k) = in.x.row(i) - in.x.row(j);
        reg.tail(k) = in.score[i] * in.x.row(i) - in.score[j] * in.x.row(j);
      },
      threads, &gram, &rhs, &weight);
  if (!(weight > 0.0))
    throw EstimationError("liv", "bandwidth too small: all pairwise weights are zero");
  const Eigen::VectorXd coef = detail::solve_pair_system(
      gram, rhs, weight, "liv",
      "P*X collinear with X (insufficient propensity variation)");
  return {coef.head(k), coef.tail(k)};
}

LocalLinearCurve liv_local_linear(const Sample& s, const PropensityFit& fit,
                                  const Eigen::VectorXd& beta0,
                                  const Eigen::VectorXd& delta,
                                  const Eigen::VectorXd& p_grid, const KernelSpec& k3,
                                  double h3, int threads) {
  if (!(h3 > 0.0)) throw ConfigError("liv", "h3 must be positive");
  if (beta0.size() != s.dim_x() || delta.size() != s.dim_x())
    throw ConfigError("liv", "coefficient vectors have wrong length");
  const std::vector<int> rows = fit.kept_rows();
  if (rows.size() < 2) throw EstimationError("liv", "need at least 2 kept rows");

  const auto m = static_cast<int>(rows.size());
  std::vector<double> score(m), resid(m);
  for (int r = 0; r < m; ++r) {
    const int i = rows[r];
    const Eigen::VectorXd x = s.covariate_row(i);
    score[r] = fit.scores[i];
    resid[r] = s.y[i] - x.dot(beta0) - fit.scores[i] * x.dot(delta);
  }
  return detail::local_linear_points(score, resid, p_grid, k3, h3, threads, "liv");
}

LivParametricFit liv_parametric_second_step(const Sample& s, const PropensityFit& fit,
                                            const ParametricSpec& spec) {
  if (spec.degree < 1) throw ConfigError("liv", "parametric degree must be >= 1");
  s.require_both_arms("liv");
  const std::vector<int> rows = fit.kept_rows();
  const int k = s.dim_x();
  const int cols = 1 + 2 * k + spec.degree + 1;
  if (static_cast<int>(rows.size()) < cols)
    throw EstimationError("liv", "fewer kept rows than regressors");

  Eigen::MatrixXd design(rows.size(), cols);
  Eigen::VectorXd y(rows.size());
  for (size_t r = 0; r < rows.size(); ++r) {
    const int i = rows[r];
    const Eigen::VectorXd x = s.covariate_row(i);
    const double p = fit.scores[i];
    design(r, 0) = 1.0;
    design.row(r).segment(1, k) = x.transpose();
    design.row(r).segment(1 + k, k) = p * x.transpose();
    for (int j = 0; j <= spec.degree; ++j)
      design(r, 1 + 2 * k + j) = selection_basis_integral(spec, j, p);
    y[r] = s.y[i];
  }
  if (!design.allFinite())
    throw EstimationError("liv", "non-finite value in the parametric design matrix");

  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
  if (qr.rank() < cols)
    throw EstimationError("liv",
                          "rank-deficient design; P*X collinear with X "
                          "(insufficient propensity variation)");
  const Eigen::VectorXd coef = qr.solve(y);

  LivParametricFit out;
  out.alpha0 = coef[0];
  out.beta0 = coef.segment(1, k);
  out.delta = coef.segment(1 + k, k);
  out.theta = coef.tail(spec.degree + 1);
  return out;
}

}  // namespace mtefree

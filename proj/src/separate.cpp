#include "mtefree/separate.hpp"

#include <cmath>

#include "mtefree/common.hpp"
#include "second_step_internal.hpp"

namespace mtefree {

namespace detail {

Eigen::VectorXd solve_pair_system(const Eigen::MatrixXd& gram, const Eigen::VectorXd& rhs,
                                  double total_weight, const char* module,
                                  const std::string& singular_message) {
  const Eigen::MatrixXd g = gram / total_weight;
  const Eigen::VectorXd r = rhs / total_weight;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(g, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& sv = svd.singularValues();
  if (!(sv[0] > 0.0) || sv[sv.size() - 1] <= 1e-10 * sv[0])
    throw EstimationError(module, singular_message);
  return svd.solve(r);
}

LocalLinearCurve local_linear_points(std::span<const double> score,
                                     std::span<const double> value,
                                     const Eigen::VectorXd& p_grid,
                                     const KernelSpec& k3, double h3, int threads,
                                     const char* module) {
  const auto m = static_cast<int>(score.size());
  const auto g_count = p_grid.size();
  LocalLinearCurve out;
  out.g.setZero(g_count);
  out.g_deriv.setZero(g_count);
  out.flagged.assign(static_cast<size_t>(g_count), 0);

  parallel_for(static_cast<int>(g_count), threads, [&](int gi) {
    const double p = p_grid[gi];
    double s0 = 0.0, s1 = 0.0, s2 = 0.0, t0 = 0.0, t1 = 0.0;
    for (int r = 0; r < m; ++r) {
      const double u = (score[r] - p) / h3;
      const double w = kernel_eval(k3, u);
      if (w <= 0.0) continue;
      s0 += w;
      s1 += w * u;
      s2 += w * u * u;
      t0 += w * value[r];
      t1 += w * u * value[r];
    }
    if (!(s0 > 0.0)) {
      out.flagged[gi] = 1;
      return;
    }
    // Normalized curvature of the local design; zero iff all local scores
    // coincide, which makes the 2x2 system singular.
    const double m1 = s1 / s0, m2 = s2 / s0;
    const double det = s0 * s2 - s1 * s1;
    if (m2 - m1 * m1 <= 1e-10) {
      out.flagged[gi] = 1;
      return;
    }
    const double slope_u = (s0 * t1 - s1 * t0) / det;
    out.g[gi] = (t0 - s1 * slope_u) / s0;
    out.g_deriv[gi] = slope_u / h3;
  });

  // Linear fill of flagged points from their unflagged neighbours.
  std::vector<int> good;
  for (Eigen::Index i = 0; i < g_count; ++i)
    if (!out.flagged[i]) good.push_back(static_cast<int>(i));
  if (good.empty())
    throw EstimationError(module, "local-linear fit singular at every grid point");
  for (Eigen::Index i = 0; i < g_count; ++i) {
    if (!out.flagged[i]) continue;
    auto it = std::lower_bound(good.begin(), good.end(), static_cast<int>(i));
    if (it == good.begin()) {
      out.g[i] = out.g[*it];
      out.g_deriv[i] = out.g_deriv[*it];
    } else if (it == good.end()) {
      out.g[i] = out.g[good.back()];
      out.g_deriv[i] = out.g_deriv[good.back()];
    } else {
      const int hi = *it, lo = *(it - 1);
      const double span = p_grid[hi] - p_grid[lo];
      const double f = span > 0.0 ? (p_grid[i] - p_grid[lo]) / span : 0.5;
      out.g[i] = (1.0 - f) * out.g[lo] + f * out.g[hi];
      out.g_deriv[i] = (1.0 - f) * out.g_deriv[lo] + f * out.g_deriv[hi];
    }
  }
  return out;
}

}  // namespace detail

Eigen::VectorXd pairwise_difference_beta(const Sample& s, const PropensityFit& fit,
                                         int arm, const KernelSpec& k2, double h2,
                                         int threads) {
  if (arm != 0 && arm != 1) throw ConfigError("separate", "arm must be 0 or 1");
  if (!(h2 > 0.0)) throw ConfigError("separate", "h2 must be positive");
  const std::vector<int> rows = fit.kept_rows_arm(s, arm);
  const int dim = s.dim_x();
  if (static_cast<int>(rows.size()) < dim + 1)
    throw EstimationError("separate", "arm " + std::to_string(arm) +
                                          " needs at least dim(X)+1 kept rows");

  const detail::PairInputs in = detail::make_pair_inputs(s, fit, rows);
  Eigen::MatrixXd gram;
  Eigen::VectorXd rhs;
  double weight = 0.0;
  detail::weighted_pair_sums(
      in, k2, h2, dim,
      [&](int i, int j, Eigen::VectorXd& reg) { reg = in.x.row(i) - in.x.row(j); },
      threads, &gram, &rhs, &weight);
  if (!(weight > 0.0))
    throw EstimationError("separate", "bandwidth too small: all pairwise weights are zero");
  return detail::solve_pair_system(gram, rhs, weight, "separate",
                                   "collinear covariates after differencing");
}

LocalLinearCurve local_linear_g(const Sample& s, const PropensityFit& fit, int arm,
                                const Eigen::VectorXd& beta,
                                const Eigen::VectorXd& p_grid, const KernelSpec& k3,
                                double h3, int threads) {
  if (arm != 0 && arm != 1) throw ConfigError("separate", "arm must be 0 or 1");
  if (!(h3 > 0.0)) throw ConfigError("separate", "h3 must be positive");
  if (beta.size() != s.dim_x()) throw ConfigError("separate", "beta has wrong length");
  const std::vector<int> rows = fit.kept_rows_arm(s, arm);
  if (rows.size() < 2)
    throw EstimationError("separate", "arm " + std::to_string(arm) +
                                          " needs at least 2 kept rows");

  const auto m = static_cast<int>(rows.size());
  std::vector<double> score(m), resid(m);
  for (int r = 0; r < m; ++r) {
    const int i = rows[r];
    score[r] = fit.scores[i];
    resid[r] = s.y[i] - s.covariate_row(i).dot(beta);
  }
  return detail::local_linear_points(score, resid, p_grid, k3, h3, threads, "separate");
}

namespace {

// Lower partial integral of the normal basis: integral of Phi^{-1}(v)^j
// over (0, p], computed as the partial moment of the standard normal.
double normal_basis_integral(int j, double p) {
  return normal_partial_moment(j, normal_quantile(p));
}

double normal_basis_total(int j) {
  if (j % 2 == 1) return 0.0;
  double t = 1.0;  // (j-1)!! for even j, 1 for j = 0
  for (int k = j - 1; k >= 2; k -= 2) t *= k;
  return t;
}

double clamp_p(double p) { return std::clamp(p, 1e-10, 1.0 - 1e-10); }

void check_basis_args(const ParametricSpec& spec, int arm, int j) {
  if (arm != 0 && arm != 1) throw ConfigError("separate", "arm must be 0 or 1");
  if (j < 0 || j > spec.degree) throw ConfigError("separate", "basis index out of range");
}

}  // namespace

double selection_basis(const ParametricSpec& spec, int j, double v) {
  if (j == 0) return 1.0;
  if (spec.family == ParametricFamily::polynomial) return std::pow(v, j);
  return std::pow(normal_quantile(v), j);
}

double selection_basis_integral(const ParametricSpec& spec, int j, double p) {
  if (j < 0) throw ConfigError("separate", "basis index out of range");
  if (spec.family == ParametricFamily::polynomial) return std::pow(p, j + 1) / (j + 1);
  if (p <= 0.0) return 0.0;
  if (p >= 1.0) return normal_basis_total(j);
  return normal_basis_integral(j, p);
}

double correction_basis(const ParametricSpec& spec, int arm, int j, double p) {
  check_basis_args(spec, arm, j);
  if (j == 0) return 1.0;
  if (spec.family == ParametricFamily::polynomial) {
    if (arm == 1) return std::pow(p, j) / (j + 1);
    // (1 - p^{j+1}) / ((j+1)(1-p)) via the finite geometric sum, which is
    // well defined at p = 1.
    double acc = 0.0, pk = 1.0;
    for (int i = 0; i <= j; ++i) {
      acc += pk;
      pk *= p;
    }
    return acc / (j + 1);
  }
  if (arm == 1) {
    if (p >= 1.0) return normal_basis_total(j);
    p = clamp_p(p);
    return normal_basis_integral(j, p) / p;
  }
  if (p <= 0.0) return normal_basis_total(j);
  p = clamp_p(p);
  return (normal_basis_total(j) - normal_basis_integral(j, p)) / (1.0 - p);
}

double correction_basis_deriv(const ParametricSpec& spec, int arm, int j, double p) {
  check_basis_args(spec, arm, j);
  if (j == 0) return 0.0;
  if (spec.family == ParametricFamily::polynomial) {
    if (arm == 1) return j * std::pow(p, j - 1) / (j + 1);
    double acc = 0.0, pk = 1.0;
    for (int i = 1; i <= j; ++i) {
      acc += i * pk;
      pk *= p;
    }
    return acc / (j + 1);
  }
  p = clamp_p(p);
  const double b = selection_basis(spec, j, p);
  if (arm == 1) {
    const double integral = normal_basis_integral(j, p);
    return (b * p - integral) / (p * p);
  }
  const double upper = normal_basis_total(j) - normal_basis_integral(j, p);
  return (-b * (1.0 - p) + upper) / ((1.0 - p) * (1.0 - p));
}

double parametric_g(const ParametricSpec& spec, int arm, const Eigen::VectorXd& theta,
                    double p) {
  double acc = 0.0;
  for (int j = 0; j < theta.size(); ++j) acc += theta[j] * correction_basis(spec, arm, j, p);
  return acc;
}

double parametric_g_deriv(const ParametricSpec& spec, int arm,
                          const Eigen::VectorXd& theta, double p) {
  double acc = 0.0;
  for (int j = 0; j < theta.size(); ++j)
    acc += theta[j] * correction_basis_deriv(spec, arm, j, p);
  return acc;
}

double parametric_eu(const ParametricSpec& spec, const Eigen::VectorXd& theta, double v) {
  double acc = 0.0;
  for (int j = 0; j < theta.size(); ++j) acc += theta[j] * selection_basis(spec, j, v);
  return acc;
}

ParametricFit parametric_second_step(const Sample& s, const PropensityFit& fit, int arm,
                                     const ParametricSpec& spec) {
  if (arm != 0 && arm != 1) throw ConfigError("separate", "arm must be 0 or 1");
  if (spec.degree < 1) throw ConfigError("separate", "parametric degree must be >= 1");
  const std::vector<int> rows = fit.kept_rows_arm(s, arm);
  const int k = s.dim_x();
  const int cols = k + spec.degree + 1;
  if (static_cast<int>(rows.size()) < cols)
    throw EstimationError("separate", "arm " + std::to_string(arm) +
                                          " has fewer kept rows than regressors");

  Eigen::MatrixXd design(rows.size(), cols);
  Eigen::VectorXd y(rows.size());
  for (size_t r = 0; r < rows.size(); ++r) {
    const int i = rows[r];
    design.row(r).head(k) = s.covariate_row(i).transpose();
    const double p = fit.scores[i];
    for (int j = 0; j <= spec.degree; ++j)
      design(r, k + j) = correction_basis(spec, arm, j, p);
    y[r] = s.y[i];
  }
  if (!design.allFinite())
    throw EstimationError("separate", "non-finite value in the parametric design matrix");

  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
  if (qr.rank() < cols) {
    std::vector<std::string> names = s.covariate_names();
    names.push_back("intercept");
    for (int j = 1; j <= spec.degree; ++j)
      names.push_back("corr" + std::to_string(j) + "(P)");
    const auto perm = qr.colsPermutation().indices();
    std::string bad;
    for (int c = qr.rank(); c < cols; ++c)
      bad += (bad.empty() ? "" : ", ") + names[perm[c]];
    throw EstimationError("separate", "rank-deficient design; collinear columns: " + bad);
  }
  const Eigen::VectorXd coef = qr.solve(y);

  ParametricFit out;
  out.beta = coef.head(k);
  out.theta = coef.tail(spec.degree + 1);
  return out;
}

}  // namespace mtefree

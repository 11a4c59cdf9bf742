#include "mtefree/effects.hpp"

#include <algorithm>
#include <cmath>

#include "mtefree/common.hpp"

namespace mtefree {

std::pair<double, double> GEvaluator::at(double p, bool* clamped) const {
  const double q = std::clamp(p, lo, hi);
  if (clamped) *clamped = q != p;
  return eval(q);
}

GEvaluator make_grid_g(const ArmFit& arm_fit) {
  if (arm_fit.p_grid.size() < 1)
    throw ConfigError("effects", "arm fit has an empty grid");
  GEvaluator out;
  out.lo = arm_fit.p_grid[0];
  out.hi = arm_fit.p_grid[arm_fit.p_grid.size() - 1];
  out.exact = false;
  const Eigen::VectorXd grid = arm_fit.p_grid;
  const Eigen::VectorXd g = arm_fit.g;
  const Eigen::VectorXd gd = arm_fit.g_deriv;
  out.eval = [grid, g, gd](double p) {
    const auto n = grid.size();
    if (n == 1) return std::make_pair(g[0], gd[0]);
    auto it = std::lower_bound(grid.data(), grid.data() + n, p);
    Eigen::Index hi = std::clamp<Eigen::Index>(it - grid.data(), 1, n - 1);
    const Eigen::Index lo = hi - 1;
    const double span = grid[hi] - grid[lo];
    const double f = span > 0.0 ? (p - grid[lo]) / span : 0.5;
    return std::make_pair((1.0 - f) * g[lo] + f * g[hi],
                          (1.0 - f) * gd[lo] + f * gd[hi]);
  };
  return out;
}

GEvaluator make_parametric_g(const ParametricSpec& spec, int arm,
                             const Eigen::VectorXd& theta) {
  GEvaluator out;
  out.lo = 0.0;
  out.hi = 1.0;
  out.exact = true;
  out.eval = [spec, arm, theta](double p) {
    return std::make_pair(parametric_g(spec, arm, theta, p),
                          parametric_g_deriv(spec, arm, theta, p));
  };
  return out;
}

MteCurve assemble_mte(const Eigen::VectorXd& beta0, const Eigen::VectorXd& beta1,
                      const Eigen::VectorXd& g0, const Eigen::VectorXd& g0_deriv,
                      const Eigen::VectorXd& g1, const Eigen::VectorXd& g1_deriv,
                      const Eigen::VectorXd& x, const Eigen::VectorXd& v_grid,
                      const std::vector<std::uint8_t>& flagged) {
  const auto n = v_grid.size();
  if (g0.size() != n || g0_deriv.size() != n || g1.size() != n || g1_deriv.size() != n)
    throw ConfigError("effects", "grid mismatch between g inputs and v_grid");
  if (beta0.size() != beta1.size() || x.size() != beta0.size())
    throw ConfigError("effects", "profile and coefficient lengths differ");
  if (!flagged.empty() && static_cast<Eigen::Index>(flagged.size()) != n)
    throw ConfigError("effects", "flag vector length differs from v_grid");
  for (Eigen::Index i = 1; i < n; ++i)
    if (!(v_grid[i] > v_grid[i - 1]))
      throw ConfigError("effects", "v_grid must be strictly increasing");

  MteCurve curve;
  curve.v_grid = v_grid;
  curve.profile = x;
  curve.flagged = flagged.empty()
                      ? std::vector<std::uint8_t>(static_cast<size_t>(n), 0)
                      : flagged;
  curve.values.resize(n);
  const double shift = x.dot(beta1 - beta0);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double v = v_grid[i];
    curve.values[i] =
        shift + (g1[i] - g0[i]) + v * g1_deriv[i] + (1.0 - v) * g0_deriv[i];
  }
  return curve;
}

CausalSummary causal_params(const Eigen::VectorXd& beta0, const Eigen::VectorXd& beta1,
                            const GEvaluator& g0, const GEvaluator& g1, double pi_x,
                            double v1, double v2, const Eigen::VectorXd& x) {
  if (!(pi_x > 0.0 && pi_x < 1.0))
    throw EstimationError("effects", "pi(x) in {0,1} makes TT/TUT degenerate");
  if (!(v1 < v2) || v1 < 0.0 || v2 > 1.0)
    throw ConfigError("effects", "need 0 <= v1 < v2 <= 1");

  bool clamped = false, c = false;
  const double g1_at_1 = g1.at(1.0, &c).first;
  clamped |= c;
  const double g0_at_0 = g0.at(0.0, &c).first;
  clamped |= c;
  const double g1_at_pi = g1.at(pi_x, &c).first;
  clamped |= c;
  const double g0_at_pi = g0.at(pi_x, &c).first;
  clamped |= c;

  // LATE uses v*g1(v) and (1-v)*g0(v); both vanish at their singular ends,
  // so take the products directly.
  auto v_g1 = [&](double v) {
    if (v <= 0.0) return 0.0;
    bool cl = false;
    const double g = g1.at(v, &cl).first;
    clamped |= cl;
    return v * g;
  };
  auto omv_g0 = [&](double v) {
    if (v >= 1.0) return 0.0;
    bool cl = false;
    const double g = g0.at(v, &cl).first;
    clamped |= cl;
    return (1.0 - v) * g;
  };

  CausalSummary out;
  out.profile = x;
  out.pi_x = pi_x;
  out.late_v1 = v1;
  out.late_v2 = v2;
  const double shift = x.dot(beta1 - beta0);
  out.ate = shift + g1_at_1 - g0_at_0;
  out.tt = shift + g1_at_pi + ((1.0 - pi_x) * g0_at_pi - g0_at_0) / pi_x;
  out.tut = shift + (g1_at_1 - pi_x * g1_at_pi) / (1.0 - pi_x) - g0_at_pi;
  const double late_num = v_g1(v2) - v_g1(v1) + omv_g0(v2) - omv_g0(v1);
  out.late = shift + late_num / (v2 - v1);
  out.boundary_extrapolated = clamped;
  return out;
}

CausalSummary liv_causal_params(const Eigen::VectorXd& delta, const GEvaluator& r,
                                double pi_x, double v1, double v2,
                                const Eigen::VectorXd& x) {
  if (!(pi_x > 0.0 && pi_x < 1.0))
    throw EstimationError("effects", "pi(x) in {0,1} makes TT/TUT degenerate");
  if (!(v1 < v2) || v1 < 0.0 || v2 > 1.0)
    throw ConfigError("effects", "need 0 <= v1 < v2 <= 1");
  if (delta.size() != x.size())
    throw ConfigError("effects", "profile and coefficient lengths differ");

  bool clamped = false, c = false;
  const double r0 = r.at(0.0, &c).first;
  clamped |= c;
  const double r1 = r.at(1.0, &c).first;
  clamped |= c;
  const double rpi = r.at(pi_x, &c).first;
  clamped |= c;
  const double rv1 = r.at(v1, &c).first;
  clamped |= c;
  const double rv2 = r.at(v2, &c).first;
  clamped |= c;

  CausalSummary out;
  out.profile = x;
  out.pi_x = pi_x;
  out.late_v1 = v1;
  out.late_v2 = v2;
  const double shift = x.dot(delta);
  out.ate = shift + r1 - r0;
  out.tt = shift + (rpi - r0) / pi_x;
  out.tut = shift + (r1 - rpi) / (1.0 - pi_x);
  out.late = shift + (rv2 - rv1) / (v2 - v1);
  out.boundary_extrapolated = clamped;
  return out;
}

Eigen::VectorXd marginal_structural(const Eigen::VectorXd& beta_d,
                                    const Eigen::VectorXd& eu_grid,
                                    const Eigen::VectorXd& mean_x) {
  if (beta_d.size() != mean_x.size())
    throw ConfigError("effects", "profile and coefficient lengths differ");
  return Eigen::VectorXd::Constant(eu_grid.size(), mean_x.dot(beta_d)) + eu_grid;
}

ResponseCurves marginal_response(const Sample& s, const PropensityFit& fit,
                                 const Eigen::VectorXd& beta0,
                                 const Eigen::VectorXd& delta,
                                 const Eigen::VectorXd& eu0_grid,
                                 const Eigen::VectorXd& eu_diff_grid,
                                 const Eigen::VectorXd& v_grid) {
  const auto n = v_grid.size();
  if (eu0_grid.size() != n || eu_diff_grid.size() != n)
    throw ConfigError("effects", "grid mismatch in marginal_response");

  const std::vector<int> rows = fit.kept_rows();
  if (rows.empty()) throw EstimationError("effects", "no kept rows");
  const auto m = static_cast<double>(rows.size());
  const Eigen::VectorXd mean_x = s.covariate_means(rows);

  ResponseCurves out;
  out.v_grid = v_grid;
  out.prob_participation.resize(n);
  out.expected_outcome.resize(n);
  for (Eigen::Index gi = 0; gi < n; ++gi) {
    const double v = v_grid[gi];
    double prob = 0.0;
    Eigen::VectorXd selected_x = Eigen::VectorXd::Zero(s.dim_x());
    for (int i : rows) {
      if (fit.scores[i] >= v) {
        prob += 1.0;
        selected_x += s.covariate_row(i);
      }
    }
    prob /= m;
    selected_x /= m;
    const double y0 = mean_x.dot(beta0) + eu0_grid[gi];
    out.prob_participation[gi] = prob;
    out.expected_outcome[gi] = y0 + selected_x.dot(delta) + prob * eu_diff_grid[gi];
  }
  return out;
}

double curve_average(const Eigen::VectorXd& v_grid, const Eigen::VectorXd& values,
                     double a, double b) {
  const auto n = v_grid.size();
  if (values.size() != n || n < 1) throw ConfigError("effects", "bad curve");
  if (!(a < b)) throw ConfigError("effects", "need a < b");

  auto value_at = [&](double v) {
    if (v <= v_grid[0]) return values[0];
    if (v >= v_grid[n - 1]) return values[n - 1];
    auto it = std::lower_bound(v_grid.data(), v_grid.data() + n, v);
    const Eigen::Index hi = it - v_grid.data();
    const Eigen::Index lo = hi - 1;
    const double f = (v - v_grid[lo]) / (v_grid[hi] - v_grid[lo]);
    return (1.0 - f) * values[lo] + f * values[hi];
  };

  // Trapezoid over the grid points inside [a, b] plus the clipped ends.
  double integral = 0.0;
  double prev_v = a, prev_val = value_at(a);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (v_grid[i] <= a || v_grid[i] >= b) continue;
    integral += 0.5 * (prev_val + values[i]) * (v_grid[i] - prev_v);
    prev_v = v_grid[i];
    prev_val = values[i];
  }
  integral += 0.5 * (prev_val + value_at(b)) * (b - prev_v);
  return integral / (b - a);
}

}  // namespace mtefree

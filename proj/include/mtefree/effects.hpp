#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <vector>

#include "mtefree/data.hpp"
#include "mtefree/propensity.hpp"
#include "mtefree/separate.hpp"

namespace mtefree {

// A control function g (with derivative) evaluable over [lo, hi]. Requests
// outside that range are clamped to the nearest supported point, which is
// the boundary rule for ATE/TT/TUT when the score support stops short of
// 0 or 1; `clamped` reports when that happened.
struct GEvaluator {
  std::function<std::pair<double, double>(double)> eval;  // p -> (g, g')
  double lo = 0.0;
  double hi = 1.0;
  bool exact = false;  // parametric curves: defined on all of [0, 1]

  std::pair<double, double> at(double p, bool* clamped = nullptr) const;
};

// Grid-backed evaluator: linear interpolation on the arm's fitted grid,
// clamped to the grid range.
GEvaluator make_grid_g(const ArmFit& arm_fit);

// Closed-form evaluator for a parametric second step.
GEvaluator make_parametric_g(const ParametricSpec& spec, int arm,
                             const Eigen::VectorXd& theta);

struct MteCurve {
  Eigen::VectorXd v_grid;
  Eigen::VectorXd values;
  std::vector<std::uint8_t> flagged;  // boundary-clamped or interpolated points
  Eigen::VectorXd profile;            // covariate profile x used
};

// Pointwise Delta(x, v) = x'(beta1-beta0) + [g1 - g0] + v g1' + (1-v) g0'.
// All grids must share the length of v_grid.
MteCurve assemble_mte(const Eigen::VectorXd& beta0, const Eigen::VectorXd& beta1,
                      const Eigen::VectorXd& g0, const Eigen::VectorXd& g0_deriv,
                      const Eigen::VectorXd& g1, const Eigen::VectorXd& g1_deriv,
                      const Eigen::VectorXd& x, const Eigen::VectorXd& v_grid,
                      const std::vector<std::uint8_t>& flagged = {});

struct CausalSummary {
  double ate = 0.0;
  double tt = 0.0;
  double tut = 0.0;
  double late = 0.0;
  double pi_x = 0.0;
  double late_v1 = 0.0;
  double late_v2 = 0.0;
  Eigen::VectorXd profile;
  bool boundary_extrapolated = false;  // some g value used the clamp rule
};

// Closed-form ATE/TT/TUT/LATE from the fitted components. Both evaluators
// are queried at {0, 1, pi_x, v1, v2} with the boundary rule.
CausalSummary causal_params(const Eigen::VectorXd& beta0, const Eigen::VectorXd& beta1,
                            const GEvaluator& g0, const GEvaluator& g1, double pi_x,
                            double v1, double v2, const Eigen::VectorXd& x);

// LIV-route parameters from r(p) = alpha0 + q(p): the evaluator's level is
// r and its derivative is q', so ATE = x'delta + r(1) - r(0) and so on.
CausalSummary liv_causal_params(const Eigen::VectorXd& delta, const GEvaluator& r,
                                double pi_x, double v1, double v2,
                                const Eigen::VectorXd& x);

// Marginal structural function E[Y_d | V = v] = E[X]'beta_d + E[U_d | V=v],
// given the E[U_d | V = v] grid.
Eigen::VectorXd marginal_structural(const Eigen::VectorXd& beta_d,
                                    const Eigen::VectorXd& eu_grid,
                                    const Eigen::VectorXd& mean_x);

struct ResponseCurves {
  Eigen::VectorXd v_grid;
  Eigen::VectorXd prob_participation;  // E[D | V = v] = Pr(P >= v)
  Eigen::VectorXd expected_outcome;    // E[Y | V = v]
};

// Marginal response functions from fitted scores and effect components:
//   E[Y | V=v] = E[Y0|V=v] + mean(1{P>=v} X)'(beta1-beta0)
//                + Pr(P>=v) E[U1-U0 | V=v].
ResponseCurves marginal_response(const Sample& s, const PropensityFit& fit,
                                 const Eigen::VectorXd& beta0,
                                 const Eigen::VectorXd& delta,
                                 const Eigen::VectorXd& eu0_grid,
                                 const Eigen::VectorXd& eu_diff_grid,
                                 const Eigen::VectorXd& v_grid);

// Trapezoid average of a gridded curve over [a, b]; the curve is extended
// flat beyond its grid ends. Used to reconcile curve integrals with the
// closed-form parameters.
double curve_average(const Eigen::VectorXd& v_grid, const Eigen::VectorXd& values,
                     double a, double b);

}  // namespace mtefree

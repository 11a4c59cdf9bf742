#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "mtefree/data.hpp"
#include "mtefree/propensity.hpp"
#include "mtefree/smoothing.hpp"

namespace mtefree {

// Closed-form weighted pairwise-difference least squares over all kept
// within-arm pairs; weights are k2((P_i - P_j)/h2). The intercept is
// differenced out and ends up absorbed into g_d.
Eigen::VectorXd pairwise_difference_beta(const Sample& s, const PropensityFit& fit,
                                         int arm, const KernelSpec& k2, double h2,
                                         int threads = 0);

struct LocalLinearCurve {
  Eigen::VectorXd g;
  Eigen::VectorXd g_deriv;
  std::vector<std::uint8_t> flagged;  // singular points, values interpolated
};

// Local-linear level and slope of the residuals Y - X'beta on the fitted
// scores, within one arm, at each grid point. Grid points where the local
// 2x2 system is singular are flagged and filled by linear interpolation
// from their unflagged neighbours.
LocalLinearCurve local_linear_g(const Sample& s, const PropensityFit& fit, int arm,
                                const Eigen::VectorXd& beta,
                                const Eigen::VectorXd& p_grid, const KernelSpec& k3,
                                double h3, int threads = 0);

enum class ParametricFamily { normal_polynomial, polynomial };

struct ParametricSpec {
  ParametricFamily family = ParametricFamily::normal_polynomial;
  int degree = 1;  // J >= 1
};

// Selection basis b_j(v): powers of Phi^{-1}(v) (normal_polynomial) or of
// v (polynomial); E[U_d | V = v] = sum_j theta_j b_j(v), j = 0..J.
double selection_basis(const ParametricSpec& spec, int j, double v);

// Integral of b_j over (0, p]; the building block of q(p) in the
// parametric LIV second step.
double selection_basis_integral(const ParametricSpec& spec, int j, double p);

// Arm-specific correction term implied by the basis:
//   arm 1: (1/p)     * integral of b_j over (0, p]
//   arm 0: (1/(1-p)) * integral of b_j over (p, 1)
// For the normal family with j = 1 these are -pdf(q)/p and +pdf(q)/(1-p)
// with q = Phi^{-1}(p).
double correction_basis(const ParametricSpec& spec, int arm, int j, double p);
double correction_basis_deriv(const ParametricSpec& spec, int arm, int j, double p);

// g_d(p; theta) and its derivative under the parametric family.
double parametric_g(const ParametricSpec& spec, int arm, const Eigen::VectorXd& theta,
                    double p);
double parametric_g_deriv(const ParametricSpec& spec, int arm,
                          const Eigen::VectorXd& theta, double p);
double parametric_eu(const ParametricSpec& spec, const Eigen::VectorXd& theta, double v);

struct ParametricFit {
  Eigen::VectorXd beta;
  Eigen::VectorXd theta;  // J+1 entries; theta[0] is the arm intercept
};

// Global least squares of Y on [X, correction basis of the fitted scores]
// within one arm.
ParametricFit parametric_second_step(const Sample& s, const PropensityFit& fit, int arm,
                                     const ParametricSpec& spec);

// Per-arm second-step result on the arm's own score grid.
struct ArmFit {
  int arm = 0;
  Eigen::VectorXd beta;
  Eigen::VectorXd p_grid;
  Eigen::VectorXd g;
  Eigen::VectorXd g_deriv;
  std::vector<std::uint8_t> flagged;
  double support_lo = 0.0;  // kept-score range of the arm
  double support_hi = 1.0;
};

}  // namespace mtefree

#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <utility>
#include <vector>

#include "mtefree/data.hpp"
#include "mtefree/propensity.hpp"
#include "mtefree/separate.hpp"
#include "mtefree/smoothing.hpp"

namespace mtefree {

// Whole-sample regression results: Y on X, P*X and an unknown function of
// the score. delta estimates beta1 - beta0; r(p) estimates alpha0 + q(p)
// (the intercept is not separately identified from q), and q_deriv is the
// derivative of q, i.e. E[U1 - U0 | V = p].
struct LivFit {
  Eigen::VectorXd beta0;
  Eigen::VectorXd delta;
  Eigen::VectorXd p_grid;
  Eigen::VectorXd r;
  Eigen::VectorXd q_deriv;
  std::vector<std::uint8_t> flagged;
  double support_lo = 0.0;
  double support_hi = 1.0;
};

// Joint pairwise-difference least squares over all kept pairs with
// regressors (X_i - X_j, P_i X_i - P_j X_j) and weights k2((P_i - P_j)/h2).
std::pair<Eigen::VectorXd, Eigen::VectorXd> liv_pairwise(const Sample& s,
                                                         const PropensityFit& fit,
                                                         const KernelSpec& k2, double h2,
                                                         int threads = 0);

// Local-linear level/slope of the whole-sample residuals
// Y - X'beta0 - P X'delta on the fitted scores.
LocalLinearCurve liv_local_linear(const Sample& s, const PropensityFit& fit,
                                  const Eigen::VectorXd& beta0,
                                  const Eigen::VectorXd& delta,
                                  const Eigen::VectorXd& p_grid, const KernelSpec& k3,
                                  double h3, int threads = 0);

// Parametric variant of the whole-sample regression: q is parameterized
// through the selection basis, so the fit is one global least squares of
// Y on [1, X, P*X, integral basis of P].
struct LivParametricFit {
  double alpha0 = 0.0;
  Eigen::VectorXd beta0;
  Eigen::VectorXd delta;
  Eigen::VectorXd theta;  // coefficients of E[U1-U0 | V=v] on the basis
};

LivParametricFit liv_parametric_second_step(const Sample& s, const PropensityFit& fit,
                                            const ParametricSpec& spec);

}  // namespace mtefree

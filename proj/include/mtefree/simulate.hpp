#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "mtefree/data.hpp"

namespace mtefree {

// Shapes for the propensity function pi(x). Every preset keeps pi inside
// (0, 1) on the covariate support of the generator.
enum class PropensityPreset {
  sin_wave,          // 0.5 + 0.4 sin(x1), nonmonotone; x1 ~ U[0, 2pi]
  sin_wave_centered, // same shape on the centered range x1 ~ U[-pi, pi]
  probit,            // Phi(x1), strictly monotone; x1 ~ U[-2, 2]
  cubic,             // 0.2 + 0.6 Phi(x1^3), zero slope at x1 = 0; x1 ~ U[-2, 2]
  hetero_index,      // Phi(x1 / exp(0.75 x1)), heteroscedastic index; x1 ~ U[-1, 2]
  interaction,       // 0.1 + 0.8 Phi(x1 + x2 + x1 x2), two continuous dims; U[-1, 1]^2
  single_index,      // 0.1 + 0.8 Phi(x1 + 0.5 x2), two continuous dims; U[-1, 1]^2
};

// Data-generating design. The reduced-form resistance V is drawn uniform
// on (0,1) independent of X, treatment is D = 1{pi(X) >= V}, and the
// outcome residuals are U_d = alpha_d + rho_d * Phi^{-1}(V) + noise. This
// keeps conditional mean independence exact by construction.
struct DgpSpec {
  int n = 0;
  std::uint64_t seed = 1;
  PropensityPreset propensity = PropensityPreset::sin_wave;
  int dim_cont = 1;
  int dim_disc = 0;
  double disc_shift = 0.0;  // additive propensity shift per (code - 1/2)
  double alpha0 = 0.0;
  double alpha1 = 0.0;
  Eigen::VectorXd beta0;  // dim_cont + dim_disc entries; zero-filled if empty
  Eigen::VectorXd beta1;
  double rho0 = 0.0;
  double rho1 = 0.0;
  double noise_scale = 0.0;

  // Propensity value at a covariate point (continuous dims + codes).
  double propensity_at(const Eigen::VectorXd& x_cont, const Eigen::VectorXi& x_disc) const;

  void validate() const;
};

// Named full designs for the CLI and the test suites.
// "separable" is the workhorse: sin propensity, one continuous and one
// binary discrete covariate, selection on unobservables in both arms.
DgpSpec preset_dgp(const std::string& name, int n, std::uint64_t seed);
std::vector<std::string> preset_names();

// Closed-form target quantities implied by a DgpSpec.
struct OracleMte {
  double alpha0 = 0.0, alpha1 = 0.0;
  Eigen::VectorXd beta0, beta1;
  double rho0 = 0.0, rho1 = 0.0;

  Eigen::VectorXd beta_diff() const { return beta1 - beta0; }

  // MTE(x, v) = (alpha1 - alpha0) + x'(beta1 - beta0) + (rho1 - rho0) Phi^{-1}(v)
  double mte(const Eigen::VectorXd& x, double v) const;
  double ate(const Eigen::VectorXd& x) const;
  double tt(const Eigen::VectorXd& x, double pi_x) const;
  double tut(const Eigen::VectorXd& x, double pi_x) const;
  double late(const Eigen::VectorXd& x, double v1, double v2) const;

  // Marginal structural function E[Y_d | V = v] at the covariate mean.
  double structural(int arm, const Eigen::VectorXd& mean_x, double v) const;
};

// v_out, when given, receives the latent resistance draws (one per row).
std::pair<Sample, OracleMte> generate(const DgpSpec& spec,
                                      Eigen::VectorXd* v_out = nullptr);

}  // namespace mtefree

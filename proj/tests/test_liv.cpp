#include <doctest.h>

#include <cmath>

#include "mtefree/common.hpp"
#include "mtefree/liv.hpp"
#include "mtefree/propensity.hpp"
#include "mtefree/simulate.hpp"
#include "test_util.hpp"

using namespace mtefree;

namespace {
const KernelSpec kEpan{KernelFamily::epanechnikov};
const KernelSpec kGauss{KernelFamily::gaussian};
}  // namespace

TEST_CASE("zero treatment effect keeps delta near zero across replications") {
  // beta1 = beta0, rho1 = rho0, alpha1 = alpha0: delta targets zero.
  std::vector<std::vector<double>> draws(2);
  for (int rep = 0; rep < 20; ++rep) {
    DgpSpec spec = preset_dgp("separable", 4000, 700 + rep);
    spec.alpha1 = spec.alpha0;
    spec.beta1 = spec.beta0;
    spec.rho1 = spec.rho0;
    const auto [s, oracle] = generate(spec);
    PropensityFit fit = fit_propensity(s, {});
    fit = trim(fit, 0.01, 0.01, s);
    const double h2 = rule_of_thumb(fit.kept_scores());
    const auto [beta0, delta] = liv_pairwise(s, fit, kEpan, h2);
    for (int k = 0; k < delta.size(); ++k) draws[k].push_back(delta[k]);
  }
  for (const auto& column : draws) {
    const double se = testutil::sample_sd(column) / std::sqrt(20.0);
    CHECK(std::abs(testutil::mean(column)) < 2 * se + 1e-12);
  }
}

TEST_CASE("joint pairwise difference tracks the coefficient gap") {
  const auto [s, oracle] = generate(preset_dgp("separable", 4000, 61));
  PropensityFit fit = fit_propensity(s, {});
  fit = trim(fit, 0.01, 0.01, s);
  const double h2 = rule_of_thumb(fit.kept_scores());
  const auto [beta0, delta] = liv_pairwise(s, fit, kEpan, h2);
  const Eigen::VectorXd truth = oracle.beta_diff();
  for (int k = 0; k < delta.size(); ++k) CHECK(std::abs(delta[k] - truth[k]) < 0.25);
  for (int k = 0; k < beta0.size(); ++k)
    CHECK(std::abs(beta0[k] - oracle.beta0[k]) < 0.25);
}

TEST_CASE("constant scores make P*X collinear with X") {
  const int n = 60;
  Eigen::VectorXd x = Eigen::VectorXd::LinSpaced(n, -1.0, 1.0);
  Eigen::VectorXi d = Eigen::VectorXi::Ones(n);
  for (int i = 0; i < n; i += 2) d[i] = 0;
  Sample s = testutil::make_sample_1d(x, d, x);
  const PropensityFit fit = testutil::scores_fit(Eigen::VectorXd::Constant(n, 0.4));
  CHECK_THROWS_WITH_AS(liv_pairwise(s, fit, kEpan, 0.1),
                       doctest::Contains("P*X collinear"), EstimationError);
}

TEST_CASE("module refuses a single-arm sample") {
  const int n = 30;
  Eigen::VectorXd x = Eigen::VectorXd::LinSpaced(n, 0.0, 1.0);
  Sample s = testutil::make_sample_1d(x, Eigen::VectorXi::Ones(n), x);
  const PropensityFit fit = testutil::scores_fit(
      Eigen::VectorXd::LinSpaced(n, 0.2, 0.8));
  CHECK_THROWS_AS(liv_pairwise(s, fit, kEpan, 0.1), EstimationError);
}

TEST_CASE("whole-sample local linear reproduces constant residuals") {
  const int n = 120;
  Eigen::VectorXd scores(n), x(n), y(n);
  Rng rng(63);
  const double beta0 = 1.1, delta = 0.4, c = -2.5;
  for (int i = 0; i < n; ++i) {
    scores[i] = 0.1 + 0.8 * (i + 0.5) / n;
    x[i] = rng.normal();
    y[i] = c + beta0 * x[i] + scores[i] * x[i] * delta;
  }
  Eigen::VectorXi d = Eigen::VectorXi::Ones(n);
  d[0] = 0;
  Sample s = testutil::make_sample_1d(y, d, x);
  const PropensityFit fit = testutil::scores_fit(scores);
  const Eigen::VectorXd grid = testutil::linspace(0.2, 0.8, 21);
  Eigen::VectorXd b0(1), dl(1);
  b0 << beta0;
  dl << delta;
  const LocalLinearCurve curve = liv_local_linear(s, fit, b0, dl, grid, kGauss, 0.08);
  for (int i = 0; i < grid.size(); ++i) {
    CHECK(curve.g[i] == doctest::Approx(c).epsilon(1e-10));
    CHECK(curve.g_deriv[i] == doctest::Approx(0.0).epsilon(1e-8));
  }
}

TEST_CASE("whole-sample local linear tracks the normal-model r and q slopes") {
  // Noiseless residual construction: r(p) = alpha0 + q(p) with
  // q(p) = alpha_diff * p - rho_diff * pdf(Phi^{-1}(p)), so the slope is
  // q'(p) = alpha_diff + rho_diff * Phi^{-1}(p).
  const int n = 3000;
  const double alpha0 = 0.3, alpha_diff = 0.4, rho_diff = 0.7;
  Eigen::VectorXd scores(n), y(n);
  for (int i = 0; i < n; ++i) {
    scores[i] = 0.2 + 0.6 * (i + 0.5) / n;
    const double q =
        alpha_diff * scores[i] - rho_diff * normal_pdf(normal_quantile(scores[i]));
    y[i] = alpha0 + q;
  }
  Eigen::VectorXi d = Eigen::VectorXi::Ones(n);
  d[0] = 0;
  Sample s = testutil::make_sample_1d(y, d, Eigen::VectorXd::Zero(n));
  const PropensityFit fit = testutil::scores_fit(scores);
  const Eigen::VectorXd grid = testutil::linspace(0.2, 0.8, 61);
  const Eigen::VectorXd zero = Eigen::VectorXd::Zero(1);
  const LocalLinearCurve curve = liv_local_linear(s, fit, zero, zero, grid, kGauss, 0.05);

  double worst_r = 0.0, worst_q1 = 0.0, worst_fd = 0.0;
  for (int i = 0; i < grid.size(); ++i) {
    const double p = grid[i];
    const double r_truth =
        alpha0 + alpha_diff * p - rho_diff * normal_pdf(normal_quantile(p));
    worst_r = std::max(worst_r, std::abs(curve.g[i] - r_truth));
    const bool interior = p >= 0.2 + 3 * 0.05 && p <= 0.8 - 3 * 0.05;
    if (interior) {
      const double q1_truth = alpha_diff + rho_diff * normal_quantile(p);
      worst_q1 = std::max(worst_q1, std::abs(curve.g_deriv[i] - q1_truth));
    }
    if (i > 0 && i + 1 < grid.size() && interior) {
      const double fd = (curve.g[i + 1] - curve.g[i - 1]) / (grid[i + 1] - grid[i - 1]);
      worst_fd = std::max(worst_fd, std::abs(curve.g_deriv[i] - fd));
    }
  }
  CHECK(worst_r <= 0.01);
  CHECK(worst_q1 <= 0.01);
  CHECK(worst_fd <= 1e-2);
}

TEST_CASE("parametric whole-sample regression recovers a noiseless model") {
  const ParametricSpec spec{ParametricFamily::normal_polynomial, 1};
  const int n = 400;
  Rng rng(67);
  const double alpha0 = 0.25, beta0 = 1.3, delta = 0.5;
  const double theta0 = 0.4, theta1 = 0.7;  // q'(v) = 0.4 + 0.7 Phi^{-1}(v)
  Eigen::VectorXd scores(n), x(n), y(n);
  for (int i = 0; i < n; ++i) {
    scores[i] = 0.05 + 0.9 * rng.uniform();
    x[i] = rng.normal();
    const double q = theta0 * selection_basis_integral(spec, 0, scores[i]) +
                     theta1 * selection_basis_integral(spec, 1, scores[i]);
    y[i] = alpha0 + beta0 * x[i] + scores[i] * x[i] * delta + q;
  }
  Eigen::VectorXi d = Eigen::VectorXi::Ones(n);
  d[0] = 0;
  Sample s = testutil::make_sample_1d(y, d, x);
  const PropensityFit fit = testutil::scores_fit(scores);
  const LivParametricFit pfit = liv_parametric_second_step(s, fit, spec);
  CHECK(pfit.alpha0 == doctest::Approx(alpha0).epsilon(1e-7));
  CHECK(pfit.beta0[0] == doctest::Approx(beta0).epsilon(1e-7));
  CHECK(pfit.delta[0] == doctest::Approx(delta).epsilon(1e-7));
  CHECK(pfit.theta[0] == doctest::Approx(theta0).epsilon(1e-7));
  CHECK(pfit.theta[1] == doctest::Approx(theta1).epsilon(1e-7));
}

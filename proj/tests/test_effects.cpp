#include <doctest.h>

#include <cmath>

#include "mtefree/common.hpp"
#include "mtefree/effects.hpp"
#include "mtefree/simulate.hpp"
#include "test_util.hpp"

using namespace mtefree;

namespace {

// Exact normal-model control functions for given (alpha, rho).
GEvaluator normal_g(int arm, double alpha, double rho) {
  ParametricSpec spec{ParametricFamily::normal_polynomial, 1};
  Eigen::VectorXd theta(2);
  theta << alpha, rho;
  return make_parametric_g(spec, arm, theta);
}

struct NormalSetup {
  Eigen::VectorXd beta0, beta1, x;
  GEvaluator g0, g1;
  double alpha0, alpha1, rho0, rho1;
};

NormalSetup make_setup(double alpha0, double alpha1, double rho0, double rho1,
                       double beta_diff = 0.0) {
  NormalSetup s;
  s.alpha0 = alpha0;
  s.alpha1 = alpha1;
  s.rho0 = rho0;
  s.rho1 = rho1;
  s.beta0 = Eigen::VectorXd::Constant(1, 1.0);
  s.beta1 = Eigen::VectorXd::Constant(1, 1.0 + beta_diff);
  s.x = Eigen::VectorXd::Constant(1, 0.0);
  s.g0 = normal_g(0, alpha0, rho0);
  s.g1 = normal_g(1, alpha1, rho1);
  return s;
}

MteCurve assemble_from(const NormalSetup& s, const Eigen::VectorXd& v_grid) {
  Eigen::VectorXd g0(v_grid.size()), g0d(v_grid.size()), g1(v_grid.size()),
      g1d(v_grid.size());
  for (Eigen::Index i = 0; i < v_grid.size(); ++i) {
    std::tie(g0[i], g0d[i]) = s.g0.at(v_grid[i]);
    std::tie(g1[i], g1d[i]) = s.g1.at(v_grid[i]);
  }
  return assemble_mte(s.beta0, s.beta1, g0, g0d, g1, g1d, s.x, v_grid);
}

}  // namespace

TEST_CASE("symmetric model assembles to an identically zero MTE") {
  const NormalSetup s = make_setup(0.3, 0.3, 0.5, 0.5);
  const MteCurve curve = assemble_from(s, testutil::linspace(0.05, 0.95, 19));
  for (Eigen::Index i = 0; i < curve.values.size(); ++i)
    CHECK(curve.values[i] == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("assembly at the median resistance drops the quantile term") {
  const NormalSetup s = make_setup(0.1, 0.5, 0.2, 0.9);
  Eigen::VectorXd v(1);
  v << 0.5;
  const MteCurve curve = assemble_from(s, v);
  CHECK(curve.values[0] == doctest::Approx(0.4).epsilon(1e-10));  // Phi^{-1}(1/2) = 0
}

TEST_CASE("assembly reproduces the closed form at v = Phi(1)") {
  // rho1 - rho0 = 1 and all level terms cancel: MTE = Phi^{-1}(v) = 1.
  const NormalSetup s = make_setup(0.0, 0.0, 0.0, 1.0);
  Eigen::VectorXd v(1);
  v << normal_cdf(1.0);
  const MteCurve curve = assemble_from(s, v);
  CHECK(curve.values[0] == doctest::Approx(1.0).epsilon(1e-8));
}

TEST_CASE("assembly validates grids") {
  const NormalSetup s = make_setup(0.0, 0.0, 0.0, 1.0);
  const Eigen::VectorXd v = testutil::linspace(0.1, 0.9, 5);
  const Eigen::VectorXd wrong = Eigen::VectorXd::Zero(4);
  CHECK_THROWS_AS(assemble_mte(s.beta0, s.beta1, wrong, wrong, wrong, wrong, s.x, v),
                  ConfigError);
  Eigen::VectorXd unsorted(3);
  unsorted << 0.5, 0.4, 0.6;
  const Eigen::VectorXd g = Eigen::VectorXd::Zero(3);
  CHECK_THROWS_AS(assemble_mte(s.beta0, s.beta1, g, g, g, g, s.x, unsorted), ConfigError);
}

TEST_CASE("causal parameters satisfy the aggregation identities") {
  const NormalSetup s = make_setup(0.1, 0.5, 0.7, 0.3, 0.25);
  Eigen::VectorXd x(1);
  x << 1.4;
  const CausalSummary c =
      causal_params(s.beta0, s.beta1, s.g0, s.g1, 0.3, 0.2, 0.8, x);
  // pi TT + (1 - pi) TUT = ATE, exactly from shared inputs.
  CHECK(0.3 * c.tt + 0.7 * c.tut == doctest::Approx(c.ate).epsilon(1e-10));
  // LATE over the full interval is the ATE.
  const CausalSummary full =
      causal_params(s.beta0, s.beta1, s.g0, s.g1, 0.3, 0.0, 1.0, x);
  CHECK(full.late == doctest::Approx(full.ate).epsilon(1e-10));
}

TEST_CASE("ATE reduces to the intercept gap under the exact normal model") {
  const NormalSetup s = make_setup(0.0, 0.4, 0.6, 0.6);
  const CausalSummary c =
      causal_params(s.beta0, s.beta1, s.g0, s.g1, 0.5, 0.25, 0.75, s.x);
  // g1(1) = alpha1 and g0(0) = alpha0: the Mills terms vanish at the ends.
  CHECK(c.ate == doctest::Approx(0.4).epsilon(1e-8));
  CHECK_FALSE(c.boundary_extrapolated);
}

TEST_CASE("causal parameter preconditions") {
  const NormalSetup s = make_setup(0.0, 0.4, 0.2, 0.5);
  CHECK_THROWS_AS(causal_params(s.beta0, s.beta1, s.g0, s.g1, 0.0, 0.2, 0.8, s.x),
                  EstimationError);
  CHECK_THROWS_AS(causal_params(s.beta0, s.beta1, s.g0, s.g1, 1.0, 0.2, 0.8, s.x),
                  EstimationError);
  CHECK_THROWS_AS(causal_params(s.beta0, s.beta1, s.g0, s.g1, 0.5, 0.8, 0.2, s.x),
                  ConfigError);
}

TEST_CASE("profile moves shift every parameter by the coefficient gap") {
  const NormalSetup s = make_setup(0.1, 0.3, 0.4, 0.6, 0.5);
  Eigen::VectorXd x1(1), x2(1);
  x1 << 1.0;
  x2 << 3.5;
  const CausalSummary a = causal_params(s.beta0, s.beta1, s.g0, s.g1, 0.4, 0.2, 0.7, x1);
  const CausalSummary b = causal_params(s.beta0, s.beta1, s.g0, s.g1, 0.4, 0.2, 0.7, x2);
  const double shift = (x2[0] - x1[0]) * 0.5;
  CHECK(b.ate - a.ate == doctest::Approx(shift).epsilon(1e-12));
  CHECK(b.tt - a.tt == doctest::Approx(shift).epsilon(1e-12));
  CHECK(b.tut - a.tut == doctest::Approx(shift).epsilon(1e-12));
  CHECK(b.late - a.late == doctest::Approx(shift).epsilon(1e-12));
}

TEST_CASE("boundary clamping is reported") {
  // Grid-backed curve on [0.2, 0.8]: requests at 0 and 1 clamp.
  ArmFit arm;
  arm.p_grid = testutil::linspace(0.2, 0.8, 13);
  arm.g = Eigen::VectorXd::Zero(13);
  arm.g_deriv = Eigen::VectorXd::Zero(13);
  const GEvaluator g0 = make_grid_g(arm);
  const GEvaluator g1 = make_grid_g(arm);
  const Eigen::VectorXd beta = Eigen::VectorXd::Zero(1);
  const CausalSummary c = causal_params(beta, beta, g0, g1, 0.5, 0.25, 0.75,
                                        Eigen::VectorXd::Zero(1));
  CHECK(c.boundary_extrapolated);
}

TEST_CASE("grid evaluator interpolates linearly") {
  ArmFit arm;
  arm.p_grid = testutil::linspace(0.0, 1.0, 11);
  arm.g = 2.0 * arm.p_grid;
  arm.g_deriv = Eigen::VectorXd::Constant(11, 2.0);
  const GEvaluator eval = make_grid_g(arm);
  CHECK(eval.at(0.55).first == doctest::Approx(1.1).epsilon(1e-12));
  bool clamped = false;
  CHECK(eval.at(-0.3, &clamped).first == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(clamped);
}

TEST_CASE("marginal structural curves") {
  const Eigen::VectorXd v_grid = testutil::linspace(0.1, 0.9, 33);
  Eigen::VectorXd mean_x(1);
  mean_x << 2.0;
  const Eigen::VectorXd beta = Eigen::VectorXd::Constant(1, 1.5);

  SUBCASE("no unobserved heterogeneity gives a flat curve") {
    const Eigen::VectorXd eu = Eigen::VectorXd::Zero(v_grid.size());
    const Eigen::VectorXd curve = marginal_structural(beta, eu, mean_x);
    for (Eigen::Index i = 0; i < curve.size(); ++i)
      CHECK(curve[i] == doctest::Approx(3.0).epsilon(1e-12));
  }

  SUBCASE("normal model at v = Phi(1) adds alpha + rho") {
    Eigen::VectorXd v(1);
    v << normal_cdf(1.0);
    Eigen::VectorXd eu(1);
    const double alpha = 0.4, rho = 1.0;
    eu << alpha + rho * normal_quantile(v[0]);
    const Eigen::VectorXd curve = marginal_structural(beta, eu, mean_x);
    CHECK(curve[0] == doctest::Approx(3.0 + alpha + 1.0).epsilon(1e-8));
  }

  SUBCASE("structural difference equals the MTE at the mean profile") {
    const NormalSetup s = make_setup(0.1, 0.5, 0.7, 0.3, 0.25);
    Eigen::VectorXd eu0(v_grid.size()), eu1(v_grid.size());
    for (Eigen::Index i = 0; i < v_grid.size(); ++i) {
      const auto [g0, g0d] = s.g0.at(v_grid[i]);
      const auto [g1, g1d] = s.g1.at(v_grid[i]);
      eu0[i] = g0 - (1.0 - v_grid[i]) * g0d;
      eu1[i] = g1 + v_grid[i] * g1d;
    }
    const Eigen::VectorXd y0 = marginal_structural(s.beta0, eu0, mean_x);
    const Eigen::VectorXd y1 = marginal_structural(s.beta1, eu1, mean_x);
    NormalSetup at_mean = s;
    at_mean.x = mean_x;
    const MteCurve mte = assemble_from(at_mean, v_grid);
    for (Eigen::Index i = 0; i < v_grid.size(); ++i)
      CHECK(y1[i] - y0[i] == doctest::Approx(mte.values[i]).epsilon(1e-10));
  }
}

TEST_CASE("marginal response curves") {
  const auto [s, oracle] = generate(preset_dgp("separable", 400, 71));
  PropensityFit fit = fit_propensity(s, {});
  fit = trim(fit, 0.01, 0.01, s);
  Eigen::VectorXd v_grid(3);
  v_grid << 0.0, 0.5, fit.support_hi + 0.01;
  const Eigen::VectorXd eu0 = Eigen::VectorXd::Constant(3, 0.2);
  const Eigen::VectorXd eu_diff = Eigen::VectorXd::Constant(3, 0.3);
  const Eigen::VectorXd beta0 = oracle.beta0;
  const Eigen::VectorXd delta = oracle.beta_diff();
  const ResponseCurves r = marginal_response(s, fit, beta0, delta, eu0, eu_diff, v_grid);

  CHECK(r.prob_participation[0] == doctest::Approx(1.0));  // every score >= 0
  CHECK(r.prob_participation[2] == doctest::Approx(0.0));  // above the max score
  const Eigen::VectorXd mean_x = s.covariate_means(fit.kept_rows());
  CHECK(r.expected_outcome[2] ==
        doctest::Approx(mean_x.dot(beta0) + 0.2).epsilon(1e-12));  // E[Y0|V=v] only

  // Survival monotonicity on a finer grid.
  const Eigen::VectorXd fine = testutil::linspace(0.0, 1.0, 41);
  const ResponseCurves rf =
      marginal_response(s, fit, beta0, delta, Eigen::VectorXd::Zero(41),
                        Eigen::VectorXd::Zero(41), fine);
  for (int i = 1; i < 41; ++i)
    CHECK(rf.prob_participation[i] <= rf.prob_participation[i - 1] + 1e-15);
}

TEST_CASE("curve integrals reconcile with the closed-form parameters") {
  // Polynomial model: bounded MTE on [0, 1], so the trapezoid average on a
  // 101-point grid must match ATE and LATE to quadrature accuracy.
  const ParametricSpec spec{ParametricFamily::polynomial, 2};
  Eigen::VectorXd theta0(3), theta1(3);
  theta0 << 0.1, -0.4, 0.3;
  theta1 << 0.5, 0.2, -0.1;
  const GEvaluator g0 = make_parametric_g(spec, 0, theta0);
  const GEvaluator g1 = make_parametric_g(spec, 1, theta1);
  const Eigen::VectorXd beta = Eigen::VectorXd::Constant(1, 1.0);
  const Eigen::VectorXd x = Eigen::VectorXd::Constant(1, 0.7);

  const Eigen::VectorXd v_grid = testutil::linspace(0.0, 1.0, 101);
  Eigen::VectorXd gv0(101), gd0(101), gv1(101), gd1(101);
  for (int i = 0; i < 101; ++i) {
    std::tie(gv0[i], gd0[i]) = g0.at(v_grid[i]);
    std::tie(gv1[i], gd1[i]) = g1.at(v_grid[i]);
  }
  const MteCurve mte = assemble_mte(beta, beta, gv0, gd0, gv1, gd1, x, v_grid);
  const CausalSummary c = causal_params(beta, beta, g0, g1, 0.4, 0.3, 0.7, x);

  CHECK(curve_average(v_grid, mte.values, 0.0, 1.0) ==
        doctest::Approx(c.ate).epsilon(1e-3));
  CHECK(curve_average(v_grid, mte.values, 0.3, 0.7) ==
        doctest::Approx(c.late).epsilon(1e-3));
}

TEST_CASE("liv parameters satisfy the same identities") {
  // r(p) = alpha0 + q(p) under the normal model.
  const double alpha0 = 0.2, alpha_diff = 0.4, rho_diff = 0.5;
  GEvaluator r;
  r.lo = 0.0;
  r.hi = 1.0;
  r.exact = true;
  r.eval = [=](double p) {
    const double pdf_term = (p <= 0.0 || p >= 1.0) ? 0.0 : normal_pdf(normal_quantile(p));
    const double rr = alpha0 + alpha_diff * p - rho_diff * pdf_term;
    const double q1 = (p <= 0.0 || p >= 1.0)
                          ? 0.0
                          : alpha_diff + rho_diff * normal_quantile(p);
    return std::make_pair(rr, q1);
  };
  Eigen::VectorXd delta(1), x(1);
  delta << 0.3;
  x << 1.0;
  const CausalSummary c = liv_causal_params(delta, r, 0.35, 0.2, 0.9, x);
  CHECK(0.35 * c.tt + 0.65 * c.tut == doctest::Approx(c.ate).epsilon(1e-10));
  CHECK(c.ate == doctest::Approx(0.3 + alpha_diff).epsilon(1e-10));
  const CausalSummary full = liv_causal_params(delta, r, 0.35, 0.0, 1.0, x);
  CHECK(full.late == doctest::Approx(full.ate).epsilon(1e-10));
}

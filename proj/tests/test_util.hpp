#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <functional>
#include <utility>
#include <vector>

#include "mtefree/common.hpp"
#include "mtefree/data.hpp"
#include "mtefree/propensity.hpp"

namespace testutil {

// Composite Simpson quadrature; n subintervals (even).
inline double simpson(const std::function<double(double)>& f, double a, double b,
                      int n = 2000) {
  if (n % 2 == 1) ++n;
  const double h = (b - a) / n;
  double acc = f(a) + f(b);
  for (int i = 1; i < n; ++i) acc += f(a + i * h) * (i % 2 == 1 ? 4.0 : 2.0);
  return acc * h / 3.0;
}

// Integral of Phi^{-1}(v) over (0, p], via the substitution v = Phi(t):
// integral of t*pdf(t) over (-inf, z]. The z <= -12 tail is below 1e-30.
inline double quantile_integral_quadrature(double p) {
  const double z = mtefree::normal_quantile(p);
  return simpson([](double t) { return t * mtefree::normal_pdf(t); }, -12.0, z, 20000);
}

// Mean of Phi^{-1}(v)^j over (0, p], same substitution.
inline double basis_mean_quadrature(int j, double lo_p, double hi_p) {
  const double zlo = lo_p <= 0.0 ? -12.0 : std::max(-12.0, mtefree::normal_quantile(lo_p));
  const double zhi = hi_p >= 1.0 ? 12.0 : std::min(12.0, mtefree::normal_quantile(hi_p));
  const double integral = simpson(
      [j](double t) { return std::pow(t, j) * mtefree::normal_pdf(t); }, zlo, zhi, 20000);
  return integral / (hi_p - lo_p);
}

// OLS with intercept; returns (intercept, slopes).
inline std::pair<double, Eigen::VectorXd> ols(const Eigen::MatrixXd& x,
                                              const Eigen::VectorXd& y) {
  Eigen::MatrixXd design(x.rows(), x.cols() + 1);
  design.col(0).setOnes();
  design.rightCols(x.cols()) = x;
  const Eigen::VectorXd coef =
      design.colPivHouseholderQr().solve(y);
  return {coef[0], coef.tail(x.cols())};
}

// Per-arm OLS slopes on the kept rows of a fit.
inline Eigen::VectorXd arm_ols_slopes(const mtefree::Sample& s,
                                      const mtefree::PropensityFit& fit, int arm) {
  const std::vector<int> rows = fit.kept_rows_arm(s, arm);
  Eigen::MatrixXd x(rows.size(), s.dim_x());
  Eigen::VectorXd y(rows.size());
  for (size_t r = 0; r < rows.size(); ++r) {
    x.row(r) = s.covariate_row(rows[r]).transpose();
    y[r] = s.y[rows[r]];
  }
  return ols(x, y).second;
}

inline Eigen::VectorXd linspace(double lo, double hi, int n) {
  Eigen::VectorXd out(n);
  for (int i = 0; i < n; ++i) out[i] = lo + (hi - lo) * i / (n - 1);
  return out;
}

// Sample with one continuous covariate.
inline mtefree::Sample make_sample_1d(const Eigen::VectorXd& y, const Eigen::VectorXi& d,
                                      const Eigen::VectorXd& x) {
  mtefree::Sample s;
  s.y = y;
  s.d = d;
  s.x_cont = x;
  s.x_disc.resize(y.size(), 0);
  s.cont_names = {"x1"};
  return s;
}

// PropensityFit wrapping externally supplied scores; everything kept.
inline mtefree::PropensityFit scores_fit(const Eigen::VectorXd& scores) {
  mtefree::PropensityFit fit;
  fit.scores = scores;
  fit.kept.assign(static_cast<size_t>(scores.size()), 1);
  fit.support_lo = scores.minCoeff();
  fit.support_hi = scores.maxCoeff();
  fit.bandwidths = {1.0};
  return fit;
}

// PropensityFit with an exact score function, for noiseless diagnostics.
inline mtefree::PropensityFit exact_fit(
    const std::function<double(const Eigen::VectorXd&)>& pi, const mtefree::Sample& s) {
  mtefree::PropensityFit fit;
  fit.scores.resize(s.size());
  for (Eigen::Index i = 0; i < s.size(); ++i)
    fit.scores[i] = pi(s.x_cont.row(i).transpose());
  fit.kept.assign(static_cast<size_t>(s.size()), 1);
  fit.support_lo = fit.scores.minCoeff();
  fit.support_hi = fit.scores.maxCoeff();
  fit.bandwidths.assign(static_cast<size_t>(s.dim_cont()), 1.0);
  fit.cells = mtefree::split_cells(s);
  fit.evaluator = [pi](const Eigen::VectorXd& xc, const Eigen::VectorXi&) {
    return pi(xc);
  };
  return fit;
}

inline double mean(const std::vector<double>& v) {
  double m = 0.0;
  for (double x : v) m += x;
  return m / static_cast<double>(v.size());
}

inline double sample_sd(const std::vector<double>& v) {
  const double m = mean(v);
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

inline double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace testutil

#include "mtefree/pipeline.hpp"

#include <algorithm>
#include <cmath>

#include "mtefree/common.hpp"

namespace mtefree {

Procedure procedure_from_string(const std::string& name) {
  if (name == "separate") return Procedure::separate;
  if (name == "liv") return Procedure::liv;
  if (name == "both") return Procedure::both;
  throw ConfigError("pipeline", "unknown procedure: " + name +
                                    " (expected separate, liv, or both)");
}

SecondStep second_step_from_string(const std::string& name) {
  if (name == "semiparametric") return SecondStep::semiparametric;
  if (name == "normal") return SecondStep::normal;
  if (name == "polynomial") return SecondStep::polynomial;
  throw ConfigError("pipeline", "unknown second step: " + name +
                                    " (expected semiparametric, normal, or polynomial)");
}

std::string to_string(Procedure p) {
  switch (p) {
    case Procedure::separate: return "separate";
    case Procedure::liv: return "liv";
    case Procedure::both: return "both";
  }
  return "?";
}

std::string to_string(SecondStep s) {
  switch (s) {
    case SecondStep::semiparametric: return "semiparametric";
    case SecondStep::normal: return "normal";
    case SecondStep::polynomial: return "polynomial";
  }
  return "?";
}

void RunConfig::validate() const {
  if (grid_size < 2) throw ConfigError("pipeline", "grid_size must be at least 2");
  if (!(late_v1 < late_v2) || late_v1 < 0.0 || late_v2 > 1.0)
    throw ConfigError("pipeline", "LATE bounds need 0 <= v1 < v2 <= 1");
  if (second_step != SecondStep::semiparametric && poly_degree < 1)
    throw ConfigError("pipeline", "polynomial degree must be >= 1");
  if (bootstrap < 0) throw ConfigError("pipeline", "bootstrap count must be >= 0");
  if (bootstrap == 1) throw ConfigError("pipeline", "bootstrap needs B >= 2");
  if (!(ci_level > 0.0 && ci_level < 1.0))
    throw ConfigError("pipeline", "ci_level must lie in (0, 1)");
  if (pi_x && !(*pi_x > 0.0 && *pi_x < 1.0))
    throw ConfigError("pipeline", "pi_x must lie strictly inside (0, 1)");
}

ParametricSpec RunConfig::parametric_spec() const {
  ParametricSpec spec;
  spec.family = second_step == SecondStep::polynomial ? ParametricFamily::polynomial
                                                      : ParametricFamily::normal_polynomial;
  spec.degree = poly_degree;
  return spec;
}

const std::vector<BootstrapSummary>* BootstrapBands::find(const std::string& name) const {
  auto it = blocks.find(name);
  return it == blocks.end() ? nullptr : &it->second;
}

namespace {

Eigen::VectorXd linspace(double lo, double hi, int n) {
  Eigen::VectorXd out(n);
  for (int i = 0; i < n; ++i)
    out[i] = lo + (hi - lo) * static_cast<double>(i) / (n - 1);
  return out;
}

// Arm support = range of the arm's kept scores.
std::pair<double, double> arm_support(const Sample& s, const PropensityFit& fit, int arm) {
  double lo = 1.0, hi = 0.0;
  bool any = false;
  for (int i : fit.kept_rows_arm(s, arm)) {
    lo = std::min(lo, fit.scores[i]);
    hi = std::max(hi, fit.scores[i]);
    any = true;
  }
  if (!any)
    throw EstimationError("pipeline", "arm " + std::to_string(arm) + " has no kept rows");
  return {lo, hi};
}

struct GridEval {
  Eigen::VectorXd g, g_deriv;
  std::vector<std::uint8_t> clamped;
};

GridEval evaluate_on_grid(const GEvaluator& eval, const Eigen::VectorXd& grid) {
  GridEval out;
  out.g.resize(grid.size());
  out.g_deriv.resize(grid.size());
  out.clamped.assign(static_cast<size_t>(grid.size()), 0);
  for (Eigen::Index i = 0; i < grid.size(); ++i) {
    bool c = false;
    const auto [g, gd] = eval.at(grid[i], &c);
    out.g[i] = g;
    out.g_deriv[i] = gd;
    out.clamped[i] = c ? 1 : 0;
  }
  return out;
}

SeparateEstimates run_separate(const Sample& s, const PropensityFit& fit,
                               const RunConfig& cfg, const Eigen::VectorXd& v_grid,
                               const Eigen::VectorXd& profile, double pi_x, double h2,
                               double h3) {
  SeparateEstimates out;
  const ParametricSpec pspec = cfg.parametric_spec();

  GEvaluator eval[2];
  for (int arm = 0; arm < 2; ++arm) {
    ArmFit armfit;
    armfit.arm = arm;
    const auto [lo, hi] = arm_support(s, fit, arm);
    armfit.support_lo = lo;
    armfit.support_hi = hi;
    armfit.p_grid = linspace(lo, hi, cfg.grid_size);

    if (cfg.second_step == SecondStep::semiparametric) {
      armfit.beta = pairwise_difference_beta(s, fit, arm, cfg.kernel_pairwise, h2,
                                             cfg.threads);
      const LocalLinearCurve curve =
          local_linear_g(s, fit, arm, armfit.beta, armfit.p_grid,
                         cfg.kernel_local_linear, h3, cfg.threads);
      armfit.g = curve.g;
      armfit.g_deriv = curve.g_deriv;
      armfit.flagged = curve.flagged;
      eval[arm] = make_grid_g(armfit);
    } else {
      const ParametricFit pfit = parametric_second_step(s, fit, arm, pspec);
      armfit.beta = pfit.beta;
      (arm == 1 ? out.theta1 : out.theta0) = pfit.theta;
      eval[arm] = make_parametric_g(pspec, arm, pfit.theta);
      armfit.flagged.assign(static_cast<size_t>(cfg.grid_size), 0);
      const GridEval ge = evaluate_on_grid(eval[arm], armfit.p_grid);
      armfit.g = ge.g;
      armfit.g_deriv = ge.g_deriv;
    }
    (arm == 1 ? out.arm1 : out.arm0) = std::move(armfit);
  }

  const GridEval e0 = evaluate_on_grid(eval[0], v_grid);
  const GridEval e1 = evaluate_on_grid(eval[1], v_grid);
  out.g0 = e0.g;
  out.g0_deriv = e0.g_deriv;
  out.g1 = e1.g;
  out.g1_deriv = e1.g_deriv;
  out.v_flags.assign(static_cast<size_t>(v_grid.size()), 0);
  for (Eigen::Index i = 0; i < v_grid.size(); ++i)
    out.v_flags[i] = (e0.clamped[i] || e1.clamped[i]) ? 1 : 0;

  out.mte = assemble_mte(out.arm0.beta, out.arm1.beta, out.g0, out.g0_deriv, out.g1,
                         out.g1_deriv, profile, v_grid, out.v_flags);
  out.params = causal_params(out.arm0.beta, out.arm1.beta, eval[0], eval[1], pi_x,
                             cfg.late_v1, cfg.late_v2, profile);

  // E[U_d | V = v] through the level/derivative identities; these feed the
  // structural and response curves.
  out.eu0.resize(v_grid.size());
  out.eu1.resize(v_grid.size());
  for (Eigen::Index i = 0; i < v_grid.size(); ++i) {
    const double v = v_grid[i];
    out.eu0[i] = out.g0[i] - (1.0 - v) * out.g0_deriv[i];
    out.eu1[i] = out.g1[i] + v * out.g1_deriv[i];
  }
  const Eigen::VectorXd mean_x = s.covariate_means(fit.kept_rows());
  out.structural0 = marginal_structural(out.arm0.beta, out.eu0, mean_x);
  out.structural1 = marginal_structural(out.arm1.beta, out.eu1, mean_x);
  out.response = marginal_response(s, fit, out.arm0.beta, out.arm1.beta - out.arm0.beta,
                                   out.eu0, out.eu1 - out.eu0, v_grid);
  return out;
}

LivEstimates run_liv(const Sample& s, const PropensityFit& fit, const RunConfig& cfg,
                     const Eigen::VectorXd& v_grid, const Eigen::VectorXd& profile,
                     double pi_x, double h2, double h3) {
  LivEstimates out;
  LivFit lf;
  lf.support_lo = fit.support_lo;
  lf.support_hi = fit.support_hi;
  lf.p_grid = v_grid;

  GEvaluator r_eval;
  if (cfg.second_step == SecondStep::semiparametric) {
    auto [beta0, delta] = liv_pairwise(s, fit, cfg.kernel_pairwise, h2, cfg.threads);
    lf.beta0 = std::move(beta0);
    lf.delta = std::move(delta);
    const LocalLinearCurve curve = liv_local_linear(s, fit, lf.beta0, lf.delta, lf.p_grid,
                                                    cfg.kernel_local_linear, h3,
                                                    cfg.threads);
    lf.r = curve.g;
    lf.q_deriv = curve.g_deriv;
    lf.flagged = curve.flagged;
    ArmFit grid_fit;  // reuse the grid interpolation machinery for r
    grid_fit.p_grid = lf.p_grid;
    grid_fit.g = lf.r;
    grid_fit.g_deriv = lf.q_deriv;
    r_eval = make_grid_g(grid_fit);
  } else {
    const ParametricSpec pspec = cfg.parametric_spec();
    const LivParametricFit pfit = liv_parametric_second_step(s, fit, pspec);
    lf.beta0 = pfit.beta0;
    lf.delta = pfit.delta;
    out.alpha0 = pfit.alpha0;
    out.theta = pfit.theta;
    const double alpha0 = pfit.alpha0;
    const Eigen::VectorXd theta = pfit.theta;
    r_eval.lo = 0.0;
    r_eval.hi = 1.0;
    r_eval.exact = true;
    r_eval.eval = [pspec, alpha0, theta](double p) {
      double r = alpha0, q1 = 0.0;
      for (int j = 0; j < theta.size(); ++j) {
        r += theta[j] * selection_basis_integral(pspec, j, p);
        q1 += theta[j] * selection_basis(pspec, j, std::clamp(p, 1e-10, 1.0 - 1e-10));
      }
      return std::make_pair(r, q1);
    };
    const GridEval ge = evaluate_on_grid(r_eval, lf.p_grid);
    lf.r = ge.g;
    lf.q_deriv = ge.g_deriv;
    lf.flagged.assign(static_cast<size_t>(lf.p_grid.size()), 0);
  }

  const GridEval ge = evaluate_on_grid(r_eval, v_grid);
  MteCurve mte;
  mte.v_grid = v_grid;
  mte.profile = profile;
  mte.values.resize(v_grid.size());
  mte.flagged.assign(static_cast<size_t>(v_grid.size()), 0);
  const double shift = profile.dot(lf.delta);
  for (Eigen::Index i = 0; i < v_grid.size(); ++i) {
    mte.values[i] = shift + ge.g_deriv[i];
    mte.flagged[i] = ge.clamped[i];
  }
  out.mte = std::move(mte);
  out.params = liv_causal_params(lf.delta, r_eval, pi_x, cfg.late_v1, cfg.late_v2,
                                 profile);
  out.fit = std::move(lf);
  return out;
}

// One full pass without bootstrap or diagnostics; shared by the point run
// and every bootstrap replication.
PipelineResult run_once(const Sample& s, const RunConfig& cfg) {
  PropensityOptions popt;
  popt.kernel = cfg.kernel_propensity;
  popt.bandwidth = cfg.bw_propensity;
  popt.fixed_bandwidths = cfg.propensity_fixed_bandwidths;
  popt.leave_one_out = cfg.leave_one_out;
  popt.min_cell_size = cfg.min_cell_size;
  popt.threads = cfg.threads;

  PipelineResult result;
  result.propensity = trim(fit_propensity(s, popt), cfg.trim_lower, cfg.trim_upper, s);
  const PropensityFit& fit = result.propensity;

  const std::vector<double> kept_scores = fit.kept_scores();
  const std::span<const double> score_span(kept_scores.data(), kept_scores.size());
  const double h2 = resolve_bandwidth(cfg.bw_pairwise, score_span);
  const double h3 = resolve_bandwidth(cfg.bw_local_linear, score_span);

  result.v_grid = cfg.fixed_v_grid
                      ? *cfg.fixed_v_grid
                      : linspace(fit.support_lo, fit.support_hi, cfg.grid_size);

  if (cfg.profile) {
    if (cfg.profile->size() != s.dim_x())
      throw ConfigError("pipeline", "profile has wrong length");
    result.profile = *cfg.profile;
  } else {
    result.profile = s.covariate_means(fit.kept_rows());
  }
  if (cfg.pi_x) {
    result.pi_x = *cfg.pi_x;
  } else {
    double mean = 0.0;
    for (double p : kept_scores) mean += p;
    result.pi_x = mean / static_cast<double>(kept_scores.size());
  }

  if (cfg.procedure != Procedure::liv)
    result.separate = run_separate(s, fit, cfg, result.v_grid, result.profile,
                                   result.pi_x, h2, h3);
  if (cfg.procedure != Procedure::separate)
    result.liv = run_liv(s, fit, cfg, result.v_grid, result.profile, result.pi_x, h2, h3);

  result.meta.h1 = fit.bandwidths;
  result.meta.h2 = h2;
  result.meta.h3 = h3;
  result.meta.seed = cfg.seed;
  result.meta.version = kVersion;
  result.meta.warnings = fit.warnings;
  const SupportReport support = support_report(s, fit);
  result.meta.n_total = support.n_total;
  result.meta.n_kept = support.n_kept;
  result.meta.n_trimmed_low = support.n_trimmed_low;
  result.meta.n_trimmed_high = support.n_trimmed_high;
  result.meta.n_dropped_cell_rows = support.n_dropped_cell_rows;
  result.meta.n_kept_treated = support.n_kept_treated;
  result.meta.n_kept_untreated = support.n_kept_untreated;
  return result;
}

struct TargetBlock {
  std::string name;
  int size = 0;
  std::function<Eigen::VectorXd(const PipelineResult&)> get;
};

std::vector<TargetBlock> build_targets(const RunConfig& cfg, const PipelineResult& point) {
  std::vector<TargetBlock> blocks;
  const int k = static_cast<int>(point.profile.size());
  const int g = static_cast<int>(point.v_grid.size());
  auto scalar = [](std::function<double(const PipelineResult&)> f) {
    return [f](const PipelineResult& r) {
      Eigen::VectorXd v(1);
      v[0] = f(r);
      return v;
    };
  };

  if (cfg.procedure != Procedure::liv) {
    blocks.push_back({"separate.beta0", k,
                      [](const PipelineResult& r) { return r.separate->arm0.beta; }});
    blocks.push_back({"separate.beta1", k,
                      [](const PipelineResult& r) { return r.separate->arm1.beta; }});
    blocks.push_back({"separate.beta_diff", k, [](const PipelineResult& r) {
                        return Eigen::VectorXd(r.separate->arm1.beta -
                                               r.separate->arm0.beta);
                      }});
    blocks.push_back({"separate.ate", 1,
                      scalar([](const PipelineResult& r) { return r.separate->params.ate; })});
    blocks.push_back({"separate.tt", 1,
                      scalar([](const PipelineResult& r) { return r.separate->params.tt; })});
    blocks.push_back({"separate.tut", 1,
                      scalar([](const PipelineResult& r) { return r.separate->params.tut; })});
    blocks.push_back({"separate.late", 1,
                      scalar([](const PipelineResult& r) { return r.separate->params.late; })});
    blocks.push_back({"separate.mte", g,
                      [](const PipelineResult& r) { return r.separate->mte.values; }});
    blocks.push_back({"separate.structural0", g,
                      [](const PipelineResult& r) { return r.separate->structural0; }});
    blocks.push_back({"separate.structural1", g,
                      [](const PipelineResult& r) { return r.separate->structural1; }});
    blocks.push_back({"separate.response_outcome", g, [](const PipelineResult& r) {
                        return r.separate->response.expected_outcome;
                      }});
  }
  if (cfg.procedure != Procedure::separate) {
    blocks.push_back({"liv.beta0", k,
                      [](const PipelineResult& r) { return r.liv->fit.beta0; }});
    blocks.push_back({"liv.delta", k,
                      [](const PipelineResult& r) { return r.liv->fit.delta; }});
    blocks.push_back({"liv.ate", 1,
                      scalar([](const PipelineResult& r) { return r.liv->params.ate; })});
    blocks.push_back({"liv.tt", 1,
                      scalar([](const PipelineResult& r) { return r.liv->params.tt; })});
    blocks.push_back({"liv.tut", 1,
                      scalar([](const PipelineResult& r) { return r.liv->params.tut; })});
    blocks.push_back({"liv.late", 1,
                      scalar([](const PipelineResult& r) { return r.liv->params.late; })});
    blocks.push_back({"liv.mte", g,
                      [](const PipelineResult& r) { return r.liv->mte.values; }});
  }
  return blocks;
}

BootstrapBands run_bootstrap(const Sample& s, const RunConfig& cfg,
                             const PipelineResult& point) {
  RunConfig rep_cfg = cfg;
  rep_cfg.bootstrap = 0;
  rep_cfg.with_diagnostics = false;
  rep_cfg.fixed_v_grid = point.v_grid;
  rep_cfg.threads = 1;  // parallelism lives at the replication level

  const std::vector<TargetBlock> blocks = build_targets(cfg, point);
  int total = 0;
  for (const auto& b : blocks) total += b.size;

  const auto statistic = [&](const std::vector<int>& rows) -> Eigen::VectorXd {
    const Sample resampled = s.subset(rows);
    const PipelineResult rep = run_once(resampled, rep_cfg);
    Eigen::VectorXd out(total);
    int off = 0;
    for (const auto& b : blocks) {
      out.segment(off, b.size) = b.get(rep);
      off += b.size;
    }
    return out;
  };

  const BootstrapDraws draws = bootstrap_statistic(static_cast<int>(s.size()),
                                                   cfg.bootstrap, cfg.seed, statistic,
                                                   total, cfg.threads);
  BootstrapBands bands;
  bands.requested = draws.requested;
  bands.completed = draws.completed();
  bands.failures = draws.failures;
  bands.level = cfg.ci_level;
  int off = 0;
  for (const auto& b : blocks) {
    std::vector<BootstrapSummary> summaries(b.size);
    for (int c = 0; c < b.size; ++c)
      summaries[c] = draws.summary(off + c, cfg.ci_level);
    bands.blocks[b.name] = std::move(summaries);
    off += b.size;
  }
  return bands;
}

}  // namespace

PipelineResult run_pipeline(const Sample& s, const RunConfig& cfg) {
  cfg.validate();
  s.validate();
  s.require_both_arms("pipeline");

  PipelineResult result = run_once(s, cfg);
  if (cfg.with_diagnostics)
    result.diagnostics = run_diagnostics(s, result.propensity, cfg.diagnostics);
  if (cfg.bootstrap > 0) result.bands = run_bootstrap(s, cfg, result);
  return result;
}

}  // namespace mtefree

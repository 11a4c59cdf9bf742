#include "mtefree/report.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

#include <nlohmann/json.hpp>

#include "mtefree/common.hpp"

namespace mtefree {

namespace {

using nlohmann::json;

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ConfigError("report", "cannot write file: " + path);
  return out;
}

std::string num(double v, int precision = 6) {
  if (std::isnan(v)) return "";
  std::ostringstream os;
  os << std::setprecision(precision) << std::fixed << v;
  return os.str();
}

std::string csv_quote(const std::string& field) {
  if (field.find_first_of(",\"\n") == std::string::npos) return field;
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += "\"\"";
    out += c;
  }
  out += "\"";
  return out;
}

// Band lookup helpers: nullptr-safe component access.
const BootstrapSummary* band_at(const PipelineResult& r, const std::string& block,
                                int index) {
  if (!r.bands) return nullptr;
  const auto* vec = r.bands->find(block);
  if (!vec || index >= static_cast<int>(vec->size())) return nullptr;
  return &(*vec)[index];
}

std::string paren_se(const BootstrapSummary* s) {
  return s ? "(" + num(s->se, 3) + ")" : "(NA)";
}

json vector_to_json(const Eigen::VectorXd& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v[i]);
  return out;
}

json summary_to_json(double estimate, const BootstrapSummary* band) {
  json out;
  out["estimate"] = estimate;
  if (band) {
    out["se"] = band->se;
    out["ci_lo"] = band->ci_lo;
    out["ci_hi"] = band->ci_hi;
  }
  return out;
}

}  // namespace

std::string format_coefficient_table(const Sample& s, const PipelineResult& result) {
  const std::vector<std::string> names = s.covariate_names();
  const bool have_sep = result.separate.has_value();
  const bool have_liv = result.liv.has_value();

  std::ostringstream os;
  const int w = 12;
  auto cell = [&](const std::string& text) {
    os << std::setw(w) << text;
  };

  size_t name_width = 14;
  for (const auto& n : names) name_width = std::max(name_width, n.size() + 2);

  os << std::left << std::setw(static_cast<int>(name_width)) << "" << std::right;
  cell("Treated");
  cell("Untreated");
  cell("Difference");
  os << "\n";

  auto row = [&](const std::string& label, const std::string& c1,
                 const std::string& c2, const std::string& c3) {
    os << std::left << std::setw(static_cast<int>(name_width)) << label << std::right;
    cell(c1);
    cell(c2);
    cell(c3);
    os << "\n";
  };

  if (have_sep) {
    const auto& sep = *result.separate;
    for (size_t k = 0; k < names.size(); ++k) {
      const int ki = static_cast<int>(k);
      row(names[k], num(sep.arm1.beta[ki], 3), num(sep.arm0.beta[ki], 3),
          num(sep.arm1.beta[ki] - sep.arm0.beta[ki], 3));
      row("", paren_se(band_at(result, "separate.beta1", ki)),
          paren_se(band_at(result, "separate.beta0", ki)),
          paren_se(band_at(result, "separate.beta_diff", ki)));
    }
    row("ATE", "", "", num(sep.params.ate, 3));
    row("", "", "", paren_se(band_at(result, "separate.ate", 0)));
    row("TT", "", "", num(sep.params.tt, 3));
    row("", "", "", paren_se(band_at(result, "separate.tt", 0)));
    row("TUT", "", "", num(sep.params.tut, 3));
    row("", "", "", paren_se(band_at(result, "separate.tut", 0)));
    row("LATE", "", "", num(sep.params.late, 3));
    row("", "", "", paren_se(band_at(result, "separate.late", 0)));
  } else if (have_liv) {
    const auto& liv = *result.liv;
    for (size_t k = 0; k < names.size(); ++k) {
      const int ki = static_cast<int>(k);
      row(names[k], num(liv.fit.beta0[ki] + liv.fit.delta[ki], 3),
          num(liv.fit.beta0[ki], 3), num(liv.fit.delta[ki], 3));
      row("", "", paren_se(band_at(result, "liv.beta0", ki)),
          paren_se(band_at(result, "liv.delta", ki)));
    }
    row("ATE", "", "", num(liv.params.ate, 3));
    row("", "", "", paren_se(band_at(result, "liv.ate", 0)));
    row("TT", "", "", num(liv.params.tt, 3));
    row("", "", "", paren_se(band_at(result, "liv.tt", 0)));
    row("TUT", "", "", num(liv.params.tut, 3));
    row("", "", "", paren_se(band_at(result, "liv.tut", 0)));
    row("LATE", "", "", num(liv.params.late, 3));
    row("", "", "", paren_se(band_at(result, "liv.late", 0)));
  }

  row("Sample size", std::to_string(result.meta.n_kept_treated),
      std::to_string(result.meta.n_kept_untreated),
      std::to_string(result.meta.n_kept));
  if (have_sep && result.separate->params.boundary_extrapolated)
    os << "Note: ATE/TT/TUT use boundary-extrapolated control function values\n";
  return os.str();
}

void write_coefficients_txt(const std::string& path, const Sample& s,
                            const PipelineResult& result) {
  open_out(path) << format_coefficient_table(s, result);
}

void write_coefficients_csv(const std::string& path, const Sample& s,
                            const PipelineResult& result) {
  auto out = open_out(path);
  out << "term,treated,treated_se,untreated,untreated_se,difference,difference_se\n";
  const std::vector<std::string> names = s.covariate_names();

  auto se_or_empty = [&](const std::string& block, int i) {
    const auto* b = band_at(result, block, i);
    return b ? num(b->se) : "";
  };

  if (result.separate) {
    const auto& sep = *result.separate;
    for (size_t k = 0; k < names.size(); ++k) {
      const int ki = static_cast<int>(k);
      out << csv_quote(names[k]) << "," << num(sep.arm1.beta[ki]) << ","
          << se_or_empty("separate.beta1", ki) << "," << num(sep.arm0.beta[ki]) << ","
          << se_or_empty("separate.beta0", ki) << ","
          << num(sep.arm1.beta[ki] - sep.arm0.beta[ki]) << ","
          << se_or_empty("separate.beta_diff", ki) << "\n";
    }
    const char* params[4] = {"ATE", "TT", "TUT", "LATE"};
    const double values[4] = {sep.params.ate, sep.params.tt, sep.params.tut,
                              sep.params.late};
    const char* blocks[4] = {"separate.ate", "separate.tt", "separate.tut",
                             "separate.late"};
    for (int i = 0; i < 4; ++i)
      out << params[i] << ",,,,," << num(values[i]) << "," << se_or_empty(blocks[i], 0)
          << "\n";
  } else if (result.liv) {
    const auto& liv = *result.liv;
    for (size_t k = 0; k < names.size(); ++k) {
      const int ki = static_cast<int>(k);
      out << csv_quote(names[k]) << "," << num(liv.fit.beta0[ki] + liv.fit.delta[ki])
          << ",," << num(liv.fit.beta0[ki]) << "," << se_or_empty("liv.beta0", ki) << ","
          << num(liv.fit.delta[ki]) << "," << se_or_empty("liv.delta", ki) << "\n";
    }
    const char* params[4] = {"ATE", "TT", "TUT", "LATE"};
    const double values[4] = {liv.params.ate, liv.params.tt, liv.params.tut,
                              liv.params.late};
    const char* blocks[4] = {"liv.ate", "liv.tt", "liv.tut", "liv.late"};
    for (int i = 0; i < 4; ++i)
      out << params[i] << ",,,,," << num(values[i]) << "," << se_or_empty(blocks[i], 0)
          << "\n";
  }
}

namespace {

void write_curve_with_band(std::ofstream& out, const Eigen::VectorXd& grid,
                           const Eigen::VectorXd& values,
                           const std::vector<std::uint8_t>& flagged,
                           const PipelineResult& result, const std::string& block) {
  for (Eigen::Index i = 0; i < grid.size(); ++i) {
    const auto* b = band_at(result, block, static_cast<int>(i));
    out << num(grid[i]) << "," << num(values[i]) << "," << (b ? num(b->ci_lo) : "")
        << "," << (b ? num(b->ci_hi) : "") << ","
        << (flagged.empty() ? 0 : static_cast<int>(flagged[i])) << "\n";
  }
}

}  // namespace

void write_mte_curve_csv(const std::string& path, const PipelineResult& result,
                         bool liv_curve) {
  const MteCurve* curve = nullptr;
  std::string block;
  if (liv_curve && result.liv) {
    curve = &result.liv->mte;
    block = "liv.mte";
  } else if (!liv_curve && result.separate) {
    curve = &result.separate->mte;
    block = "separate.mte";
  }
  if (!curve) throw ConfigError("report", "requested MTE curve was not estimated");
  auto out = open_out(path);
  out << "v,estimate,ci_lo,ci_hi,flagged\n";
  write_curve_with_band(out, curve->v_grid, curve->values, curve->flagged, result, block);
}

void write_g_curves_csv(const std::string& path, const PipelineResult& result) {
  if (!result.separate) throw ConfigError("report", "separate procedure not estimated");
  const auto& sep = *result.separate;
  auto out = open_out(path);
  out << "p,g0,g0_deriv,g1,g1_deriv,flagged\n";
  for (Eigen::Index i = 0; i < result.v_grid.size(); ++i)
    out << num(result.v_grid[i]) << "," << num(sep.g0[i]) << "," << num(sep.g0_deriv[i])
        << "," << num(sep.g1[i]) << "," << num(sep.g1_deriv[i]) << ","
        << static_cast<int>(sep.v_flags[i]) << "\n";
}

void write_r_curve_csv(const std::string& path, const PipelineResult& result) {
  if (!result.liv) throw ConfigError("report", "LIV procedure not estimated");
  const auto& fit = result.liv->fit;
  auto out = open_out(path);
  out << "p,r,q_deriv,flagged\n";
  for (Eigen::Index i = 0; i < fit.p_grid.size(); ++i)
    out << num(fit.p_grid[i]) << "," << num(fit.r[i]) << "," << num(fit.q_deriv[i]) << ","
        << (fit.flagged.empty() ? 0 : static_cast<int>(fit.flagged[i])) << "\n";
}

void write_mte_comparison_csv(const std::string& path, const PipelineResult& result) {
  if (!result.separate || !result.liv)
    throw ConfigError("report", "comparison needs both procedures");
  auto out = open_out(path);
  out << "v,mte_separate,mte_liv\n";
  for (Eigen::Index i = 0; i < result.v_grid.size(); ++i)
    out << num(result.v_grid[i]) << "," << num(result.separate->mte.values[i]) << ","
        << num(result.liv->mte.values[i]) << "\n";
}

void write_structural_csv(const std::string& path, const PipelineResult& result) {
  if (!result.separate) throw ConfigError("report", "separate procedure not estimated");
  const auto& sep = *result.separate;
  auto out = open_out(path);
  out << "v,y0,y0_ci_lo,y0_ci_hi,y1,y1_ci_lo,y1_ci_hi\n";
  for (Eigen::Index i = 0; i < result.v_grid.size(); ++i) {
    const auto* b0 = band_at(result, "separate.structural0", static_cast<int>(i));
    const auto* b1 = band_at(result, "separate.structural1", static_cast<int>(i));
    out << num(result.v_grid[i]) << "," << num(sep.structural0[i]) << ","
        << (b0 ? num(b0->ci_lo) : "") << "," << (b0 ? num(b0->ci_hi) : "") << ","
        << num(sep.structural1[i]) << "," << (b1 ? num(b1->ci_lo) : "") << ","
        << (b1 ? num(b1->ci_hi) : "") << "\n";
  }
}

void write_response_csv(const std::string& path, const PipelineResult& result) {
  if (!result.separate) throw ConfigError("report", "separate procedure not estimated");
  const auto& resp = result.separate->response;
  auto out = open_out(path);
  out << "v,prob_participation,expected_outcome,outcome_ci_lo,outcome_ci_hi\n";
  for (Eigen::Index i = 0; i < resp.v_grid.size(); ++i) {
    const auto* b = band_at(result, "separate.response_outcome", static_cast<int>(i));
    out << num(resp.v_grid[i]) << "," << num(resp.prob_participation[i]) << ","
        << num(resp.expected_outcome[i]) << "," << (b ? num(b->ci_lo) : "") << ","
        << (b ? num(b->ci_hi) : "") << "\n";
  }
}

void write_histogram_csv(const std::string& path, const Sample& s,
                         const PipelineResult& result, int bins) {
  const auto table = score_histogram(result.propensity, s, bins);
  auto out = open_out(path);
  out << "bin_lo,bin_hi,count_treated,count_untreated\n";
  for (const auto& row : table)
    out << num(row.lo) << "," << num(row.hi) << "," << row.count_treated << ","
        << row.count_untreated << "\n";
}

namespace {

json nl1_to_json(const Nl1Finding& f) {
  json out;
  out["detected"] = f.detected;
  out["degenerate_constant"] = f.degenerate_constant;
  out["tolerance"] = f.tolerance;
  out["cont_index"] = f.cont_index;
  if (f.detected && !f.degenerate_constant) {
    out["witness_x"] = f.witness_x;
    out["witness_x_tilde"] = f.witness_x_tilde;
    out["score_gap"] = f.score_gap;
  }
  if (f.degenerate_constant) out["annotation"] = "degenerate: constant score";
  return out;
}

json nl2_to_json(const Nl2Finding& f) {
  json out;
  out["detected"] = f.detected;
  out["tolerance"] = f.tolerance;
  out["index_k"] = f.index_k;
  out["index_j"] = f.index_j;
  out["clauses_nonzero"] = {f.nonzero_clauses[0], f.nonzero_clauses[1],
                            f.nonzero_clauses[2], f.nonzero_clauses[3]};
  out["ratio_clause"] = f.ratio_clause;
  out["ratio_at_a"] = f.ratio_at_a;
  out["ratio_at_b"] = f.ratio_at_b;
  out["point_a"] = vector_to_json(f.point_a);
  out["point_b"] = vector_to_json(f.point_b);
  out["partials"] = {{"dk_at_a", f.dk_at_a},
                     {"dj_at_a", f.dj_at_a},
                     {"dk_at_b", f.dk_at_b},
                     {"dj_at_b", f.dj_at_b}};
  return out;
}

json stationary_to_json(const StationaryFinding& f) {
  json out;
  out["detected"] = f.detected;
  out["degenerate_constant"] = f.degenerate_constant;
  out["tolerance"] = f.tolerance;
  out["min_abs_slope"] = f.min_abs_slope;
  if (f.detected) out["location"] = f.location;
  if (f.degenerate_constant) out["annotation"] = "degenerate: constant score";
  return out;
}

}  // namespace

std::string diagnostics_to_json(const DiagnosticReport& report) {
  json out;
  json cell = json::array();
  for (Eigen::Index i = 0; i < report.cell_key.size(); ++i)
    cell.push_back(report.cell_key[i]);
  out["cell_key"] = cell;
  out["cell_size"] = report.cell_size;
  if (report.nl1) out["nl1"] = nl1_to_json(*report.nl1);
  if (report.nl2) out["nl2"] = nl2_to_json(*report.nl2);
  if (report.stationary) out["stationary_point"] = stationary_to_json(*report.stationary);
  out["support"] = {{"p_lo", report.support.p_lo},
                    {"p_hi", report.support.p_hi},
                    {"n_total", report.support.n_total},
                    {"n_kept", report.support.n_kept},
                    {"n_trimmed_low", report.support.n_trimmed_low},
                    {"n_trimmed_high", report.support.n_trimmed_high},
                    {"n_dropped_cell_rows", report.support.n_dropped_cell_rows},
                    {"n_kept_treated", report.support.n_kept_treated},
                    {"n_kept_untreated", report.support.n_kept_untreated}};
  return out.dump(2);
}

std::string format_diagnostics_text(const DiagnosticReport& report) {
  std::ostringstream os;
  os << "Diagnostics (cell size " << report.cell_size << ")\n";
  if (report.nl1) {
    const auto& f = *report.nl1;
    os << "  NL1 nonmonotone score: " << (f.detected ? "detected" : "not detected");
    if (f.degenerate_constant) os << " [degenerate: constant score]";
    if (f.detected && !f.degenerate_constant)
      os << "  witness pair x=" << num(f.witness_x, 4)
         << ", x~=" << num(f.witness_x_tilde, 4) << " (score gap "
         << num(f.score_gap, 6) << ")";
    os << "\n";
  }
  if (report.nl2) {
    const auto& f = *report.nl2;
    os << "  NL2 gradient ratios: " << (f.detected ? "detected" : "not detected")
       << "  ratio(a)=" << num(f.ratio_at_a, 4) << " ratio(b)=" << num(f.ratio_at_b, 4)
       << "\n";
  }
  if (report.stationary) {
    const auto& f = *report.stationary;
    os << "  Stationary score point: " << (f.detected ? "detected" : "not detected");
    if (f.detected && !f.degenerate_constant) os << " near x=" << num(f.location, 4);
    if (f.degenerate_constant) os << " [degenerate: constant score]";
    os << "\n";
  }
  os << "  Common support: [" << num(report.support.p_lo, 4) << ", "
     << num(report.support.p_hi, 4) << "], kept " << report.support.n_kept << " of "
     << report.support.n_total << " (trimmed " << report.support.n_trimmed_low << " low, "
     << report.support.n_trimmed_high << " high)\n";
  return os.str();
}

void write_diagnostics(const std::string& json_path, const std::string& txt_path,
                       const DiagnosticReport& report) {
  open_out(json_path) << diagnostics_to_json(report) << "\n";
  open_out(txt_path) << format_diagnostics_text(report);
}

void write_nl1_curve_csv(const std::string& path, const DiagnosticReport& report) {
  if (!report.nl1) throw ConfigError("report", "NL1 check was not run");
  auto out = open_out(path);
  out << "x,pi_hat\n";
  for (Eigen::Index i = 0; i < report.nl1->grid_x.size(); ++i)
    out << num(report.nl1->grid_x[i]) << "," << num(report.nl1->grid_score[i]) << "\n";
}

void write_summary_json(const std::string& path, const Sample& s,
                        const PipelineResult& result) {
  json out;
  out["profile"] = vector_to_json(result.profile);
  out["covariates"] = s.covariate_names();
  out["pi_x"] = result.pi_x;
  if (result.separate) {
    const auto& sep = *result.separate;
    json block;
    block["ate"] = summary_to_json(sep.params.ate, band_at(result, "separate.ate", 0));
    block["tt"] = summary_to_json(sep.params.tt, band_at(result, "separate.tt", 0));
    block["tut"] = summary_to_json(sep.params.tut, band_at(result, "separate.tut", 0));
    block["late"] = summary_to_json(sep.params.late, band_at(result, "separate.late", 0));
    block["late_bounds"] = {sep.params.late_v1, sep.params.late_v2};
    block["beta0"] = vector_to_json(sep.arm0.beta);
    block["beta1"] = vector_to_json(sep.arm1.beta);
    block["boundary_extrapolated"] = sep.params.boundary_extrapolated;
    if (sep.theta0) block["theta0"] = vector_to_json(*sep.theta0);
    if (sep.theta1) block["theta1"] = vector_to_json(*sep.theta1);
    out["separate"] = block;
  }
  if (result.liv) {
    const auto& liv = *result.liv;
    json block;
    block["ate"] = summary_to_json(liv.params.ate, band_at(result, "liv.ate", 0));
    block["tt"] = summary_to_json(liv.params.tt, band_at(result, "liv.tt", 0));
    block["tut"] = summary_to_json(liv.params.tut, band_at(result, "liv.tut", 0));
    block["late"] = summary_to_json(liv.params.late, band_at(result, "liv.late", 0));
    block["beta0"] = vector_to_json(liv.fit.beta0);
    block["delta"] = vector_to_json(liv.fit.delta);
    block["boundary_extrapolated"] = liv.params.boundary_extrapolated;
    if (liv.alpha0) block["alpha0"] = *liv.alpha0;
    if (liv.theta) block["theta"] = vector_to_json(*liv.theta);
    out["liv"] = block;
  }
  if (result.bands) {
    out["bootstrap"] = {{"requested", result.bands->requested},
                        {"completed", result.bands->completed},
                        {"level", result.bands->level},
                        {"failures", result.bands->failures.size()}};
  }
  open_out(path) << out.dump(2) << "\n";
}

void write_metadata_json(const std::string& path, const RunConfig& config,
                         const PipelineResult& result) {
  json out;
  out["version"] = result.meta.version;
  out["seed"] = result.meta.seed;
  out["procedure"] = to_string(config.procedure);
  out["second_step"] = to_string(config.second_step);
  if (config.second_step != SecondStep::semiparametric)
    out["poly_degree"] = config.poly_degree;
  out["kernels"] = {{"propensity", to_string(config.kernel_propensity.family)},
                    {"pairwise", to_string(config.kernel_pairwise.family)},
                    {"local_linear", to_string(config.kernel_local_linear.family)}};
  out["bandwidths"] = {{"h1", result.meta.h1},
                       {"h2", result.meta.h2},
                       {"h3", result.meta.h3}};
  out["trim"] = {{"lower", config.trim_lower}, {"upper", config.trim_upper}};
  out["grid_size"] = config.grid_size;
  out["bootstrap"] = config.bootstrap;
  out["ci_level"] = config.ci_level;
  out["threads"] = config.threads;
  out["leave_one_out"] = config.leave_one_out;
  out["min_cell_size"] = config.min_cell_size;
  out["late_bounds"] = {config.late_v1, config.late_v2};
  out["counts"] = {{"n_total", result.meta.n_total},
                   {"n_kept", result.meta.n_kept},
                   {"n_trimmed_low", result.meta.n_trimmed_low},
                   {"n_trimmed_high", result.meta.n_trimmed_high},
                   {"n_dropped_cell_rows", result.meta.n_dropped_cell_rows},
                   {"n_kept_treated", result.meta.n_kept_treated},
                   {"n_kept_untreated", result.meta.n_kept_untreated}};
  out["support"] = {result.propensity.support_lo, result.propensity.support_hi};
  out["warnings"] = result.meta.warnings;
  open_out(path) << out.dump(2) << "\n";
}

}  // namespace mtefree

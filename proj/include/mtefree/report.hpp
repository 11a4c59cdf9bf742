#pragma once

#include <string>

#include "mtefree/data.hpp"
#include "mtefree/pipeline.hpp"

namespace mtefree {

// Writers for the estimate artifacts. Column schemas are documented in
// docs/file_formats.md; all CSVs carry a header row.

// Human-readable coefficient table: per-arm columns, difference column,
// ATE/TT/TUT/LATE rows, parenthesized bootstrap SEs underneath.
std::string format_coefficient_table(const Sample& s, const PipelineResult& result);

void write_coefficients_txt(const std::string& path, const Sample& s,
                            const PipelineResult& result);
void write_coefficients_csv(const std::string& path, const Sample& s,
                            const PipelineResult& result);

// MTE curve: v, estimate, ci_lo, ci_hi, flagged.
void write_mte_curve_csv(const std::string& path, const PipelineResult& result,
                         bool liv_curve);

// Control functions on the common grid: p, g0, g0_deriv, g1, g1_deriv.
void write_g_curves_csv(const std::string& path, const PipelineResult& result);

// LIV whole-sample curve: p, r, q_deriv, flagged.
void write_r_curve_csv(const std::string& path, const PipelineResult& result);

// Separate-vs-LIV comparison: v, mte_separate, mte_liv.
void write_mte_comparison_csv(const std::string& path, const PipelineResult& result);

// Structural curves: v, y0, y0_ci_lo, y0_ci_hi, y1, y1_ci_lo, y1_ci_hi.
void write_structural_csv(const std::string& path, const PipelineResult& result);

// Response curves: v, prob_participation, expected_outcome plus bands.
void write_response_csv(const std::string& path, const PipelineResult& result);

// Score histogram: bin_lo, bin_hi, count_treated, count_untreated.
void write_histogram_csv(const std::string& path, const Sample& s,
                         const PipelineResult& result, int bins = 20);

// Diagnostics: JSON report, a text block, and the score curve for the
// NL1 plot (x, pi_hat).
std::string diagnostics_to_json(const DiagnosticReport& report);
std::string format_diagnostics_text(const DiagnosticReport& report);
void write_diagnostics(const std::string& json_path, const std::string& txt_path,
                       const DiagnosticReport& report);
void write_nl1_curve_csv(const std::string& path, const DiagnosticReport& report);

// Summary of scalar parameters with SEs/CIs, flags, and the profile used.
void write_summary_json(const std::string& path, const Sample& s,
                        const PipelineResult& result);

// Run metadata: config echo, resolved bandwidths, seed, version, counts.
void write_metadata_json(const std::string& path, const RunConfig& config,
                         const PipelineResult& result);

}  // namespace mtefree

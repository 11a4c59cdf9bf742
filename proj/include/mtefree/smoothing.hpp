#pragma once

#include <span>
#include <string>
#include <variant>

namespace mtefree {

enum class KernelFamily { gaussian, epanechnikov };

struct KernelSpec {
  KernelFamily family = KernelFamily::gaussian;
};

// Scaled kernel evaluation k(u); both families integrate to one and are
// symmetric. The epanechnikov kernel vanishes for |u| >= 1, which the
// pairwise sums exploit to skip distant pairs.
double kernel_eval(const KernelSpec& spec, double u);

KernelFamily kernel_from_string(const std::string& name);
std::string to_string(KernelFamily family);

// Silverman bandwidth with robust spread:
//   h = 1.06 * min(sd, IQR / 1.349) * n^(-1/5).
// Throws EstimationError("smoothing", "degenerate bandwidth") when the
// values have no spread.
double rule_of_thumb(std::span<const double> values);

// Variant for derivative targets: the same robust spread at the slower
// n^(-1/7) rate appropriate for local-linear slope estimation,
//   h = 1.70 * min(sd, IQR / 1.349) * n^(-1/7).
double rule_of_thumb_derivative(std::span<const double> values);

struct BandwidthSpec {
  enum class Mode { fixed, rule_of_thumb, rule_of_thumb_derivative };
  Mode mode = Mode::rule_of_thumb;
  double value = 0.0;  // used when mode == fixed

  static BandwidthSpec fixed(double h) { return {Mode::fixed, h}; }
  static BandwidthSpec rot() { return {Mode::rule_of_thumb, 0.0}; }
  static BandwidthSpec rot_derivative() { return {Mode::rule_of_thumb_derivative, 0.0}; }
};

// Resolves the spec against the data the kernel will run on. Fixed values
// must be strictly positive and finite.
double resolve_bandwidth(const BandwidthSpec& spec, std::span<const double> values);

}  // namespace mtefree

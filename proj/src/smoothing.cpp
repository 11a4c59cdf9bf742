#include "mtefree/smoothing.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "mtefree/common.hpp"

namespace mtefree {

double kernel_eval(const KernelSpec& spec, double u) {
  switch (spec.family) {
    case KernelFamily::gaussian:
      return normal_pdf(u);
    case KernelFamily::epanechnikov:
      return std::abs(u) < 1.0 ? 0.75 * (1.0 - u * u) : 0.0;
  }
  return 0.0;
}

KernelFamily kernel_from_string(const std::string& name) {
  if (name == "gaussian") return KernelFamily::gaussian;
  if (name == "epanechnikov") return KernelFamily::epanechnikov;
  throw ConfigError("smoothing", "unknown kernel family: " + name +
                                     " (expected gaussian or epanechnikov)");
}

std::string to_string(KernelFamily family) {
  return family == KernelFamily::gaussian ? "gaussian" : "epanechnikov";
}

namespace {

// min(sd, IQR/1.349); IQR by linear interpolation of order statistics.
double robust_spread(std::span<const double> values) {
  const auto n = values.size();
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= static_cast<double>(n);
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  const double sd = std::sqrt(ss / static_cast<double>(n - 1));

  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  auto quantile = [&](double q) {
    const double pos = q * static_cast<double>(n - 1);
    const auto lo = static_cast<size_t>(pos);
    const size_t hi = std::min(lo + 1, n - 1);
    const double frac = pos - static_cast<double>(lo);
    return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
  };
  const double iqr = quantile(0.75) - quantile(0.25);

  double spread = sd;
  if (iqr > 0.0) spread = std::min(sd, iqr / 1.349);
  return spread;
}

double silverman(std::span<const double> values, double rate_exponent) {
  if (values.size() < 2)
    throw EstimationError("smoothing", "need at least 2 values for a bandwidth");
  const double spread = robust_spread(values);
  if (!(spread > 0.0) || !std::isfinite(spread))
    throw EstimationError("smoothing", "degenerate bandwidth: values have no spread");
  return 1.06 * spread * std::pow(static_cast<double>(values.size()), rate_exponent);
}

}  // namespace

double rule_of_thumb(std::span<const double> values) {
  return silverman(values, -0.2);
}

double rule_of_thumb_derivative(std::span<const double> values) {
  // Slope targets tolerate (and need) a wider window than densities; the
  // constant follows the same robust-spread form at the n^(-1/7) rate.
  return silverman(values, -1.0 / 7.0) * (1.7 / 1.06);
}

double resolve_bandwidth(const BandwidthSpec& spec, std::span<const double> values) {
  switch (spec.mode) {
    case BandwidthSpec::Mode::fixed:
      if (!(spec.value > 0.0) || !std::isfinite(spec.value))
        throw ConfigError("smoothing", "fixed bandwidth must be positive and finite");
      return spec.value;
    case BandwidthSpec::Mode::rule_of_thumb:
      return rule_of_thumb(values);
    case BandwidthSpec::Mode::rule_of_thumb_derivative:
      return rule_of_thumb_derivative(values);
  }
  throw ConfigError("smoothing", "invalid bandwidth mode");
}

}  // namespace mtefree

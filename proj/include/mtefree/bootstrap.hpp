#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace mtefree {

struct BootstrapSummary {
  double se = 0.0;
  double ci_lo = 0.0;
  double ci_hi = 0.0;
};

// Draws of a vector-valued statistic over B resamples. Failed replications
// are logged and excluded from the summaries, never imputed.
struct BootstrapDraws {
  int requested = 0;
  Eigen::MatrixXd draws;                // one row per replication, NaN when failed
  std::vector<std::uint8_t> ok;         // per replication
  std::vector<std::string> failures;    // "replication b: message"

  int completed() const;
  // Standard deviation of the completed draws of one component.
  double se(int column) const;
  // Percentile interval (type-7 quantiles) at the given coverage level.
  BootstrapSummary summary(int column, double level = 0.90) const;
};

// Resamples row indices {0..n-1} with replacement B times and evaluates
// `statistic` on each index set. Replication b draws its indices from a
// generator seeded with mix_seed(seed, b), so the result is independent of
// execution order and thread count. Throws when more than 20% of the
// replications fail.
BootstrapDraws bootstrap_statistic(
    int n, int B, std::uint64_t seed,
    const std::function<Eigen::VectorXd(const std::vector<int>&)>& statistic,
    int dim, int threads = 0);

}  // namespace mtefree

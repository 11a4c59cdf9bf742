#include "mtefree/bootstrap.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "mtefree/common.hpp"

namespace mtefree {

int BootstrapDraws::completed() const {
  int c = 0;
  for (auto o : ok) c += (o != 0);
  return c;
}

double BootstrapDraws::se(int column) const {
  std::vector<double> vals;
  vals.reserve(ok.size());
  for (size_t b = 0; b < ok.size(); ++b)
    if (ok[b]) vals.push_back(draws(static_cast<Eigen::Index>(b), column));
  if (vals.size() < 2) return std::numeric_limits<double>::quiet_NaN();
  double mean = 0.0;
  for (double v : vals) mean += v;
  mean /= static_cast<double>(vals.size());
  double ss = 0.0;
  for (double v : vals) ss += (v - mean) * (v - mean);
  return std::sqrt(ss / static_cast<double>(vals.size() - 1));
}

BootstrapSummary BootstrapDraws::summary(int column, double level) const {
  std::vector<double> vals;
  for (size_t b = 0; b < ok.size(); ++b)
    if (ok[b]) vals.push_back(draws(static_cast<Eigen::Index>(b), column));
  BootstrapSummary out;
  out.se = se(column);
  if (vals.empty()) {
    out.ci_lo = out.ci_hi = std::numeric_limits<double>::quiet_NaN();
    return out;
  }
  std::sort(vals.begin(), vals.end());
  auto quantile = [&](double q) {
    const double pos = q * static_cast<double>(vals.size() - 1);
    const auto lo = static_cast<size_t>(pos);
    const size_t hi = std::min(lo + 1, vals.size() - 1);
    const double f = pos - static_cast<double>(lo);
    return vals[lo] + f * (vals[hi] - vals[lo]);
  };
  const double tail = (1.0 - level) / 2.0;
  out.ci_lo = quantile(tail);
  out.ci_hi = quantile(1.0 - tail);
  return out;
}

BootstrapDraws bootstrap_statistic(
    int n, int B, std::uint64_t seed,
    const std::function<Eigen::VectorXd(const std::vector<int>&)>& statistic,
    int dim, int threads) {
  if (B < 2) throw ConfigError("bootstrap", "need at least 2 replications");
  if (n < 1) throw ConfigError("bootstrap", "empty sample");

  BootstrapDraws out;
  out.requested = B;
  out.draws.setConstant(B, dim, std::numeric_limits<double>::quiet_NaN());
  out.ok.assign(static_cast<size_t>(B), 0);
  std::vector<std::string> messages(static_cast<size_t>(B));

  parallel_for(B, threads, [&](int b) {
    Rng rng(mix_seed(seed, static_cast<std::uint64_t>(b)));
    std::vector<int> rows(n);
    for (int i = 0; i < n; ++i) rows[i] = rng.uniform_int(n);
    try {
      const Eigen::VectorXd value = statistic(rows);
      if (value.size() != dim)
        throw EstimationError("bootstrap", "statistic returned wrong dimension");
      out.draws.row(b) = value.transpose();
      out.ok[b] = 1;
    } catch (const std::exception& e) {
      messages[b] = std::string("replication ") + std::to_string(b) + ": " + e.what();
    }
  });

  for (auto& m : messages)
    if (!m.empty()) out.failures.push_back(std::move(m));
  const int failed = B - out.completed();
  if (failed * 5 > B)
    throw EstimationError("bootstrap", std::to_string(failed) + " of " +
                                           std::to_string(B) +
                                           " replications failed (limit 20%); first: " +
                                           (out.failures.empty() ? "?" : out.failures.front()));
  return out;
}

}  // namespace mtefree

#pragma once

#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>

namespace mtefree {

inline constexpr const char* kVersion = "0.1.0";

// Invalid user input: bad config values, malformed files, unknown columns.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string module, const std::string& what)
      : std::runtime_error(module + ": " + what), module_(std::move(module)) {}
  const std::string& module() const noexcept { return module_; }

 private:
  std::string module_;
};

// Numerical failure inside an estimator (singularity, empty arm, ...).
class EstimationError : public std::runtime_error {
 public:
  EstimationError(std::string module, const std::string& what)
      : std::runtime_error(module + ": " + what), module_(std::move(module)) {}
  const std::string& module() const noexcept { return module_; }

 private:
  std::string module_;
};

// splitmix64 step; also used to derive independent per-replication seeds so
// that results do not depend on execution order or thread count.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream);

// Minimal deterministic generator (splitmix64 stream). Bit-stable across
// platforms, unlike the std <random> distributions.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64();
  double uniform();             // in [0, 1)
  double uniform_open();        // in (0, 1)
  double normal();              // standard normal via inverse CDF
  int uniform_int(int n);       // in {0, ..., n-1}

 private:
  std::uint64_t state_;
};

// Standard normal density, CDF, and quantile.
double normal_pdf(double z);
double normal_cdf(double z);
double normal_quantile(double p);

// Lower partial moment of the standard normal: integral of t^j * pdf(t)
// over (-inf, z]. j = 0 gives the CDF, j = 1 gives -pdf(z).
double normal_partial_moment(int j, double z);

// Resolve a requested thread count (0 means hardware concurrency).
int effective_threads(int requested);

// Runs body(task) for task = 0..n_tasks-1 on up to `threads` workers.
// Tasks must write to disjoint state; the first exception is rethrown.
void parallel_for(int n_tasks, int threads, const std::function<void(int)>& body);

}  // namespace mtefree

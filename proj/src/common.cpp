#include "mtefree/common.hpp"

#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

#include <boost/math/distributions/normal.hpp>

namespace mtefree {

namespace {
std::uint64_t splitmix64(std::uint64_t& state) {
  state += 0x9E3779B97F4A7C15ULL;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}
}  // namespace

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t state = seed ^ (0xA0761D6478BD642FULL * (stream + 1));
  std::uint64_t out = splitmix64(state);
  return splitmix64(state) ^ out;
}

std::uint64_t Rng::next_u64() { return splitmix64(state_); }

double Rng::uniform() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double Rng::uniform_open() {
  return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
}

double Rng::normal() { return normal_quantile(uniform_open()); }

int Rng::uniform_int(int n) {
  // Lemire's multiply-shift; bias is O(n / 2^64), irrelevant at sample sizes.
  return static_cast<int>((static_cast<unsigned __int128>(next_u64()) *
                           static_cast<unsigned __int128>(n)) >>
                          64);
}

double normal_pdf(double z) {
  static const double kInvSqrt2Pi = 0.3989422804014326779;
  return kInvSqrt2Pi * std::exp(-0.5 * z * z);
}

double normal_cdf(double z) { return 0.5 * std::erfc(-z * M_SQRT1_2); }

double normal_quantile(double p) {
  static const boost::math::normal_distribution<double> dist(0.0, 1.0);
  return boost::math::quantile(dist, p);
}

double normal_partial_moment(int j, double z) {
  if (j < 0) throw std::invalid_argument("normal_partial_moment: j < 0");
  // M_j(z) = -z^{j-1} pdf(z) + (j-1) M_{j-2}(z), M_0 = cdf, M_1 = -pdf.
  double m_prev = normal_cdf(z);  // M_0
  if (j == 0) return m_prev;
  double m_cur = -normal_pdf(z);  // M_1
  for (int k = 2; k <= j; ++k) {
    double m_next = -std::pow(z, k - 1) * normal_pdf(z) + (k - 1) * m_prev;
    m_prev = m_cur;
    m_cur = m_next;
  }
  return m_cur;
}

int effective_threads(int requested) {
  if (requested > 0) return requested;
  unsigned hc = std::thread::hardware_concurrency();
  return hc > 0 ? static_cast<int>(hc) : 1;
}

void parallel_for(int n_tasks, int threads, const std::function<void(int)>& body) {
  if (n_tasks <= 0) return;
  int workers = std::min(effective_threads(threads), n_tasks);
  if (workers <= 1) {
    for (int t = 0; t < n_tasks; ++t) body(t);
    return;
  }

  std::atomic<int> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto worker = [&]() {
    for (;;) {
      int t = next.fetch_add(1, std::memory_order_relaxed);
      if (t >= n_tasks) return;
      try {
        body(t);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!error) error = std::current_exception();
        next.store(n_tasks, std::memory_order_relaxed);
        return;
      }
    }
  };

  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace mtefree

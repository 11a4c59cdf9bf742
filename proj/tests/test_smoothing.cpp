#include <doctest.h>

#include <vector>

#include "mtefree/common.hpp"
#include "mtefree/smoothing.hpp"
#include "test_util.hpp"

using namespace mtefree;

TEST_CASE("kernel point values") {
  const KernelSpec epan{KernelFamily::epanechnikov};
  const KernelSpec gauss{KernelFamily::gaussian};
  CHECK(kernel_eval(epan, 1.0) == 0.0);
  CHECK(kernel_eval(epan, -1.2) == 0.0);
  CHECK(kernel_eval(epan, 0.0) == doctest::Approx(0.75).epsilon(1e-12));
  CHECK(kernel_eval(gauss, 0.0) == doctest::Approx(0.3989422804).epsilon(1e-6));
}

TEST_CASE("kernels are symmetric nonnegative densities") {
  for (auto family : {KernelFamily::gaussian, KernelFamily::epanechnikov}) {
    const KernelSpec spec{family};
    for (double u : {0.1, 0.37, 0.99, 1.5, 3.0}) {
      CHECK(kernel_eval(spec, u) >= 0.0);
      CHECK(kernel_eval(spec, u) == doctest::Approx(kernel_eval(spec, -u)).epsilon(1e-15));
    }
    const double mass =
        testutil::simpson([&](double u) { return kernel_eval(spec, u); }, -10.0, 10.0,
                          20000);
    CHECK(mass == doctest::Approx(1.0).epsilon(1e-6));
  }
}

TEST_CASE("rule of thumb matches the closed form") {
  // 50 symmetric pairs: sample sd exactly 1, IQR/1.349 well above 1, so the
  // robust spread is the sd and h = 1.06 * 100^(-1/5).
  std::vector<double> values;
  const double a = std::sqrt(99.0 / 100.0);
  for (int i = 0; i < 50; ++i) {
    values.push_back(-a);
    values.push_back(a);
  }
  CHECK(rule_of_thumb(values) == doctest::Approx(0.4219936008).epsilon(1e-9));
}

TEST_CASE("rule of thumb rejects degenerate input") {
  std::vector<double> constant(32, 1.5);
  CHECK_THROWS_AS(rule_of_thumb(constant), EstimationError);
  std::vector<double> single{1.0};
  CHECK_THROWS_AS(rule_of_thumb(single), EstimationError);
}

TEST_CASE("rule of thumb is scale equivariant and translation invariant") {
  Rng rng(7);
  std::vector<double> values(200);
  for (auto& v : values) v = rng.normal();
  const double h = rule_of_thumb(values);
  for (double c : {0.1, 2.0, 17.5}) {
    std::vector<double> scaled = values, shifted = values;
    for (auto& v : scaled) v *= c;
    for (auto& v : shifted) v += c;
    CHECK(rule_of_thumb(scaled) == doctest::Approx(c * h).epsilon(1e-12));
    CHECK(rule_of_thumb(shifted) == doctest::Approx(h).epsilon(1e-9));
  }
}

TEST_CASE("derivative rule uses the slower rate") {
  Rng rng(8);
  std::vector<double> values(500);
  for (auto& v : values) v = rng.normal();
  CHECK(rule_of_thumb_derivative(values) > rule_of_thumb(values));
  const double ratio = rule_of_thumb_derivative(values) / rule_of_thumb(values);
  CHECK(ratio ==
        doctest::Approx((1.7 / 1.06) * std::pow(500.0, 0.2 - 1.0 / 7.0)).epsilon(1e-9));
}

TEST_CASE("bandwidth resolution") {
  std::vector<double> values{0.1, 0.4, 0.2, 0.9, 0.6, 0.3};
  CHECK(resolve_bandwidth(BandwidthSpec::fixed(0.25), values) == 0.25);
  CHECK(resolve_bandwidth(BandwidthSpec::rot(), values) ==
        doctest::Approx(rule_of_thumb(values)));
  CHECK_THROWS_AS(resolve_bandwidth(BandwidthSpec::fixed(-1.0), values), ConfigError);
  CHECK_THROWS_AS(resolve_bandwidth(BandwidthSpec::fixed(0.0), values), ConfigError);
}

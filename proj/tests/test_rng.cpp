#include <catch2/catch_amalgamated.hpp>

#include <array>
#include <cmath>
#include <cstdint>
#include <set>
#include <vector>

#include "truthlab/rng.hpp"

using truthlab::rng::Counter;
using truthlab::rng::fnv1a64;
using truthlab::rng::mix64;

// Golden values computed with an independent implementation of the same
// mixing constants. Any change to the generator breaks every seeded artifact,
// so these are pinned exactly.
TEST_CASE("mix64 golden values", "[rng]") {
  CHECK(mix64(0) == 0ULL);
  CHECK(mix64(42) == 0xA759EA27D4727622ULL);
  CHECK(mix64(0xDEADBEEFULL) == 0x4E062702EC929EEAULL);
}

TEST_CASE("fnv1a64 golden values", "[rng]") {
  CHECK(fnv1a64("") == 0xCBF29CE484222325ULL);
  CHECK(fnv1a64("a") == 0xAF63DC4C8601EC8CULL);
  CHECK(fnv1a64("world_g") == 0x20DBF33DA1508179ULL);
}

TEST_CASE("counter stream golden traces", "[rng]") {
  {
    Counter c(42, "test");
    CHECK(c.next_u64() == 0x02646F23058929A0ULL);
    CHECK(c.next_u64() == 0x2E4B3B588E36DA5CULL);
    CHECK(c.next_u64() == 0xE2219CF45588C805ULL);
    CHECK(c.next_u64() == 0x0A64EB940280C97CULL);
  }
  {
    Counter c(1, "world_g");
    CHECK(c.next_u64() == 0xB7B72000A27BE23FULL);
    CHECK(c.next_u64() == 0x83A6B1BFFE13924AULL);
  }
  {
    Counter c(7, "");
    CHECK(c.next_u64() == 0x89136CC254FDC868ULL);
  }
}

TEST_CASE("next_double matches golden mantissa construction", "[rng]") {
  Counter c(42, "test");
  CHECK(c.next_double() == 0.009345003175927347);
  CHECK(c.next_double() == 0.18083544647216898);
  CHECK(c.next_double() == 0.8833253952521175);
}

TEST_CASE("same seed and stream replay identically", "[rng]") {
  Counter a(123, "alpha");
  Counter b(123, "alpha");
  for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());
}

TEST_CASE("distinct seeds and streams decorrelate", "[rng]") {
  Counter a(1, "alpha");
  Counter b(2, "alpha");
  Counter c(1, "beta");
  int eq_seed = 0;
  int eq_stream = 0;
  Counter a2(1, "alpha");
  for (int i = 0; i < 64; ++i) {
    std::uint64_t va = a.next_u64();
    if (va == b.next_u64()) ++eq_seed;
    if (a2.next_u64() == c.next_u64()) ++eq_stream;
  }
  CHECK(eq_seed == 0);
  CHECK(eq_stream == 0);
}

TEST_CASE("next_double stays in the unit interval", "[rng]") {
  Counter c(9, "unit");
  for (int i = 0; i < 20000; ++i) {
    double u = c.next_double();
    REQUIRE(u >= 0.0);
    REQUIRE(u < 1.0);
  }
}

TEST_CASE("next_below is bounded and covers small ranges", "[rng]") {
  Counter c(5, "below");
  std::set<std::uint64_t> seen;
  for (int i = 0; i < 500; ++i) {
    std::uint64_t v = c.next_below(7);
    REQUIRE(v < 7);
    seen.insert(v);
  }
  CHECK(seen.size() == 7);
  CHECK(c.next_below(1) == 0);
  CHECK(c.next_below(0) == 0);
}

TEST_CASE("next_below is close to uniform", "[rng]") {
  Counter c(11, "below_chi2");
  const int n_bins = 10;
  const int n_draws = 100000;
  std::array<int, n_bins> hist{};
  for (int i = 0; i < n_draws; ++i) ++hist[c.next_below(n_bins)];
  double chi2 = 0.0;
  double expect = static_cast<double>(n_draws) / n_bins;
  for (int h : hist) chi2 += (h - expect) * (h - expect) / expect;
  // dof = 9; the 99.9th percentile is 27.9.
  CHECK(chi2 < 27.9);
}

TEST_CASE("bernoulli edge probabilities are exact", "[rng]") {
  Counter c(3, "bern");
  for (int i = 0; i < 1000; ++i) {
    CHECK_FALSE(c.next_bernoulli(0.0));
    CHECK(c.next_bernoulli(1.0));
  }
  Counter c2(3, "bern_rate");
  int hits = 0;
  for (int i = 0; i < 100000; ++i) hits += c2.next_bernoulli(0.3);
  CHECK(std::abs(hits / 100000.0 - 0.3) < 0.01);
}

TEST_CASE("gaussian moments are sane", "[rng]") {
  Counter c(17, "gauss");
  const int n = 200000;
  double sum = 0.0;
  double sumsq = 0.0;
  for (int i = 0; i < n; ++i) {
    double g = c.next_gaussian();
    sum += g;
    sumsq += g * g;
  }
  double mean = sum / n;
  double var = sumsq / n - mean * mean;
  CHECK(std::abs(mean) < 0.02);
  CHECK(std::abs(var - 1.0) < 0.03);
}

TEST_CASE("counter index advances once per raw draw", "[rng]") {
  Counter c(1, "ctr");
  CHECK(c.counter() == 0);
  c.next_u64();
  CHECK(c.counter() == 1);
  c.next_double();
  CHECK(c.counter() == 2);
  // Box-Muller consumes two uniforms, then serves the cached spare for free.
  c.next_gaussian();
  CHECK(c.counter() == 4);
  c.next_gaussian();
  CHECK(c.counter() == 4);
}

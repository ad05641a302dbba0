#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <set>
#include <sstream>
#include <vector>

#include "truthlab/rng.hpp"
#include "truthlab/world.hpp"

using namespace truthlab;

TEST_CASE("toy world draws a bijective map", "[world]") {
  data::WorldSpec w = data::make_world(20, 20, 1);
  REQUIRE(w.toy_mode());
  REQUIRE(w.vocab_size() == 40);
  std::set<int> image;
  for (int x = 1; x <= 20; ++x) {
    int a = w.g_of(x);
    CHECK(w.is_attribute(a));
    image.insert(a);
    CHECK(w.g_inverse(a) == x);
  }
  CHECK(image.size() == 20);
}

TEST_CASE("asymmetric world maps every subject into the attribute range", "[world]") {
  data::WorldSpec w = data::make_world(10, 40, 2);
  REQUIRE_FALSE(w.toy_mode());
  for (int x = 1; x <= 10; ++x) {
    CHECK(w.g_of(x) > 10);
    CHECK(w.g_of(x) <= 50);
  }
  CHECK_THROWS_AS(w.g_inverse(11), std::invalid_argument);
}

TEST_CASE("world construction is deterministic in the seed", "[world]") {
  data::WorldSpec a = data::make_world(50, 50, 9);
  data::WorldSpec b = data::make_world(50, 50, 9);
  data::WorldSpec c = data::make_world(50, 50, 10);
  CHECK(a.g == b.g);
  CHECK(a.g != c.g);
}

TEST_CASE("validate rejects malformed worlds", "[world]") {
  data::WorldSpec w;
  w.n_subjects = 3;
  w.n_attributes = 3;
  w.g = {4, 5};
  CHECK_THROWS_AS(w.validate(), std::invalid_argument);
  w.g = {4, 5, 7};  // 7 is outside the attribute range 4..6
  CHECK_THROWS_AS(w.validate(), std::invalid_argument);
  w.g = {4, 5, 5};  // not bijective
  CHECK_THROWS_AS(w.validate(), std::invalid_argument);
  w.g = {4, 6, 5};
  w.validate();
  CHECK(w.g_inverse(6) == 2);
}

TEST_CASE("id range predicates", "[world]") {
  data::WorldSpec w = data::make_world(5, 8, 1);
  CHECK_FALSE(w.is_subject(0));
  CHECK(w.is_subject(1));
  CHECK(w.is_subject(5));
  CHECK_FALSE(w.is_subject(6));
  CHECK(w.is_attribute(6));
  CHECK(w.is_attribute(13));
  CHECK_FALSE(w.is_attribute(14));
  CHECK_THROWS_AS(w.g_of(6), std::invalid_argument);
}

TEST_CASE("true examples state both facts", "[world]") {
  data::WorldSpec w = data::make_world(16, 16, 3);
  rng::Counter r(4, "samples");
  for (int i = 0; i < 2000; ++i) {
    data::Example e = data::sample_example(w, 1.0, r);
    REQUIRE(e.truth);
    CHECK(e.y == w.g_of(e.x));
    CHECK(e.y_prime == w.g_of(e.x_prime));
  }
}

TEST_CASE("false examples draw attributes uniformly", "[world]") {
  data::WorldSpec w = data::make_world(16, 16, 3);
  rng::Counter r(4, "samples_false");
  std::vector<int> hist(16, 0);
  const int n = 40000;
  int matches = 0;
  for (int i = 0; i < n; ++i) {
    data::Example e = data::sample_example(w, 0.0, r);
    REQUIRE_FALSE(e.truth);
    REQUIRE(w.is_attribute(e.y));
    REQUIRE(w.is_attribute(e.y_prime));
    ++hist[e.y - 17];
    // Coincidental truth must stay possible on the false branch.
    if (e.y == w.g_of(e.x)) ++matches;
  }
  for (int h : hist) CHECK(std::abs(h / static_cast<double>(n) - 1.0 / 16) < 0.01);
  CHECK(matches > 0);
  CHECK(std::abs(matches / static_cast<double>(n) - 1.0 / 16) < 0.01);
}

TEST_CASE("truth rate tracks rho", "[world]") {
  data::WorldSpec w = data::make_world(8, 8, 1);
  rng::Counter r(11, "rho_rate");
  data::Batch b = data::sample_batch(w, 0.7, 50000, r);
  int truths = 0;
  for (const auto& e : b.examples) truths += e.truth;
  CHECK(std::abs(truths / 50000.0 - 0.7) < 0.01);
  CHECK_THROWS_AS(data::sample_example(w, 1.5, r), std::invalid_argument);
}

TEST_CASE("sampling replays exactly from the stream state", "[world]") {
  data::WorldSpec w = data::make_world(12, 12, 5);
  rng::Counter r1(6, "replay");
  rng::Counter r2(6, "replay");
  for (int i = 0; i < 300; ++i) {
    data::Example a = data::sample_example(w, 0.4, r1);
    data::Example b = data::sample_example(w, 0.4, r2);
    CHECK(a.x == b.x);
    CHECK(a.y == b.y);
    CHECK(a.x_prime == b.x_prime);
    CHECK(a.y_prime == b.y_prime);
    CHECK(a.truth == b.truth);
  }
  CHECK(r1.counter() == r2.counter());
}

TEST_CASE("forced sampling fixes the label without consuming the bernoulli", "[world]") {
  data::WorldSpec w = data::make_world(12, 12, 5);
  rng::Counter r(1, "forced");
  data::Example t = data::sample_example_forced(w, true, r);
  CHECK(t.truth);
  CHECK(t.y == w.g_of(t.x));
  std::uint64_t after_true = r.counter();
  CHECK(after_true >= 2);  // x and x' (next_below may reject and redraw)
  data::Example f = data::sample_example_forced(w, false, r);
  CHECK_FALSE(f.truth);
  CHECK(r.counter() >= after_true + 4);  // x, x', y, y' (plus rejections)
}

TEST_CASE("balanced probe sets are half true then half false", "[world]") {
  data::WorldSpec w = data::make_world(10, 10, 2);
  rng::Counter r(3, "probe");
  data::Batch b = data::make_balanced_probe_set(w, 200, r);
  REQUIRE(b.examples.size() == 200);
  for (int i = 0; i < 100; ++i) CHECK(b.examples[i].truth);
  for (int i = 100; i < 200; ++i) CHECK_FALSE(b.examples[i].truth);
  CHECK_THROWS_AS(data::make_balanced_probe_set(w, 7, r), std::invalid_argument);
}

TEST_CASE("oracle conditional is a peaked mixture", "[world]") {
  data::WorldSpec w = data::make_world(8, 8, 4);
  std::vector<double> p = data::oracle_conditional(w, 0.9, 3);
  REQUIRE(p.size() == 8);
  double total = 0.0;
  for (double v : p) total += v;
  CHECK(total == Catch::Approx(1.0).epsilon(1e-12));
  int peak = w.g_of(3) - 9;
  CHECK(p[peak] == Catch::Approx(0.9 + 0.1 / 8).epsilon(1e-12));
  for (int i = 0; i < 8; ++i)
    if (i != peak) CHECK(p[i] == Catch::Approx(0.1 / 8).epsilon(1e-12));
  CHECK_THROWS_AS(data::oracle_conditional(w, 0.9, 0), std::invalid_argument);
}

TEST_CASE("world json round trip", "[world]") {
  data::WorldSpec w = data::make_world(6, 9, 77);
  data::WorldSpec back = data::world_from_json(data::world_to_json(w));
  CHECK(back.n_subjects == w.n_subjects);
  CHECK(back.n_attributes == w.n_attributes);
  CHECK(back.g == w.g);
  CHECK(back.seed == w.seed);
}

TEST_CASE("batch csv layout", "[world]") {
  data::WorldSpec w = data::make_world(4, 4, 1);
  data::Batch b;
  b.examples.push_back({1, 6, 2, 7, true});
  b.examples.push_back({3, 5, 4, 8, false});
  std::ostringstream os;
  data::write_batch_csv(os, b);
  CHECK(os.str() == "x,y,x_prime,y_prime,truth\n1,6,2,7,1\n3,5,4,8,0\n");
}

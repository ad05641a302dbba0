#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "truthlab/onehot.hpp"
#include "truthlab/population.hpp"
#include "truthlab/rng.hpp"
#include "truthlab/world.hpp"

using namespace truthlab;

namespace {

toy::OneHotConfig cfg_n(int n, double beta = 1.0, bool positions = true) {
  toy::OneHotConfig cfg;
  cfg.N = n;
  cfg.beta = beta;
  cfg.include_positions = positions;
  return cfg;
}

toy::ValueMatrix random_w(int d, rng::Counter& r, double scale) {
  toy::ValueMatrix w(d, d);
  for (double& v : w.data) v = scale * r.next_gaussian();
  return w;
}

}  // namespace

TEST_CASE("population loss at zero W is log vocabulary size", "[population]") {
  int n = 5;
  data::WorldSpec world = data::make_world(n, n, 1);
  toy::OneHotConfig cfg = cfg_n(n);
  toy::ValueMatrix W(cfg.d(), cfg.d());
  // All logits vanish, so cross-entropy equals log(2N) whatever the target mix.
  for (int t : {1, 2, 3}) {
    double loss = toy::population_loss(cfg, W, world, 0.6, t);
    CHECK(loss == Catch::Approx(std::log(2.0 * n)).epsilon(1e-12));
  }
}

TEST_CASE("population gradients match central finite differences", "[population]") {
  int n = 4;
  data::WorldSpec world = data::make_world(n, n, 3);
  toy::OneHotConfig cfg = cfg_n(n, 2.0);
  rng::Counter r(9, "fd_w");
  toy::ValueMatrix W = random_w(cfg.d(), r, 0.15);
  const double h = 1e-5;
  for (int t : {1, 2, 3}) {
    toy::PopulationResult res = toy::population_loss_and_grad(cfg, W, world, 0.7, t);
    double max_diff = 0.0;
    double max_grad = 0.0;
    for (int i = 0; i < cfg.d(); ++i) {
      for (int j = 0; j < cfg.d(); ++j) {
        double saved = W(i, j);
        W(i, j) = saved + h;
        double up = toy::population_loss(cfg, W, world, 0.7, t);
        W(i, j) = saved - h;
        double down = toy::population_loss(cfg, W, world, 0.7, t);
        W(i, j) = saved;
        double fd = (up - down) / (2.0 * h);
        max_diff = std::max(max_diff, std::abs(fd - res.grad(i, j)));
        max_grad = std::max(max_grad, std::abs(res.grad(i, j)));
      }
    }
    INFO("t=" << t);
    CHECK(max_diff / std::max(max_grad, 1e-8) <= 1e-5);
  }
}

TEST_CASE("monte carlo estimate agrees with enumeration", "[population]") {
  int n = 5;
  data::WorldSpec world = data::make_world(n, n, 4);
  toy::OneHotConfig cfg = cfg_n(n, 1.5);
  rng::Counter wr(2, "mc_w");
  toy::ValueMatrix W = random_w(cfg.d(), wr, 0.1);
  rng::Counter r(7, "mc_draws");
  for (int t : {1, 3}) {
    double exact = toy::population_loss(cfg, W, world, 0.8, t);
    toy::MonteCarloLoss mc = toy::population_loss_monte_carlo(cfg, W, world, 0.8, t, 20000, r);
    CHECK(std::abs(mc.mean - exact) < 4.0 * mc.stderr_);
    CHECK(mc.stderr_ > 0.0);
    CHECK(mc.n == 20000);
  }
  CHECK_THROWS_AS(toy::population_loss_monte_carlo(cfg, W, world, 0.8, 1, 1, r),
                  std::invalid_argument);
}

TEST_CASE("enumeration refuses worlds beyond the limit", "[population]") {
  int n = 70;  // above the default limit of 64
  data::WorldSpec world = data::make_world(n, n, 1);
  toy::OneHotConfig cfg = cfg_n(n);
  toy::ValueMatrix W(cfg.d(), cfg.d());
  CHECK_THROWS_WITH(toy::population_loss(cfg, W, world, 0.5, 1),
                    Catch::Matchers::ContainsSubstring("monte_carlo"));
}

TEST_CASE("first sequential step writes the memorization block", "[population]") {
  int n = 20;
  data::WorldSpec world = data::make_world(n, n, 11);
  toy::OneHotConfig cfg = cfg_n(n, 1.0, false);
  toy::Layout lay(n);
  toy::SequentialResult seq =
      toy::sequential_training(cfg, world, 1.0, toy::default_sequential_eta(cfg, 1.0));

  // After one unit-norm step from zero: eta * (1/N) * (1 - 1/(2N)) on the
  // correct-attribute row of each subject column, -eta/(2N^2) elsewhere in
  // the unembedding rows of that column.
  for (int x = 1; x <= n; ++x) {
    CHECK(seq.w1(lay.u(world.g_of(x)), lay.e(x)) ==
          Catch::Approx(1.0 - 1.0 / (2.0 * n)).epsilon(1e-10));
    for (int z = 1; z <= 2 * n; ++z)
      if (z != world.g_of(x))
        CHECK(seq.w1(lay.u(z), lay.e(x)) == Catch::Approx(-1.0 / (2.0 * n)).epsilon(1e-10));
  }
}

TEST_CASE("second sequential step lands near the fixed-point block mean", "[population]") {
  int n = 20;
  data::WorldSpec world = data::make_world(n, n, 11);
  toy::OneHotConfig cfg = cfg_n(n, 1.0, false);
  toy::Layout lay(n);
  toy::SequentialResult seq =
      toy::sequential_training(cfg, world, 1.0, toy::default_sequential_eta(cfg, 1.0));
  double mean = 0.0;
  for (int x = 1; x <= n; ++x) mean += seq.w2(lay.u(world.g_of(x)), lay.e(x));
  mean /= n;
  CHECK(std::abs(mean - (1.0 + 0.5 / std::sqrt(2.0))) <= 10.0 / n);
}

TEST_CASE("third sequential step keeps off-structure entries near zero", "[population]") {
  int n = 20;
  data::WorldSpec world = data::make_world(n, n, 11);
  toy::OneHotConfig cfg = cfg_n(n, 1.0, false);
  toy::SequentialResult seq =
      toy::sequential_training(cfg, world, 1.0, toy::default_sequential_eta(cfg, 1.0));
  toy::StructuredFit fit = toy::fit_structured(cfg, seq.w3, world);
  CHECK(fit.off_structure_max < 0.5 * fit.blocks.ex_to_ugx);
  CHECK(fit.blocks.ex_to_ugx > 0.0);
}

TEST_CASE("sequential training rejects invalid configurations", "[population]") {
  int n = 6;
  data::WorldSpec world = data::make_world(n, n, 1);
  toy::OneHotConfig with_positions = cfg_n(n, 1.0, true);
  CHECK_THROWS_AS(toy::sequential_training(with_positions, world, 1.0, 6.0),
                  std::invalid_argument);
  toy::OneHotConfig cfg = cfg_n(n, 1.0, false);
  CHECK_THROWS_AS(toy::sequential_training(cfg, world, 0.0, 6.0), std::invalid_argument);
}

TEST_CASE("sgd training reduces the population loss deterministically", "[population]") {
  int n = 8;
  data::WorldSpec world = data::make_world(n, n, 6);
  toy::OneHotConfig cfg = toy::OneHotConfig::make(n);
  std::vector<toy::SgdSnapshot> snaps =
      toy::minibatch_sgd_train(cfg, world, 0.8, 0.5, 16, 200, 50, 13);
  REQUIRE(snaps.size() == 5);  // steps 0, 50, 100, 150, 200
  CHECK(snaps.front().step == 0);
  CHECK(snaps.back().step == 200);
  double first = 0.0, last = 0.0;
  for (int t : {1, 2, 3}) {
    first += toy::population_loss(cfg, snaps.front().W, world, 0.8, t);
    last += toy::population_loss(cfg, snaps.back().W, world, 0.8, t);
  }
  CHECK(last < first);

  std::vector<toy::SgdSnapshot> again =
      toy::minibatch_sgd_train(cfg, world, 0.8, 0.5, 16, 200, 50, 13);
  REQUIRE(again.size() == snaps.size());
  for (std::size_t i = 0; i < snaps.size(); ++i) {
    REQUIRE(again[i].step == snaps[i].step);
    REQUIRE(again[i].W.data == snaps[i].W.data);
  }
}

TEST_CASE("sgd argument validation", "[population]") {
  int n = 4;
  data::WorldSpec world = data::make_world(n, n, 1);
  toy::OneHotConfig cfg = toy::OneHotConfig::make(n);
  CHECK_THROWS_AS(toy::minibatch_sgd_train(cfg, world, 0.8, 0.5, 0, 10, 5, 1),
                  std::invalid_argument);
  CHECK_THROWS_AS(toy::minibatch_sgd_train(cfg, world, 0.8, 0.5, 4, 10, 0, 1),
                  std::invalid_argument);
}

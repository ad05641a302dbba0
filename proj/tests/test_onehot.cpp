#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "truthlab/onehot.hpp"
#include "truthlab/rng.hpp"
#include "truthlab/world.hpp"

using namespace truthlab;

namespace {

toy::OneHotConfig cfg_n(int n) {
  toy::OneHotConfig cfg;
  cfg.N = n;
  cfg.beta = 1.0;
  return cfg;
}

}  // namespace

TEST_CASE("coordinate layout partitions the residual stream", "[onehot]") {
  toy::Layout lay(5);
  CHECK(lay.dim() == 23);
  CHECK(lay.e(1) == 0);
  CHECK(lay.e(10) == 9);
  CHECK(lay.p(1) == 10);
  CHECK(lay.p(3) == 12);
  CHECK(lay.u(1) == 13);
  CHECK(lay.u(10) == 22);
  toy::OneHotConfig cfg = toy::OneHotConfig::make(5);
  CHECK(cfg.d() == 23);
  CHECK(cfg.beta == Catch::Approx(std::sqrt(23.0)));
}

TEST_CASE("residual with zero W is token plus position", "[onehot]") {
  toy::OneHotConfig cfg = cfg_n(4);
  toy::Layout lay(4);
  toy::ValueMatrix W(lay.dim(), lay.dim());
  std::vector<double> v = toy::residual_pre_norm(cfg, W, {2});
  for (int i = 0; i < lay.dim(); ++i) {
    double want = (i == lay.e(2) || i == lay.p(1)) ? 1.0 : 0.0;
    CHECK(v[static_cast<std::size_t>(i)] == want);
  }
  // Positions off: only the token coordinate remains.
  cfg.include_positions = false;
  v = toy::residual_pre_norm(cfg, W, {2});
  for (int i = 0; i < lay.dim(); ++i)
    CHECK(v[static_cast<std::size_t>(i)] == (i == lay.e(2) ? 1.0 : 0.0));
}

TEST_CASE("prefix validation", "[onehot]") {
  toy::OneHotConfig cfg = cfg_n(4);
  toy::ValueMatrix W(cfg.d(), cfg.d());
  CHECK_THROWS_AS(toy::forward_logits(cfg, W, {}), std::invalid_argument);
  CHECK_THROWS_AS(toy::forward_logits(cfg, W, {1, 2, 3, 4}), std::invalid_argument);
  CHECK_THROWS_AS(toy::forward_logits(cfg, W, {9}), std::invalid_argument);
  CHECK_THROWS_AS(toy::forward_logits(cfg, W, {0}), std::invalid_argument);
}

TEST_CASE("unit norm and flat logits at zero W", "[onehot]") {
  toy::OneHotConfig cfg = cfg_n(4);
  toy::ValueMatrix W(cfg.d(), cfg.d());
  toy::ResidualRecord rec = toy::forward_logits(cfg, W, {1, 6});
  double n2 = 0.0;
  for (double a : rec.post_norm) n2 += a * a;
  CHECK(n2 == Catch::Approx(1.0).epsilon(1e-12));
  REQUIRE(rec.logits.size() == 8);
  for (double l : rec.logits) CHECK(l == 0.0);
  std::vector<double> probs = toy::predicted_probabilities(cfg, rec.logits);
  double total = 0.0;
  for (double p : probs) {
    CHECK(p == Catch::Approx(1.0 / 8).epsilon(1e-12));
    total += p;
  }
  CHECK(total == Catch::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("degenerate zero-norm residual is rejected", "[onehot]") {
  toy::OneHotConfig cfg = cfg_n(3);
  toy::ValueMatrix W(cfg.d(), cfg.d());
  for (int i = 0; i < cfg.d(); ++i) W(i, i) = -1.0;  // W(e+p) = -(e+p) at t=1
  CHECK_THROWS_AS(toy::forward_logits(cfg, W, {2}), std::domain_error);
}

TEST_CASE("temperature sharpens probabilities monotonically", "[onehot]") {
  toy::OneHotConfig cold = cfg_n(4);
  toy::OneHotConfig hot = cfg_n(4);
  hot.beta = 8.0;
  std::vector<double> logits = {0.9, 0.1, 0.0, 0.2, 0.0, 0.0, 0.3, 0.0};
  std::vector<double> pc = toy::predicted_probabilities(cold, logits);
  std::vector<double> ph = toy::predicted_probabilities(hot, logits);
  CHECK(ph[0] > pc[0]);
  CHECK(toy::argmax_token(logits) == 1);
  std::vector<double> tie = {0.5, 0.5, 0.1, 0.5, 0.1, 0.1, 0.1, 0.1};
  CHECK(toy::argmax_token(tie) == 1);  // ties resolve to the lowest token id
}

TEST_CASE("structured W has the documented sparsity pattern", "[onehot]") {
  int n = 6;
  data::WorldSpec world = data::make_world(n, n, 3);
  toy::OneHotConfig cfg = cfg_n(n);
  toy::Layout lay(n);
  toy::StructuredCoeffs c{0.7, 1.3, 0.9, 1.1, 0.2, 0.4, 0.6};
  toy::ValueMatrix W = toy::build_structured_W(cfg, c, world);

  int nonzeros = 0;
  for (double v : W.data) nonzeros += v != 0.0;
  CHECK(nonzeros == 10 * n);

  for (int x = 1; x <= n; ++x) {
    CHECK(W(lay.e(x), lay.e(x)) == -0.7);
    CHECK(W(lay.u(world.g_of(x)), lay.e(x)) == 0.9);
  }
  for (int y = n + 1; y <= 2 * n; ++y) {
    CHECK(W(lay.e(world.g_inverse(y)), lay.e(y)) == 1.3);
    CHECK(W(lay.u(y), lay.e(y)) == -1.1);
  }
  // Position columns: subjects' unembedding rows carry -gamma_t * sign_t,
  // attributes' rows +gamma_t * sign_t, with signs (+, -, +) over t.
  double signed_g[3] = {0.2, -0.4, 0.6};
  for (int t = 1; t <= 3; ++t) {
    for (int x = 1; x <= n; ++x) CHECK(W(lay.u(x), lay.p(t)) == -signed_g[t - 1]);
    for (int y = n + 1; y <= 2 * n; ++y) CHECK(W(lay.u(y), lay.p(t)) == signed_g[t - 1]);
  }
}

TEST_CASE("structured fit recovers planted coefficients", "[onehot]") {
  int n = 8;
  data::WorldSpec world = data::make_world(n, n, 5);
  toy::OneHotConfig cfg = cfg_n(n);
  toy::StructuredCoeffs c{0.7, 1.3, 0.9, 1.1, 0.2, 0.4, 0.6};
  toy::ValueMatrix W = toy::build_structured_W(cfg, c, world);
  toy::StructuredFit fit = toy::fit_structured(cfg, W, world);
  CHECK(fit.coeffs.alpha1 == Catch::Approx(0.7).epsilon(1e-12));
  CHECK(fit.coeffs.alpha2 == Catch::Approx(1.3).epsilon(1e-12));
  CHECK(fit.coeffs.beta1 == Catch::Approx(0.9).epsilon(1e-12));
  CHECK(fit.coeffs.beta2 == Catch::Approx(1.1).epsilon(1e-12));
  CHECK(fit.coeffs.gamma1 == Catch::Approx(0.2).epsilon(1e-12));
  CHECK(fit.coeffs.gamma2 == Catch::Approx(0.4).epsilon(1e-12));
  CHECK(fit.coeffs.gamma3 == Catch::Approx(0.6).epsilon(1e-12));
  CHECK(fit.residual == Catch::Approx(0.0).margin(1e-12));
  CHECK(fit.off_structure_max == 0.0);
  CHECK(fit.positive);

  toy::Layout lay(n);
  W(lay.e(1), lay.e(2)) += 0.05;  // off the family support
  toy::StructuredFit bumped = toy::fit_structured(cfg, W, world);
  CHECK(bumped.off_structure_max == Catch::Approx(0.05).epsilon(1e-12));
  CHECK(bumped.residual == Catch::Approx(0.05).epsilon(1e-9));

  data::WorldSpec other = data::make_world(n + 1, n + 1, 5);
  CHECK_THROWS_AS(toy::fit_structured(cfg, W, other), std::invalid_argument);
}

TEST_CASE("fit averages within-block variation", "[onehot]") {
  int n = 4;
  data::WorldSpec world = data::make_world(n, n, 2);
  toy::OneHotConfig cfg = cfg_n(n);
  toy::Layout lay(n);
  toy::ValueMatrix W(cfg.d(), cfg.d());
  // Diagonal subject entries -1, -2, -3, -4: block mean -2.5, so alpha1 = 2.5.
  for (int x = 1; x <= n; ++x) W(lay.e(x), lay.e(x)) = -static_cast<double>(x);
  toy::StructuredFit fit = toy::fit_structured(cfg, W, world);
  CHECK(fit.coeffs.alpha1 == Catch::Approx(2.5).epsilon(1e-12));
  CHECK(fit.residual > 0.0);
}

TEST_CASE("activation collection stacks forward passes", "[onehot]") {
  int n = 5;
  data::WorldSpec world = data::make_world(n, n, 7);
  toy::OneHotConfig cfg = cfg_n(n);
  toy::StructuredCoeffs c{1.0, 1.0, 1.0, 1.0, 0.3, 0.3, 0.3};
  toy::ValueMatrix W = toy::build_structured_W(cfg, c, world);
  rng::Counter r(1, "acts");
  data::Batch batch = data::make_balanced_probe_set(world, 10, r);

  la::Mat post = toy::collect_activations(cfg, W, batch.examples, 3, true);
  la::Mat pre = toy::collect_activations(cfg, W, batch.examples, 2, false);
  REQUIRE(post.rows == 10);
  REQUIRE(post.cols == cfg.d());
  for (int i = 0; i < 10; ++i) {
    const data::Example& e = batch.examples[static_cast<std::size_t>(i)];
    toy::ResidualRecord r3 = toy::forward_logits(cfg, W, {e.x, e.y, e.x_prime});
    toy::ResidualRecord r2 = toy::forward_logits(cfg, W, {e.x, e.y});
    for (int j = 0; j < cfg.d(); ++j) {
      REQUIRE(post(i, j) == r3.post_norm[static_cast<std::size_t>(j)]);
      REQUIRE(pre(i, j) == r2.pre_norm[static_cast<std::size_t>(j)]);
    }
  }
  CHECK_THROWS_AS(toy::collect_activations(cfg, W, batch.examples, 1, true), std::invalid_argument);
}

TEST_CASE("all_positive requires every coefficient strictly positive", "[onehot]") {
  toy::StructuredCoeffs good{1, 1, 1, 1, 0.1, 0.1, 0.1};
  CHECK(good.all_positive());
  toy::StructuredCoeffs zero_gamma{1, 1, 1, 1, 0.1, 0.0, 0.1};
  CHECK_FALSE(zero_gamma.all_positive());
  toy::StructuredCoeffs negative{1, 1, -1, 1, 0.1, 0.1, 0.1};
  CHECK_FALSE(negative.all_positive());
}

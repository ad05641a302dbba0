#pragma once

// Exact population losses L_1..L_3 over the synthetic distribution, their
// analytic gradients, and the two training procedures built on them: the
// three-step sequential schedule (two steps on L_1, one on L_3, no positions)
// and plain minibatch SGD over all three prediction positions.
//
// Gradient of one prefix term, with theta = v/||v|| and sigma the tempered
// softmax: grad += weight * (beta/||v||) * (I - theta theta^T) U^T(sigma - pi) b^T,
// where b is the attention average the value matrix was applied to. b is
// sparse (at most six coordinates), so each prefix costs O(d).

#include <array>
#include <cmath>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "truthlab/onehot.hpp"

namespace truthlab::toy {

namespace detail {

// Soft target over the 2N tokens: optional point mass plus a uniform block.
struct Target {
  int point_token = 0;  // 1-based id, 0 = absent
  double point_mass = 0.0;
  int range_lo = 0, range_hi = -1;  // inclusive token-id range, empty by default
  double range_mass = 0.0;

  static Target point(int token) { return Target{token, 1.0, 0, -1, 0.0}; }
  static Target uniform(int lo, int hi, double mass = 1.0) { return Target{0, 0.0, lo, hi, mass}; }
  static Target mixed(int token, double point_mass, int lo, int hi, double range_mass) {
    return Target{token, point_mass, lo, hi, range_mass};
  }
};

class Accumulator {
 public:
  Accumulator(const OneHotConfig& cfg, const ValueMatrix& W)
      : cfg_(cfg), lay_(cfg.N), W_(W), v_(lay_.dim()), h_(lay_.dim()), sigma_(lay_.n_tokens()) {}

  // Cached W(e_z + p_s) column combination.
  const std::vector<double>& column_sum(int token, int position) {
    auto& slot = cache_[(position - 1) * 2 * cfg_.N + (token - 1)];
    if (slot.empty()) {
      slot.resize(lay_.dim());
      int col = lay_.e(token);
      for (int i = 0; i < lay_.dim(); ++i) slot[i] = W_(i, col);
      if (cfg_.include_positions) {
        int pc = lay_.p(position);
        for (int i = 0; i < lay_.dim(); ++i) slot[i] += W_(i, pc);
      }
    }
    return slot;
  }

  void ensure_cache() {
    if (cache_.empty()) cache_.resize(static_cast<std::size_t>(3) * 2 * cfg_.N);
  }

  // One prefix, one soft target. grad may be null for loss-only evaluation.
  void accumulate(const int* prefix, int t, double weight, const Target& target, double& loss,
                  ValueMatrix* grad) {
    ensure_cache();
    int d = lay_.dim();
    int n_tok = lay_.n_tokens();
    double inv_t = 1.0 / t;
    for (int i = 0; i < d; ++i) v_[i] = 0.0;
    v_[lay_.e(prefix[t - 1])] += 1.0;
    if (cfg_.include_positions) v_[lay_.p(t)] += 1.0;
    for (int s = 1; s <= t; ++s) {
      const std::vector<double>& c = column_sum(prefix[s - 1], s);
      for (int i = 0; i < d; ++i) v_[i] += inv_t * c[i];
    }

    double n2 = la::norm2(v_.data(), d);
    if (n2 == 0.0) throw std::domain_error("population loss: degenerate zero-norm residual");
    double norm = std::sqrt(n2);
    double inv_norm = 1.0 / norm;

    // Tempered softmax over the u block of theta.
    const double* theta_u = v_.data() + 2 * cfg_.N + 3;  // scaled by inv_norm below
    double scale = cfg_.beta * inv_norm;
    double m = -1e300;
    for (int k = 0; k < n_tok; ++k) m = std::max(m, scale * theta_u[k]);
    double z = 0.0;
    for (int k = 0; k < n_tok; ++k) {
      sigma_[k] = std::exp(scale * theta_u[k] - m);
      z += sigma_[k];
    }
    double log_z = std::log(z) + m;
    for (int k = 0; k < n_tok; ++k) sigma_[k] /= z;

    double target_score = 0.0;
    if (target.point_mass != 0.0) target_score += target.point_mass * scale * theta_u[target.point_token - 1];
    int range_count = target.range_hi - target.range_lo + 1;
    if (target.range_mass != 0.0 && range_count > 0) {
      double s = 0.0;
      for (int k = target.range_lo - 1; k < target.range_hi; ++k) s += scale * theta_u[k];
      target_score += target.range_mass * s / range_count;
    }
    loss += weight * (log_z - target_score);

    if (!grad) return;

    // h = (beta/||v||) (Q - (theta^T Q) theta), Q = U^T (sigma - pi).
    double theta_dot_q = 0.0;
    for (int k = 0; k < n_tok; ++k) {
      double r = sigma_[k];
      if (target.point_mass != 0.0 && k == target.point_token - 1) r -= target.point_mass;
      if (target.range_mass != 0.0 && k >= target.range_lo - 1 && k < target.range_hi)
        r -= target.range_mass / range_count;
      sigma_[k] = r;  // reuse buffer as the class residual
      theta_dot_q += r * theta_u[k] * inv_norm;
    }
    double coeff = cfg_.beta * inv_norm;
    for (int i = 0; i < d; ++i) h_[i] = -theta_dot_q * v_[i] * inv_norm;
    for (int k = 0; k < n_tok; ++k) h_[2 * cfg_.N + 3 + k] += sigma_[k];
    for (int i = 0; i < d; ++i) h_[i] *= coeff;

    double w_inv_t = weight * inv_t;
    for (int s = 1; s <= t; ++s) {
      int col = lay_.e(prefix[s - 1]);
      for (int i = 0; i < d; ++i) (*grad)(i, col) += w_inv_t * h_[i];
      if (cfg_.include_positions) {
        int pc = lay_.p(s);
        for (int i = 0; i < d; ++i) (*grad)(i, pc) += w_inv_t * h_[i];
      }
    }
  }

 private:
  const OneHotConfig& cfg_;
  Layout lay_;
  const ValueMatrix& W_;
  std::vector<double> v_, h_, sigma_;
  std::vector<std::vector<double>> cache_;
};

inline void enumerate_population(const OneHotConfig& cfg, const ValueMatrix& W,
                                 const data::WorldSpec& world, double rho, int t, double& loss,
                                 ValueMatrix* grad) {
  if (t < 1 || t > 3) throw std::invalid_argument("population loss: t must be 1, 2 or 3");
  if (rho < 0.0 || rho > 1.0) throw std::invalid_argument("population loss: rho outside [0,1]");
  if (!world.toy_mode() || world.n_subjects != cfg.N)
    throw std::invalid_argument("population loss: toy-mode world of matching N required");
  if (cfg.N > cfg.enumeration_limit)
    throw std::invalid_argument(
        "population enumeration refused: N = " + std::to_string(cfg.N) + " exceeds enumeration_limit = " +
        std::to_string(cfg.enumeration_limit) +
        "; use population_loss_monte_carlo or raise the limit");
  int N = cfg.N;
  Accumulator acc(cfg, W);
  int prefix[3];
  if (t == 1) {
    for (int x = 1; x <= N; ++x) {
      prefix[0] = x;
      Target target = Target::mixed(world.g_of(x), rho, N + 1, 2 * N, 1.0 - rho);
      acc.accumulate(prefix, 1, 1.0 / N, target, loss, grad);
    }
  } else if (t == 2) {
    Target target = Target::uniform(1, N);
    for (int x = 1; x <= N; ++x) {
      prefix[0] = x;
      if (rho > 0.0) {
        prefix[1] = world.g_of(x);
        acc.accumulate(prefix, 2, rho / N, target, loss, grad);
      }
      if (rho < 1.0) {
        for (int y = N + 1; y <= 2 * N; ++y) {
          prefix[1] = y;
          acc.accumulate(prefix, 2, (1.0 - rho) / (static_cast<double>(N) * N), target, loss, grad);
        }
      }
    }
  } else {
    if (rho > 0.0) {
      double w = rho / (static_cast<double>(N) * N);
      for (int x = 1; x <= N; ++x) {
        prefix[0] = x;
        prefix[1] = world.g_of(x);
        for (int xp = 1; xp <= N; ++xp) {
          prefix[2] = xp;
          acc.accumulate(prefix, 3, w, Target::point(world.g_of(xp)), loss, grad);
        }
      }
    }
    if (rho < 1.0) {
      double w = (1.0 - rho) / (static_cast<double>(N) * N * N);
      Target target = Target::uniform(N + 1, 2 * N);
      for (int x = 1; x <= N; ++x) {
        prefix[0] = x;
        for (int y = N + 1; y <= 2 * N; ++y) {
          prefix[1] = y;
          for (int xp = 1; xp <= N; ++xp) {
            prefix[2] = xp;
            acc.accumulate(prefix, 3, w, target, loss, grad);
          }
        }
      }
    }
  }
}

}  // namespace detail

struct PopulationResult {
  double loss = 0.0;
  ValueMatrix grad;
};

inline PopulationResult population_loss_and_grad(const OneHotConfig& cfg, const ValueMatrix& W,
                                                 const data::WorldSpec& world, double rho, int t) {
  PopulationResult r;
  r.grad = ValueMatrix(cfg.d(), cfg.d());
  detail::enumerate_population(cfg, W, world, rho, t, r.loss, &r.grad);
  return r;
}

inline double population_loss(const OneHotConfig& cfg, const ValueMatrix& W,
                              const data::WorldSpec& world, double rho, int t) {
  double loss = 0.0;
  detail::enumerate_population(cfg, W, world, rho, t, loss, nullptr);
  return loss;
}

struct MonteCarloLoss {
  double mean = 0.0;
  double stderr_ = 0.0;
  int n = 0;
};

// Sampled estimate of L_t for worlds beyond the enumeration limit.
inline MonteCarloLoss population_loss_monte_carlo(const OneHotConfig& cfg, const ValueMatrix& W,
                                                  const data::WorldSpec& world, double rho, int t,
                                                  int n_samples, rng::Counter& rng) {
  if (t < 1 || t > 3) throw std::invalid_argument("population loss: t must be 1, 2 or 3");
  if (n_samples < 2) throw std::invalid_argument("population_loss_monte_carlo: need at least 2 samples");
  detail::Accumulator acc(cfg, W);
  double mean = 0.0, m2 = 0.0;
  int prefix[3];
  for (int i = 0; i < n_samples; ++i) {
    data::Example e = data::sample_example(world, rho, rng);
    prefix[0] = e.x;
    prefix[1] = e.y;
    prefix[2] = e.x_prime;
    int target = t == 1 ? e.y : (t == 2 ? e.x_prime : e.y_prime);
    double ce = 0.0;
    acc.accumulate(prefix, t, 1.0, detail::Target::point(target), ce, nullptr);
    double delta = ce - mean;
    mean += delta / (i + 1);
    m2 += delta * (ce - mean);
  }
  MonteCarloLoss out;
  out.mean = mean;
  out.n = n_samples;
  out.stderr_ = std::sqrt(m2 / (static_cast<double>(n_samples) - 1) / n_samples);
  return out;
}

struct SequentialResult {
  ValueMatrix w1, w2, w3;
};

// Two population steps on L_1, one on L_3, starting from zero, step size eta.
// Requires the no-positions variant; the reference constants further assume
// beta = 1 (plain Euclidean layer norm).
inline SequentialResult sequential_training(const OneHotConfig& cfg, const data::WorldSpec& world,
                                            double rho, double eta) {
  if (cfg.include_positions)
    throw std::invalid_argument("sequential_training requires the no-positions config variant");
  if (rho <= 0.0) throw std::invalid_argument("sequential_training: rho must be positive");
  int d = cfg.d();
  SequentialResult out;
  ValueMatrix w0(d, d);
  PopulationResult g1 = population_loss_and_grad(cfg, w0, world, rho, 1);
  out.w1 = ValueMatrix(d, d);
  for (std::size_t i = 0; i < out.w1.data.size(); ++i) out.w1.data[i] = -eta * g1.grad.data[i];
  PopulationResult g2 = population_loss_and_grad(cfg, out.w1, world, rho, 1);
  out.w2 = out.w1;
  for (std::size_t i = 0; i < out.w2.data.size(); ++i) out.w2.data[i] -= eta * g2.grad.data[i];
  PopulationResult g3 = population_loss_and_grad(cfg, out.w2, world, rho, 3);
  out.w3 = out.w2;
  for (std::size_t i = 0; i < out.w3.data.size(); ++i) out.w3.data[i] -= eta * g3.grad.data[i];
  return out;
}

inline double default_sequential_eta(const OneHotConfig& cfg, double rho) { return cfg.N / rho; }

struct SgdSnapshot {
  long long step = 0;
  ValueMatrix W;
};

// Plain SGD on sampled batches; loss per example sums the three next-token
// cross-entropies. Only W is learned; start at zero.
inline std::vector<SgdSnapshot> minibatch_sgd_train(const OneHotConfig& cfg,
                                                    const data::WorldSpec& world, double rho,
                                                    double lr, int batch_size, long long steps,
                                                    long long snapshot_every, std::uint64_t seed) {
  if (batch_size < 1) throw std::invalid_argument("minibatch_sgd_train: batch_size must be positive");
  if (snapshot_every < 1) throw std::invalid_argument("minibatch_sgd_train: snapshot_every must be positive");
  int d = cfg.d();
  ValueMatrix W(d, d);
  std::vector<SgdSnapshot> snaps;
  snaps.push_back({0, W});
  rng::Counter rng(seed, "toy_sgd");
  ValueMatrix grad(d, d);
  int prefix[3];
  for (long long step = 1; step <= steps; ++step) {
    grad.fill(0.0);
    double batch_loss = 0.0;
    detail::Accumulator acc(cfg, W);
    double w = 1.0 / batch_size;
    for (int i = 0; i < batch_size; ++i) {
      data::Example e = data::sample_example(world, rho, rng);
      prefix[0] = e.x;
      prefix[1] = e.y;
      prefix[2] = e.x_prime;
      acc.accumulate(prefix, 1, w, detail::Target::point(e.y), batch_loss, &grad);
      acc.accumulate(prefix, 2, w, detail::Target::point(e.x_prime), batch_loss, &grad);
      acc.accumulate(prefix, 3, w, detail::Target::point(e.y_prime), batch_loss, &grad);
    }
    if (!std::isfinite(batch_loss))
      throw std::runtime_error("minibatch_sgd_train: non-finite loss at step " + std::to_string(step));
    for (std::size_t i = 0; i < W.data.size(); ++i) W.data[i] -= lr * grad.data[i];
    if (step % snapshot_every == 0 || step == steps) snaps.push_back({step, W});
  }
  return snaps;
}

}  // namespace truthlab::toy

#pragma once

// One-layer transformer over a one-hot coordinate system: uniform causal
// attention, one value matrix W, Euclidean layer norm, fixed unembedding.
// Residual dimension d = 4N+3: coordinates [0, 2N) hold token embeddings e_z,
// [2N, 2N+3) hold position embeddings p_t, [2N+3, 4N+3) hold unembedding
// coordinates u_z. The unembedding projection U reads the u block.

#include <cmath>
#include <stdexcept>
#include <vector>

#include "truthlab/linalg.hpp"
#include "truthlab/world.hpp"

namespace truthlab::toy {

struct OneHotConfig {
  int N = 0;
  double beta = 0.0;            // softmax inverse temperature
  bool include_positions = true;  // off reproduces the sequential-training variant
  int enumeration_limit = 64;   // population sums refuse larger N

  int d() const { return 4 * N + 3; }

  static OneHotConfig make(int N) {
    OneHotConfig c;
    c.N = N;
    c.beta = std::sqrt(static_cast<double>(4 * N + 3));
    return c;
  }
};

// 0-based residual coordinates for 1-based token ids and positions.
struct Layout {
  int N;
  explicit Layout(int n) : N(n) {}
  int e(int token_id) const { return token_id - 1; }
  int p(int position) const { return 2 * N + position - 1; }  // position in 1..3
  int u(int token_id) const { return 2 * N + 3 + token_id - 1; }
  int dim() const { return 4 * N + 3; }
  int n_tokens() const { return 2 * N; }
};

struct StructuredCoeffs {
  double alpha1 = 0.0, alpha2 = 0.0;
  double beta1 = 0.0, beta2 = 0.0;
  double gamma1 = 0.0, gamma2 = 0.0, gamma3 = 0.0;

  bool all_positive() const {
    return alpha1 > 0 && alpha2 > 0 && beta1 > 0 && beta2 > 0 && gamma1 > 0 && gamma2 > 0 && gamma3 > 0;
  }
};

using ValueMatrix = la::Mat;  // d x d

struct ResidualRecord {
  std::vector<double> pre_norm;   // v
  std::vector<double> post_norm;  // v / ||v||
  std::vector<double> logits;     // U (v/||v||), length 2N
};

inline void check_prefix(const OneHotConfig& cfg, const std::vector<int>& prefix) {
  if (prefix.empty() || prefix.size() > 3) throw std::invalid_argument("prefix length must be 1..3");
  for (int z : prefix)
    if (z < 1 || z > 2 * cfg.N) throw std::invalid_argument("prefix token out of range");
}

// v = e_{z_t} + p_t + (1/t) sum_s W(e_{z_s} + p_s); positions drop out when
// the config flag is off.
inline std::vector<double> residual_pre_norm(const OneHotConfig& cfg, const ValueMatrix& W,
                                             const std::vector<int>& prefix) {
  check_prefix(cfg, prefix);
  Layout lay(cfg.N);
  int d = lay.dim();
  int t = static_cast<int>(prefix.size());
  std::vector<double> v(d, 0.0);
  v[lay.e(prefix.back())] += 1.0;
  if (cfg.include_positions) v[lay.p(t)] += 1.0;
  double inv_t = 1.0 / t;
  for (int s = 1; s <= t; ++s) {
    int col = lay.e(prefix[s - 1]);
    for (int i = 0; i < d; ++i) v[i] += inv_t * W(i, col);
    if (cfg.include_positions) {
      int pc = lay.p(s);
      for (int i = 0; i < d; ++i) v[i] += inv_t * W(i, pc);
    }
  }
  return v;
}

inline ResidualRecord forward_logits(const OneHotConfig& cfg, const ValueMatrix& W,
                                     const std::vector<int>& prefix) {
  Layout lay(cfg.N);
  ResidualRecord rec;
  rec.pre_norm = residual_pre_norm(cfg, W, prefix);
  double n2 = la::norm2(rec.pre_norm.data(), lay.dim());
  if (n2 == 0.0) throw std::domain_error("forward_logits: degenerate zero-norm residual");
  double inv_norm = 1.0 / std::sqrt(n2);
  rec.post_norm.resize(lay.dim());
  for (int i = 0; i < lay.dim(); ++i) rec.post_norm[i] = rec.pre_norm[i] * inv_norm;
  rec.logits.assign(rec.post_norm.begin() + 2 * cfg.N + 3, rec.post_norm.end());
  return rec;
}

// softmax(beta * logits); max-shifted for stability.
inline std::vector<double> predicted_probabilities(const OneHotConfig& cfg, const std::vector<double>& logits) {
  double m = -1e300;
  for (double f : logits) m = std::max(m, cfg.beta * f);
  double z = 0.0;
  std::vector<double> p(logits.size());
  for (std::size_t k = 0; k < logits.size(); ++k) {
    p[k] = std::exp(cfg.beta * logits[k] - m);
    z += p[k];
  }
  for (double& q : p) q /= z;
  return p;
}

// Lowest token id wins ties; reporting only.
inline int argmax_token(const std::vector<double>& logits) {
  int best = 0;
  for (int k = 1; k < static_cast<int>(logits.size()); ++k)
    if (logits[k] > logits[best]) best = k;
  return best + 1;
}

inline ValueMatrix build_structured_W(const OneHotConfig& cfg, const StructuredCoeffs& c,
                                      const data::WorldSpec& world) {
  if (!world.toy_mode() || world.n_subjects != cfg.N)
    throw std::invalid_argument("build_structured_W: toy-mode world of matching N required");
  Layout lay(cfg.N);
  ValueMatrix W(lay.dim(), lay.dim());
  int N = cfg.N;
  for (int x = 1; x <= N; ++x) {
    W(lay.e(x), lay.e(x)) = -c.alpha1;
    W(lay.u(world.g_of(x)), lay.e(x)) = c.beta1;
  }
  for (int y = N + 1; y <= 2 * N; ++y) {
    W(lay.e(world.g_inverse(y)), lay.e(y)) = c.alpha2;
    W(lay.u(y), lay.e(y)) = -c.beta2;
  }
  double gs[3] = {c.gamma1, -c.gamma2, c.gamma3};
  for (int t = 1; t <= 3; ++t) {
    int col = lay.p(t);
    for (int x = 1; x <= N; ++x) W(lay.u(x), col) = -gs[t - 1];
    for (int y = N + 1; y <= 2 * N; ++y) W(lay.u(y), col) = gs[t - 1];
  }
  return W;
}

// Residual-stream rows for a batch of examples, taken after consuming a
// prefix of the stated length (2 = clause attribute y, 3 = second subject
// x'), before or after normalization.
inline la::Mat collect_activations(const OneHotConfig& cfg, const ValueMatrix& W,
                                   const std::vector<data::Example>& examples, int prefix_len,
                                   bool post_norm) {
  if (prefix_len != 2 && prefix_len != 3)
    throw std::invalid_argument("collect_activations: prefix length must be 2 or 3");
  Layout lay(cfg.N);
  la::Mat out(static_cast<int>(examples.size()), lay.dim());
  for (std::size_t i = 0; i < examples.size(); ++i) {
    std::vector<int> prefix{examples[i].x, examples[i].y};
    if (prefix_len == 3) prefix.push_back(examples[i].x_prime);
    ResidualRecord rec = forward_logits(cfg, W, prefix);
    const std::vector<double>& src = post_norm ? rec.post_norm : rec.pre_norm;
    std::copy(src.begin(), src.end(), out.row(static_cast<int>(i)));
  }
  return out;
}

struct BlockReport {
  double ex_to_ugx = 0.0;    // beta1 estimate
  double ex_diagonal = 0.0;  // -alpha1 estimate
  double ey_to_uy = 0.0;     // -beta2 estimate
  double ey_to_eginv = 0.0;  // alpha2 estimate
  double p_pattern[3] = {0.0, 0.0, 0.0};  // signed-uniform fit per position column
};

struct StructuredFit {
  StructuredCoeffs coeffs;
  double residual = 0.0;  // Frobenius distance off the family
  BlockReport blocks;
  bool positive = false;
  double off_structure_max = 0.0;  // largest |entry| outside the family support
};

// Least squares onto the seven-coefficient family. Family members have
// disjoint supports, so the projection is a set of block means.
inline StructuredFit fit_structured(const OneHotConfig& cfg, const ValueMatrix& W,
                                    const data::WorldSpec& world) {
  if (!world.toy_mode() || world.n_subjects != cfg.N)
    throw std::invalid_argument("fit_structured: toy-mode world of matching N required");
  Layout lay(cfg.N);
  int N = cfg.N;
  StructuredFit fit;
  double s_ugx = 0.0, s_diag = 0.0, s_uy = 0.0, s_eginv = 0.0;
  for (int x = 1; x <= N; ++x) {
    s_ugx += W(lay.u(world.g_of(x)), lay.e(x));
    s_diag += W(lay.e(x), lay.e(x));
  }
  for (int y = N + 1; y <= 2 * N; ++y) {
    s_uy += W(lay.u(y), lay.e(y));
    s_eginv += W(lay.e(world.g_inverse(y)), lay.e(y));
  }
  fit.blocks.ex_to_ugx = s_ugx / N;
  fit.blocks.ex_diagonal = s_diag / N;
  fit.blocks.ey_to_uy = s_uy / N;
  fit.blocks.ey_to_eginv = s_eginv / N;
  for (int t = 1; t <= 3; ++t) {
    double s = 0.0;
    int col = lay.p(t);
    for (int x = 1; x <= N; ++x) s -= W(lay.u(x), col);
    for (int y = N + 1; y <= 2 * N; ++y) s += W(lay.u(y), col);
    fit.blocks.p_pattern[t - 1] = s / (2 * N);
  }
  fit.coeffs.beta1 = fit.blocks.ex_to_ugx;
  fit.coeffs.alpha1 = -fit.blocks.ex_diagonal;
  fit.coeffs.beta2 = -fit.blocks.ey_to_uy;
  fit.coeffs.alpha2 = fit.blocks.ey_to_eginv;
  fit.coeffs.gamma1 = fit.blocks.p_pattern[0];
  fit.coeffs.gamma2 = -fit.blocks.p_pattern[1];
  fit.coeffs.gamma3 = fit.blocks.p_pattern[2];
  fit.positive = fit.coeffs.all_positive();

  ValueMatrix model = build_structured_W(cfg, fit.coeffs, world);
  double r2 = 0.0;
  for (std::size_t i = 0; i < W.data.size(); ++i) {
    double diff = W.data[i] - model.data[i];
    r2 += diff * diff;
  }
  fit.residual = std::sqrt(r2);

  // Support mask mirrors build_structured_W.
  la::Mat support(lay.dim(), lay.dim());
  for (int x = 1; x <= N; ++x) {
    support(lay.e(x), lay.e(x)) = 1.0;
    support(lay.u(world.g_of(x)), lay.e(x)) = 1.0;
  }
  for (int y = N + 1; y <= 2 * N; ++y) {
    support(lay.e(world.g_inverse(y)), lay.e(y)) = 1.0;
    support(lay.u(y), lay.e(y)) = 1.0;
  }
  for (int t = 1; t <= 3; ++t)
    for (int z = 1; z <= 2 * N; ++z) support(lay.u(z), lay.p(t)) = 1.0;
  for (std::size_t i = 0; i < W.data.size(); ++i)
    if (support.data[i] == 0.0) fit.off_structure_max = std::max(fit.off_structure_max, std::abs(W.data[i]));
  return fit;
}

}  // namespace truthlab::toy

#pragma once

// Trainable attention-only transformer: dense embeddings, single-head causal
// attention per layer, RMS normalization after each residual add, no
// feedforward blocks, linear output head. Forward keeps a full activation
// cache; backward is hand-written reverse mode over that cache.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "truthlab/linalg.hpp"
#include "truthlab/rng.hpp"
#include "truthlab/world.hpp"

namespace truthlab::dense {

struct DenseConfig {
  int n_layers = 1;
  int d_model = 64;
  int n_subjects = 128;
  int n_attributes = 128;
  int seq_len = 4;  // fixed by the data format
  double norm_epsilon = 1e-6;
  bool embeddings_trainable = true;

  int vocab() const { return n_subjects + n_attributes; }

  void validate() const {
    if (seq_len != 4) throw std::invalid_argument("DenseConfig: seq_len must be 4");
    if (n_layers < 1) throw std::invalid_argument("DenseConfig: n_layers must be >= 1");
    if (d_model < 1) throw std::invalid_argument("DenseConfig: d_model must be >= 1");
    if (n_subjects < 2 || n_attributes < 2)
      throw std::invalid_argument("DenseConfig: need at least two subjects and attributes");
    if (norm_epsilon <= 0.0) throw std::invalid_argument("DenseConfig: norm_epsilon must be > 0");
  }
};

struct TensorRef {
  std::string name;
  double* data;
  std::size_t size;
};

// One flat set of model-shaped tensors; used for parameters, gradients, and
// Adam moments alike so they can be zipped by index.
struct DenseTensors {
  la::Mat embed;               // V x d
  la::Mat pos;                 // 4 x d
  struct Layer {
    la::Mat wq, wk, wv, wo;    // d x d each
  };
  std::vector<Layer> layers;
  la::Mat w_out;               // d x V
  std::vector<double> b_out;   // V

  static DenseTensors shaped(const DenseConfig& cfg) {
    DenseTensors t;
    t.embed = la::Mat(cfg.vocab(), cfg.d_model);
    t.pos = la::Mat(cfg.seq_len, cfg.d_model);
    t.layers.resize(cfg.n_layers);
    for (auto& l : t.layers) {
      l.wq = la::Mat(cfg.d_model, cfg.d_model);
      l.wk = la::Mat(cfg.d_model, cfg.d_model);
      l.wv = la::Mat(cfg.d_model, cfg.d_model);
      l.wo = la::Mat(cfg.d_model, cfg.d_model);
    }
    t.w_out = la::Mat(cfg.d_model, cfg.vocab());
    t.b_out.assign(cfg.vocab(), 0.0);
    return t;
  }

  void zero() {
    embed.fill(0.0);
    pos.fill(0.0);
    for (auto& l : layers) {
      l.wq.fill(0.0);
      l.wk.fill(0.0);
      l.wv.fill(0.0);
      l.wo.fill(0.0);
    }
    w_out.fill(0.0);
    std::fill(b_out.begin(), b_out.end(), 0.0);
  }

  std::vector<TensorRef> tensors() {
    std::vector<TensorRef> refs;
    refs.push_back({"embed", embed.data.data(), embed.data.size()});
    refs.push_back({"pos", pos.data.data(), pos.data.size()});
    for (std::size_t i = 0; i < layers.size(); ++i) {
      std::string prefix = "layer" + std::to_string(i) + ".";
      refs.push_back({prefix + "wq", layers[i].wq.data.data(), layers[i].wq.data.size()});
      refs.push_back({prefix + "wk", layers[i].wk.data.data(), layers[i].wk.data.size()});
      refs.push_back({prefix + "wv", layers[i].wv.data.data(), layers[i].wv.data.size()});
      refs.push_back({prefix + "wo", layers[i].wo.data.data(), layers[i].wo.data.size()});
    }
    refs.push_back({"w_out", w_out.data.data(), w_out.data.size()});
    refs.push_back({"b_out", b_out.data(), b_out.size()});
    return refs;
  }
};

struct DenseParams {
  DenseConfig cfg;
  DenseTensors t;

  static DenseParams init(const DenseConfig& cfg, std::uint64_t seed, double init_std = 0.02) {
    cfg.validate();
    DenseParams p{cfg, DenseTensors::shaped(cfg)};
    rng::Counter gen(seed, "dense_init");
    for (TensorRef& ref : p.t.tensors()) {
      if (ref.name == "b_out") continue;  // zero bias
      for (std::size_t i = 0; i < ref.size; ++i) ref.data[i] = init_std * gen.next_gaussian();
    }
    return p;
  }
};

// Activation cache for one forward pass over a batch of B sequences. Rows of
// every (B*4) x d matrix are sequence-major: row = 4*s + position.
struct DenseCache {
  int batch = 0;
  la::Mat x0;
  struct LayerCache {
    la::Mat q, k, v;      // (B*4) x d
    la::Mat attn;         // (B*4) x 4 causal softmax rows
    la::Mat a_pre;        // attention-weighted values
    la::Mat a_out;        // after W_O
    la::Mat r;            // pre-norm residual
    la::Mat x_out;        // post-norm residual
  };
  std::vector<LayerCache> layers;
  la::Mat logits;             // (B*4) x V
  la::Mat probs;              // softmax rows at positions 0..2; row 3 zero
  std::vector<double> log_z;  // per-row log partition (positions 0..2)

  void resize(const DenseConfig& cfg, int b) {
    batch = b;
    int rows = b * cfg.seq_len;
    x0 = la::Mat(rows, cfg.d_model);
    layers.assign(static_cast<std::size_t>(cfg.n_layers), LayerCache{});
    for (auto& l : layers) {
      l.q = la::Mat(rows, cfg.d_model);
      l.k = la::Mat(rows, cfg.d_model);
      l.v = la::Mat(rows, cfg.d_model);
      l.attn = la::Mat(rows, cfg.seq_len);
      l.a_pre = la::Mat(rows, cfg.d_model);
      l.a_out = la::Mat(rows, cfg.d_model);
      l.r = la::Mat(rows, cfg.d_model);
      l.x_out = la::Mat(rows, cfg.d_model);
    }
    logits = la::Mat(rows, cfg.vocab());
    probs = la::Mat(rows, cfg.vocab());
    log_z.assign(static_cast<std::size_t>(rows), 0.0);
  }

  const la::Mat& layer_input(int layer) const { return layer == 0 ? x0 : layers[layer - 1].x_out; }
  const la::Mat& top() const { return layers.back().x_out; }
};

namespace detail {

inline void rmsnorm_rows(const la::Mat& r, la::Mat& out, double eps) {
  int d = r.cols;
  double sd = std::sqrt(static_cast<double>(d));
  for (int i = 0; i < r.rows; ++i) {
    const double* src = r.row(i);
    double s = std::sqrt(la::norm2(src, d) + d * eps);
    double* dst = out.row(i);
    for (int j = 0; j < d; ++j) dst[j] = sd * src[j] / s;
  }
}

// dr = (sqrt(d)/s) * (dx - (r . dx)/s^2 * r), s = sqrt(||r||^2 + d*eps)
inline void rmsnorm_backward_rows(const la::Mat& r, const la::Mat& dx, la::Mat& dr, double eps) {
  int d = r.cols;
  double sd = std::sqrt(static_cast<double>(d));
  for (int i = 0; i < r.rows; ++i) {
    const double* rv = r.row(i);
    const double* dxv = dx.row(i);
    double s2 = la::norm2(rv, d) + d * eps;
    double s = std::sqrt(s2);
    double rd = la::dot(rv, dxv, d);
    double* drv = dr.row(i);
    for (int j = 0; j < d; ++j) drv[j] = (sd / s) * (dxv[j] - rd / s2 * rv[j]);
  }
}

}  // namespace detail

// tokens: B*4 ids, 1-based, sequence-major.
inline void dense_forward(const DenseParams& p, const std::vector<int>& tokens, DenseCache& cache) {
  const DenseConfig& cfg = p.cfg;
  int seq = cfg.seq_len;
  if (tokens.empty() || tokens.size() % static_cast<std::size_t>(seq) != 0)
    throw std::invalid_argument("dense_forward: token count must be a positive multiple of 4");
  int b = static_cast<int>(tokens.size()) / seq;
  if (cache.batch != b || cache.x0.cols != cfg.d_model ||
      static_cast<int>(cache.layers.size()) != cfg.n_layers)
    cache.resize(cfg, b);
  int d = cfg.d_model;
  int v = cfg.vocab();
  double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(d));

  for (int row = 0; row < b * seq; ++row) {
    int tok = tokens[static_cast<std::size_t>(row)];
    if (tok < 1 || tok > v) throw std::invalid_argument("dense_forward: token id out of range");
    const double* e = p.t.embed.row(tok - 1);
    const double* ps = p.t.pos.row(row % seq);
    double* dst = cache.x0.row(row);
    for (int j = 0; j < d; ++j) dst[j] = e[j] + ps[j];
  }

  for (int li = 0; li < cfg.n_layers; ++li) {
    const la::Mat& x_in = cache.layer_input(li);
    DenseCache::LayerCache& lc = cache.layers[static_cast<std::size_t>(li)];
    const DenseTensors::Layer& lw = p.t.layers[static_cast<std::size_t>(li)];
    la::matmul(x_in, lw.wq, lc.q);
    la::matmul(x_in, lw.wk, lc.k);
    la::matmul(x_in, lw.wv, lc.v);
    lc.attn.fill(0.0);
    for (int s = 0; s < b; ++s) {
      int base = s * seq;
      for (int i = 0; i < seq; ++i) {
        double scores[4];
        double m = -1e300;
        for (int j = 0; j <= i; ++j) {
          scores[j] = la::dot(lc.q.row(base + i), lc.k.row(base + j), d) * inv_sqrt_d;
          m = std::max(m, scores[j]);
        }
        double z = 0.0;
        for (int j = 0; j <= i; ++j) {
          scores[j] = std::exp(scores[j] - m);
          z += scores[j];
        }
        double* arow = lc.attn.row(base + i);
        double* orow = lc.a_pre.row(base + i);
        std::fill(orow, orow + d, 0.0);
        for (int j = 0; j <= i; ++j) {
          double w = scores[j] / z;
          arow[j] = w;
          const double* vrow = lc.v.row(base + j);
          for (int c = 0; c < d; ++c) orow[c] += w * vrow[c];
        }
      }
    }
    la::matmul(lc.a_pre, lw.wo, lc.a_out);
    for (int row = 0; row < b * seq; ++row) {
      const double* xi = x_in.row(row);
      const double* ao = lc.a_out.row(row);
      double* rr = lc.r.row(row);
      for (int j = 0; j < d; ++j) rr[j] = xi[j] + ao[j];
    }
    detail::rmsnorm_rows(lc.r, lc.x_out, cfg.norm_epsilon);
  }

  la::matmul(cache.top(), p.t.w_out, cache.logits);
  for (int row = 0; row < b * seq; ++row) {
    double* lrow = cache.logits.row(row);
    for (int j = 0; j < v; ++j) lrow[j] += p.t.b_out[static_cast<std::size_t>(j)];
  }
  cache.probs.fill(0.0);
  for (int row = 0; row < b * seq; ++row) {
    if (row % seq == seq - 1) {
      cache.log_z[static_cast<std::size_t>(row)] = 0.0;
      continue;  // no target after the last position
    }
    const double* lrow = cache.logits.row(row);
    double m = lrow[0];
    for (int j = 1; j < v; ++j) m = std::max(m, lrow[j]);
    double z = 0.0;
    double* prow = cache.probs.row(row);
    for (int j = 0; j < v; ++j) {
      prow[j] = std::exp(lrow[j] - m);
      z += prow[j];
    }
    for (int j = 0; j < v; ++j) prow[j] /= z;
    cache.log_z[static_cast<std::size_t>(row)] = m + std::log(z);
  }
}

// Mean next-token cross-entropy over positions 1..3 (predicted from 0..2).
inline double dense_loss(const DenseCache& cache, const std::vector<int>& tokens, int seq_len = 4) {
  int b = cache.batch;
  double loss = 0.0;
  for (int s = 0; s < b; ++s) {
    for (int i = 0; i + 1 < seq_len; ++i) {
      int row = s * seq_len + i;
      int target = tokens[static_cast<std::size_t>(row + 1)] - 1;
      loss += cache.log_z[static_cast<std::size_t>(row)] - cache.logits(row, target);
    }
  }
  return loss / (3.0 * b);
}

struct DenseWorkspace {
  la::Mat dlogits, dx, dr, dq, dk, dv, da_pre;
  void resize(const DenseConfig& cfg, int b) {
    int rows = b * cfg.seq_len;
    dlogits = la::Mat(rows, cfg.vocab());
    dx = la::Mat(rows, cfg.d_model);
    dr = la::Mat(rows, cfg.d_model);
    dq = la::Mat(rows, cfg.d_model);
    dk = la::Mat(rows, cfg.d_model);
    dv = la::Mat(rows, cfg.d_model);
    da_pre = la::Mat(rows, cfg.d_model);
  }
};

// Reverse mode over the cached graph. Writes model-shaped gradients; throws
// on non-finite values naming the offending tensor.
inline double dense_loss_and_grads(const DenseParams& p, const std::vector<int>& tokens,
                                   DenseCache& cache, DenseTensors& grads, DenseWorkspace& ws) {
  const DenseConfig& cfg = p.cfg;
  dense_forward(p, tokens, cache);
  double loss = dense_loss(cache, tokens, cfg.seq_len);
  int b = cache.batch;
  int seq = cfg.seq_len;
  int d = cfg.d_model;
  int v = cfg.vocab();
  if (ws.dx.rows != b * seq || ws.dx.cols != d || ws.dlogits.cols != v) ws.resize(cfg, b);
  grads.zero();
  double inv_count = 1.0 / (3.0 * b);
  double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(d));

  ws.dlogits.fill(0.0);
  for (int s = 0; s < b; ++s) {
    for (int i = 0; i + 1 < seq; ++i) {
      int row = s * seq + i;
      int target = tokens[static_cast<std::size_t>(row + 1)] - 1;
      const double* prow = cache.probs.row(row);
      double* dl = ws.dlogits.row(row);
      for (int j = 0; j < v; ++j) dl[j] = prow[j] * inv_count;
      dl[target] -= inv_count;
    }
  }

  la::matmul_tn(cache.top(), ws.dlogits, grads.w_out);
  for (int row = 0; row < b * seq; ++row) {
    const double* dl = ws.dlogits.row(row);
    for (int j = 0; j < v; ++j) grads.b_out[static_cast<std::size_t>(j)] += dl[j];
  }
  la::matmul_nt(ws.dlogits, p.t.w_out, ws.dx);

  for (int li = cfg.n_layers - 1; li >= 0; --li) {
    DenseCache::LayerCache& lc = cache.layers[static_cast<std::size_t>(li)];
    const DenseTensors::Layer& lw = p.t.layers[static_cast<std::size_t>(li)];
    DenseTensors::Layer& lg = grads.layers[static_cast<std::size_t>(li)];
    const la::Mat& x_in = cache.layer_input(li);

    detail::rmsnorm_backward_rows(lc.r, ws.dx, ws.dr, cfg.norm_epsilon);
    // dr feeds both the skip connection and the attention branch
    la::matmul_tn(lc.a_pre, ws.dr, lg.wo);
    la::matmul_nt(ws.dr, lw.wo, ws.da_pre);

    ws.dq.fill(0.0);
    ws.dk.fill(0.0);
    ws.dv.fill(0.0);
    for (int s = 0; s < b; ++s) {
      int base = s * seq;
      for (int i = 0; i < seq; ++i) {
        const double* dap = ws.da_pre.row(base + i);
        const double* arow = lc.attn.row(base + i);
        double dp[4];
        double dot_sum = 0.0;
        for (int j = 0; j <= i; ++j) {
          dp[j] = la::dot(dap, lc.v.row(base + j), d);
          dot_sum += dp[j] * arow[j];
        }
        for (int j = 0; j <= i; ++j) {
          double w = arow[j];
          double* dvj = ws.dv.row(base + j);
          for (int c = 0; c < d; ++c) dvj[c] += w * dap[c];
          double dscore = w * (dp[j] - dot_sum) * inv_sqrt_d;
          double* dqi = ws.dq.row(base + i);
          const double* krow = lc.k.row(base + j);
          for (int c = 0; c < d; ++c) dqi[c] += dscore * krow[c];
          double* dkj = ws.dk.row(base + j);
          const double* qrow = lc.q.row(base + i);
          for (int c = 0; c < d; ++c) dkj[c] += dscore * qrow[c];
        }
      }
    }

    la::matmul_tn(x_in, ws.dq, lg.wq);
    la::matmul_tn(x_in, ws.dk, lg.wk);
    la::matmul_tn(x_in, ws.dv, lg.wv);
    // dx for the layer below: skip path plus the three projections
    la::matmul_nt(ws.dq, lw.wq, ws.dx);
    la::matmul_nt(ws.dk, lw.wk, ws.dx, true);
    la::matmul_nt(ws.dv, lw.wv, ws.dx, true);
    for (std::size_t i = 0; i < ws.dx.data.size(); ++i) ws.dx.data[i] += ws.dr.data[i];
  }

  for (int row = 0; row < b * seq; ++row) {
    const double* dx0 = ws.dx.row(row);
    double* dpos = grads.pos.row(row % seq);
    for (int j = 0; j < d; ++j) dpos[j] += dx0[j];
    if (cfg.embeddings_trainable) {
      double* de = grads.embed.row(tokens[static_cast<std::size_t>(row)] - 1);
      for (int j = 0; j < d; ++j) de[j] += dx0[j];
    }
  }

  for (TensorRef& ref : grads.tensors())
    for (std::size_t i = 0; i < ref.size; ++i)
      if (!std::isfinite(ref.data[i]))
        throw std::runtime_error("dense_loss_and_grads: non-finite gradient in " + ref.name);
  return loss;
}

struct AdamConfig {
  double lr = 1e-4;
  double weight_decay = 1e-5;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamState {
  DenseTensors m, v;
  long long t = 0;
  static AdamState shaped(const DenseConfig& cfg) {
    return AdamState{DenseTensors::shaped(cfg), DenseTensors::shaped(cfg), 0};
  }
};

// Adam with decoupled weight decay: decay is applied directly to the
// parameter, never entering the moment estimates.
inline void adamw_step(DenseParams& p, DenseTensors& grads, AdamState& st, const AdamConfig& opt) {
  ++st.t;
  double bc1 = 1.0 - std::pow(opt.beta1, static_cast<double>(st.t));
  double bc2 = 1.0 - std::pow(opt.beta2, static_cast<double>(st.t));
  std::vector<TensorRef> pr = p.t.tensors();
  std::vector<TensorRef> gr = grads.tensors();
  std::vector<TensorRef> mr = st.m.tensors();
  std::vector<TensorRef> vr = st.v.tensors();
  for (std::size_t k = 0; k < pr.size(); ++k) {
    if (!p.cfg.embeddings_trainable && pr[k].name == "embed") continue;
    double* w = pr[k].data;
    const double* g = gr[k].data;
    double* m = mr[k].data;
    double* vv = vr[k].data;
    for (std::size_t i = 0; i < pr[k].size; ++i) {
      m[i] = opt.beta1 * m[i] + (1.0 - opt.beta1) * g[i];
      vv[i] = opt.beta2 * vv[i] + (1.0 - opt.beta2) * g[i] * g[i];
      double mhat = m[i] / bc1;
      double vhat = vv[i] / bc2;
      w[i] -= opt.lr * opt.weight_decay * w[i];
      w[i] -= opt.lr * mhat / (std::sqrt(vhat) + opt.eps);
    }
  }
}

enum class Site { y, x_prime };
enum class Stage { pre_norm, post_norm };

inline int site_position(Site s) { return s == Site::y ? 1 : 2; }

// Residual-stream rows at one (layer, token position, stage) from a cached
// forward pass: one row per sequence.
inline la::Mat slice_activations(const DenseCache& cache, int layer, Site site, Stage stage,
                                 int seq_len = 4) {
  if (layer < 0 || layer >= static_cast<int>(cache.layers.size()))
    throw std::invalid_argument("slice_activations: layer out of range");
  const la::Mat& src = stage == Stage::pre_norm ? cache.layers[static_cast<std::size_t>(layer)].r
                                                : cache.layers[static_cast<std::size_t>(layer)].x_out;
  int pos = site_position(site);
  la::Mat out(cache.batch, src.cols);
  for (int s = 0; s < cache.batch; ++s) {
    const double* r = src.row(s * seq_len + pos);
    std::copy(r, r + src.cols, out.row(s));
  }
  return out;
}

inline la::Mat collect_activations(const DenseParams& p, const std::vector<int>& tokens, int layer,
                                   Site site, Stage stage) {
  DenseCache cache;
  dense_forward(p, tokens, cache);
  return slice_activations(cache, layer, site, stage, p.cfg.seq_len);
}

inline std::vector<int> batch_to_tokens(const data::Batch& batch) {
  std::vector<int> toks;
  toks.reserve(batch.examples.size() * 4);
  for (const data::Example& e : batch.examples) {
    toks.push_back(e.x);
    toks.push_back(e.y);
    toks.push_back(e.x_prime);
    toks.push_back(e.y_prime);
  }
  return toks;
}

struct PhaseMetrics {
  double memorization = 0.0;     // argmax correct at both attribute positions, true set
  double p_true_on_false = 0.0;  // mean P[g(x')] at the y' prediction, false set
  double entropy_false = 0.0;    // mean predictive entropy there
};

// eval_true / eval_false: token arrays of forced-truth batches. The world's
// g map supplies the true attribute g(x') on false sequences, where the
// sampled y' token is deliberately unrelated to it.
inline PhaseMetrics phase_metrics(const DenseParams& p, const data::WorldSpec& world,
                                  const std::vector<int>& eval_true,
                                  const std::vector<int>& eval_false, DenseCache& cache) {
  if (eval_true.empty() || eval_false.empty())
    throw std::invalid_argument("phase_metrics: empty evaluation set");
  PhaseMetrics out;
  int seq = p.cfg.seq_len;
  int v = p.cfg.vocab();

  dense_forward(p, eval_true, cache);
  int n_true = cache.batch;
  int hits = 0;
  for (int s = 0; s < n_true; ++s) {
    bool ok = true;
    for (int pos : {0, 2}) {
      int row = s * seq + pos;
      const double* lrow = cache.logits.row(row);
      int best = 0;
      for (int j = 1; j < v; ++j)
        if (lrow[j] > lrow[best]) best = j;
      if (best != eval_true[static_cast<std::size_t>(row + 1)] - 1) {
        ok = false;
        break;
      }
    }
    if (ok) ++hits;
  }
  out.memorization = static_cast<double>(hits) / n_true;

  dense_forward(p, eval_false, cache);
  int n_false = cache.batch;
  double p_sum = 0.0, h_sum = 0.0;
  for (int s = 0; s < n_false; ++s) {
    int row = s * seq + 2;
    const double* prow = cache.probs.row(row);
    int x_prime = eval_false[static_cast<std::size_t>(row)];
    p_sum += prow[world.g_of(x_prime) - 1];
    double h = 0.0;
    for (int j = 0; j < v; ++j)
      if (prow[j] > 0.0) h -= prow[j] * std::log(prow[j]);
    h_sum += h;
  }
  out.p_true_on_false = p_sum / n_false;
  out.entropy_false = h_sum / n_false;
  return out;
}

// V x V value-output kernel E W_V W_O E^T for each layer.
inline std::vector<la::Mat> vo_kernel(const DenseParams& p) {
  std::vector<la::Mat> out;
  int v = p.cfg.vocab();
  int d = p.cfg.d_model;
  la::Mat ev(v, d), evo(v, d);
  for (const auto& lw : p.t.layers) {
    la::matmul(p.t.embed, lw.wv, ev);
    la::matmul(ev, lw.wo, evo);
    la::Mat k(v, v);
    la::matmul_nt(evo, p.t.embed, k);
    out.push_back(std::move(k));
  }
  return out;
}

struct KernelView {
  la::Mat block;              // 2k x 2k, rows/cols = [subjects; their attributes]
  std::vector<int> subjects;  // chosen subject ids, ordered by g
};

// Sub-sampled kernel view for diagonal-structure inspection: k subjects
// ordered by their attribute id, alongside those attributes.
inline KernelView vo_kernel_subsample(const la::Mat& kernel, const data::WorldSpec& world, int k) {
  if (k < 1 || k > world.n_subjects) throw std::invalid_argument("vo_kernel_subsample: k out of range");
  std::vector<int> subjects(static_cast<std::size_t>(world.n_subjects));
  for (int i = 0; i < world.n_subjects; ++i) subjects[static_cast<std::size_t>(i)] = i + 1;
  std::sort(subjects.begin(), subjects.end(),
            [&](int a, int b) { return world.g_of(a) < world.g_of(b); });
  subjects.resize(static_cast<std::size_t>(k));
  KernelView view{la::Mat(2 * k, 2 * k), subjects};
  std::vector<int> ids;
  ids.reserve(static_cast<std::size_t>(2 * k));
  for (int s : subjects) ids.push_back(s);
  for (int s : subjects) ids.push_back(world.g_of(s));
  for (int i = 0; i < 2 * k; ++i)
    for (int j = 0; j < 2 * k; ++j)
      view.block(i, j) = kernel(ids[static_cast<std::size_t>(i)] - 1, ids[static_cast<std::size_t>(j)] - 1);
  return view;
}

struct DiagonalStats {
  double mean_diag = 0.0;
  double mean_off = 0.0;
  double std_off = 0.0;
  double zscore = 0.0;  // (mean_diag - mean_off) / std_off
};

inline DiagonalStats diagonal_stats(const la::Mat& square) {
  int n = square.rows;
  DiagonalStats st;
  double off_sum = 0.0, off_sq = 0.0;
  int off_n = 0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      if (i == j) {
        st.mean_diag += square(i, j);
      } else {
        off_sum += square(i, j);
        off_sq += square(i, j) * square(i, j);
        ++off_n;
      }
    }
  st.mean_diag /= n;
  st.mean_off = off_sum / off_n;
  st.std_off = std::sqrt(std::max(0.0, off_sq / off_n - st.mean_off * st.mean_off));
  st.zscore = st.std_off > 0.0 ? (st.mean_diag - st.mean_off) / st.std_off : 0.0;
  return st;
}

}  // namespace truthlab::dense

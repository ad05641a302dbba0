#pragma once

// Diagnostics that read internal representations: L2-regularized logistic
// probes (deterministic full-batch gradient descent), rank-based AUC, top-k
// PCA by power iteration, and onset detection on metric traces.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "truthlab/linalg.hpp"
#include "truthlab/rng.hpp"

namespace truthlab::probes {

struct ProbeOptions {
  double l2 = 1e-3;
  int max_iters = 5000;
  double tol = 1e-7;            // on the gradient norm
  double test_fraction = 0.2;
  std::uint64_t seed = 1;
  bool standardize = true;
};

struct ProbeFit {
  std::vector<double> weights;  // raw feature space
  double intercept = 0.0;
  double train_accuracy = 0.0;
  double test_accuracy = 0.0;
  double train_auc = 0.0;
  double test_auc = 0.0;
  int iters = 0;
  bool converged = false;
  int n_train = 0;
  int n_test = 0;
};

// Mann-Whitney AUC with midranks for ties.
inline double auc_score(const std::vector<double>& scores, const std::vector<int>& labels) {
  std::size_t n = scores.size();
  if (labels.size() != n) throw std::invalid_argument("auc_score: size mismatch");
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  std::vector<double> rank(n);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && scores[order[j + 1]] == scores[order[i]]) ++j;
    double mid = 0.5 * (static_cast<double>(i) + static_cast<double>(j)) + 1.0;
    for (std::size_t k = i; k <= j; ++k) rank[order[k]] = mid;
    i = j + 1;
  }
  double rank_sum_pos = 0.0;
  std::size_t n_pos = 0;
  for (std::size_t k = 0; k < n; ++k)
    if (labels[k] == 1) {
      rank_sum_pos += rank[k];
      ++n_pos;
    }
  std::size_t n_neg = n - n_pos;
  if (n_pos == 0 || n_neg == 0) throw std::invalid_argument("auc_score: needs both classes");
  double u = rank_sum_pos - static_cast<double>(n_pos) * (static_cast<double>(n_pos) + 1.0) / 2.0;
  return u / (static_cast<double>(n_pos) * static_cast<double>(n_neg));
}

namespace detail {

// Largest eigenvalue of the Gram matrix X^T X by power iteration.
inline double gram_lambda_max(const la::Mat& x) {
  int d = x.cols;
  la::Mat g(d, d);
  la::matmul_tn(x, x, g);
  std::vector<double> v(d, 1.0 / std::sqrt(static_cast<double>(d)));
  std::vector<double> gv(d);
  double lambda = 0.0;
  for (int it = 0; it < 200; ++it) {
    for (int r = 0; r < d; ++r) gv[r] = la::dot(g.row(r), v.data(), d);
    double nrm = std::sqrt(la::norm2(gv.data(), d));
    if (nrm == 0.0) return 0.0;
    for (int r = 0; r < d; ++r) v[r] = gv[r] / nrm;
    double next = nrm;  // Rayleigh quotient of the normalized iterate
    if (it > 10 && std::abs(next - lambda) <= 1e-9 * std::max(1.0, std::abs(next))) {
      lambda = next;
      break;
    }
    lambda = next;
  }
  return lambda;
}

}  // namespace detail

// Binary logistic regression, full-batch gradient descent with a Lipschitz
// step size; the intercept is not regularized. Features are standardized
// with training-set statistics and the returned weights are mapped back to
// the raw feature space.
inline ProbeFit fit_logistic_probe(const la::Mat& x, const std::vector<int>& labels,
                                   const ProbeOptions& opt = {}) {
  int n = x.rows, d = x.cols;
  if (static_cast<int>(labels.size()) != n) throw std::invalid_argument("fit_logistic_probe: size mismatch");
  if (n < 5) throw std::invalid_argument("fit_logistic_probe: too few samples");

  std::vector<int> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  rng::Counter split_rng(opt.seed, "probe_split");
  for (int i = n - 1; i > 0; --i) {
    int j = static_cast<int>(split_rng.next_below(static_cast<std::uint64_t>(i) + 1));
    std::swap(idx[i], idx[j]);
  }
  int n_test = static_cast<int>(std::lround(opt.test_fraction * n));
  n_test = std::clamp(n_test, 1, n - 2);
  int n_train = n - n_test;

  la::Mat xtr(n_train, d), xte(n_test, d);
  std::vector<int> ytr(n_train), yte(n_test);
  for (int i = 0; i < n_train; ++i) {
    const double* src = x.row(idx[i]);
    std::copy(src, src + d, xtr.row(i));
    ytr[i] = labels[idx[i]];
  }
  for (int i = 0; i < n_test; ++i) {
    const double* src = x.row(idx[n_train + i]);
    std::copy(src, src + d, xte.row(i));
    yte[i] = labels[idx[n_train + i]];
  }

  std::vector<double> mean(d, 0.0), scale(d, 1.0);
  if (opt.standardize) {
    for (int i = 0; i < n_train; ++i)
      for (int j = 0; j < d; ++j) mean[j] += xtr(i, j);
    for (int j = 0; j < d; ++j) mean[j] /= n_train;
    std::vector<double> var(d, 0.0);
    for (int i = 0; i < n_train; ++i)
      for (int j = 0; j < d; ++j) var[j] += std::pow(xtr(i, j) - mean[j], 2);
    for (int j = 0; j < d; ++j) {
      double s = std::sqrt(var[j] / n_train);
      scale[j] = s > 1e-12 ? s : 1.0;  // constant feature stays centered at 0
    }
    for (int i = 0; i < n_train; ++i)
      for (int j = 0; j < d; ++j) xtr(i, j) = (xtr(i, j) - mean[j]) / scale[j];
    for (int i = 0; i < n_test; ++i)
      for (int j = 0; j < d; ++j) xte(i, j) = (xte(i, j) - mean[j]) / scale[j];
  }

  double lmax = detail::gram_lambda_max(xtr);
  double lips = lmax / (4.0 * n_train) + opt.l2;
  double lr = lips > 0.0 ? 1.0 / lips : 1.0;

  std::vector<double> w(d, 0.0), grad(d, 0.0), z(n_train, 0.0);
  double b = 0.0;
  ProbeFit fit;
  for (int it = 0; it < opt.max_iters; ++it) {
    for (int i = 0; i < n_train; ++i) z[i] = la::dot(xtr.row(i), w.data(), d) + b;
    std::fill(grad.begin(), grad.end(), 0.0);
    double gb = 0.0;
    for (int i = 0; i < n_train; ++i) {
      double p = 1.0 / (1.0 + std::exp(-z[i]));
      double r = (p - (ytr[i] == 1 ? 1.0 : 0.0)) / n_train;
      const double* xi = xtr.row(i);
      for (int j = 0; j < d; ++j) grad[j] += r * xi[j];
      gb += r;
    }
    for (int j = 0; j < d; ++j) grad[j] += opt.l2 * w[j];
    double gnorm = std::sqrt(la::norm2(grad.data(), d) + gb * gb);
    fit.iters = it + 1;
    if (gnorm <= opt.tol) {
      fit.converged = true;
      break;
    }
    for (int j = 0; j < d; ++j) w[j] -= lr * grad[j];
    b -= lr * gb;
  }

  auto eval = [&](la::Mat& xs, const std::vector<int>& ys, double& acc, double& auc) {
    int m = xs.rows;
    std::vector<double> s(m);
    int correct = 0;
    for (int i = 0; i < m; ++i) {
      s[i] = la::dot(xs.row(i), w.data(), d) + b;
      if ((s[i] > 0.0 ? 1 : 0) == ys[i]) ++correct;
    }
    acc = static_cast<double>(correct) / m;
    bool both = std::count(ys.begin(), ys.end(), 1) > 0 &&
                std::count(ys.begin(), ys.end(), 0) > 0;
    auc = both ? auc_score(s, ys) : 0.5;
  };
  eval(xtr, ytr, fit.train_accuracy, fit.train_auc);
  eval(xte, yte, fit.test_accuracy, fit.test_auc);

  fit.weights.assign(d, 0.0);
  fit.intercept = b;
  for (int j = 0; j < d; ++j) {
    fit.weights[j] = w[j] / scale[j];
    fit.intercept -= w[j] * mean[j] / scale[j];
  }
  fit.n_train = n_train;
  fit.n_test = n_test;
  return fit;
}

struct PcaResult {
  la::Mat components;                    // k x d, unit rows
  std::vector<double> eigenvalues;      // descending
  std::vector<double> explained_ratio;  // eigenvalue / total variance
};

// Top-k principal components of the rows of x via power iteration with
// deflation on the covariance matrix.
inline PcaResult pca_topk(const la::Mat& x, int k, int max_iters = 1000, double tol = 1e-10) {
  int n = x.rows, d = x.cols;
  if (k < 1 || k > d) throw std::invalid_argument("pca_topk: k out of range");
  if (n < 2) throw std::invalid_argument("pca_topk: needs at least two rows");
  std::vector<double> mean(d, 0.0);
  for (int i = 0; i < n; ++i) {
    const double* xi = x.row(i);
    for (int j = 0; j < d; ++j) mean[j] += xi[j];
  }
  for (int j = 0; j < d; ++j) mean[j] /= n;
  la::Mat centered(n, d);
  for (int i = 0; i < n; ++i) {
    const double* xi = x.row(i);
    for (int j = 0; j < d; ++j) centered(i, j) = xi[j] - mean[j];
  }
  la::Mat cov(d, d);
  la::matmul_tn(centered, centered, cov);
  double denom = static_cast<double>(n - 1);
  for (double& v : cov.data) v /= denom;
  double total = 0.0;
  for (int j = 0; j < d; ++j) total += cov(j, j);

  PcaResult res{la::Mat(k, d), std::vector<double>(k, 0.0), std::vector<double>(k, 0.0)};
  std::vector<double> v(d), cv(d);
  rng::Counter init_rng(12345, "pca_init");
  for (int comp = 0; comp < k; ++comp) {
    for (int j = 0; j < d; ++j) v[j] = init_rng.next_gaussian();
    double nrm = std::sqrt(la::norm2(v.data(), d));
    for (int j = 0; j < d; ++j) v[j] /= nrm;
    double lambda = 0.0;
    for (int it = 0; it < max_iters; ++it) {
      for (int r = 0; r < d; ++r) cv[r] = la::dot(cov.row(r), v.data(), d);
      double rayleigh = la::dot(v.data(), cv.data(), d);
      double cvn = std::sqrt(la::norm2(cv.data(), d));
      if (cvn == 0.0) {
        lambda = 0.0;
        break;
      }
      for (int j = 0; j < d; ++j) v[j] = cv[j] / cvn;
      if (it > 2 && std::abs(rayleigh - lambda) <= tol * std::max(1.0, std::abs(rayleigh))) {
        lambda = rayleigh;
        break;
      }
      lambda = rayleigh;
    }
    res.eigenvalues[comp] = lambda;
    res.explained_ratio[comp] = total > 0.0 ? lambda / total : 0.0;
    for (int j = 0; j < d; ++j) res.components(comp, j) = v[j];
    for (int r = 0; r < d; ++r)
      for (int cix = 0; cix < d; ++cix) cov(r, cix) -= lambda * v[r] * v[cix];
  }
  return res;
}

// First index i such that metric[i .. i+persistence-1] all clear the
// threshold; -1 when no such window exists.
inline long long detect_onset(const std::vector<double>& metric, double threshold, int persistence) {
  if (persistence < 1) throw std::invalid_argument("detect_onset: persistence must be >= 1");
  long long n = static_cast<long long>(metric.size());
  for (long long i = 0; i + persistence <= n; ++i) {
    bool ok = true;
    for (long long j = i; j < i + persistence; ++j)
      if (metric[static_cast<std::size_t>(j)] < threshold) {
        ok = false;
        break;
      }
    if (ok) return i;
  }
  return -1;
}

}  // namespace truthlab::probes

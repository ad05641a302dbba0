#pragma once

// Row-major dense matrices sized for this artifact's models (d <= a few
// hundred). Plain ikj loops vectorize well at these shapes; every routine is
// single-threaded and sums in a fixed order, so results are bit-stable.

#include <cassert>
#include <cmath>
#include <cstddef>
#include <vector>

namespace truthlab::la {

struct Mat {
  int rows = 0;
  int cols = 0;
  std::vector<double> data;

  Mat() = default;
  Mat(int r, int c) : rows(r), cols(c), data(static_cast<std::size_t>(r) * c, 0.0) {}

  double& operator()(int i, int j) { return data[static_cast<std::size_t>(i) * cols + j]; }
  double operator()(int i, int j) const { return data[static_cast<std::size_t>(i) * cols + j]; }
  double* row(int i) { return data.data() + static_cast<std::size_t>(i) * cols; }
  const double* row(int i) const { return data.data() + static_cast<std::size_t>(i) * cols; }
  void fill(double v) { data.assign(data.size(), v); }
};

// C = A * B, or C += A * B when accumulate is set.
inline void matmul(const Mat& a, const Mat& b, Mat& c, bool accumulate = false) {
  assert(a.cols == b.rows && c.rows == a.rows && c.cols == b.cols);
  if (!accumulate) c.fill(0.0);
  for (int i = 0; i < a.rows; ++i) {
    const double* arow = a.row(i);
    double* crow = c.row(i);
    for (int k = 0; k < a.cols; ++k) {
      double aik = arow[k];
      if (aik == 0.0) continue;
      const double* brow = b.row(k);
      for (int j = 0; j < b.cols; ++j) crow[j] += aik * brow[j];
    }
  }
}

// C = A^T * B, or C += A^T * B when accumulate is set.
inline void matmul_tn(const Mat& a, const Mat& b, Mat& c, bool accumulate = false) {
  assert(a.rows == b.rows && c.rows == a.cols && c.cols == b.cols);
  if (!accumulate) c.fill(0.0);
  for (int k = 0; k < a.rows; ++k) {
    const double* arow = a.row(k);
    const double* brow = b.row(k);
    for (int i = 0; i < a.cols; ++i) {
      double aki = arow[i];
      if (aki == 0.0) continue;
      double* crow = c.row(i);
      for (int j = 0; j < b.cols; ++j) crow[j] += aki * brow[j];
    }
  }
}

// C = A * B^T, or C += A * B^T when accumulate is set.
inline void matmul_nt(const Mat& a, const Mat& b, Mat& c, bool accumulate = false) {
  assert(a.cols == b.cols && c.rows == a.rows && c.cols == b.rows);
  if (!accumulate) c.fill(0.0);
  for (int i = 0; i < a.rows; ++i) {
    const double* arow = a.row(i);
    double* crow = c.row(i);
    for (int j = 0; j < b.rows; ++j) {
      const double* brow = b.row(j);
      double s = 0.0;
      for (int k = 0; k < a.cols; ++k) s += arow[k] * brow[k];
      crow[j] += s;
    }
  }
}

inline double dot(const double* a, const double* b, int n) {
  double s = 0.0;
  for (int i = 0; i < n; ++i) s += a[i] * b[i];
  return s;
}

inline double norm2(const double* a, int n) { return dot(a, a, n); }

inline double frobenius_norm(const Mat& m) { return std::sqrt(norm2(m.data.data(), static_cast<int>(m.data.size()))); }

inline double max_abs(const Mat& m) {
  double v = 0.0;
  for (double x : m.data) v = std::max(v, std::abs(x));
  return v;
}

}  // namespace truthlab::la

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

namespace igcl {

using Vec = std::vector<double>;

/// Dense row-major matrix of doubles. Rows are contiguous, so per-row vector
/// operations (dot products, axpy) run on contiguous memory.
struct Mat {
  int rows = 0, cols = 0;
  std::vector<double> a;

  Mat() = default;
  Mat(int r, int c, double fill = 0.0)
      : rows(r), cols(c), a(static_cast<size_t>(r) * static_cast<size_t>(c), fill) {}

  double& operator()(int r, int c) { return a[static_cast<size_t>(r) * cols + c]; }
  double operator()(int r, int c) const { return a[static_cast<size_t>(r) * cols + c]; }

  double* row(int r) { return a.data() + static_cast<size_t>(r) * cols; }
  const double* row(int r) const { return a.data() + static_cast<size_t>(r) * cols; }

  size_t size() const { return a.size(); }
  bool empty() const { return a.empty(); }
  void zero() { std::fill(a.begin(), a.end(), 0.0); }
  bool same_shape(const Mat& o) const { return rows == o.rows && cols == o.cols; }
};

/// A learnable tensor: value plus a gradient slot of identical shape.
struct Param {
  Mat v, g;
  Param() = default;
  Param(int r, int c) : v(r, c), g(r, c) {}
  void zero_grad() { g.zero(); }
};

inline double dot(const double* x, const double* y, int n) {
  double s = 0.0;
  for (int i = 0; i < n; ++i) s += x[i] * y[i];
  return s;
}

inline double norm2(const double* x, int n) { return std::sqrt(dot(x, x, n)); }

inline void axpy(double alpha, const double* x, double* y, int n) {
  for (int i = 0; i < n; ++i) y[i] += alpha * x[i];
}

}  // namespace igcl

#pragma once

#include <cstddef>

namespace esp {

/// Dense-layer inner kernels shared by the plain forward pass and the graph
/// forward/backward pass, so both evaluate bit-identically.
///
/// The dot product uses four fixed partial accumulators combined in a fixed
/// order: the summation order is pinned by this code (not by the optimizer),
/// which keeps results reproducible while letting the compiler vectorize the
/// independent lanes.
inline double dot_blocked(const double* __restrict a,
                          const double* __restrict b, int n) {
  double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
  int i = 0;
  for (; i + 4 <= n; i += 4) {
    s0 += a[i] * b[i];
    s1 += a[i + 1] * b[i + 1];
    s2 += a[i + 2] * b[i + 2];
    s3 += a[i + 3] * b[i + 3];
  }
  for (; i < n; ++i) s0 += a[i] * b[i];
  return ((s0 + s1) + (s2 + s3));
}

/// y[o] = bias[o] + W[o,:] . x  for one input row.
inline void dense_row_forward(const double* __restrict w,
                              const double* __restrict bias,
                              const double* __restrict x,
                              double* __restrict y, int out_dim, int in_dim) {
  for (int o = 0; o < out_dim; ++o)
    y[o] = dot_blocked(w + static_cast<size_t>(o) * in_dim, x, in_dim) +
           bias[o];
}

/// dst[i] += a * src[i]
inline void axpy(double* __restrict dst, const double* __restrict src,
                 double a, int n) {
  for (int i = 0; i < n; ++i) dst[i] += a * src[i];
}

}  // namespace esp

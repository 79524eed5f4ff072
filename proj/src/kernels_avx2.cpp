#include <immintrin.h>

#include <cmath>

#include "tse/kernels.hpp"

// AVX2/FMA kernels. A quad carrier is exactly one __m256d, so the quad
// kernels broadcast each weight against a whole carrier. This file is
// compiled with -mavx2 -mfma; it is only reachable through the dispatch
// table after a cpuid check.

namespace tse::kernels {
namespace {

inline double hsum(__m256d v) {
  __m128d lo = _mm256_castpd256_pd128(v);
  __m128d hi = _mm256_extractf128_pd(v, 1);
  lo = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(lo) + _mm_cvtsd_f64(_mm_unpackhi_pd(lo, lo));
}

void dense_fwd(int nin, int nout, const double* W, const double* b,
               const double* in, double* out) {
  for (int o = 0; o < nout; ++o) {
    const double* w = W + static_cast<long>(o) * nin;
    __m256d acc = _mm256_setzero_pd();
    int i = 0;
    for (; i + 4 <= nin; i += 4)
      acc = _mm256_fmadd_pd(_mm256_loadu_pd(w + i), _mm256_loadu_pd(in + i), acc);
    double tail = b ? b[o] : 0.0;
    for (; i < nin; ++i) tail += w[i] * in[i];
    out[o] = hsum(acc) + tail;
  }
}

void dense_bwd_input(int nin, int nout, const double* W, const double* dout,
                     double* din) {
  for (int i = 0; i < nin; ++i) din[i] = 0.0;
  for (int o = 0; o < nout; ++o) {
    const double* w = W + static_cast<long>(o) * nin;
    const __m256d d = _mm256_set1_pd(dout[o]);
    int i = 0;
    for (; i + 4 <= nin; i += 4) {
      __m256d acc = _mm256_loadu_pd(din + i);
      acc = _mm256_fmadd_pd(_mm256_loadu_pd(w + i), d, acc);
      _mm256_storeu_pd(din + i, acc);
    }
    for (; i < nin; ++i) din[i] += w[i] * dout[o];
  }
}

void dense_bwd_params(int nin, int nout, const double* in, const double* dout,
                      double* dW, double* db) {
  for (int o = 0; o < nout; ++o) {
    double* dw = dW + static_cast<long>(o) * nin;
    const __m256d d = _mm256_set1_pd(dout[o]);
    int i = 0;
    for (; i + 4 <= nin; i += 4) {
      __m256d acc = _mm256_loadu_pd(dw + i);
      acc = _mm256_fmadd_pd(d, _mm256_loadu_pd(in + i), acc);
      _mm256_storeu_pd(dw + i, acc);
    }
    for (; i < nin; ++i) dw[i] += dout[o] * in[i];
    db[o] += dout[o];
  }
}

void dense_quad_fwd(int nin, int nout, const double* W, const double* b,
                    const double* in4, double* out4) {
  for (int o = 0; o < nout; ++o) {
    const double* w = W + static_cast<long>(o) * nin;
    __m256d acc = _mm256_setzero_pd();
    for (int i = 0; i < nin; ++i)
      acc = _mm256_fmadd_pd(_mm256_set1_pd(w[i]), _mm256_loadu_pd(in4 + 4 * i), acc);
    if (b) acc = _mm256_add_pd(acc, _mm256_set_pd(0.0, 0.0, 0.0, b[o]));
    _mm256_storeu_pd(out4 + 4 * o, acc);
  }
}

void dense_quad_bwd_input(int nin, int nout, const double* W,
                          const double* dout4, double* din4) {
  const __m256d zero = _mm256_setzero_pd();
  for (int i = 0; i < nin; ++i) _mm256_storeu_pd(din4 + 4 * i, zero);
  for (int o = 0; o < nout; ++o) {
    const double* w = W + static_cast<long>(o) * nin;
    const __m256d d = _mm256_loadu_pd(dout4 + 4 * o);
    for (int i = 0; i < nin; ++i) {
      __m256d acc = _mm256_loadu_pd(din4 + 4 * i);
      acc = _mm256_fmadd_pd(_mm256_set1_pd(w[i]), d, acc);
      _mm256_storeu_pd(din4 + 4 * i, acc);
    }
  }
}

void dense_quad_bwd_params(int nin, int nout, const double* in4,
                           const double* dout4, double* dW, double* db) {
  for (int o = 0; o < nout; ++o) {
    double* dw = dW + static_cast<long>(o) * nin;
    const __m256d d = _mm256_loadu_pd(dout4 + 4 * o);
    for (int i = 0; i < nin; ++i)
      dw[i] += hsum(_mm256_mul_pd(d, _mm256_loadu_pd(in4 + 4 * i)));
    db[o] += dout4[4 * o];
  }
}

double dot(int n, const double* x, const double* y) {
  __m256d acc = _mm256_setzero_pd();
  int i = 0;
  for (; i + 4 <= n; i += 4)
    acc = _mm256_fmadd_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i), acc);
  double tail = 0.0;
  for (; i < n; ++i) tail += x[i] * y[i];
  return hsum(acc) + tail;
}

void axpy(int n, double a, const double* x, double* y) {
  const __m256d va = _mm256_set1_pd(a);
  int i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d acc = _mm256_loadu_pd(y + i);
    acc = _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i), acc);
    _mm256_storeu_pd(y + i, acc);
  }
  for (; i < n; ++i) y[i] += a * x[i];
}

void scal(int n, double a, double* x) {
  const __m256d va = _mm256_set1_pd(a);
  int i = 0;
  for (; i + 4 <= n; i += 4)
    _mm256_storeu_pd(x + i, _mm256_mul_pd(va, _mm256_loadu_pd(x + i)));
  for (; i < n; ++i) x[i] *= a;
}

void adam_update(int n, double* p, const double* g, double* m, double* v,
                 double lr, double beta1, double beta2, double eps, double bc1,
                 double bc2) {
  const __m256d vb1 = _mm256_set1_pd(beta1);
  const __m256d vb1c = _mm256_set1_pd(1.0 - beta1);
  const __m256d vb2 = _mm256_set1_pd(beta2);
  const __m256d vb2c = _mm256_set1_pd(1.0 - beta2);
  const __m256d vlr = _mm256_set1_pd(lr);
  const __m256d veps = _mm256_set1_pd(eps);
  const __m256d vibc1 = _mm256_set1_pd(1.0 / bc1);
  const __m256d vibc2 = _mm256_set1_pd(1.0 / bc2);
  int i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d gi = _mm256_loadu_pd(g + i);
    __m256d mi = _mm256_fmadd_pd(vb1c, gi, _mm256_mul_pd(vb1, _mm256_loadu_pd(m + i)));
    __m256d vi = _mm256_fmadd_pd(vb2c, _mm256_mul_pd(gi, gi),
                                 _mm256_mul_pd(vb2, _mm256_loadu_pd(v + i)));
    _mm256_storeu_pd(m + i, mi);
    _mm256_storeu_pd(v + i, vi);
    const __m256d mhat = _mm256_mul_pd(mi, vibc1);
    const __m256d vhat = _mm256_mul_pd(vi, vibc2);
    const __m256d denom = _mm256_add_pd(_mm256_sqrt_pd(vhat), veps);
    const __m256d step = _mm256_div_pd(_mm256_mul_pd(vlr, mhat), denom);
    _mm256_storeu_pd(p + i, _mm256_sub_pd(_mm256_loadu_pd(p + i), step));
  }
  for (; i < n; ++i) {
    m[i] = beta1 * m[i] + (1.0 - beta1) * g[i];
    v[i] = beta2 * v[i] + (1.0 - beta2) * g[i] * g[i];
    p[i] -= lr * (m[i] / bc1) / (std::sqrt(v[i] / bc2) + eps);
  }
}

}  // namespace

const Ops& avx2_ops() {
  static const Ops table{dense_fwd,
                         dense_bwd_input,
                         dense_bwd_params,
                         dense_quad_fwd,
                         dense_quad_bwd_input,
                         dense_quad_bwd_params,
                         dot,
                         axpy,
                         scal,
                         adam_update,
                         "avx2"};
  return table;
}

}  // namespace tse::kernels

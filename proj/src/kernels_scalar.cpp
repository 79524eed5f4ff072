#include <cmath>

#include "tse/kernels.hpp"

// Reference kernels. Plain loops, no intrinsics; the SIMD variants are
// equivalence-tested against these.

namespace tse::kernels {
namespace {

void dense_fwd(int nin, int nout, const double* W, const double* b,
               const double* in, double* out) {
  for (int o = 0; o < nout; ++o) {
    const double* w = W + static_cast<long>(o) * nin;
    double acc = b ? b[o] : 0.0;
    for (int i = 0; i < nin; ++i) acc += w[i] * in[i];
    out[o] = acc;
  }
}

void dense_bwd_input(int nin, int nout, const double* W, const double* dout,
                     double* din) {
  for (int i = 0; i < nin; ++i) din[i] = 0.0;
  for (int o = 0; o < nout; ++o) {
    const double* w = W + static_cast<long>(o) * nin;
    const double d = dout[o];
    for (int i = 0; i < nin; ++i) din[i] += w[i] * d;
  }
}

void dense_bwd_params(int nin, int nout, const double* in, const double* dout,
                      double* dW, double* db) {
  for (int o = 0; o < nout; ++o) {
    double* dw = dW + static_cast<long>(o) * nin;
    const double d = dout[o];
    for (int i = 0; i < nin; ++i) dw[i] += d * in[i];
    db[o] += d;
  }
}

void dense_quad_fwd(int nin, int nout, const double* W, const double* b,
                    const double* in4, double* out4) {
  for (int o = 0; o < nout; ++o) {
    const double* w = W + static_cast<long>(o) * nin;
    double a0 = b ? b[o] : 0.0, a1 = 0.0, a2 = 0.0, a3 = 0.0;
    for (int i = 0; i < nin; ++i) {
      const double wi = w[i];
      const double* q = in4 + 4 * i;
      a0 += wi * q[0];
      a1 += wi * q[1];
      a2 += wi * q[2];
      a3 += wi * q[3];
    }
    double* r = out4 + 4 * o;
    r[0] = a0;
    r[1] = a1;
    r[2] = a2;
    r[3] = a3;
  }
}

void dense_quad_bwd_input(int nin, int nout, const double* W,
                          const double* dout4, double* din4) {
  for (int i = 0; i < 4 * nin; ++i) din4[i] = 0.0;
  for (int o = 0; o < nout; ++o) {
    const double* w = W + static_cast<long>(o) * nin;
    const double* d = dout4 + 4 * o;
    for (int i = 0; i < nin; ++i) {
      const double wi = w[i];
      double* q = din4 + 4 * i;
      q[0] += wi * d[0];
      q[1] += wi * d[1];
      q[2] += wi * d[2];
      q[3] += wi * d[3];
    }
  }
}

void dense_quad_bwd_params(int nin, int nout, const double* in4,
                           const double* dout4, double* dW, double* db) {
  for (int o = 0; o < nout; ++o) {
    double* dw = dW + static_cast<long>(o) * nin;
    const double* d = dout4 + 4 * o;
    for (int i = 0; i < nin; ++i) {
      const double* q = in4 + 4 * i;
      dw[i] += d[0] * q[0] + d[1] * q[1] + d[2] * q[2] + d[3] * q[3];
    }
    db[o] += d[0];
  }
}

double dot(int n, const double* x, const double* y) {
  double acc = 0.0;
  for (int i = 0; i < n; ++i) acc += x[i] * y[i];
  return acc;
}

void axpy(int n, double a, const double* x, double* y) {
  for (int i = 0; i < n; ++i) y[i] += a * x[i];
}

void scal(int n, double a, double* x) {
  for (int i = 0; i < n; ++i) x[i] *= a;
}

void adam_update(int n, double* p, const double* g, double* m, double* v,
                 double lr, double beta1, double beta2, double eps, double bc1,
                 double bc2) {
  for (int i = 0; i < n; ++i) {
    m[i] = beta1 * m[i] + (1.0 - beta1) * g[i];
    v[i] = beta2 * v[i] + (1.0 - beta2) * g[i] * g[i];
    const double mhat = m[i] / bc1;
    const double vhat = v[i] / bc2;
    p[i] -= lr * mhat / (std::sqrt(vhat) + eps);
  }
}

}  // namespace

const Ops& scalar_ops() {
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
                         "scalar"};
  return table;
}

}  // namespace tse::kernels

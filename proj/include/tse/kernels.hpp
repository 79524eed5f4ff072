#pragma once

#include <cstdint>
#include <string>

namespace tse::kernels {

// Hot inner loops of network evaluation and training. Quad buffers hold one
// 4-component carrier per neuron, laid out contiguously as
// [value, d/dx, d/dt, d2/dx2] so a carrier maps onto one 4-lane vector.
//
// Weight matrices are row-major [nout][nin]. Backward-params kernels
// accumulate into dW/db; callers zero the buffers.

struct Ops {
  // value channel
  void (*dense_fwd)(int nin, int nout, const double* W, const double* b,
                    const double* in, double* out);
  void (*dense_bwd_input)(int nin, int nout, const double* W,
                          const double* dout, double* din);
  void (*dense_bwd_params)(int nin, int nout, const double* in,
                           const double* dout, double* dW, double* db);
  // quad channels
  void (*dense_quad_fwd)(int nin, int nout, const double* W, const double* b,
                         const double* in4, double* out4);
  void (*dense_quad_bwd_input)(int nin, int nout, const double* W,
                               const double* dout4, double* din4);
  void (*dense_quad_bwd_params)(int nin, int nout, const double* in4,
                                const double* dout4, double* dW, double* db);
  // vector math
  double (*dot)(int n, const double* x, const double* y);
  void (*axpy)(int n, double a, const double* x, double* y);
  void (*scal)(int n, double a, double* x);
  // p -= lr * mhat / (sqrt(vhat) + eps); m, v updated in place.
  // bc1 = 1 - beta1^t, bc2 = 1 - beta2^t.
  void (*adam_update)(int n, double* p, const double* g, double* m, double* v,
                      double lr, double beta1, double beta2, double eps,
                      double bc1, double bc2);
  const char* name;
};

enum class Backend { scalar, avx2 };

bool avx2_available();

/// Active table; defaults to the widest supported backend.
const Ops& ops();

Backend active_backend();

/// Force a backend (used by the equivalence tests). Throws if unsupported.
void set_backend(Backend b);

const Ops& scalar_ops();
const Ops& avx2_ops();  // valid only if avx2_available()

}  // namespace tse::kernels

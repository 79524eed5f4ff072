#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "tse/common.hpp"

namespace tse::ad {

/// Value and input derivatives of a scalar f(x,t).
struct DiffResult {
  double value = 0.0;
  double d_dx = 0.0;
  double d_dt = 0.0;
  double d2_dx2 = 0.0;
};

// ---------------------------------------------------------------------------
// Forward-mode carrier (value, d/dx, d/dt, d2/dx2). Propagating these through
// a network gives exact input derivatives up to the second order in x; the
// mixed and d2/dt2 terms are not tracked because no residual needs them.
// ---------------------------------------------------------------------------
struct Quad {
  double v = 0.0, dx = 0.0, dt = 0.0, dxx = 0.0;

  static Quad input_x(double x) { return {x, 1.0, 0.0, 0.0}; }
  static Quad input_t(double t) { return {t, 0.0, 1.0, 0.0}; }
  static Quad constant(double c) { return {c, 0.0, 0.0, 0.0}; }
};

inline Quad operator+(const Quad& a, const Quad& b) {
  return {a.v + b.v, a.dx + b.dx, a.dt + b.dt, a.dxx + b.dxx};
}
inline Quad operator-(const Quad& a, const Quad& b) {
  return {a.v - b.v, a.dx - b.dx, a.dt - b.dt, a.dxx - b.dxx};
}
inline Quad operator*(const Quad& a, const Quad& b) {
  return {a.v * b.v, a.dx * b.v + a.v * b.dx, a.dt * b.v + a.v * b.dt,
          a.dxx * b.v + 2.0 * a.dx * b.dx + a.v * b.dxx};
}
inline Quad operator*(double c, const Quad& a) {
  return {c * a.v, c * a.dx, c * a.dt, c * a.dxx};
}
inline Quad operator+(const Quad& a, double c) { return {a.v + c, a.dx, a.dt, a.dxx}; }

/// Chain rule through a scalar function given f(v), f'(v), f''(v).
inline Quad chain(const Quad& a, double f0, double f1, double f2) {
  return {f0, f1 * a.dx, f1 * a.dt, f2 * a.dx * a.dx + f1 * a.dxx};
}

inline Quad tanh(const Quad& a) {
  const double s = std::tanh(a.v);
  const double s1 = 1.0 - s * s;
  return chain(a, s, s1, -2.0 * s * s1);
}
inline Quad relu(const Quad& a) {
  // derivative at 0 fixed to the right derivative (1)
  const double g = a.v >= 0.0 ? 1.0 : 0.0;
  return {a.v >= 0.0 ? a.v : 0.0, g * a.dx, g * a.dt, g * a.dxx};
}
inline Quad leaky_relu(const Quad& a, double slope) {
  const double g = a.v >= 0.0 ? 1.0 : slope;
  return {g * a.v, g * a.dx, g * a.dt, g * a.dxx};
}
inline Quad sigmoid(const Quad& a) {
  const double s = 1.0 / (1.0 + std::exp(-a.v));
  const double s1 = s * (1.0 - s);
  return chain(a, s, s1, s1 * (1.0 - 2.0 * s));
}

// ---------------------------------------------------------------------------
// Dual<N>: value plus N first-order partials; used to differentiate flux
// formulas with respect to physics parameters.
// ---------------------------------------------------------------------------
template <int N>
struct Dual {
  double v = 0.0;
  std::array<double, N> d{};

  Dual() = default;
  Dual(double value) : v(value) {}  // NOLINT(google-explicit-constructor)
  static Dual seed(double value, int k) {
    Dual r(value);
    r.d[k] = 1.0;
    return r;
  }
};

template <int N>
Dual<N> operator+(const Dual<N>& a, const Dual<N>& b) {
  Dual<N> r(a.v + b.v);
  for (int i = 0; i < N; ++i) r.d[i] = a.d[i] + b.d[i];
  return r;
}
template <int N>
Dual<N> operator-(const Dual<N>& a, const Dual<N>& b) {
  Dual<N> r(a.v - b.v);
  for (int i = 0; i < N; ++i) r.d[i] = a.d[i] - b.d[i];
  return r;
}
template <int N>
Dual<N> operator-(const Dual<N>& a) {
  Dual<N> r(-a.v);
  for (int i = 0; i < N; ++i) r.d[i] = -a.d[i];
  return r;
}
template <int N>
Dual<N> operator*(const Dual<N>& a, const Dual<N>& b) {
  Dual<N> r(a.v * b.v);
  for (int i = 0; i < N; ++i) r.d[i] = a.d[i] * b.v + a.v * b.d[i];
  return r;
}
template <int N>
Dual<N> operator/(const Dual<N>& a, const Dual<N>& b) {
  const double inv = 1.0 / b.v;
  Dual<N> r(a.v * inv);
  for (int i = 0; i < N; ++i) r.d[i] = (a.d[i] - r.v * b.d[i]) * inv;
  return r;
}
template <int N>
Dual<N> sqrt(const Dual<N>& a) {
  const double s = std::sqrt(a.v);
  Dual<N> r(s);
  const double g = 0.5 / s;
  for (int i = 0; i < N; ++i) r.d[i] = g * a.d[i];
  return r;
}
template <int N>
Dual<N> exp(const Dual<N>& a) {
  const double e = std::exp(a.v);
  Dual<N> r(e);
  for (int i = 0; i < N; ++i) r.d[i] = e * a.d[i];
  return r;
}

// ---------------------------------------------------------------------------
// Reverse-mode tape over scalar primitives. Nodes store precomputed local
// partials; a `dot` node fuses a whole linear combination to keep network
// tapes short. Accumulation order in the reverse sweep is fixed by node
// index, so gradients are bit-reproducible.
// ---------------------------------------------------------------------------
class Tape;

struct Var {
  Tape* tape = nullptr;
  std::uint32_t id = 0;
};

class Tape {
public:
  /// Tracked leaf: its adjoint is reported by gradient().
  Var input(double value);
  /// Untracked leaf.
  Var constant(double value);

  double value(Var x) const { return values_[x.id]; }
  size_t size() const { return values_.size(); }
  size_t num_inputs() const { return inputs_.size(); }

  /// Reverse sweep from root; writes d(root)/d(input_i) into grad
  /// (grad.size() == num_inputs()).
  void gradient(Var root, std::span<double> grad);

  void reset();

  // primitive records (public so free operators can reach them)
  Var binary(std::uint8_t op, Var a, Var b, double value, double pa, double pb);
  Var unary(std::uint8_t op, Var a, double value, double pa);
  Var dot(std::span<const Var> xs, std::span<const Var> ys);

private:
  struct Node {
    std::uint32_t a = 0, b = 0;
    double pa = 0.0, pb = 0.0;
    std::uint8_t op = 0;
  };
  std::vector<Node> nodes_;
  std::vector<double> values_;
  std::vector<std::uint32_t> dot_args_;  // interleaved x,y ids per dot node
  std::vector<std::uint32_t> inputs_;
  std::vector<double> adjoint_;
};

namespace op {
constexpr std::uint8_t leaf = 0, add = 1, sub = 2, mul = 3, div = 4, neg = 5,
                       tanh_ = 6, exp_ = 7, sqrt_ = 8, log_ = 9, sigmoid_ = 10,
                       relu_ = 11, lrelu_ = 12, min_ = 13, max_ = 14,
                       pow_ = 15, dot_ = 16;
}

Var operator+(Var a, Var b);
Var operator-(Var a, Var b);
Var operator*(Var a, Var b);
Var operator/(Var a, Var b);
Var operator-(Var a);
Var operator+(Var a, double c);
Var operator+(double c, Var a);
Var operator-(Var a, double c);
Var operator-(double c, Var a);
Var operator*(Var a, double c);
Var operator*(double c, Var a);
Var operator/(Var a, double c);
Var operator/(double c, Var a);

Var tanh(Var a);
Var exp(Var a);
Var sqrt(Var a);
Var log(Var a);
Var sigmoid(Var a);
Var relu(Var a);
Var leaky_relu(Var a, double slope);
Var vmin(Var a, Var b);
Var vmax(Var a, Var b);
Var pow(Var a, double c);
Var pow(Var a, Var b);

// ---------------------------------------------------------------------------
// Differentiable scalar functions of a flat parameter vector.
// ---------------------------------------------------------------------------
class LossFunction {
public:
  virtual ~LossFunction() = default;
  virtual size_t dim() const = 0;
  virtual double value(std::span<const double> params) = 0;
  /// Returns the loss and fills grad (size dim()).
  virtual double value_and_grad(std::span<const double> params,
                                std::span<double> grad) = 0;
};

using TapeBuilder = std::function<Var(Tape&, std::span<const Var>)>;

/// Wraps a tape-building callable as a LossFunction.
class TapeLoss final : public LossFunction {
public:
  TapeLoss(size_t dim, TapeBuilder builder)
      : dim_(dim), builder_(std::move(builder)) {}
  size_t dim() const override { return dim_; }
  double value(std::span<const double> params) override;
  double value_and_grad(std::span<const double> params,
                        std::span<double> grad) override;

private:
  size_t dim_;
  TapeBuilder builder_;
  Tape tape_;
};

/// Gradient of a pure scalar function of the flattened parameter vector.
std::vector<double> grad_params(const TapeBuilder& builder,
                                std::span<const double> params);

/// Worst-coordinate relative error between the analytic gradient and central
/// finite differences with step h; denominator max(|a|, |n|, 1e-8).
double check_gradient(LossFunction& f, std::span<const double> params, double h);

}  // namespace tse::ad

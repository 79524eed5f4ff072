#include "tse/optim.hpp"

#include <algorithm>
#include <cmath>
#include <deque>

#include "tse/kernels.hpp"

namespace tse {

void adam_step(std::span<double> params, std::span<const double> grad,
               AdamState& state, const AdamConfig& config) {
  const size_t n = params.size();
  if (grad.size() != n || state.m.size() != n || state.v.size() != n)
    throw std::invalid_argument("adam_step: shape mismatch");
  ++state.t;
  const double bc1 = 1.0 - std::pow(config.beta1, static_cast<double>(state.t));
  const double bc2 = 1.0 - std::pow(config.beta2, static_cast<double>(state.t));
  kernels::ops().adam_update(static_cast<int>(n), params.data(), grad.data(),
                             state.m.data(), state.v.data(), config.lr,
                             config.beta1, config.beta2, config.eps, bc1, bc2);
}

namespace {

struct Pair {
  std::vector<double> s, y;
  double rho;
};

double dot(std::span<const double> a, std::span<const double> b) {
  return kernels::ops().dot(static_cast<int>(a.size()), a.data(), b.data());
}

}  // namespace

LbfgsResult lbfgs_minimize(ad::LossFunction& f, std::span<const double> x0,
                           const LbfgsConfig& config) {
  const size_t n = x0.size();
  LbfgsResult res;
  res.params.assign(x0.begin(), x0.end());
  std::vector<double> g(n), x_new(n), g_new(n), d(n);
  double fx = f.value_and_grad(res.params, g);
  res.loss_trace.push_back(fx);

  std::deque<Pair> pairs;
  std::vector<double> alpha_buf;

  for (int iter = 0; iter < config.max_iterations; ++iter) {
    // two-loop recursion for d = -H g
    std::copy(g.begin(), g.end(), d.begin());
    alpha_buf.assign(pairs.size(), 0.0);
    for (int k = static_cast<int>(pairs.size()) - 1; k >= 0; --k) {
      alpha_buf[k] = pairs[k].rho * dot(pairs[k].s, d);
      kernels::ops().axpy(static_cast<int>(n), -alpha_buf[k], pairs[k].y.data(), d.data());
    }
    if (!pairs.empty()) {
      const Pair& last = pairs.back();
      const double gamma = dot(last.s, last.y) / dot(last.y, last.y);
      kernels::ops().scal(static_cast<int>(n), gamma, d.data());
    }
    for (size_t k = 0; k < pairs.size(); ++k) {
      const double beta = pairs[k].rho * dot(pairs[k].y, d);
      kernels::ops().axpy(static_cast<int>(n), alpha_buf[k] - beta, pairs[k].s.data(), d.data());
    }
    for (double& v : d) v = -v;

    double dg = dot(d, g);
    if (dg >= 0.0) {  // not a descent direction: steepest descent fallback
      for (size_t i = 0; i < n; ++i) d[i] = -g[i];
      dg = -dot(g, g);
    }
    if (dg == 0.0) {
      res.status = LbfgsStatus::converged;
      res.iterations = iter;
      return res;
    }

    // strong-Wolfe line search (bracket then bisection zoom)
    auto phi = [&](double a, std::span<double> grad_out) {
      for (size_t i = 0; i < n; ++i) x_new[i] = res.params[i] + a * d[i];
      return f.value_and_grad(x_new, grad_out);
    };
    const double phi0 = fx, dphi0 = dg;
    double a_prev = 0.0, f_prev = phi0, dphi_prev = dphi0;
    double a = 1.0;
    double a_lo = 0.0, a_hi = 0.0, f_lo = phi0;
    bool bracketed = false, found = false;
    double fa = 0.0, dphia = 0.0;
    int evals = 0;
    while (evals < config.max_line_search) {
      fa = phi(a, g_new);
      ++evals;
      dphia = dot(g_new, d);
      if (fa > phi0 + config.c1 * a * dphi0 || (evals > 1 && fa >= f_prev)) {
        a_lo = a_prev;
        f_lo = f_prev;
        a_hi = a;
        bracketed = true;
        break;
      }
      if (std::abs(dphia) <= -config.c2 * dphi0) {
        found = true;
        break;
      }
      if (dphia >= 0.0) {
        a_lo = a;
        f_lo = fa;
        a_hi = a_prev;
        bracketed = true;
        break;
      }
      a_prev = a;
      f_prev = fa;
      dphi_prev = dphia;
      a *= 2.0;
    }
    (void)dphi_prev;
    if (bracketed && !found) {
      while (evals < config.max_line_search) {
        a = 0.5 * (a_lo + a_hi);
        fa = phi(a, g_new);
        ++evals;
        dphia = dot(g_new, d);
        if (fa > phi0 + config.c1 * a * dphi0 || fa >= f_lo) {
          a_hi = a;
        } else {
          if (std::abs(dphia) <= -config.c2 * dphi0) {
            found = true;
            break;
          }
          if (dphia * (a_hi - a_lo) >= 0.0) a_hi = a_lo;
          a_lo = a;
          f_lo = fa;
        }
        if (std::abs(a_hi - a_lo) < 1e-16 * std::max(1.0, std::abs(a_lo))) break;
      }
    }
    if (!found && !(bracketed && fa < phi0)) {
      // no Wolfe point and no usable decrease: stop with a flag
      res.status = LbfgsStatus::line_search_failed;
      res.iterations = iter;
      return res;
    }

    for (size_t i = 0; i < n; ++i) x_new[i] = res.params[i] + a * d[i];

    // curvature pair from the accepted step
    Pair pr;
    pr.s.resize(n);
    pr.y.resize(n);
    for (size_t i = 0; i < n; ++i) {
      pr.s[i] = x_new[i] - res.params[i];
      pr.y[i] = g_new[i] - g[i];
    }
    const double ys = dot(pr.y, pr.s);
    if (ys > 1e-12 * std::sqrt(dot(pr.y, pr.y)) * std::sqrt(dot(pr.s, pr.s))) {
      pr.rho = 1.0 / ys;
      pairs.push_back(std::move(pr));
      if (static_cast<int>(pairs.size()) > config.memory) pairs.pop_front();
    }

    std::swap(res.params, x_new);
    std::swap(g, g_new);
    const double f_old = fx;
    fx = fa;
    res.loss_trace.push_back(fx);
    res.iterations = iter + 1;
    if (std::abs(f_old - fx) <= config.tolerance) {
      res.status = LbfgsStatus::converged;
      return res;
    }
  }
  res.status = LbfgsStatus::max_iterations;
  return res;
}

}  // namespace tse

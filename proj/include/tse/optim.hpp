#pragma once

#include <span>
#include <vector>

#include "tse/autodiff.hpp"

namespace tse {

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamState {
  std::vector<double> m, v;
  long t = 0;

  explicit AdamState(size_t n = 0) : m(n, 0.0), v(n, 0.0) {}
};

/// Bias-corrected Adam update, in place.
void adam_step(std::span<double> params, std::span<const double> grad,
               AdamState& state, const AdamConfig& config);

struct LbfgsConfig {
  int memory = 10;
  double tolerance = 1e-16;  // on |loss_k - loss_{k-1}|
  int max_iterations = 5000;
  int max_line_search = 50;
  double c1 = 1e-4;  // sufficient decrease
  double c2 = 0.9;   // curvature
};

enum class LbfgsStatus { converged, max_iterations, line_search_failed };

struct LbfgsResult {
  std::vector<double> params;
  std::vector<double> loss_trace;  // loss after each accepted iterate
  LbfgsStatus status = LbfgsStatus::converged;
  int iterations = 0;
};

/// Two-loop L-BFGS with strong-Wolfe line search. Skips curvature pairs with
/// y's <= 0 and falls back to steepest descent when the predicted direction
/// is not a descent direction. Line-search failure ends the run with a
/// status flag rather than throwing.
LbfgsResult lbfgs_minimize(ad::LossFunction& f, std::span<const double> x0,
                           const LbfgsConfig& config = {});

}  // namespace tse

#pragma once

#include <span>
#include <string>
#include <vector>

#include "tse/autodiff.hpp"
#include "tse/common.hpp"

namespace tse {

enum class Activation { tanh, relu, leaky_relu };
enum class OutputActivation { identity, sigmoid };

/// Feedforward MLP with a single flat parameter vector laid out as
/// [W0 | b0 | W1 | b1 | ...], weights row-major [out][in]. Keeping the
/// parameters flat lets the trainers treat theta as one contiguous block.
struct Mlp {
  std::vector<int> layer_sizes;
  Activation activation = Activation::tanh;
  OutputActivation output_activation = OutputActivation::identity;
  double leaky_slope = 0.01;
  std::vector<double> params;

  int num_affine() const { return static_cast<int>(layer_sizes.size()) - 1; }
  int input_width() const { return layer_sizes.front(); }
  int output_width() const { return layer_sizes.back(); }
  size_t param_count() const { return params.size(); }

  size_t weight_offset(int layer) const;
  size_t bias_offset(int layer) const;
  const double* weights(int layer) const { return params.data() + weight_offset(layer); }
  const double* biases(int layer) const { return params.data() + bias_offset(layer); }
};

/// Xavier-uniform weights (bound sqrt(6/(fan_in+fan_out))), zero biases;
/// deterministic given seed.
Mlp mlp_new(const std::vector<int>& layer_sizes, Activation activation,
            OutputActivation output_activation, std::uint64_t seed);

size_t mlp_param_count(const std::vector<int>& layer_sizes);

void mlp_forward(const Mlp& net, std::span<const double> input,
                 std::span<double> output);

std::string mlp_to_json(const Mlp& net);
Mlp mlp_from_json(const std::string& text);
void mlp_save(const Mlp& net, const std::string& path);
Mlp mlp_load(const std::string& path);

/// f(x,t) with exact d/dx, d/dt, d2/dx2 of output component 0.
/// Requires input width 2. Throws NumericError naming the layer if an
/// intermediate overflows.
ad::DiffResult eval_with_input_derivs(const Mlp& net, double x, double t);

// ---------------------------------------------------------------------------
// Fused evaluators. These carry per-layer traces so the backward sweep can
// run layer-by-layer through the kernel table; quad buffers hold 4 doubles
// per neuron as [v, dx, dt, dxx]. Input convention: input 0 seeds d/dx,
// input 1 seeds d/dt, further inputs are derivative-free (latent noise).
// ---------------------------------------------------------------------------

inline ad::Quad get_quad(std::span<const double> buf, int i) {
  return {buf[4 * i], buf[4 * i + 1], buf[4 * i + 2], buf[4 * i + 3]};
}
inline void set_quad(std::span<double> buf, int i, const ad::Quad& q) {
  buf[4 * i] = q.v;
  buf[4 * i + 1] = q.dx;
  buf[4 * i + 2] = q.dt;
  buf[4 * i + 3] = q.dxx;
}

class QuadEval {
public:
  explicit QuadEval(const Mlp& net);

  /// Output quads, one per output neuron (span of 4*nout doubles).
  std::span<const double> forward(const Mlp& net, std::span<const double> inputs);

  /// Backprop from output-quad adjoints; adds parameter gradients into
  /// grad (Mlp flat layout). If in_adj is non-empty (4*nin doubles) the
  /// input adjoint quads are written there.
  void backward(const Mlp& net, std::span<const double> out_adj,
                std::span<double> grad, std::span<double> in_adj = {});

private:
  std::vector<std::vector<double>> z_;  // pre-activation quads per layer
  std::vector<std::vector<double>> a_;  // activations (a_[0] = inputs)
  std::vector<double> delta_, delta_prev_;
};

class ValueEval {
public:
  explicit ValueEval(const Mlp& net);

  std::span<const double> forward(const Mlp& net, std::span<const double> inputs);

  void backward(const Mlp& net, std::span<const double> out_adj,
                std::span<double> grad, std::span<double> in_adj = {});

private:
  std::vector<std::vector<double>> z_;
  std::vector<std::vector<double>> a_;
  std::vector<double> delta_, delta_prev_;
};

}  // namespace tse

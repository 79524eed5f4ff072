#include "tse/mlp.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "tse/kernels.hpp"

namespace tse {

namespace {

void validate_sizes(const std::vector<int>& sizes) {
  if (sizes.size() < 2)
    throw std::invalid_argument("mlp: need at least input and output layers");
  for (int w : sizes)
    if (w < 1) throw std::invalid_argument("mlp: layer widths must be >= 1");
}

// activation value and first three derivatives at z
struct ActDerivs {
  double s, s1, s2, s3;
};

inline ActDerivs act_derivs(Activation k, double z, double slope) {
  switch (k) {
    case Activation::tanh: {
      const double s = std::tanh(z);
      const double s1 = 1.0 - s * s;
      return {s, s1, -2.0 * s * s1, s1 * (6.0 * s * s - 2.0)};
    }
    case Activation::relu: {
      const double g = z >= 0.0 ? 1.0 : 0.0;
      return {g * z, g, 0.0, 0.0};
    }
    case Activation::leaky_relu:
    default: {
      const double g = z >= 0.0 ? 1.0 : slope;
      return {g * z, g, 0.0, 0.0};
    }
  }
}

inline ActDerivs out_act_derivs(OutputActivation k, double z) {
  if (k == OutputActivation::identity) return {z, 1.0, 0.0, 0.0};
  const double s = 1.0 / (1.0 + std::exp(-z));
  const double s1 = s * (1.0 - s);
  const double s2 = s1 * (1.0 - 2.0 * s);
  const double s3 = s2 * (1.0 - 2.0 * s) - 2.0 * s1 * s1;
  return {s, s1, s2, s3};
}

const char* act_name(Activation a) {
  switch (a) {
    case Activation::tanh: return "tanh";
    case Activation::relu: return "relu";
    default: return "leaky-relu";
  }
}

Activation act_from_name(const std::string& s) {
  if (s == "tanh") return Activation::tanh;
  if (s == "relu") return Activation::relu;
  if (s == "leaky-relu") return Activation::leaky_relu;
  throw std::invalid_argument("mlp: unknown activation '" + s + "'");
}

}  // namespace

size_t Mlp::weight_offset(int layer) const {
  size_t off = 0;
  for (int l = 0; l < layer; ++l)
    off += static_cast<size_t>(layer_sizes[l]) * layer_sizes[l + 1] + layer_sizes[l + 1];
  return off;
}

size_t Mlp::bias_offset(int layer) const {
  return weight_offset(layer) +
         static_cast<size_t>(layer_sizes[layer]) * layer_sizes[layer + 1];
}

size_t mlp_param_count(const std::vector<int>& sizes) {
  validate_sizes(sizes);
  size_t n = 0;
  for (size_t l = 0; l + 1 < sizes.size(); ++l)
    n += static_cast<size_t>(sizes[l]) * sizes[l + 1] + sizes[l + 1];
  return n;
}

Mlp mlp_new(const std::vector<int>& layer_sizes, Activation activation,
            OutputActivation output_activation, std::uint64_t seed) {
  validate_sizes(layer_sizes);
  Mlp net;
  net.layer_sizes = layer_sizes;
  net.activation = activation;
  net.output_activation = output_activation;
  net.params.assign(mlp_param_count(layer_sizes), 0.0);

  Rng rng = make_rng(seed);
  for (int l = 0; l + 1 < static_cast<int>(layer_sizes.size()); ++l) {
    const int nin = layer_sizes[l], nout = layer_sizes[l + 1];
    const double bound = std::sqrt(6.0 / (nin + nout));
    std::uniform_real_distribution<double> u(-bound, bound);
    double* w = net.params.data() + net.weight_offset(l);
    for (int k = 0; k < nin * nout; ++k) w[k] = u(rng);
    // biases stay zero
  }
  return net;
}

void mlp_forward(const Mlp& net, std::span<const double> input,
                 std::span<double> output) {
  if (static_cast<int>(input.size()) != net.input_width())
    throw std::invalid_argument("mlp_forward: input width mismatch");
  if (static_cast<int>(output.size()) != net.output_width())
    throw std::invalid_argument("mlp_forward: output width mismatch");
  const auto& k = kernels::ops();
  std::vector<double> buf_a(input.begin(), input.end()), buf_b;
  const int L = net.num_affine();
  for (int l = 0; l < L; ++l) {
    const int nin = net.layer_sizes[l], nout = net.layer_sizes[l + 1];
    buf_b.resize(nout);
    k.dense_fwd(nin, nout, net.weights(l), net.biases(l), buf_a.data(), buf_b.data());
    if (l + 1 < L) {
      for (int i = 0; i < nout; ++i)
        buf_b[i] = act_derivs(net.activation, buf_b[i], net.leaky_slope).s;
    } else {
      for (int i = 0; i < nout; ++i)
        buf_b[i] = out_act_derivs(net.output_activation, buf_b[i]).s;
    }
    std::swap(buf_a, buf_b);
  }
  std::copy(buf_a.begin(), buf_a.end(), output.begin());
}

std::string mlp_to_json(const Mlp& net) {
  nlohmann::json j;
  j["layer_sizes"] = net.layer_sizes;
  j["activation"] = act_name(net.activation);
  j["output_activation"] =
      net.output_activation == OutputActivation::identity ? "identity" : "sigmoid";
  nlohmann::json weights = nlohmann::json::array();
  nlohmann::json biases = nlohmann::json::array();
  for (int l = 0; l < net.num_affine(); ++l) {
    const int nin = net.layer_sizes[l], nout = net.layer_sizes[l + 1];
    weights.push_back(std::vector<double>(net.weights(l), net.weights(l) + nin * nout));
    biases.push_back(std::vector<double>(net.biases(l), net.biases(l) + nout));
  }
  j["weights"] = std::move(weights);
  j["biases"] = std::move(biases);
  return j.dump(2);
}

Mlp mlp_from_json(const std::string& text) {
  nlohmann::json j = nlohmann::json::parse(text);
  Mlp net;
  net.layer_sizes = j.at("layer_sizes").get<std::vector<int>>();
  validate_sizes(net.layer_sizes);
  net.activation = act_from_name(j.at("activation").get<std::string>());
  const std::string oa = j.value("output_activation", "identity");
  net.output_activation =
      oa == "sigmoid" ? OutputActivation::sigmoid : OutputActivation::identity;
  net.params.assign(mlp_param_count(net.layer_sizes), 0.0);
  const auto& weights = j.at("weights");
  const auto& biases = j.at("biases");
  if (static_cast<int>(weights.size()) != net.num_affine() ||
      static_cast<int>(biases.size()) != net.num_affine())
    throw std::invalid_argument("mlp json: wrong number of layers");
  for (int l = 0; l < net.num_affine(); ++l) {
    const int nin = net.layer_sizes[l], nout = net.layer_sizes[l + 1];
    auto w = weights[l].get<std::vector<double>>();
    auto b = biases[l].get<std::vector<double>>();
    if (static_cast<int>(w.size()) != nin * nout || static_cast<int>(b.size()) != nout)
      throw std::invalid_argument("mlp json: layer size mismatch");
    std::copy(w.begin(), w.end(), net.params.begin() + net.weight_offset(l));
    std::copy(b.begin(), b.end(), net.params.begin() + net.bias_offset(l));
  }
  return net;
}

void mlp_save(const Mlp& net, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  const std::string s = mlp_to_json(net);
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

Mlp mlp_load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return mlp_from_json(ss.str());
}

// ---------------------------------------------------------------------------
// QuadEval
// ---------------------------------------------------------------------------

QuadEval::QuadEval(const Mlp& net) {
  const int L = net.num_affine();
  z_.resize(L);
  a_.resize(L + 1);
  for (int l = 0; l < L; ++l) z_[l].resize(4 * static_cast<size_t>(net.layer_sizes[l + 1]));
  for (int l = 0; l <= L; ++l) a_[l].resize(4 * static_cast<size_t>(net.layer_sizes[l]));
}

std::span<const double> QuadEval::forward(const Mlp& net,
                                          std::span<const double> inputs) {
  const int nin0 = net.input_width();
  if (static_cast<int>(inputs.size()) != nin0)
    throw std::invalid_argument("QuadEval: input width mismatch");
  for (int i = 0; i < nin0; ++i) {
    ad::Quad q = ad::Quad::constant(inputs[i]);
    if (i == 0) q.dx = 1.0;
    if (i == 1) q.dt = 1.0;
    set_quad(a_[0], i, q);
  }
  const auto& k = kernels::ops();
  const int L = net.num_affine();
  for (int l = 0; l < L; ++l) {
    const int nin = net.layer_sizes[l], nout = net.layer_sizes[l + 1];
    k.dense_quad_fwd(nin, nout, net.weights(l), net.biases(l), a_[l].data(),
                     z_[l].data());
    for (int i = 0; i < nout; ++i) {
      const ad::Quad zq = get_quad(z_[l], i);
      if (!std::isfinite(zq.v))
        throw NumericError("mlp layer " + std::to_string(l) + " neuron " + std::to_string(i),
                           "non-finite intermediate in quad forward");
      ActDerivs d = (l + 1 < L) ? act_derivs(net.activation, zq.v, net.leaky_slope)
                                : out_act_derivs(net.output_activation, zq.v);
      set_quad(a_[l + 1], i,
               {d.s, d.s1 * zq.dx, d.s1 * zq.dt,
                d.s2 * zq.dx * zq.dx + d.s1 * zq.dxx});
    }
  }
  return a_[L];
}

void QuadEval::backward(const Mlp& net, std::span<const double> out_adj,
                        std::span<double> grad, std::span<double> in_adj) {
  const auto& k = kernels::ops();
  const int L = net.num_affine();
  delta_.assign(out_adj.begin(), out_adj.end());
  for (int l = L - 1; l >= 0; --l) {
    const int nin = net.layer_sizes[l], nout = net.layer_sizes[l + 1];
    // activation backward: delta_ currently holds d(loss)/d(a_[l+1])
    for (int i = 0; i < nout; ++i) {
      const ad::Quad zq = get_quad(z_[l], i);
      ActDerivs d = (l + 1 < L) ? act_derivs(net.activation, zq.v, net.leaky_slope)
                                : out_act_derivs(net.output_activation, zq.v);
      const ad::Quad da = get_quad(delta_, i);
      ad::Quad dz;
      dz.v = da.v * d.s1 + da.dx * d.s2 * zq.dx + da.dt * d.s2 * zq.dt +
             da.dxx * (d.s3 * zq.dx * zq.dx + d.s2 * zq.dxx);
      dz.dx = da.dx * d.s1 + da.dxx * 2.0 * d.s2 * zq.dx;
      dz.dt = da.dt * d.s1;
      dz.dxx = da.dxx * d.s1;
      set_quad(delta_, i, dz);
    }
    k.dense_quad_bwd_params(nin, nout, a_[l].data(), delta_.data(),
                            grad.data() + net.weight_offset(l),
                            grad.data() + net.bias_offset(l));
    if (l > 0 || !in_adj.empty()) {
      delta_prev_.resize(4 * static_cast<size_t>(nin));
      k.dense_quad_bwd_input(nin, nout, net.weights(l), delta_.data(),
                             delta_prev_.data());
      std::swap(delta_, delta_prev_);
    }
  }
  if (!in_adj.empty())
    std::copy(delta_.begin(), delta_.end(), in_adj.begin());
}

// ---------------------------------------------------------------------------
// ValueEval
// ---------------------------------------------------------------------------

ValueEval::ValueEval(const Mlp& net) {
  const int L = net.num_affine();
  z_.resize(L);
  a_.resize(L + 1);
  for (int l = 0; l < L; ++l) z_[l].resize(net.layer_sizes[l + 1]);
  for (int l = 0; l <= L; ++l) a_[l].resize(net.layer_sizes[l]);
}

std::span<const double> ValueEval::forward(const Mlp& net,
                                           std::span<const double> inputs) {
  if (static_cast<int>(inputs.size()) != net.input_width())
    throw std::invalid_argument("ValueEval: input width mismatch");
  std::copy(inputs.begin(), inputs.end(), a_[0].begin());
  const auto& k = kernels::ops();
  const int L = net.num_affine();
  for (int l = 0; l < L; ++l) {
    const int nin = net.layer_sizes[l], nout = net.layer_sizes[l + 1];
    k.dense_fwd(nin, nout, net.weights(l), net.biases(l), a_[l].data(), z_[l].data());
    for (int i = 0; i < nout; ++i) {
      const double zv = z_[l][i];
      a_[l + 1][i] = (l + 1 < L) ? act_derivs(net.activation, zv, net.leaky_slope).s
                                 : out_act_derivs(net.output_activation, zv).s;
    }
  }
  return a_[L];
}

void ValueEval::backward(const Mlp& net, std::span<const double> out_adj,
                         std::span<double> grad, std::span<double> in_adj) {
  const auto& k = kernels::ops();
  const int L = net.num_affine();
  delta_.assign(out_adj.begin(), out_adj.end());
  for (int l = L - 1; l >= 0; --l) {
    const int nin = net.layer_sizes[l], nout = net.layer_sizes[l + 1];
    for (int i = 0; i < nout; ++i) {
      const double zv = z_[l][i];
      const double s1 = (l + 1 < L) ? act_derivs(net.activation, zv, net.leaky_slope).s1
                                    : out_act_derivs(net.output_activation, zv).s1;
      delta_[i] *= s1;
    }
    k.dense_bwd_params(nin, nout, a_[l].data(), delta_.data(),
                       grad.data() + net.weight_offset(l),
                       grad.data() + net.bias_offset(l));
    if (l > 0 || !in_adj.empty()) {
      delta_prev_.resize(nin);
      k.dense_bwd_input(nin, nout, net.weights(l), delta_.data(), delta_prev_.data());
      std::swap(delta_, delta_prev_);
    }
  }
  if (!in_adj.empty()) std::copy(delta_.begin(), delta_.end(), in_adj.begin());
}

ad::DiffResult eval_with_input_derivs(const Mlp& net, double x, double t) {
  if (net.input_width() != 2)
    throw std::invalid_argument("eval_with_input_derivs: net input width must be 2");
  QuadEval eval(net);
  const double in[2] = {x, t};
  auto out = eval.forward(net, std::span<const double>(in, 2));
  const ad::Quad q = get_quad(out, 0);
  return {q.v, q.dx, q.dt, q.dxx};
}

}  // namespace tse

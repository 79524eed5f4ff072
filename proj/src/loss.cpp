#include "tse/loss.hpp"

#include <cmath>

namespace tse {

std::vector<double> PhysicsSpec::lambda0() const {
  switch (kind) {
    case ResidualKind::lwr3:
      return {fd.delta, fd.p, fd.sigma, fd.rho_max, std::log(fd.eps)};
    case ResidualKind::arz:
      return {arz.rho_max, arz.u_max, arz.tau};
    case ResidualKind::lwr_fdl:
      return surrogate.params;
  }
  return {};
}

void PhysicsSpec::load_lambda(std::span<const double> lambda) {
  switch (kind) {
    case ResidualKind::lwr3:
      fd.delta = lambda[0];
      fd.p = lambda[1];
      fd.sigma = lambda[2];
      fd.rho_max = lambda[3];
      fd.eps = std::exp(lambda[4]);
      break;
    case ResidualKind::arz:
      arz.rho_max = lambda[0];
      arz.u_max = lambda[1];
      arz.tau = lambda[2];
      break;
    case ResidualKind::lwr_fdl:
      std::copy(lambda.begin(), lambda.end(), surrogate.params.begin());
      break;
  }
}

DeterministicLoss::DeterministicLoss(const Mlp& net, PhysicsSpec phys,
                                     const ObservationSet& obs,
                                     const CollocationSet& colloc,
                                     const BoundaryCollocationSet& boundary,
                                     LossWeights weights)
    : net_(net),
      phys_(std::move(phys)),
      obs_(obs),
      colloc_(colloc),
      boundary_(boundary),
      weights_(weights),
      theta_dim_(net.param_count()),
      lambda_dim_(phys_.kind == ResidualKind::lwr_fdl
                      ? phys_.surrogate.param_count()
                      : (phys_.identify ? phys_.lambda_dim() : 0)),
      quad_(net),
      val_left_(net),
      val_right_(net),
      surr_quad_(phys_.surrogate) {
  weights_.validate();
  if (phys_.kind == ResidualKind::arz && net.output_width() < 2)
    throw std::invalid_argument("DeterministicLoss: arz needs a width-2 network");
}

std::vector<double> DeterministicLoss::initial_params() const {
  std::vector<double> p(net_.params);
  if (lambda_dim_ > 0) {
    auto l = phys_.lambda0();
    p.insert(p.end(), l.begin(), l.end());
  }
  return p;
}

void DeterministicLoss::unpack(std::span<const double> params, Mlp& net,
                               PhysicsSpec& phys) const {
  net = net_;
  std::copy(params.begin(), params.begin() + theta_dim_, net.params.begin());
  phys = phys_;
  if (lambda_dim_ > 0) phys.load_lambda(params.subspan(theta_dim_));
}

double DeterministicLoss::value(std::span<const double> params) {
  return evaluate(params, {}, false);
}

double DeterministicLoss::value_and_grad(std::span<const double> params,
                                         std::span<double> grad) {
  return evaluate(params, grad, true);
}

double DeterministicLoss::evaluate(std::span<const double> params,
                                   std::span<double> grad, bool with_grad) {
  if (params.size() != dim())
    throw std::invalid_argument("DeterministicLoss: parameter size mismatch");
  std::copy(params.begin(), params.begin() + theta_dim_, net_.params.begin());
  if (lambda_dim_ > 0) phys_.load_lambda(params.subspan(theta_dim_));
  if (with_grad) std::fill(grad.begin(), grad.end(), 0.0);

  const size_t n_obs = obs_.size();
  const size_t n_col = colloc_.size();
  const size_t n_bnd = boundary_.size();
  const int nout = net_.output_width();
  const bool obs_has_u = obs_.u.has_value() && nout >= 2;
  terms_ = {};

  std::span<double> g_theta = with_grad ? grad.first(theta_dim_) : std::span<double>{};
  std::span<double> g_lambda =
      with_grad && lambda_dim_ > 0 ? grad.subspan(theta_dim_) : std::span<double>{};

  // data misfit
  if (n_obs > 0 && weights_.alpha > 0.0) {
    const double w = 2.0 * weights_.alpha / static_cast<double>(n_obs);
    std::vector<double> seed(nout);
    for (size_t i = 0; i < n_obs; ++i) {
      const double in[2] = {obs_.points[i].x, obs_.points[i].t};
      auto out = val_left_.forward(net_, std::span<const double>(in, 2));
      const double er = out[0] - obs_.rho[i];
      terms_.data += er * er;
      double eu = 0.0;
      if (obs_has_u) {
        eu = out[1] - (*obs_.u)[i];
        terms_.data += eu * eu;
      }
      if (with_grad) {
        std::fill(seed.begin(), seed.end(), 0.0);
        seed[0] = w * er;
        if (obs_has_u) seed[1] = w * eu;
        val_left_.backward(net_, seed, g_theta);
      }
    }
    terms_.data /= static_cast<double>(n_obs);
  }

  // physics residual
  if (n_col > 0 && weights_.beta > 0.0) {
    const double w = 2.0 * weights_.beta / static_cast<double>(n_col);
    std::vector<double> adj(4 * static_cast<size_t>(nout));
    for (const DomainPoint& pt : colloc_.points) {
      const double in[2] = {pt.x, pt.t};
      auto out = quad_.forward(net_, std::span<const double>(in, 2));
      std::fill(adj.begin(), adj.end(), 0.0);
      if (phys_.kind == ResidualKind::lwr3) {
        const ad::Quad f = get_quad(out, 0);
        const double qp = flux_prime_three_param(f.v, phys_.fd);
        const double r = f.dt + qp * f.dx - phys_.fd.eps * f.dxx;
        terms_.physics += r * r;
        if (with_grad) {
          const double gl = w * r;
          const double qpp = flux_second_three_param(f.v, phys_.fd);
          set_quad(adj, 0, {gl * qpp * f.dx, gl * qp, gl, -gl * phys_.fd.eps});
          quad_.backward(net_, adj, g_theta);
          if (!g_lambda.empty()) {
            using D4 = ad::Dual<4>;
            const D4 qp_d = flux_prime_three_param_t<D4>(
                D4(f.v), D4::seed(phys_.fd.delta, 0), D4::seed(phys_.fd.p, 1),
                D4::seed(phys_.fd.sigma, 2), D4::seed(phys_.fd.rho_max, 3));
            for (int k = 0; k < 4; ++k) g_lambda[k] += gl * f.dx * qp_d.d[k];
            g_lambda[4] += gl * (-phys_.fd.eps * f.dxx);  // eps trained in log space
          }
        }
      } else if (phys_.kind == ResidualKind::arz) {
        const ad::Quad R = get_quad(out, 0);
        const ad::Quad U = get_quad(out, 1);
        const auto& p = phys_.arz;
        const double c = p.u_max / p.rho_max;
        const double ueq = speed_greenshields(R.v, p);
        const double r1 = R.dt + R.dx * U.v + R.v * U.dx;
        const double r2 = (U.dt + c * R.dt) + U.v * (U.dx + c * R.dx) - (ueq - U.v) / p.tau;
        terms_.physics += r1 * r1 + r2 * r2;
        if (with_grad) {
          const double g1 = w * r1, g2 = w * r2;
          set_quad(adj, 0,
                   {g1 * U.dx + g2 * (p.u_max / p.rho_max) / p.tau,
                    g1 * U.v + g2 * c * U.v, g1 + g2 * c, 0.0});
          set_quad(adj, 1,
                   {g1 * R.dx + g2 * (U.dx + c * R.dx + 1.0 / p.tau),
                    g1 * R.v + g2 * U.v, g2, 0.0});
          quad_.backward(net_, adj, g_theta);
          if (!g_lambda.empty()) {
            const double adv = R.dt + U.v * R.dx;  // factor on dc
            const double dc_drmax = -p.u_max / (p.rho_max * p.rho_max);
            const double dc_dumax = 1.0 / p.rho_max;
            const double dueq_drmax = p.u_max * R.v / (p.rho_max * p.rho_max);
            const double dueq_dumax = 1.0 - R.v / p.rho_max;
            g_lambda[0] += g2 * (adv * dc_drmax - dueq_drmax / p.tau);
            g_lambda[1] += g2 * (adv * dc_dumax - dueq_dumax / p.tau);
            g_lambda[2] += g2 * (ueq - U.v) / (p.tau * p.tau);
          }
        }
      } else {  // lwr_fdl
        const ad::Quad f = get_quad(out, 0);
        const double sin_[1] = {f.v};
        auto sout = surr_quad_.forward(phys_.surrogate, std::span<const double>(sin_, 1));
        const ad::Quad s = get_quad(sout, 0);  // s.dx = g', s.dxx = g''
        const double r = f.dt + s.dx * f.dx;
        terms_.physics += r * r;
        if (with_grad) {
          const double gl = w * r;
          set_quad(adj, 0, {gl * s.dxx * f.dx, gl * s.dx, gl, 0.0});
          quad_.backward(net_, adj, g_theta);
          double sadj[4] = {0.0, gl * f.dx, 0.0, 0.0};
          surr_quad_.backward(phys_.surrogate, std::span<const double>(sadj, 4), g_lambda);
        }
      }
    }
    terms_.physics /= static_cast<double>(n_col);
  }

  // periodic boundary mismatch
  if (n_bnd > 0 && weights_.gamma > 0.0) {
    const double w = 2.0 * weights_.gamma / static_cast<double>(n_bnd);
    std::vector<double> seed(nout);
    for (double tb : boundary_.times) {
      const double in_l[2] = {0.0, tb};
      const double in_r[2] = {boundary_.length, tb};
      auto out_l = val_left_.forward(net_, std::span<const double>(in_l, 2));
      auto out_r = val_right_.forward(net_, std::span<const double>(in_r, 2));
      double sq = 0.0;
      for (int c = 0; c < nout; ++c) {
        const double d = out_l[c] - out_r[c];
        sq += d * d;
      }
      terms_.boundary += sq;
      if (with_grad) {
        for (int c = 0; c < nout; ++c) seed[c] = w * (out_l[c] - out_r[c]);
        val_left_.backward(net_, seed, g_theta);
        for (int c = 0; c < nout; ++c) seed[c] = -seed[c];
        val_right_.backward(net_, seed, g_theta);
      }
    }
    terms_.boundary /= static_cast<double>(n_bnd);
  }

  terms_.total = weights_.alpha * terms_.data + weights_.beta * terms_.physics +
                 weights_.gamma * terms_.boundary;
  return terms_.total;
}

namespace {

using ad::Tape;
using ad::Var;

struct VarQuad {
  Var v, dx, dt, dxx;
};

// tanh/sigmoid first and second derivatives expressed as tape values;
// relu-family handled by derivative-scaled nodes (their second derivative
// vanishes almost everywhere).
struct VarAct {
  Var s;
  bool smooth = false;
  Var s1, s2;       // smooth case
  double g = 1.0;   // piecewise-linear slope
};

VarAct tape_act(Activation k, double slope, Var z) {
  VarAct r;
  if (k == Activation::tanh) {
    r.smooth = true;
    r.s = tanh(z);
    r.s1 = 1.0 - r.s * r.s;
    r.s2 = -2.0 * (r.s * r.s1);
    return r;
  }
  const double zv = z.tape->value(z);
  r.g = (zv >= 0.0) ? 1.0 : (k == Activation::relu ? 0.0 : slope);
  r.s = (k == Activation::relu) ? relu(z) : leaky_relu(z, slope);
  return r;
}

VarAct tape_out_act(OutputActivation k, Var z) {
  VarAct r;
  if (k == OutputActivation::identity) {
    r.s = z;
    r.g = 1.0;
    return r;
  }
  r.smooth = true;
  r.s = sigmoid(z);
  r.s1 = r.s * (1.0 - r.s);
  r.s2 = r.s1 * (1.0 - 2.0 * r.s);
  return r;
}

// value = g * value(x); partial d/dx = g (piecewise-linear activation chain)
Var scaled(Var x, double g) {
  return x.tape->unary(ad::op::mul, x, g * x.tape->value(x), g);
}

VarQuad apply_act_quad(const VarAct& a, const VarQuad& z) {
  VarQuad out;
  out.v = a.s;
  if (a.smooth) {
    out.dx = a.s1 * z.dx;
    out.dt = a.s1 * z.dt;
    out.dxx = a.s2 * (z.dx * z.dx) + a.s1 * z.dxx;
  } else {
    out.dx = scaled(z.dx, a.g);
    out.dt = scaled(z.dt, a.g);
    out.dxx = scaled(z.dxx, a.g);
  }
  return out;
}

std::vector<VarQuad> mlp_forward_tape(const Mlp& structure,
                                      std::span<const Var> params, size_t offset,
                                      Tape& tape, std::vector<VarQuad> act) {
  const int L = structure.num_affine();
  std::vector<Var> wrow, ach_v, ach_dx, ach_dt, ach_dxx;
  for (int l = 0; l < L; ++l) {
    const int nin = structure.layer_sizes[l], nout = structure.layer_sizes[l + 1];
    ach_v.clear();
    ach_dx.clear();
    ach_dt.clear();
    ach_dxx.clear();
    for (int i = 0; i < nin; ++i) {
      ach_v.push_back(act[i].v);
      ach_dx.push_back(act[i].dx);
      ach_dt.push_back(act[i].dt);
      ach_dxx.push_back(act[i].dxx);
    }
    std::vector<VarQuad> next(nout);
    const size_t woff = offset + structure.weight_offset(l);
    const size_t boff = offset + structure.bias_offset(l);
    for (int o = 0; o < nout; ++o) {
      wrow.assign(params.begin() + woff + static_cast<size_t>(o) * nin,
                  params.begin() + woff + static_cast<size_t>(o + 1) * nin);
      VarQuad z;
      z.v = tape.dot(wrow, ach_v) + params[boff + o];
      z.dx = tape.dot(wrow, ach_dx);
      z.dt = tape.dot(wrow, ach_dt);
      z.dxx = tape.dot(wrow, ach_dxx);
      const VarAct a = (l + 1 < L)
                           ? tape_act(structure.activation, structure.leaky_slope, z.v)
                           : tape_out_act(structure.output_activation, z.v);
      next[o] = apply_act_quad(a, z);
    }
    act = std::move(next);
  }
  return act;
}

std::vector<VarQuad> input_quads(Tape& tape, std::span<const double> values) {
  std::vector<VarQuad> q(values.size());
  const Var zero = tape.constant(0.0);
  const Var one = tape.constant(1.0);
  for (size_t i = 0; i < values.size(); ++i) {
    q[i].v = tape.constant(values[i]);
    q[i].dx = i == 0 ? one : zero;
    q[i].dt = i == 1 ? one : zero;
    q[i].dxx = zero;
  }
  return q;
}

}  // namespace

ad::Var DeterministicLoss::build_tape(ad::Tape& tape,
                                      std::span<const ad::Var> params) const {
  if (params.size() != dim())
    throw std::invalid_argument("build_tape: parameter size mismatch");
  const int nout = net_.output_width();
  const bool obs_has_u = obs_.u.has_value() && nout >= 2;
  const Var zero = tape.constant(0.0);

  // physics parameters as tape values (inputs when identified, constants otherwise)
  Var p_delta = zero, p_p = zero, p_sigma = zero, p_rmax = zero, p_eps = zero;
  Var a_rmax = zero, a_umax = zero, a_tau = zero;
  if (phys_.kind == ResidualKind::lwr3) {
    if (lambda_dim_ > 0) {
      p_delta = params[theta_dim_ + 0];
      p_p = params[theta_dim_ + 1];
      p_sigma = params[theta_dim_ + 2];
      p_rmax = params[theta_dim_ + 3];
      p_eps = exp(params[theta_dim_ + 4]);
    } else {
      p_delta = tape.constant(phys_.fd.delta);
      p_p = tape.constant(phys_.fd.p);
      p_sigma = tape.constant(phys_.fd.sigma);
      p_rmax = tape.constant(phys_.fd.rho_max);
      p_eps = tape.constant(phys_.fd.eps);
    }
  } else if (phys_.kind == ResidualKind::arz) {
    if (lambda_dim_ > 0) {
      a_rmax = params[theta_dim_ + 0];
      a_umax = params[theta_dim_ + 1];
      a_tau = params[theta_dim_ + 2];
    } else {
      a_rmax = tape.constant(phys_.arz.rho_max);
      a_umax = tape.constant(phys_.arz.u_max);
      a_tau = tape.constant(phys_.arz.tau);
    }
  }

  Var l_data = zero, l_phys = zero, l_bnd = zero;

  if (obs_.size() > 0 && weights_.alpha > 0.0) {
    for (size_t i = 0; i < obs_.size(); ++i) {
      const double in[2] = {obs_.points[i].x, obs_.points[i].t};
      auto out = mlp_forward_tape(net_, params, 0, tape,
                                  input_quads(tape, std::span<const double>(in, 2)));
      Var e = out[0].v - obs_.rho[i];
      l_data = l_data + e * e;
      if (obs_has_u) {
        Var eu = out[1].v - (*obs_.u)[i];
        l_data = l_data + eu * eu;
      }
    }
    l_data = l_data / static_cast<double>(obs_.size());
  }

  if (colloc_.size() > 0 && weights_.beta > 0.0) {
    for (const DomainPoint& pt : colloc_.points) {
      const double in[2] = {pt.x, pt.t};
      auto out = mlp_forward_tape(net_, params, 0, tape,
                                  input_quads(tape, std::span<const double>(in, 2)));
      if (phys_.kind == ResidualKind::lwr3) {
        const VarQuad& f = out[0];
        Var qp = flux_prime_three_param_t<Var>(f.v, p_delta, p_p, p_sigma, p_rmax);
        Var r = f.dt + qp * f.dx - p_eps * f.dxx;
        l_phys = l_phys + r * r;
      } else if (phys_.kind == ResidualKind::arz) {
        const VarQuad& R = out[0];
        const VarQuad& U = out[1];
        Var c = a_umax / a_rmax;
        Var ueq = a_umax * (1.0 - R.v / a_rmax);
        Var r1 = R.dt + R.dx * U.v + R.v * U.dx;
        Var r2 = (U.dt + c * R.dt) + U.v * (U.dx + c * R.dx) - (ueq - U.v) / a_tau;
        l_phys = l_phys + r1 * r1 + r2 * r2;
      } else {
        const VarQuad& f = out[0];
        std::vector<VarQuad> sin_(1);
        sin_[0].v = f.v;
        sin_[0].dx = tape.constant(1.0);
        sin_[0].dt = zero;
        sin_[0].dxx = zero;
        auto sout = mlp_forward_tape(phys_.surrogate, params, theta_dim_, tape,
                                     std::move(sin_));
        Var r = f.dt + sout[0].dx * f.dx;
        l_phys = l_phys + r * r;
      }
    }
    l_phys = l_phys / static_cast<double>(colloc_.size());
  }

  if (boundary_.size() > 0 && weights_.gamma > 0.0) {
    for (double tb : boundary_.times) {
      const double in_l[2] = {0.0, tb};
      const double in_r[2] = {boundary_.length, tb};
      auto out_l = mlp_forward_tape(net_, params, 0, tape,
                                    input_quads(tape, std::span<const double>(in_l, 2)));
      auto out_r = mlp_forward_tape(net_, params, 0, tape,
                                    input_quads(tape, std::span<const double>(in_r, 2)));
      for (int c = 0; c < nout; ++c) {
        Var d = out_l[c].v - out_r[c].v;
        l_bnd = l_bnd + d * d;
      }
    }
    l_bnd = l_bnd / static_cast<double>(boundary_.size());
  }

  return weights_.alpha * l_data + weights_.beta * l_phys + weights_.gamma * l_bnd;
}

PidlTerms loss_deterministic(const Mlp& net, const PhysicsSpec& phys,
                             const ObservationSet& obs, const CollocationSet& colloc,
                             const BoundaryCollocationSet& boundary,
                             LossWeights weights) {
  PhysicsSpec fixed = phys;
  fixed.identify = false;
  DeterministicLoss loss(net, fixed, obs, colloc, boundary, weights);
  std::vector<double> p = loss.initial_params();
  loss.value(p);
  return loss.last_terms();
}

}  // namespace tse

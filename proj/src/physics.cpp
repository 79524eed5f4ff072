#include "tse/physics.hpp"

namespace tse {

double flux_three_param(double rho, const ThreeParamFD& fd) {
  return flux_three_param_t<double>(rho, fd.delta, fd.p, fd.sigma, fd.rho_max);
}

double flux_prime_three_param(double rho, const ThreeParamFD& fd) {
  return flux_prime_three_param_t<double>(rho, fd.delta, fd.p, fd.sigma, fd.rho_max);
}

double flux_second_three_param(double rho, const ThreeParamFD& fd) {
  const double y = fd.delta * (rho / fd.rho_max - fd.p);
  const double w = 1.0 + y * y;
  return -fd.sigma * fd.delta * fd.delta / (fd.rho_max * fd.rho_max * w * std::sqrt(w));
}

double speed_greenshields(double rho, const GreenshieldsArzParams& p) {
  return p.u_max * (1.0 - rho / p.rho_max);
}

double hesitation_arz(double rho, const GreenshieldsArzParams& p) {
  return p.u_max * rho / p.rho_max;
}

ResidualValue residual_lwr3(const Mlp& net, const ThreeParamFD& fd, DomainPoint pt) {
  const ad::DiffResult d = eval_with_input_derivs(net, pt.x, pt.t);
  ResidualValue r;
  r.r_rho = d.d_dt + flux_prime_three_param(d.value, fd) * d.d_dx - fd.eps * d.d2_dx2;
  return r;
}

ResidualValue residual_arz_quads(const ad::Quad& rho, const ad::Quad& u,
                                 const GreenshieldsArzParams& p) {
  const double c = p.u_max / p.rho_max;  // h'(rho)
  ResidualValue r;
  r.r_rho = rho.dt + rho.dx * u.v + rho.v * u.dx;
  const double ueq = speed_greenshields(rho.v, p);
  r.r_u = (u.dt + c * rho.dt) + u.v * (u.dx + c * rho.dx) - (ueq - u.v) / p.tau;
  return r;
}

ResidualValue residual_arz(const Mlp& net, const GreenshieldsArzParams& p,
                           DomainPoint pt) {
  if (net.input_width() != 2 || net.output_width() < 2)
    throw std::invalid_argument("residual_arz: shared net must map 2 -> 2");
  QuadEval eval(net);
  const double in[2] = {pt.x, pt.t};
  auto out = eval.forward(net, std::span<const double>(in, 2));
  return residual_arz_quads(get_quad(out, 0), get_quad(out, 1), p);
}

ResidualValue residual_arz(const Mlp& net_rho, const Mlp& net_u,
                           const GreenshieldsArzParams& p, DomainPoint pt) {
  const ad::DiffResult dr = eval_with_input_derivs(net_rho, pt.x, pt.t);
  const ad::DiffResult du = eval_with_input_derivs(net_u, pt.x, pt.t);
  const ad::Quad rho{dr.value, dr.d_dx, dr.d_dt, dr.d2_dx2};
  const ad::Quad u{du.value, du.d_dx, du.d_dt, du.d2_dx2};
  return residual_arz_quads(rho, u, p);
}

ResidualValue residual_lwr_fdl(const Mlp& net, const Mlp& surrogate, DomainPoint pt) {
  if (surrogate.input_width() != 1 || surrogate.output_width() != 1)
    throw std::invalid_argument("residual_lwr_fdl: surrogate must map 1 -> 1");
  const ad::DiffResult d = eval_with_input_derivs(net, pt.x, pt.t);
  // probe the surrogate with a unit x-seed at rho so its dx channel is g'
  QuadEval eval(surrogate);
  const double in[1] = {d.value};
  auto out = eval.forward(surrogate, std::span<const double>(in, 1));
  const double gprime = get_quad(out, 0).dx;
  ResidualValue r;
  r.r_rho = d.d_dt + gprime * d.d_dx;
  return r;
}

}  // namespace tse

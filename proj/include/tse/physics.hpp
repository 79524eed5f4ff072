#pragma once

#include <optional>

#include "tse/autodiff.hpp"
#include "tse/domain.hpp"
#include "tse/mlp.hpp"

namespace tse {

/// Three-parameter fundamental diagram plus jam density and diffusion.
/// delta sets the roundness of Q, p the critical-density fraction, sigma
/// the flow scale; eps is the diffusion coefficient of the viscous LWR.
struct ThreeParamFD {
  double delta = 5.0;
  double p = 0.2;
  double sigma = 0.1;
  double rho_max = 1.0;
  double eps = 0.005;

  void validate() const {
    if (!(delta > 0.0) || !(sigma > 0.0) || !(rho_max > 0.0) || !(eps >= 0.0))
      throw std::invalid_argument("ThreeParamFD: need delta,sigma,rho_max > 0 and eps >= 0");
  }
};

/// Q(rho) = sigma*(a + (b-a)*rho/rho_max - sqrt(1+y^2)), y = delta*(rho/rho_max - p).
/// Vanishes identically at rho = 0 and rho = rho_max.
template <class T>
T flux_three_param_t(const T& rho, const T& delta, const T& p, const T& sigma,
                     const T& rho_max) {
  using std::sqrt;
  const T one(1.0);
  const T u = rho / rho_max;
  const T a = sqrt(one + (delta * p) * (delta * p));
  const T b = sqrt(one + (delta * (one - p)) * (delta * (one - p)));
  const T y = delta * (u - p);
  return sigma * (a + (b - a) * u - sqrt(one + y * y));
}

/// dQ/drho = sigma/rho_max * ((b-a) - delta*y/sqrt(1+y^2)).
template <class T>
T flux_prime_three_param_t(const T& rho, const T& delta, const T& p,
                           const T& sigma, const T& rho_max) {
  using std::sqrt;
  const T one(1.0);
  const T a = sqrt(one + (delta * p) * (delta * p));
  const T b = sqrt(one + (delta * (one - p)) * (delta * (one - p)));
  const T y = delta * (rho / rho_max - p);
  return sigma / rho_max * ((b - a) - delta * y / sqrt(one + y * y));
}

double flux_three_param(double rho, const ThreeParamFD& fd);
double flux_prime_three_param(double rho, const ThreeParamFD& fd);
/// d2Q/drho2 = -(sigma*delta^2/rho_max^2) * (1+y^2)^(-3/2); strictly negative,
/// so Q' is monotone decreasing and Q is strictly concave.
double flux_second_three_param(double rho, const ThreeParamFD& fd);

struct GreenshieldsArzParams {
  double rho_max = 1.13;
  double u_max = 1.02;
  double tau = 0.02;

  void validate() const {
    if (!(rho_max > 0.0) || !(u_max > 0.0) || !(tau > 0.0))
      throw std::invalid_argument("GreenshieldsArzParams: all parameters must be > 0");
  }
};

/// Greenshields equilibrium speed U_eq = u_max*(1 - rho/rho_max).
double speed_greenshields(double rho, const GreenshieldsArzParams& p);
/// Hesitation h(rho) = U_eq(0) - U_eq(rho) = u_max*rho/rho_max.
double hesitation_arz(double rho, const GreenshieldsArzParams& p);

struct ResidualValue {
  double r_rho = 0.0;
  std::optional<double> r_u;
};

/// r = rho_t + Q'(rho)*rho_x - eps*rho_xx with rho and its input derivatives
/// from the network.
ResidualValue residual_lwr3(const Mlp& net, const ThreeParamFD& fd, DomainPoint pt);

/// ARZ residual pair from a shared width-2 network (outputs rho, u).
ResidualValue residual_arz(const Mlp& net, const GreenshieldsArzParams& p, DomainPoint pt);
/// Same with separate width-1 networks for rho and u.
ResidualValue residual_arz(const Mlp& net_rho, const Mlp& net_u,
                           const GreenshieldsArzParams& p, DomainPoint pt);

/// ARZ residuals from precomputed quad carriers (shared by the trainers).
ResidualValue residual_arz_quads(const ad::Quad& rho, const ad::Quad& u,
                                 const GreenshieldsArzParams& p);

/// FD-learner residual: r = rho_t + g'(rho)*rho_x where g is a scalar
/// surrogate mapping density to flow.
ResidualValue residual_lwr_fdl(const Mlp& net, const Mlp& surrogate, DomainPoint pt);

}  // namespace tse

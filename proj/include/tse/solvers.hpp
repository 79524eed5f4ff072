#pragma once

#include <functional>
#include <utility>

#include "tse/domain.hpp"
#include "tse/physics.hpp"

namespace tse {

struct SolverConfig {
  double cfl_safety = 0.9;            // in (0, 1]
  int max_substeps = 200000;          // per output step
  double critical_density_tol = 1e-10;
  double rho_floor = 1e-8;            // ARZ vacuum protection

  void validate() const {
    if (!(cfl_safety > 0.0 && cfl_safety <= 1.0))
      throw std::invalid_argument("SolverConfig: cfl_safety must be in (0,1]");
    if (max_substeps < 1)
      throw std::invalid_argument("SolverConfig: max_substeps must be >= 1");
  }
};

struct SolveStats {
  long substeps = 0;
  long clamp_warnings = 0;   // godunov inputs outside [0, rho_max]
  long vacuum_warnings = 0;  // ARZ density floored
};

/// argmax of an arbitrary flux on [0, rho_max]: coarse scan to bracket,
/// golden-section refinement to tol.
double critical_density_of(const std::function<double(double)>& flux,
                           double rho_max, double tol);
double critical_density(const ThreeParamFD& fd,
                        double tol = SolverConfig{}.critical_density_tol);

/// Demand-supply Godunov interface flux:
/// F = min(D(rho_l), S(rho_r)), D(r) = Q(min(r, rho_cr)), S(r) = Q(max(r, rho_cr)).
/// Inputs outside [0, rho_max] are clamped (counted in stats when given).
double godunov_flux(double rho_left, double rho_right, const ThreeParamFD& fd,
                    double rho_cr, SolveStats* stats = nullptr);

/// Advance cell densities by dt_out (internally sub-stepped to satisfy the
/// combined advection-diffusion CFL bound).
void lwr_step(std::span<double> rho, const ThreeParamFD& fd, double dx,
              double dt_out, bool periodic, const SolverConfig& config,
              SolveStats* stats = nullptr);

/// Godunov solution of rho_t + (Q(rho))_x = eps*rho_xx; output sampled on
/// the grid (column j holds the state at t_j, column 0 the initial data).
Field solve_lwr(const Grid& grid, const std::function<double(double)>& initial_density,
                const ThreeParamFD& fd, bool periodic = true,
                const SolverConfig& config = {}, SolveStats* stats = nullptr);

/// Advance ARZ conservative variables (rho, y = rho*(u + h(rho))) by dt_out:
/// HLL fluxes plus exact relaxation of u toward U_eq.
void arz_step(std::span<double> rho, std::span<double> y,
              const GreenshieldsArzParams& params, double dx, double dt_out,
              bool periodic, const SolverConfig& config,
              SolveStats* stats = nullptr);

std::pair<Field, Field> solve_arz(const Grid& grid,
                                  const std::function<double(double)>& initial_rho,
                                  const std::function<double(double)>& initial_u,
                                  const GreenshieldsArzParams& params,
                                  bool periodic = true,
                                  const SolverConfig& config = {},
                                  SolveStats* stats = nullptr);

}  // namespace tse

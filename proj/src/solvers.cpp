#include "tse/solvers.hpp"

#include <algorithm>
#include <cmath>

namespace tse {

double critical_density_of(const std::function<double(double)>& flux,
                           double rho_max, double tol) {
  // bracket the max with a coarse scan; golden-section inside the bracket
  constexpr int kScan = 128;
  int best = 0;
  double best_q = flux(0.0);
  for (int k = 1; k <= kScan; ++k) {
    const double q = flux(rho_max * k / kScan);
    if (q > best_q) {
      best_q = q;
      best = k;
    }
  }
  double lo = rho_max * std::max(0, best - 1) / kScan;
  double hi = rho_max * std::min(kScan, best + 1) / kScan;
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double x1 = hi - inv_phi * (hi - lo);
  double x2 = lo + inv_phi * (hi - lo);
  double f1 = flux(x1), f2 = flux(x2);
  while (hi - lo > tol) {
    if (f1 < f2) {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = lo + inv_phi * (hi - lo);
      f2 = flux(x2);
    } else {
      hi = x2;
      x2 = x1;
      f2 = f1;
      x1 = hi - inv_phi * (hi - lo);
      f1 = flux(x1);
    }
  }
  return 0.5 * (lo + hi);
}

double critical_density(const ThreeParamFD& fd, double tol) {
  fd.validate();
  return critical_density_of([&](double r) { return flux_three_param(r, fd); },
                             fd.rho_max, tol);
}

double godunov_flux(double rho_left, double rho_right, const ThreeParamFD& fd,
                    double rho_cr, SolveStats* stats) {
  auto clamp = [&](double r) {
    if (r < 0.0 || r > fd.rho_max) {
      if (stats) ++stats->clamp_warnings;
      return std::clamp(r, 0.0, fd.rho_max);
    }
    return r;
  };
  const double rl = clamp(rho_left);
  const double rr = clamp(rho_right);
  const double demand = flux_three_param(std::min(rl, rho_cr), fd);
  const double supply = flux_three_param(std::max(rr, rho_cr), fd);
  return std::min(demand, supply);
}

namespace {

inline int wrap(int i, int n) { return i < 0 ? i + n : (i >= n ? i - n : i); }

// Combined explicit advection-diffusion stability bound. Q'' < 0 makes Q'
// monotone, so its extremes sit at the interval ends.
double lwr_stable_dt(const ThreeParamFD& fd, double dx, double cfl) {
  const double wave =
      std::max(std::abs(flux_prime_three_param(0.0, fd)),
               std::abs(flux_prime_three_param(fd.rho_max, fd)));
  double rate = wave / dx;
  if (fd.eps > 0.0) rate += 2.0 * fd.eps / (dx * dx);
  return cfl / rate;
}

}  // namespace

void lwr_step(std::span<double> rho, const ThreeParamFD& fd, double dx,
              double dt_out, bool periodic, const SolverConfig& config,
              SolveStats* stats) {
  const int nx = static_cast<int>(rho.size());
  const double dt_stable = lwr_stable_dt(fd, dx, config.cfl_safety);
  const int nsub = std::max(1, static_cast<int>(std::ceil(dt_out / dt_stable)));
  if (nsub > config.max_substeps)
    throw ConfigError("lwr_step: CFL bound dt <= " + std::to_string(dt_stable) +
                      " needs " + std::to_string(nsub) +
                      " substeps, exceeding max_substeps");
  const double dt = dt_out / nsub;
  const double rho_cr = critical_density(fd, config.critical_density_tol);

  static thread_local std::vector<double> flux;
  flux.resize(nx + 1);
  for (int s = 0; s < nsub; ++s) {
    for (int k = 0; k <= nx; ++k) {
      int il = wrap(k - 1, nx), ir = wrap(k, nx);
      if (!periodic) {
        il = std::clamp(k - 1, 0, nx - 1);  // zero-gradient ghosts
        ir = std::clamp(k, 0, nx - 1);
      }
      double f = godunov_flux(rho[il], rho[ir], fd, rho_cr, stats);
      if (fd.eps > 0.0) f -= fd.eps * (rho[ir] - rho[il]) / dx;
      flux[k] = f;
    }
    if (periodic) flux[nx] = flux[0];
    const double c = dt / dx;
    for (int i = 0; i < nx; ++i) rho[i] += c * (flux[i] - flux[i + 1]);
    if (stats) ++stats->substeps;
  }
}

Field solve_lwr(const Grid& grid, const std::function<double(double)>& initial_density,
                const ThreeParamFD& fd, bool periodic, const SolverConfig& config,
                SolveStats* stats) {
  fd.validate();
  config.validate();
  Field out(grid);
  std::vector<double> rho(grid.nx);
  for (int i = 0; i < grid.nx; ++i) rho[i] = initial_density(grid.x(i));
  for (int i = 0; i < grid.nx; ++i) out.at(i, 0) = rho[i];
  for (int j = 1; j < grid.nt; ++j) {
    lwr_step(rho, fd, grid.dx(), grid.dt(), periodic, config, stats);
    for (int i = 0; i < grid.nx; ++i) out.at(i, j) = rho[i];
  }
  return out;
}

namespace {

struct ArzFlux {
  double f_rho, f_y;
};

// HLL flux over the ARZ wave fan; lambda_1 = u - u_max*rho/rho_max,
// lambda_2 = u.
ArzFlux arz_hll(double rl, double yl, double rr, double yr,
                const GreenshieldsArzParams& p) {
  const double ul = yl / rl - hesitation_arz(rl, p);
  const double ur = yr / rr - hesitation_arz(rr, p);
  const double l1l = ul - p.u_max * rl / p.rho_max;
  const double l1r = ur - p.u_max * rr / p.rho_max;
  const double sl = std::min(l1l, l1r);
  const double sr = std::max(ul, ur);
  const ArzFlux fl{rl * ul, yl * ul};
  const ArzFlux fr{rr * ur, yr * ur};
  if (sl >= 0.0) return fl;
  if (sr <= 0.0) return fr;
  const double inv = 1.0 / (sr - sl);
  return {(sr * fl.f_rho - sl * fr.f_rho + sl * sr * (rr - rl)) * inv,
          (sr * fl.f_y - sl * fr.f_y + sl * sr * (yr - yl)) * inv};
}

double arz_wave_bound(std::span<const double> rho, std::span<const double> y,
                      const GreenshieldsArzParams& p) {
  double m = 0.0;
  for (size_t i = 0; i < rho.size(); ++i) {
    const double u = y[i] / rho[i] - hesitation_arz(rho[i], p);
    m = std::max(m, std::max(std::abs(u), std::abs(u - p.u_max * rho[i] / p.rho_max)));
  }
  return m;
}

}  // namespace

void arz_step(std::span<double> rho, std::span<double> y,
              const GreenshieldsArzParams& params, double dx, double dt_out,
              bool periodic, const SolverConfig& config, SolveStats* stats) {
  const int nx = static_cast<int>(rho.size());
  static thread_local std::vector<double> frho, fy;
  frho.resize(nx + 1);
  fy.resize(nx + 1);

  double remaining = dt_out;
  int taken = 0;
  while (remaining > 0.0) {
    const double wave = std::max(arz_wave_bound(rho, y, params), 1e-12);
    double dt = config.cfl_safety * dx / wave;
    if (dt >= remaining) dt = remaining;
    if (++taken > config.max_substeps)
      throw ConfigError("arz_step: CFL substepping exceeded max_substeps");

    for (int k = 0; k <= nx; ++k) {
      int il = wrap(k - 1, nx), ir = wrap(k, nx);
      if (!periodic) {
        il = std::clamp(k - 1, 0, nx - 1);
        ir = std::clamp(k, 0, nx - 1);
      }
      const ArzFlux f = arz_hll(rho[il], y[il], rho[ir], y[ir], params);
      frho[k] = f.f_rho;
      fy[k] = f.f_y;
    }
    if (periodic) {
      frho[nx] = frho[0];
      fy[nx] = fy[0];
    }
    const double c = dt / dx;
    for (int i = 0; i < nx; ++i) {
      rho[i] += c * (frho[i] - frho[i + 1]);
      y[i] += c * (fy[i] - fy[i + 1]);
      if (rho[i] < config.rho_floor) {
        rho[i] = config.rho_floor;
        if (stats) ++stats->vacuum_warnings;
      }
    }
    // stiff relaxation, integrated exactly with rho frozen:
    // u' = (U_eq - u)/tau  =>  u <- U_eq + (u - U_eq) * exp(-dt/tau)
    const double decay = std::exp(-dt / params.tau);
    for (int i = 0; i < nx; ++i) {
      const double h = hesitation_arz(rho[i], params);
      const double u = y[i] / rho[i] - h;
      const double ueq = speed_greenshields(rho[i], params);
      const double unew = ueq + (u - ueq) * decay;
      y[i] = rho[i] * (unew + h);
    }
    if (stats) ++stats->substeps;
    remaining -= dt;
  }
}

std::pair<Field, Field> solve_arz(const Grid& grid,
                                  const std::function<double(double)>& initial_rho,
                                  const std::function<double(double)>& initial_u,
                                  const GreenshieldsArzParams& params,
                                  bool periodic, const SolverConfig& config,
                                  SolveStats* stats) {
  params.validate();
  config.validate();
  Field out_rho(grid), out_u(grid);
  std::vector<double> rho(grid.nx), y(grid.nx);
  for (int i = 0; i < grid.nx; ++i) {
    rho[i] = std::max(initial_rho(grid.x(i)), config.rho_floor);
    const double u = initial_u(grid.x(i));
    y[i] = rho[i] * (u + hesitation_arz(rho[i], params));
  }
  auto write_col = [&](int j) {
    for (int i = 0; i < grid.nx; ++i) {
      out_rho.at(i, j) = rho[i];
      out_u.at(i, j) = y[i] / rho[i] - hesitation_arz(rho[i], params);
    }
  };
  write_col(0);
  for (int j = 1; j < grid.nt; ++j) {
    arz_step(rho, y, params, grid.dx(), grid.dt(), periodic, config, stats);
    write_col(j);
  }
  return {std::move(out_rho), std::move(out_u)};
}

}  // namespace tse

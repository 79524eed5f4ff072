#pragma once

#include <optional>
#include <string>
#include <vector>

#include "tse/common.hpp"

namespace tse {

/// Uniform space-time lattice over [0,L] x [0,T] (ring road in space).
/// Nodes sit at x_i = i*dx (i < nx) and t_j = j*dt (j < nt), so x=0 and
/// t=0 are on the lattice; on the periodic domain x=L coincides with x=0.
struct Grid {
  double length = 1.0;   // L
  double horizon = 1.0;  // T
  int nx = 2;
  int nt = 2;

  double dx() const { return length / nx; }
  double dt() const { return horizon / nt; }
  double x(int i) const { return i * dx(); }
  double t(int j) const { return j * dt(); }
  long num_nodes() const { return static_cast<long>(nx) * nt; }

  bool operator==(const Grid&) const = default;
};

Grid make_grid(double length, double horizon, int nx, int nt);

/// Scalar values on a grid, indexed (i: space, j: time); storage is
/// row-major with x outer, matching the CSV layout.
struct Field {
  Grid grid;
  std::vector<double> values;  // size nx*nt

  Field() = default;
  explicit Field(const Grid& g, double fill = 0.0)
      : grid(g), values(g.num_nodes(), fill) {}

  double& at(int i, int j) { return values[static_cast<size_t>(i) * grid.nt + j]; }
  double at(int i, int j) const { return values[static_cast<size_t>(i) * grid.nt + j]; }
};

struct DomainPoint {
  double x = 0.0;
  double t = 0.0;
};

/// Labeled observations: density always, speed optionally.
struct ObservationSet {
  std::vector<DomainPoint> points;
  std::vector<double> rho;
  std::optional<std::vector<double>> u;
  size_t size() const { return points.size(); }
};

struct CollocationSet {
  std::vector<DomainPoint> points;
  size_t size() const { return points.size(); }
};

/// Times t_b; each induces the boundary pair (0, t_b) and (L, t_b).
struct BoundaryCollocationSet {
  std::vector<double> times;
  double length = 1.0;  // L of the domain the pairs live on
  size_t size() const { return times.size(); }
};

/// Evenly spaced detector positions on [0,L]: both endpoints included for
/// m >= 2, midpoint L/2 for m = 1.
std::vector<double> detector_positions(double length, int m);

/// Snap a position to the nearest grid node, wrapping periodically
/// (x = L snaps to node 0 at distance zero). Returns the node index.
int snap_to_node(const Grid& grid, double x);

/// One observation per detector per grid time step, values read from the
/// fields at the snapped node, plus i.i.d. Gaussian noise (std noise_std).
/// Noisy densities are clipped at zero. Deterministic given seed.
ObservationSet sample_loop_detectors(const Field& rho, const Field* u, int m,
                                     double noise_std, std::uint64_t seed);

enum class CollocationStrategy { uniform_random, grid_subsample };

CollocationSet sample_collocation(const Grid& grid, long n,
                                  CollocationStrategy strategy,
                                  std::uint64_t seed);

/// n times on [0,T]: uniform draws, or even placement {k*T/n} (T/2 when
/// n = 1, so an even single sample sits mid-horizon).
BoundaryCollocationSet sample_boundary(const Grid& grid, int n, bool even,
                                       std::uint64_t seed);

// CSV formats: fields use header `x,t,value`, row-major (x outer, t inner);
// observation sets use `x,t,rho` or `x,t,rho,u`.
void write_field_csv(const std::string& path, const Field& field);
Field read_field_csv(const std::string& path);
void write_observations_csv(const std::string& path, const ObservationSet& obs);
ObservationSet read_observations_csv(const std::string& path);
void write_collocation_csv(const std::string& path, const CollocationSet& c);
CollocationSet read_collocation_csv(const std::string& path);
void write_boundary_csv(const std::string& path, const BoundaryCollocationSet& b);
BoundaryCollocationSet read_boundary_csv(const std::string& path);

}  // namespace tse

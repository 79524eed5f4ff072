#include "tse/domain.hpp"

#include <algorithm>
#include <cerrno>
#include <charconv>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

namespace tse {

Grid make_grid(double length, double horizon, int nx, int nt) {
  if (!(length > 0.0) || !(horizon > 0.0))
    throw std::invalid_argument("make_grid: length and horizon must be positive");
  if (nx < 2 || nt < 2)
    throw std::invalid_argument("make_grid: need nx >= 2 and nt >= 2");
  return Grid{length, horizon, nx, nt};
}

std::vector<double> detector_positions(double length, int m) {
  if (m < 1) throw std::invalid_argument("detector_positions: m must be >= 1");
  if (m == 1) return {length / 2.0};
  std::vector<double> xs(m);
  for (int k = 0; k < m; ++k) xs[k] = k * length / (m - 1);
  return xs;
}

int snap_to_node(const Grid& grid, double x) {
  int i = static_cast<int>(std::lround(x / grid.dx()));
  i %= grid.nx;
  if (i < 0) i += grid.nx;
  return i;
}

ObservationSet sample_loop_detectors(const Field& rho, const Field* u, int m,
                                     double noise_std, std::uint64_t seed) {
  if (m < 1) throw std::invalid_argument("sample_loop_detectors: m must be >= 1");
  if (u && !(u->grid == rho.grid))
    throw std::invalid_argument("sample_loop_detectors: fields on different grids");
  const Grid& g = rho.grid;

  std::vector<int> cells;
  for (double x : detector_positions(g.length, m)) cells.push_back(snap_to_node(g, x));

  ObservationSet obs;
  obs.points.reserve(static_cast<size_t>(m) * g.nt);
  obs.rho.reserve(obs.points.capacity());
  if (u) obs.u.emplace();

  Rng rng = make_rng(seed);
  std::normal_distribution<double> noise(0.0, noise_std);
  for (int cell : cells) {
    for (int j = 0; j < g.nt; ++j) {
      obs.points.push_back({g.x(cell), g.t(j)});
      double r = rho.at(cell, j);
      if (noise_std > 0.0) r = std::max(0.0, r + noise(rng));
      obs.rho.push_back(r);
      if (u) {
        double v = u->at(cell, j);
        if (noise_std > 0.0) v += noise(rng);
        obs.u->push_back(v);
      }
    }
  }
  return obs;
}

CollocationSet sample_collocation(const Grid& grid, long n,
                                  CollocationStrategy strategy,
                                  std::uint64_t seed) {
  if (n < 0) throw std::invalid_argument("sample_collocation: n must be >= 0");
  CollocationSet out;
  out.points.reserve(n);
  Rng rng = make_rng(seed);
  if (strategy == CollocationStrategy::uniform_random) {
    std::uniform_real_distribution<double> ux(0.0, grid.length);
    std::uniform_real_distribution<double> ut(0.0, grid.horizon);
    for (long k = 0; k < n; ++k) {
      double x = ux(rng);
      double t = ut(rng);
      out.points.push_back({x, t});
    }
  } else {
    const long total = grid.num_nodes();
    if (n > total)
      throw std::invalid_argument("sample_collocation: grid-subsample larger than grid");
    // partial Fisher-Yates over node indices
    std::vector<long> idx(total);
    for (long k = 0; k < total; ++k) idx[k] = k;
    for (long k = 0; k < n; ++k) {
      std::uniform_int_distribution<long> pick(k, total - 1);
      std::swap(idx[k], idx[pick(rng)]);
      long node = idx[k];
      int i = static_cast<int>(node / grid.nt);
      int j = static_cast<int>(node % grid.nt);
      out.points.push_back({grid.x(i), grid.t(j)});
    }
  }
  return out;
}

BoundaryCollocationSet sample_boundary(const Grid& grid, int n, bool even,
                                       std::uint64_t seed) {
  if (n < 0) throw std::invalid_argument("sample_boundary: n must be >= 0");
  BoundaryCollocationSet out;
  out.length = grid.length;
  out.times.reserve(n);
  if (even) {
    if (n == 1) {
      out.times.push_back(grid.horizon / 2.0);
    } else {
      for (int k = 0; k < n; ++k) out.times.push_back(k * grid.horizon / n);
    }
  } else {
    Rng rng = make_rng(seed);
    std::uniform_real_distribution<double> ut(0.0, grid.horizon);
    for (int k = 0; k < n; ++k) out.times.push_back(ut(rng));
  }
  return out;
}

namespace {

void write_double(std::string& buf, double v) {
  char tmp[32];
  int len = std::snprintf(tmp, sizeof(tmp), "%.17g", v);
  buf.append(tmp, len);
}

std::vector<std::vector<double>> read_numeric_csv(const std::string& path,
                                                  const std::string& expected_header,
                                                  size_t min_cols, size_t max_cols) {
  std::ifstream in(path);
  if (!in) throw ParseError(0, "cannot open " + path);
  std::string line;
  long lineno = 0;
  if (!std::getline(in, line)) throw ParseError(0, path + ": empty file");
  ++lineno;
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line.substr(0, expected_header.size()) != expected_header)
    throw ParseError(lineno, path + ": expected header starting with '" + expected_header + "'");
  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<double> row;
    const char* p = line.c_str();
    const char* end = p + line.size();
    while (p < end) {
      double v;
      auto [next, ec] = std::from_chars(p, end, v);
      if (ec != std::errc())
        throw ParseError(lineno, path + ": bad number in row");
      row.push_back(v);
      p = next;
      if (p < end) {
        if (*p != ',') throw ParseError(lineno, path + ": expected comma");
        ++p;
      }
    }
    if (row.size() < min_cols || row.size() > max_cols)
      throw ParseError(lineno, path + ": wrong column count");
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace

void write_field_csv(const std::string& path, const Field& field) {
  std::string buf = "x,t,value\n";
  buf.reserve(field.values.size() * 48);
  const Grid& g = field.grid;
  for (int i = 0; i < g.nx; ++i) {
    for (int j = 0; j < g.nt; ++j) {
      write_double(buf, g.x(i));
      buf.push_back(',');
      write_double(buf, g.t(j));
      buf.push_back(',');
      write_double(buf, field.at(i, j));
      buf.push_back('\n');
    }
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
}

Field read_field_csv(const std::string& path) {
  auto rows = read_numeric_csv(path, "x,t,value", 3, 3);
  if (rows.empty()) throw ParseError(0, path + ": field file has no rows");
  // infer lattice: t values cycle fastest (x outer, t inner)
  int nt = 0;
  for (const auto& r : rows) {
    if (nt > 0 && r[1] == rows[0][1]) break;
    ++nt;
  }
  if (nt == 0 || rows.size() % nt != 0)
    throw ParseError(0, path + ": rows do not form a complete lattice");
  int nx = static_cast<int>(rows.size() / nt);
  if (nx < 2 || nt < 2) throw ParseError(0, path + ": lattice too small");
  double dx = rows[static_cast<size_t>(nt)][0] - rows[0][0];
  double dt = rows[1][1] - rows[0][1];
  Grid g = make_grid(dx * nx, dt * nt, nx, nt);
  Field f(g);
  for (int i = 0; i < nx; ++i)
    for (int j = 0; j < nt; ++j) f.at(i, j) = rows[static_cast<size_t>(i) * nt + j][2];
  return f;
}

void write_observations_csv(const std::string& path, const ObservationSet& obs) {
  std::string buf = obs.u ? "x,t,rho,u\n" : "x,t,rho\n";
  for (size_t k = 0; k < obs.size(); ++k) {
    write_double(buf, obs.points[k].x);
    buf.push_back(',');
    write_double(buf, obs.points[k].t);
    buf.push_back(',');
    write_double(buf, obs.rho[k]);
    if (obs.u) {
      buf.push_back(',');
      write_double(buf, (*obs.u)[k]);
    }
    buf.push_back('\n');
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
}

ObservationSet read_observations_csv(const std::string& path) {
  auto rows = read_numeric_csv(path, "x,t,rho", 3, 4);
  ObservationSet obs;
  bool with_u = !rows.empty() && rows[0].size() == 4;
  if (with_u) obs.u.emplace();
  for (size_t k = 0; k < rows.size(); ++k) {
    if (rows[k].size() != (with_u ? 4u : 3u))
      throw ParseError(static_cast<long>(k + 2), path + ": inconsistent column count");
    obs.points.push_back({rows[k][0], rows[k][1]});
    obs.rho.push_back(rows[k][2]);
    if (with_u) obs.u->push_back(rows[k][3]);
  }
  return obs;
}

void write_collocation_csv(const std::string& path, const CollocationSet& c) {
  std::string buf = "x,t\n";
  for (const auto& p : c.points) {
    write_double(buf, p.x);
    buf.push_back(',');
    write_double(buf, p.t);
    buf.push_back('\n');
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
}

CollocationSet read_collocation_csv(const std::string& path) {
  auto rows = read_numeric_csv(path, "x,t", 2, 2);
  CollocationSet c;
  for (const auto& r : rows) c.points.push_back({r[0], r[1]});
  return c;
}

void write_boundary_csv(const std::string& path, const BoundaryCollocationSet& b) {
  std::string buf = "t\n";
  for (double t : b.times) {
    write_double(buf, t);
    buf.push_back('\n');
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
}

BoundaryCollocationSet read_boundary_csv(const std::string& path) {
  auto rows = read_numeric_csv(path, "t", 1, 1);
  BoundaryCollocationSet b;
  for (const auto& r : rows) b.times.push_back(r[0]);
  return b;
}

}  // namespace tse

#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace magloc {

using cdouble = std::complex<double>;

struct config_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct numeric_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline constexpr int kBoundary = -1;

// Uniform node-centered grid over (xmin,xmax) x (ymin,ymax), boundary nodes
// included.  Cells must be square: h = (xmax-xmin)/(nx-1) = (ymax-ymin)/(ny-1).
struct Grid {
  int nx = 0, ny = 0;
  double xmin = 0, xmax = 0, ymin = 0, ymax = 0;
  double h = 0;

  int node_count() const { return nx * ny; }
  int interior_count() const { return (nx - 2) * (ny - 2); }

  int node_index(int i, int j) const { return j * nx + i; }

  double x(int i) const { return (i == nx - 1) ? xmax : xmin + i * h; }
  double y(int j) const { return (j == ny - 1) ? ymax : ymin + j * h; }

  bool is_boundary(int i, int j) const {
    return i == 0 || j == 0 || i == nx - 1 || j == ny - 1;
  }

  // Consecutive index over interior nodes, row-major; kBoundary on the rim.
  int interior_index(int i, int j) const {
    if (i < 0 || i >= nx || j < 0 || j >= ny)
      throw config_error("interior_index: node (" + std::to_string(i) + "," +
                         std::to_string(j) + ") out of range");
    if (is_boundary(i, j)) return kBoundary;
    return (j - 1) * (nx - 2) + (i - 1);
  }

  // Inverse of interior_index.
  void interior_coords(int p, int& i, int& j) const {
    i = p % (nx - 2) + 1;
    j = p / (nx - 2) + 1;
  }

  bool inside(double px, double py) const {
    return px > xmin && px < xmax && py > ymin && py < ymax;
  }

  double boundary_distance(double px, double py) const {
    return std::min(std::min(px - xmin, xmax - px),
                    std::min(py - ymin, ymax - py));
  }
};

inline Grid build_grid(double xmin, double xmax, double ymin, double ymax,
                       int n) {
  if (n < 3) throw config_error("build_grid: need at least 3 nodes per side");
  if (!(xmax > xmin) || !(ymax > ymin))
    throw config_error("build_grid: empty domain");
  Grid g;
  g.nx = n;
  double hx = (xmax - xmin) / (n - 1);
  int ny = (int)std::lround((ymax - ymin) / hx) + 1;
  if (ny < 3) throw config_error("build_grid: need at least 3 nodes per side");
  double hy = (ymax - ymin) / (ny - 1);
  if (std::abs(hy - hx) > 1e-12 * std::max(hx, hy))
    throw config_error("build_grid: non-square cells (hx=" +
                       std::to_string(hx) + ", hy=" + std::to_string(hy) + ")");
  g.ny = ny;
  g.xmin = xmin;
  g.xmax = xmax;
  g.ymin = ymin;
  g.ymax = ymax;
  g.h = hx;
  return g;
}

}  // namespace magloc

#pragma once

#include <algorithm>
#include <cmath>
#include <utility>
#include <vector>

#include "magloc/expr.hpp"
#include "magloc/grid.hpp"

namespace magloc {

struct ScalarField {
  Grid grid;
  std::vector<double> values;  // node samples, index j*nx+i

  ScalarField() = default;
  explicit ScalarField(const Grid& g, double fill = 0.0)
      : grid(g), values(g.node_count(), fill) {}

  double& at(int i, int j) { return values[grid.node_index(i, j)]; }
  double at(int i, int j) const { return values[grid.node_index(i, j)]; }

  double max_abs() const {
    double m = 0;
    for (double v : values) m = std::max(m, std::abs(v));
    return m;
  }
  double max_abs_interior() const {
    double m = 0;
    for (int j = 1; j < grid.ny - 1; ++j)
      for (int i = 1; i < grid.nx - 1; ++i) m = std::max(m, std::abs(at(i, j)));
    return m;
  }

  bool all_finite() const {
    for (double v : values)
      if (!std::isfinite(v)) return false;
    return true;
  }

  // Bilinear interpolation; (px,py) must lie in the bounding box.
  double interp(double px, double py) const {
    const Grid& g = grid;
    double fx = (px - g.xmin) / g.h, fy = (py - g.ymin) / g.h;
    int i = std::clamp((int)fx, 0, g.nx - 2);
    int j = std::clamp((int)fy, 0, g.ny - 2);
    double tx = fx - i, ty = fy - j;
    const double* v = values.data();
    int p = j * g.nx + i;
    double a = v[p] + tx * (v[p + 1] - v[p]);
    double b = v[p + g.nx] + tx * (v[p + g.nx + 1] - v[p + g.nx]);
    return a + ty * (b - a);
  }
};

struct VectorField2 {
  Grid grid;
  std::vector<double> ax, ay;

  VectorField2() = default;
  explicit VectorField2(const Grid& g)
      : grid(g), ax(g.node_count(), 0.0), ay(g.node_count(), 0.0) {}

  double max_norm() const {
    double m = 0;
    for (size_t p = 0; p < ax.size(); ++p)
      m = std::max(m, std::hypot(ax[p], ay[p]));
    return m;
  }

  bool all_finite() const {
    for (size_t p = 0; p < ax.size(); ++p)
      if (!std::isfinite(ax[p]) || !std::isfinite(ay[p])) return false;
    return true;
  }

  std::pair<double, double> interp(double px, double py) const {
    const Grid& g = grid;
    double fx = (px - g.xmin) / g.h, fy = (py - g.ymin) / g.h;
    int i = std::clamp((int)fx, 0, g.nx - 2);
    int j = std::clamp((int)fy, 0, g.ny - 2);
    double tx = fx - i, ty = fy - j;
    int p = j * g.nx + i;
    auto lerp2 = [&](const std::vector<double>& v) {
      double a = v[p] + tx * (v[p + 1] - v[p]);
      double b = v[p + g.nx] + tx * (v[p + g.nx + 1] - v[p + g.nx]);
      return a + ty * (b - a);
    };
    return {lerp2(ax), lerp2(ay)};
  }
};

inline ScalarField sample_scalar(const FieldExpression& f, const Grid& g) {
  ScalarField s(g);
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) {
      double v = f.eval(g.x(i), g.y(j));
      if (!std::isfinite(v))
        throw numeric_error("sample_scalar: non-finite value at node (" +
                            std::to_string(i) + "," + std::to_string(j) + ")");
      s.at(i, j) = v;
    }
  return s;
}

inline VectorField2 sample_field(const FieldExpression& fx,
                                 const FieldExpression& fy, const Grid& g) {
  VectorField2 f(g);
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) {
      double vx = fx.eval(g.x(i), g.y(j));
      double vy = fy.eval(g.x(i), g.y(j));
      if (!std::isfinite(vx) || !std::isfinite(vy))
        throw numeric_error("sample_field: non-finite value at node (" +
                            std::to_string(i) + "," + std::to_string(j) + ")");
      int p = g.node_index(i, j);
      f.ax[p] = vx;
      f.ay[p] = vy;
    }
  return f;
}

template <class Fn>
inline VectorField2 sample_field_fn(Fn&& fn, const Grid& g) {
  VectorField2 f(g);
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) {
      auto [vx, vy] = fn(g.x(i), g.y(j));
      int p = g.node_index(i, j);
      f.ax[p] = vx;
      f.ay[p] = vy;
    }
  return f;
}

template <class Fn>
inline ScalarField sample_scalar_fn(Fn&& fn, const Grid& g) {
  ScalarField s(g);
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) s.at(i, j) = fn(g.x(i), g.y(j));
  return s;
}

}  // namespace magloc

#pragma once

#include "magloc/field.hpp"

namespace magloc {

// d/dx of node data along each row: central in the interior, one-sided
// second-order at the two boundary columns.
inline void ddx(const Grid& g, const double* f, double* out) {
  const int nx = g.nx, ny = g.ny;
  const double inv2h = 1.0 / (2.0 * g.h);
  for (int j = 0; j < ny; ++j) {
    const double* r = f + j * nx;
    double* o = out + j * nx;
    o[0] = (-3.0 * r[0] + 4.0 * r[1] - r[2]) * inv2h;
    for (int i = 1; i < nx - 1; ++i) o[i] = (r[i + 1] - r[i - 1]) * inv2h;
    o[nx - 1] = (3.0 * r[nx - 1] - 4.0 * r[nx - 2] + r[nx - 3]) * inv2h;
  }
}

inline void ddy(const Grid& g, const double* f, double* out) {
  const int nx = g.nx, ny = g.ny;
  const double inv2h = 1.0 / (2.0 * g.h);
  for (int i = 0; i < nx; ++i) {
    out[i] = (-3.0 * f[i] + 4.0 * f[nx + i] - f[2 * nx + i]) * inv2h;
    out[(ny - 1) * nx + i] = (3.0 * f[(ny - 1) * nx + i] -
                              4.0 * f[(ny - 2) * nx + i] +
                              f[(ny - 3) * nx + i]) * inv2h;
  }
  for (int j = 1; j < ny - 1; ++j)
    for (int i = 0; i < nx; ++i)
      out[j * nx + i] = (f[(j + 1) * nx + i] - f[(j - 1) * nx + i]) * inv2h;
}

// Transposes of ddx/ddy in the plain node-wise inner product.
inline void ddx_t(const Grid& g, const double* f, double* out) {
  const int nx = g.nx, ny = g.ny;
  const double inv2h = 1.0 / (2.0 * g.h);
  for (int j = 0; j < ny; ++j) {
    const double* r = f + j * nx;
    double* o = out + j * nx;
    for (int i = 0; i < nx; ++i) o[i] = 0.0;
    o[0] += -3.0 * r[0] * inv2h;
    o[1] += 4.0 * r[0] * inv2h;
    o[2] += -r[0] * inv2h;
    for (int i = 1; i < nx - 1; ++i) {
      o[i + 1] += r[i] * inv2h;
      o[i - 1] -= r[i] * inv2h;
    }
    o[nx - 1] += 3.0 * r[nx - 1] * inv2h;
    o[nx - 2] += -4.0 * r[nx - 1] * inv2h;
    o[nx - 3] += r[nx - 1] * inv2h;
  }
}

inline void ddy_t(const Grid& g, const double* f, double* out) {
  const int nx = g.nx, ny = g.ny;
  const double inv2h = 1.0 / (2.0 * g.h);
  for (int p = 0; p < nx * ny; ++p) out[p] = 0.0;
  for (int i = 0; i < nx; ++i) {
    out[i] += -3.0 * f[i] * inv2h;
    out[nx + i] += 4.0 * f[i] * inv2h;
    out[2 * nx + i] += -f[i] * inv2h;
    const int top = (ny - 1) * nx;
    out[top + i] += 3.0 * f[top + i] * inv2h;
    out[top - nx + i] += -4.0 * f[top + i] * inv2h;
    out[top - 2 * nx + i] += f[top + i] * inv2h;
  }
  for (int j = 1; j < ny - 1; ++j)
    for (int i = 0; i < nx; ++i) {
      out[(j + 1) * nx + i] += f[j * nx + i] * inv2h;
      out[(j - 1) * nx + i] -= f[j * nx + i] * inv2h;
    }
}

inline ScalarField curl(const VectorField2& a) {
  const Grid& g = a.grid;
  if (g.nx < 3 || g.ny < 3) throw config_error("curl: grid too small");
  ScalarField c(g);
  std::vector<double> tmp(g.node_count());
  ddx(g, a.ay.data(), c.values.data());
  ddy(g, a.ax.data(), tmp.data());
  for (int p = 0; p < g.node_count(); ++p) c.values[p] -= tmp[p];
  return c;
}

inline ScalarField divergence(const VectorField2& a) {
  const Grid& g = a.grid;
  if (g.nx < 3 || g.ny < 3) throw config_error("divergence: grid too small");
  ScalarField d(g);
  std::vector<double> tmp(g.node_count());
  ddx(g, a.ax.data(), d.values.data());
  ddy(g, a.ay.data(), tmp.data());
  for (int p = 0; p < g.node_count(); ++p) d.values[p] += tmp[p];
  return d;
}

inline VectorField2 gradient(const ScalarField& f) {
  VectorField2 gvec(f.grid);
  ddx(f.grid, f.values.data(), gvec.ax.data());
  ddy(f.grid, f.values.data(), gvec.ay.data());
  return gvec;
}

// Rotated gradient (-d/dy, d/dx); divergence-free against `divergence`
// because the two axis operators commute.
inline VectorField2 rot_gradient(const ScalarField& psi) {
  VectorField2 f(psi.grid);
  ddy(psi.grid, psi.values.data(), f.ax.data());
  for (double& v : f.ax) v = -v;
  ddx(psi.grid, psi.values.data(), f.ay.data());
  return f;
}

}  // namespace magloc

// Independent test oracles: finite-difference Christoffels, Brioschi
// curvature from the chart metric, refined quadrature. These must stay
// independent of the implementation paths they check.

#pragma once

#include <cmath>
#include <functional>

#include "beamlab/common.hpp"
#include "beamlab/manifold.hpp"

namespace oracles {

using beamlab::Christoffel;
using beamlab::SymMat2;
using beamlab::Vec2;

// Gamma^k_{ij} from central differences of the metric components.
inline Christoffel fd_christoffel(const beamlab::geometry::TransversalManifold& m, const Vec2& p,
                                  double step = 1e-5) {
  auto g_at = [&](double dx, double dy) { return m.metric({p.x + dx, p.y + dy}); };
  const SymMat2 gp1 = g_at(step, 0.0), gm1 = g_at(-step, 0.0);
  const SymMat2 gp2 = g_at(0.0, step), gm2 = g_at(0.0, -step);
  const SymMat2 d1 = (gp1 - gm1) * (0.5 / step);
  const SymMat2 d2 = (gp2 - gm2) * (0.5 / step);
  const SymMat2 g = g_at(0.0, 0.0);
  const SymMat2 gi = g.inverse();
  const double d[2][2][2] = {{{d1.xx, d1.xy}, {d1.xy, d1.yy}},
                             {{d2.xx, d2.xy}, {d2.xy, d2.yy}}};
  const double giv[2][2] = {{gi.xx, gi.xy}, {gi.xy, gi.yy}};
  Christoffel out;
  for (int k = 0; k < 2; ++k) {
    double c[2][2];
    for (int i = 0; i < 2; ++i)
      for (int j = i; j < 2; ++j) {
        double s = 0.0;
        for (int l = 0; l < 2; ++l) s += 0.5 * giv[k][l] * (d[i][j][l] + d[j][i][l] - d[l][i][j]);
        c[i][j] = s;
      }
    out[static_cast<std::size_t>(k)] = {c[0][0], c[0][1], c[1][1]};
  }
  return out;
}

// Gaussian curvature by the Brioschi formula with central differences.
inline double brioschi_curvature(const beamlab::geometry::TransversalManifold& m, const Vec2& p,
                                 double step = 1e-4) {
  auto comp = [&](double dx, double dy, int which) {
    const SymMat2 g = m.metric({p.x + dx, p.y + dy});
    return which == 0 ? g.xx : (which == 1 ? g.xy : g.yy);
  };
  auto d_u = [&](int w) { return (comp(step, 0, w) - comp(-step, 0, w)) / (2.0 * step); };
  auto d_v = [&](int w) { return (comp(0, step, w) - comp(0, -step, w)) / (2.0 * step); };
  auto d_uu = [&](int w) {
    return (comp(step, 0, w) - 2.0 * comp(0, 0, w) + comp(-step, 0, w)) / (step * step);
  };
  auto d_vv = [&](int w) {
    return (comp(0, step, w) - 2.0 * comp(0, 0, w) + comp(0, -step, w)) / (step * step);
  };
  auto d_uv = [&](int w) {
    return (comp(step, step, w) - comp(step, -step, w) - comp(-step, step, w) +
            comp(-step, -step, w)) /
           (4.0 * step * step);
  };

  const double E = comp(0, 0, 0), F = comp(0, 0, 1), G = comp(0, 0, 2);
  const double Eu = d_u(0), Ev = d_v(0);
  const double Fu = d_u(1), Fv = d_v(1);
  const double Gu = d_u(2), Gv = d_v(2);
  const double Evv = d_vv(0), Guu = d_uu(2), Fuv = d_uv(1);

  auto det3 = [](double a11, double a12, double a13, double a21, double a22, double a23,
                 double a31, double a32, double a33) {
    return a11 * (a22 * a33 - a23 * a32) - a12 * (a21 * a33 - a23 * a31) +
           a13 * (a21 * a32 - a22 * a31);
  };

  const double m1 = det3(-0.5 * Evv + Fuv - 0.5 * Guu, 0.5 * Eu, Fu - 0.5 * Ev,  //
                         Fv - 0.5 * Gu, E, F,                                    //
                         0.5 * Gv, F, G);
  const double m2 = det3(0.0, 0.5 * Ev, 0.5 * Gu,  //
                         0.5 * Ev, E, F,           //
                         0.5 * Gu, F, G);
  const double den = E * G - F * F;
  return (m1 - m2) / (den * den);
}

// Composite Simpson on [a, b] with n (even) intervals.
inline double simpson(const std::function<double(double)>& f, double a, double b, int n) {
  if (n % 2 == 1) ++n;
  const double h = (b - a) / n;
  double s = f(a) + f(b);
  for (int i = 1; i < n; ++i) s += f(a + i * h) * (i % 2 == 1 ? 4.0 : 2.0);
  return s * h / 3.0;
}

inline beamlab::cplx simpson_c(const std::function<beamlab::cplx(double)>& f, double a, double b,
                               int n) {
  if (n % 2 == 1) ++n;
  const double h = (b - a) / n;
  beamlab::cplx s = f(a) + f(b);
  for (int i = 1; i < n; ++i) s += f(a + i * h) * (i % 2 == 1 ? 4.0 : 2.0);
  return s * (h / 3.0);
}

}  // namespace oracles

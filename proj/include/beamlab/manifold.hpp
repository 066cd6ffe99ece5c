// Transversal manifold (M0, g0): chart domain with implicit boundary,
// metric evaluation, Christoffel symbols, and the bundled example metrics.

#pragma once

#include <functional>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "beamlab/common.hpp"

namespace beamlab::geometry {

// ---------------------------------------------------------------------------
// Chart domain with implicit boundary: interior { rho > 0 }, boundary
// { rho = 0 }, |grad rho| > 0 on the boundary.
// ---------------------------------------------------------------------------

struct Rect {
  double xmin = -1.0, xmax = 1.0, ymin = -1.0, ymax = 1.0;
  bool contains(const Vec2& p) const {
    return p.x >= xmin && p.x <= xmax && p.y >= ymin && p.y <= ymax;
  }
};

enum class DomainKind { Disk, Rectangle };

struct Domain {
  DomainKind kind = DomainKind::Disk;
  Vec2 center{0.0, 0.0};
  double radius = 1.0;  // disk
  Rect rect;            // rectangle

  // Smooth defining function: disk uses (R^2 - |x-c|^2) / (2R) so that
  // |grad rho| = 1 on the boundary circle.
  double rho(const Vec2& p) const {
    if (kind == DomainKind::Disk) {
      const Vec2 d = p - center;
      return (radius * radius - dot(d, d)) / (2.0 * radius);
    }
    return std::min(std::min(p.x - rect.xmin, rect.xmax - p.x),
                    std::min(p.y - rect.ymin, rect.ymax - p.y));
  }

  Vec2 grad_rho(const Vec2& p) const {
    if (kind == DomainKind::Disk) return (p - center) * (-1.0 / radius);
    const double dx0 = p.x - rect.xmin, dx1 = rect.xmax - p.x;
    const double dy0 = p.y - rect.ymin, dy1 = rect.ymax - p.y;
    const double m = std::min(std::min(dx0, dx1), std::min(dy0, dy1));
    if (m == dx0) return {1.0, 0.0};
    if (m == dx1) return {-1.0, 0.0};
    if (m == dy0) return {0.0, 1.0};
    return {0.0, -1.0};
  }

  bool interior(const Vec2& p) const { return rho(p) > 0.0; }

  // Axis-aligned box enclosing the domain, with margin for metric evaluation
  // slightly outside { rho >= 0 }.
  Rect bounding_box(double margin = 0.0) const {
    if (kind == DomainKind::Disk) {
      return {center.x - radius - margin, center.x + radius + margin,
              center.y - radius - margin, center.y + radius + margin};
    }
    return {rect.xmin - margin, rect.xmax + margin, rect.ymin - margin, rect.ymax + margin};
  }

  // Arc-length style boundary parametrisation on [0, 1).
  Vec2 boundary_point(double u) const {
    if (kind == DomainKind::Disk) {
      const double th = 2.0 * pi * u;
      return center + Vec2{radius * std::cos(th), radius * std::sin(th)};
    }
    const double w = rect.xmax - rect.xmin, h = rect.ymax - rect.ymin;
    const double per = 2.0 * (w + h);
    double s = u * per;
    if (s < w) return {rect.xmin + s, rect.ymin};
    s -= w;
    if (s < h) return {rect.xmax, rect.ymin + s};
    s -= h;
    if (s < w) return {rect.xmax - s, rect.ymax};
    s -= w;
    return {rect.xmin, rect.ymax - s};
  }
};

// ---------------------------------------------------------------------------
// Metric kinds
// ---------------------------------------------------------------------------

enum class MetricKind { EuclideanDisk, HyperbolicDisk, RadialHerglotz, CustomGrid };

inline std::string metric_kind_name(MetricKind k) {
  switch (k) {
    case MetricKind::EuclideanDisk: return "euclidean-disk";
    case MetricKind::HyperbolicDisk: return "hyperbolic-disk";
    case MetricKind::RadialHerglotz: return "radial-herglotz";
    case MetricKind::CustomGrid: return "custom-grid";
  }
  return "unknown";
}

// d1/d2 hold the partial derivatives of the metric components.
struct MetricJet {
  SymMat2 g;
  SymMat2 d1;
  SymMat2 d2;
};

// Conformal factor c(x1, x') of the ambient product metric. Time-independent.
struct ConformalFactor {
  std::function<double(double, Vec2)> value = [](double, Vec2) { return 1.0; };
  double c_min = 1.0;
};

// ---------------------------------------------------------------------------
// TransversalManifold
// ---------------------------------------------------------------------------

class TransversalManifold {
 public:
  TransversalManifold(MetricKind kind, Domain domain,
                      std::function<MetricJet(const Vec2&)> jet, ConformalFactor conformal,
                      bool extendable)
      : kind_(kind),
        domain_(domain),
        jet_(std::move(jet)),
        conformal_(std::move(conformal)),
        extendable_(extendable) {}

  MetricKind kind() const { return kind_; }
  const Domain& domain() const { return domain_; }
  const ConformalFactor& conformal() const { return conformal_; }

  // True when the metric formula remains valid some distance past the
  // boundary, which Fermi charts use to extend geodesics beyond M0.
  bool extendable() const { return extendable_; }

  // Box guarding runaway integration; metric is evaluable inside it.
  Rect guard_box() const { return domain_.bounding_box(extendable_ ? guard_margin_ : 0.0); }
  void set_guard_margin(double m) { guard_margin_ = m; }

  SymMat2 metric(const Vec2& p) const { return checked_jet(p).g; }

  MetricJet metric_jet(const Vec2& p) const { return checked_jet(p); }

  double conformal_value(double x1, const Vec2& p) const {
    const double c = conformal_.value(x1, p);
    if (!(c >= conformal_.c_min))
      throw GeometryError("conformal factor below c_min at x1=" + std::to_string(x1));
    return c;
  }

 private:
  MetricJet checked_jet(const Vec2& p) const {
    if (!guard_box().contains(p))
      throw GeometryError("point (" + std::to_string(p.x) + ", " + std::to_string(p.y) +
                          ") outside chart");
    MetricJet j = jet_(p);
    if (!j.g.spd())
      throw GeometryError("metric not positive definite at (" + std::to_string(p.x) + ", " +
                          std::to_string(p.y) + ")");
    return j;
  }

  MetricKind kind_;
  Domain domain_;
  std::function<MetricJet(const Vec2&)> jet_;
  ConformalFactor conformal_;
  bool extendable_;
  double guard_margin_ = 0.35;
};

// Gamma^k_{ij} = (1/2) g^{kl} (d_i g_{jl} + d_j g_{il} - d_l g_{ij}).
inline Christoffel christoffel(const TransversalManifold& m, const Vec2& p) {
  const MetricJet j = m.metric_jet(p);
  const SymMat2 ginv = j.g.inverse();
  const double d[2][2][2] = {{{j.d1.xx, j.d1.xy}, {j.d1.xy, j.d1.yy}},
                             {{j.d2.xx, j.d2.xy}, {j.d2.xy, j.d2.yy}}};
  auto lower = [&](int i, int jj, int l) { return 0.5 * (d[i][jj][l] + d[jj][i][l] - d[l][i][jj]); };
  const double gi[2][2] = {{ginv.xx, ginv.xy}, {ginv.xy, ginv.yy}};
  Christoffel out;
  for (int k = 0; k < 2; ++k) {
    double c[2][2];
    for (int i = 0; i < 2; ++i)
      for (int jj = i; jj < 2; ++jj) {
        double s = 0.0;
        for (int l = 0; l < 2; ++l) s += gi[k][l] * lower(i, jj, l);
        c[i][jj] = s;
      }
    out[static_cast<std::size_t>(k)] = {c[0][0], c[0][1], c[1][1]};
  }
  return out;
}

// ---------------------------------------------------------------------------
// Bundled metrics
// ---------------------------------------------------------------------------

// Conformal metric g = e^{2u} I from u and its gradient.
inline std::function<MetricJet(const Vec2&)> conformal_jet(std::function<double(Vec2)> u,
                                                           std::function<Vec2(Vec2)> grad_u) {
  return [u = std::move(u), grad_u = std::move(grad_u)](const Vec2& p) {
    const double f = std::exp(2.0 * u(p));
    const Vec2 gu = grad_u(p);
    MetricJet j;
    j.g = {f, 0.0, f};
    j.d1 = {2.0 * f * gu.x, 0.0, 2.0 * f * gu.x};
    j.d2 = {2.0 * f * gu.y, 0.0, 2.0 * f * gu.y};
    return j;
  };
}

inline TransversalManifold euclidean_disk(double radius = 1.0, ConformalFactor c = {}) {
  Domain d;
  d.kind = DomainKind::Disk;
  d.radius = radius;
  auto jet = [](const Vec2&) {
    MetricJet j;
    j.g = SymMat2::identity();
    return j;
  };
  return TransversalManifold(MetricKind::EuclideanDisk, d, jet, std::move(c), true);
}

// Poincare metric 4 (1 - |x|^2)^{-2} I restricted to the Euclidean disk of
// radius `chart_radius` < 1. Gaussian curvature -1.
inline TransversalManifold hyperbolic_disk(double chart_radius = 0.5, ConformalFactor c = {}) {
  if (!(chart_radius > 0.0 && chart_radius < 1.0))
    throw ArgumentError("hyperbolic-disk chart radius must lie in (0, 1)");
  Domain d;
  d.kind = DomainKind::Disk;
  d.radius = chart_radius;
  auto u = [](Vec2 p) { return std::log(2.0) - std::log(1.0 - dot(p, p)); };
  auto gu = [](Vec2 p) { return p * (2.0 / (1.0 - dot(p, p))); };
  TransversalManifold m(MetricKind::HyperbolicDisk, d, conformal_jet(u, gu), std::move(c), true);
  // Formula degenerates at |x| = 1; keep the guard box inside.
  m.set_guard_margin(std::min(0.35, 0.5 * (1.0 - chart_radius)));
  return m;
}

// Rotationally symmetric index n(r) = 1 + A exp(-r^2/sigma^2). The Herglotz
// condition d/dr (r n(r)) > 0 holds for the default parameters, so every
// geodesic entering the disk leaves it.
inline TransversalManifold radial_herglotz(double radius = 1.0, double amplitude = 0.3,
                                           double sigma = 0.5, ConformalFactor c = {}) {
  Domain d;
  d.kind = DomainKind::Disk;
  d.radius = radius;
  auto n_of = [amplitude, sigma](double r2) { return 1.0 + amplitude * std::exp(-r2 / (sigma * sigma)); };
  auto u = [n_of](Vec2 p) { return std::log(n_of(dot(p, p))); };
  auto gu = [amplitude, sigma, n_of](Vec2 p) {
    const double r2 = dot(p, p);
    const double w = -2.0 * amplitude * std::exp(-r2 / (sigma * sigma)) / (sigma * sigma) / n_of(r2);
    return p * w;
  };
  return TransversalManifold(MetricKind::RadialHerglotz, d, conformal_jet(u, gu), std::move(c), true);
}

// ---------------------------------------------------------------------------
// Custom-grid metric: components sampled on a lattice, Catmull-Rom bicubic
// interpolation, derivatives from the interpolant.
// ---------------------------------------------------------------------------

struct GridMetricData {
  Rect box;
  int nx = 0, ny = 0;
  std::vector<double> g11, g12, g22;  // row-major, ny rows of nx
};

namespace detail {

// Catmull-Rom weights and their derivative for parameter t in [0, 1].
inline void catmull_rom(double t, double w[4], double dw[4]) {
  const double t2 = t * t, t3 = t2 * t;
  w[0] = 0.5 * (-t3 + 2.0 * t2 - t);
  w[1] = 0.5 * (3.0 * t3 - 5.0 * t2 + 2.0);
  w[2] = 0.5 * (-3.0 * t3 + 4.0 * t2 + t);
  w[3] = 0.5 * (t3 - t2);
  dw[0] = 0.5 * (-3.0 * t2 + 4.0 * t - 1.0);
  dw[1] = 0.5 * (9.0 * t2 - 10.0 * t);
  dw[2] = 0.5 * (-9.0 * t2 + 8.0 * t + 1.0);
  dw[3] = 0.5 * (3.0 * t2 - 2.0 * t);
}

class BicubicTable {
 public:
  BicubicTable() = default;
  BicubicTable(Rect box, int nx, int ny, std::vector<double> v)
      : box_(box), nx_(nx), ny_(ny), v_(std::move(v)) {
    if (nx_ < 4 || ny_ < 4) throw ArgumentError("grid metric needs at least 4x4 nodes");
    if (static_cast<int>(v_.size()) != nx_ * ny_) throw ArgumentError("grid metric size mismatch");
    hx_ = (box_.xmax - box_.xmin) / (nx_ - 1);
    hy_ = (box_.ymax - box_.ymin) / (ny_ - 1);
  }

  // value, d/dx, d/dy
  std::array<double, 3> eval(const Vec2& p) const {
    const double fx = (p.x - box_.xmin) / hx_;
    const double fy = (p.y - box_.ymin) / hy_;
    int ix = static_cast<int>(std::floor(fx));
    int iy = static_cast<int>(std::floor(fy));
    ix = std::clamp(ix, 1, nx_ - 3);
    iy = std::clamp(iy, 1, ny_ - 3);
    const double tx = fx - ix, ty = fy - iy;
    double wx[4], dwx[4], wy[4], dwy[4];
    catmull_rom(tx, wx, dwx);
    catmull_rom(ty, wy, dwy);
    double val = 0.0, ddx = 0.0, ddy = 0.0;
    for (int j = 0; j < 4; ++j) {
      const double* row = &v_[static_cast<std::size_t>((iy - 1 + j) * nx_ + (ix - 1))];
      double s = 0.0, ds = 0.0;
      for (int i = 0; i < 4; ++i) {
        s += wx[i] * row[i];
        ds += dwx[i] * row[i];
      }
      val += wy[j] * s;
      ddx += wy[j] * ds;
      ddy += dwy[j] * s;
    }
    return {val, ddx / hx_, ddy / hy_};
  }

 private:
  Rect box_;
  int nx_ = 0, ny_ = 0;
  double hx_ = 1.0, hy_ = 1.0;
  std::vector<double> v_;
};

}  // namespace detail

inline TransversalManifold custom_grid(const GridMetricData& data, Domain domain,
                                       ConformalFactor c = {}) {
  auto t11 = std::make_shared<detail::BicubicTable>(data.box, data.nx, data.ny, data.g11);
  auto t12 = std::make_shared<detail::BicubicTable>(data.box, data.nx, data.ny, data.g12);
  auto t22 = std::make_shared<detail::BicubicTable>(data.box, data.nx, data.ny, data.g22);
  auto jet = [t11, t12, t22](const Vec2& p) {
    const auto a = t11->eval(p), b = t12->eval(p), d = t22->eval(p);
    MetricJet j;
    j.g = {a[0], b[0], d[0]};
    j.d1 = {a[1], b[1], d[1]};
    j.d2 = {a[2], b[2], d[2]};
    return j;
  };
  TransversalManifold m(MetricKind::CustomGrid, domain, jet, std::move(c), true);
  // Stay one interpolation cell inside the sampled box.
  const double hx = (data.box.xmax - data.box.xmin) / (data.nx - 1);
  const double hy = (data.box.ymax - data.box.ymin) / (data.ny - 1);
  Rect bb = domain.bounding_box(0.0);
  const double slack = std::min(std::min(bb.xmin - data.box.xmin, data.box.xmax - bb.xmax),
                                std::min(bb.ymin - data.box.ymin, data.box.ymax - bb.ymax));
  m.set_guard_margin(std::max(0.0, slack - std::max(hx, hy)));
  return m;
}

// Samples an analytic manifold onto a lattice; handy for tests and configs.
inline GridMetricData sample_grid_metric(const TransversalManifold& src, Rect box, int nx, int ny) {
  GridMetricData out;
  out.box = box;
  out.nx = nx;
  out.ny = ny;
  out.g11.resize(static_cast<std::size_t>(nx) * ny);
  out.g12.resize(static_cast<std::size_t>(nx) * ny);
  out.g22.resize(static_cast<std::size_t>(nx) * ny);
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i < nx; ++i) {
      const Vec2 p{box.xmin + (box.xmax - box.xmin) * i / (nx - 1),
                   box.ymin + (box.ymax - box.ymin) * j / (ny - 1)};
      const SymMat2 g = src.metric(p);
      const std::size_t k = static_cast<std::size_t>(j) * nx + i;
      out.g11[k] = g.xx;
      out.g12[k] = g.xy;
      out.g22[k] = g.yy;
    }
  return out;
}

}  // namespace beamlab::geometry

// Geodesic tracing on the transversal manifold: fixed-step RK4 with
// bisection-localised boundary exit, tangency classification, inflow fans.

#pragma once

#include <optional>
#include <vector>

#include "beamlab/manifold.hpp"

namespace beamlab::geometry {

enum class Tangency { NonTangential, TangentialEntry, TangentialExit, Trapped };

inline std::string tangency_name(Tangency t) {
  switch (t) {
    case Tangency::NonTangential: return "non_tangential";
    case Tangency::TangentialEntry: return "tangential_entry";
    case Tangency::TangentialExit: return "tangential_exit";
    case Tangency::Trapped: return "trapped";
  }
  return "unknown";
}

struct PathSample {
  double tau = 0.0;
  Vec2 x;
  Vec2 v;
};

struct GeodesicPath {
  std::vector<PathSample> samples;
  double exit_time = 0.0;
  bool trapped = false;
  Tangency tangency = Tangency::NonTangential;

  const PathSample& front() const { return samples.front(); }
  const PathSample& back() const { return samples.back(); }
};

// Member of the incoming sphere bundle: <xi, nu(x)>_g < 0 strictly.
struct InflowPoint {
  Vec2 x;
  Vec2 xi;
  double boundary_param = 0.0;  // parameter along the boundary in [0, 1)
  double angle = 0.0;           // signed angle from the inward normal
};

namespace detail {

struct PhaseState {
  Vec2 x;
  Vec2 v;
};

inline PhaseState axpy(const PhaseState& a, double s, const PhaseState& b) {
  return {a.x + s * b.x, a.v + s * b.v};
}

inline PhaseState geodesic_rhs(const TransversalManifold& m, const PhaseState& s) {
  const Christoffel G = christoffel(m, s.x);
  const Vec2 acc{-inner(G[0], s.v, s.v), -inner(G[1], s.v, s.v)};
  return {s.v, acc};
}

inline PhaseState rk4_step(const TransversalManifold& m, const PhaseState& s, double h) {
  const PhaseState k1 = geodesic_rhs(m, s);
  const PhaseState k2 = geodesic_rhs(m, axpy(s, 0.5 * h, k1));
  const PhaseState k3 = geodesic_rhs(m, axpy(s, 0.5 * h, k2));
  const PhaseState k4 = geodesic_rhs(m, axpy(s, h, k3));
  PhaseState out = s;
  out.x += (h / 6.0) * (k1.x + 2.0 * (k2.x + k3.x) + k4.x);
  out.v += (h / 6.0) * (k1.v + 2.0 * (k2.v + k3.v) + k4.v);
  return out;
}

}  // namespace detail

// g0-unit outward normal at a boundary point.
inline Vec2 outward_normal(const TransversalManifold& m, const Vec2& x) {
  const SymMat2 ginv = m.metric(x).inverse();
  const Vec2 gr = m.domain().grad_rho(x);
  const Vec2 n = ginv * gr * (-1.0);  // rho increases inward
  const double len = metric_norm(m.metric(x), n);
  if (!(len > 0.0)) throw GeometryError("degenerate boundary normal");
  return n * (1.0 / len);
}

// Integrates the unit-speed geodesic from an inflow point until it exits
// { rho > 0 }, localising the exit by bisection to width step^3, or flags it
// trapped once arclength exceeds max_len.
inline GeodesicPath trace_geodesic(const TransversalManifold& m, const InflowPoint& p,
                                   double step = 1e-3, double max_len = 50.0) {
  if (!(step > 0.0)) throw ArgumentError("trace_geodesic: step must be positive");
  if (!(max_len > 0.0)) throw ArgumentError("trace_geodesic: max_len must be positive");

  GeodesicPath path;
  detail::PhaseState s{p.x, p.xi};
  double tau = 0.0;
  path.samples.push_back({tau, s.x, s.v});

  const auto& dom = m.domain();
  while (tau < max_len) {
    const detail::PhaseState nxt = detail::rk4_step(m, s, step);
    const double tau_next = tau + step;
    if (dom.rho(nxt.x) <= 0.0) {
      // Exit inside this step; bisect the substep length. The contract asks
      // for width step^3; we bisect further so exit-time differences expose
      // the integrator order rather than localization noise.
      const double tol = std::min(step * step * step, 1e-12);
      double lo = 0.0, hi = step;
      while (hi - lo > tol) {
        const double mid = 0.5 * (lo + hi);
        const detail::PhaseState trial = detail::rk4_step(m, s, mid);
        (dom.rho(trial.x) <= 0.0 ? hi : lo) = mid;
      }
      const double sub = 0.5 * (lo + hi);
      const detail::PhaseState exit_state = detail::rk4_step(m, s, sub);
      path.exit_time = tau + sub;
      path.samples.push_back({path.exit_time, exit_state.x, exit_state.v});
      return path;
    }
    s = nxt;
    tau = tau_next;
    path.samples.push_back({tau, s.x, s.v});
  }
  path.trapped = true;
  path.tangency = Tangency::Trapped;
  path.exit_time = tau;
  return path;
}

// Non-tangential iff |<v, nu>|_g exceeds tangency_eps at both endpoints.
inline Tangency classify_tangency(const GeodesicPath& path, const TransversalManifold& m,
                                  double tangency_eps = 1e-3) {
  if (path.trapped) throw ArgumentError("classify_tangency: trapped path has no endpoints");
  const auto& a = path.front();
  const auto& b = path.back();
  const double entry = inner(m.metric(a.x), a.v, outward_normal(m, a.x));
  const double exit = inner(m.metric(b.x), b.v, outward_normal(m, b.x));
  if (std::abs(entry) <= tangency_eps) return Tangency::TangentialEntry;
  if (std::abs(exit) <= tangency_eps) return Tangency::TangentialExit;
  return Tangency::NonTangential;
}

// Builds an inflow point at boundary parameter u with direction at signed
// angle `alpha` from the inward normal, measured in the g0 metric.
inline InflowPoint inflow_point(const TransversalManifold& m, double u, double alpha) {
  InflowPoint p;
  p.x = m.domain().boundary_point(u);
  const Vec2 nu = outward_normal(m, p.x);
  // g0-unit tangent completing (nu, t) to an orthonormal frame.
  const SymMat2 g = m.metric(p.x);
  Vec2 t = perp(nu);
  t = t - nu * inner(g, t, nu);
  t = t * (1.0 / metric_norm(g, t));
  p.xi = nu * (-std::cos(alpha)) + t * std::sin(alpha);
  p.boundary_param = u;
  p.angle = alpha;
  return p;
}

// Uniform boundary points x uniform inward angles on
// (-pi/2 + delta_a, pi/2 - delta_a); endpoints attained.
inline std::vector<InflowPoint> generate_fan(const TransversalManifold& m, int n_boundary,
                                             int n_angles, double delta_a = 0.05) {
  if (n_boundary < 4) throw ArgumentError("generate_fan: n_boundary must be >= 4");
  if (n_angles < 2) throw ArgumentError("generate_fan: n_angles must be >= 2");
  if (!(delta_a > 0.0 && delta_a < pi / 2.0)) throw ArgumentError("generate_fan: bad delta_a");
  std::vector<InflowPoint> fan;
  fan.reserve(static_cast<std::size_t>(n_boundary) * n_angles);
  const double amax = pi / 2.0 - delta_a;
  for (int i = 0; i < n_boundary; ++i) {
    const double u = static_cast<double>(i) / n_boundary;
    for (int j = 0; j < n_angles; ++j) {
      const double alpha = n_angles == 1 ? 0.0 : -amax + 2.0 * amax * j / (n_angles - 1);
      fan.push_back(inflow_point(m, u, alpha));
    }
  }
  return fan;
}

// ---------------------------------------------------------------------------
// Cubic Hermite interpolation of a traced path; C^1 in tau.
// ---------------------------------------------------------------------------

class PathInterpolant {
 public:
  explicit PathInterpolant(const GeodesicPath& path) : s_(path.samples) {
    if (s_.size() < 2) throw ArgumentError("path interpolant needs >= 2 samples");
  }

  double tau_min() const { return s_.front().tau; }
  double tau_max() const { return s_.back().tau; }

  PathSample at(double tau) const {
    const std::size_t k = segment(tau);
    const auto& a = s_[k];
    const auto& b = s_[k + 1];
    const double dt = b.tau - a.tau;
    const double t = (tau - a.tau) / dt;
    const double t2 = t * t, t3 = t2 * t;
    const double h00 = 2.0 * t3 - 3.0 * t2 + 1.0, h10 = t3 - 2.0 * t2 + t;
    const double h01 = -2.0 * t3 + 3.0 * t2, h11 = t3 - t2;
    // Velocity of the Hermite curve itself keeps the interpolant consistent.
    const double d00 = (6.0 * t2 - 6.0 * t) / dt, d10 = (3.0 * t2 - 4.0 * t + 1.0) / dt;
    const double d01 = (-6.0 * t2 + 6.0 * t) / dt, d11 = (3.0 * t2 - 2.0 * t) / dt;
    PathSample out;
    out.tau = tau;
    out.x = h00 * a.x + (h10 * dt) * a.v + h01 * b.x + (h11 * dt) * b.v;
    out.v = d00 * a.x + (d10 * dt) * a.v + d01 * b.x + (d11 * dt) * b.v;
    return out;
  }

 private:
  std::size_t segment(double tau) const {
    if (tau <= s_.front().tau) return 0;
    if (tau >= s_.back().tau) return s_.size() - 2;
    std::size_t lo = 0, hi = s_.size() - 1;
    while (hi - lo > 1) {
      const std::size_t mid = (lo + hi) / 2;
      (s_[mid].tau <= tau ? lo : hi) = mid;
    }
    return lo;
  }

  std::vector<PathSample> s_;
};

// Integrates the geodesic from (x0, v0) for signed arclength `len` without
// boundary checks (the metric guard box still applies). Used by Fermi charts
// to shoot normal fibres and to extend paths past the boundary.
inline detail::PhaseState shoot(const TransversalManifold& m, const Vec2& x0, const Vec2& v0,
                                double len, double substep = 0.01) {
  detail::PhaseState s{x0, v0};
  if (len == 0.0) return s;
  const int n = std::max(4, static_cast<int>(std::ceil(std::abs(len) / substep)));
  const double h = len / n;
  for (int i = 0; i < n; ++i) s = detail::rk4_step(m, s, h);
  return s;
}

}  // namespace beamlab::geometry

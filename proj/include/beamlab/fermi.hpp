// Fermi coordinates (tau, y) in a tube around a non-tangential geodesic:
// parallel normal frame, exponential-map tube coordinates, metric Taylor
// data g(tau,0) = I, d_y g(tau,0) = 0, and the Riccati driver F(tau).

#pragma once

#include <memory>
#include <optional>
#include <vector>

#include "beamlab/geodesic.hpp"
#include "beamlab/manifold.hpp"

namespace beamlab::fermi {

using geometry::GeodesicPath;
using geometry::PathInterpolant;
using geometry::PathSample;
using geometry::Tangency;
using geometry::TransversalManifold;

struct UnsupportedGeometryError : GeometryError {
  using GeometryError::GeometryError;
};

struct TubeTooWideError : GeometryError {
  using GeometryError::GeometryError;
};

// Position and unit fibre velocity of a point reached by the normal
// exponential map.
struct TubePoint {
  Vec2 x;
  Vec2 dy;  // d/dy of the tube map, the fibre's unit tangent
};

class FermiChart {
 public:
  FermiChart(TransversalManifold manifold, GeodesicPath path, double half_width, double margin,
             double fd_step, double shoot_substep)
      : m_(std::move(manifold)),
        half_width_(half_width),
        exit_time_(path.exit_time),
        fd_step_(fd_step),
        substep_(shoot_substep) {
    build(path, margin);
  }

  const TransversalManifold& manifold() const { return m_; }
  double exit_time() const { return exit_time_; }
  double half_width() const { return half_width_; }
  double tau_min() const { return axis_->tau_min(); }
  double tau_max() const { return axis_->tau_max(); }

  // gamma(tau) with its unit tangent, from the interpolated axis.
  PathSample axis(double tau) const { return axis_->at(tau); }

  // Parallel unit normal e(tau).
  Vec2 frame(double tau) const { return frame_at(tau).e; }

  TubePoint from_fermi_state(double tau, double y) const {
    const PathSample a = axis_->at(tau);
    const Vec2 e = frame(tau);
    if (y == 0.0) return {a.x, e};
    const auto s = geometry::shoot(m_, a.x, e, y, substep_);
    return {s.x, s.v};
  }

  Vec2 from_fermi(double tau, double y) const { return from_fermi_state(tau, y).x; }

  // Pullback metric in tube coordinates. d/dy column comes from the fibre
  // velocity; d/dtau from a 4th-order difference across neighbouring fibres.
  SymMat2 metric_fermi(double tau, double y) const {
    const TubePoint c = from_fermi_state(tau, y);
    const Vec2 xm2 = from_fermi(tau - 2.0 * fd_step_, y);
    const Vec2 xm1 = from_fermi(tau - fd_step_, y);
    const Vec2 xp1 = from_fermi(tau + fd_step_, y);
    const Vec2 xp2 = from_fermi(tau + 2.0 * fd_step_, y);
    const Vec2 dtau = (xm2 - 8.0 * xm1 + 8.0 * xp1 - xp2) * (1.0 / (12.0 * fd_step_));
    const SymMat2 g = m_.metric(c.x);
    return {inner(g, dtau, dtau), inner(g, dtau, c.dy), inner(g, c.dy, c.dy)};
  }

  // g_{tau,tau}(tau, y), the only nontrivial Fermi metric entry in 2-D.
  double tube_energy(double tau, double y) const { return metric_fermi(tau, y).xx; }

  // Riccati driver F(tau) = -K(gamma(tau)) = (1/2) d^2/dy^2 g_{tau,tau}(tau, 0),
  // by a 4th-order five-point second difference across fibres.
  double riccati_driver(double tau) const {
    if (tau < tau_min() || tau > tau_max())
      throw ArgumentError("riccati_driver: tau outside chart range");
    const double k = curvature_stencil_;
    const double e0 = tube_energy(tau, 0.0);
    const double e1 = tube_energy(tau, k), em1 = tube_energy(tau, -k);
    const double e2 = tube_energy(tau, 2.0 * k), em2 = tube_energy(tau, -2.0 * k);
    const double second = (-em2 + 16.0 * em1 - 30.0 * e0 + 16.0 * e1 - e2) / (12.0 * k * k);
    return 0.5 * second;
  }

  // Inverts the tube map by Newton iteration; empty when no tube point maps
  // to p within the half-width.
  std::optional<std::pair<double, double>> to_fermi(double tau0, double y0, const Vec2& p) const {
    double tau = tau0, y = y0;
    for (int it = 0; it < 50; ++it) {
      const TubePoint c = from_fermi_state(tau, y);
      const Vec2 r = c.x - p;
      if (norm(r) < 1e-10) return std::make_pair(tau, y);
      const Vec2 xm = from_fermi(tau - fd_step_, y);
      const Vec2 xp = from_fermi(tau + fd_step_, y);
      const Vec2 dtau = (xp - xm) * (0.5 / fd_step_);
      const double det = dtau.x * c.dy.y - dtau.y * c.dy.x;
      if (std::abs(det) < 1e-14) break;
      const double dt = (-r.x * c.dy.y + r.y * c.dy.x) / det;
      const double dyv = (-dtau.x * r.y + dtau.y * r.x) / det;
      tau += dt;
      y += dyv;
      if (std::abs(y) > 4.0 * half_width_) break;
      tau = std::clamp(tau, tau_min(), tau_max());
    }
    return std::nullopt;
  }

  std::optional<std::pair<double, double>> to_fermi(const Vec2& p) const {
    // Seed from the nearest axis sample.
    double best = 1e300;
    double tau0 = 0.0;
    for (const auto& s : samples_) {
      const double d = norm(s.x - p);
      if (d < best) {
        best = d;
        tau0 = s.tau;
      }
    }
    if (best > 2.0 * half_width_) return std::nullopt;
    const Vec2 e = frame(tau0);
    const double y0 = inner(m_.metric(axis_->at(tau0).x), p - axis_->at(tau0).x, e);
    return to_fermi(tau0, y0, p);
  }

  // Frame samples for diagnostics export.
  const std::vector<PathSample>& axis_samples() const { return samples_; }
  const std::vector<Vec2>& frame_samples() const { return frames_; }

 private:
  struct FrameSample {
    Vec2 e;
    Vec2 de;
  };

  static Vec2 metric_rotate(const SymMat2& g, const Vec2& v) {
    // 90-degree rotation compatible with g; parallel along any curve.
    const double s = 1.0 / std::sqrt(g.det());
    return {s * (-g.xy * v.x - g.yy * v.y), s * (g.xx * v.x + g.xy * v.y)};
  }

  void build(const GeodesicPath& path, double margin) {
    if (path.trapped) throw ArgumentError("fermi chart: trapped geodesic");
    if (geometry::classify_tangency(path, m_) != Tangency::NonTangential)
      throw ArgumentError("fermi chart: geodesic must be non-tangential");
    if (!(half_width_ > 0.0)) throw ArgumentError("fermi chart: half_width must be positive");

    check_self_intersection(path);

    samples_ = path.samples;
    const double step = samples_.size() > 1 ? samples_[1].tau - samples_[0].tau : 1e-3;
    if (m_.extendable() && margin > 0.0) extend(step, margin);

    axis_ = std::make_unique<PathInterpolant>(GeodesicPath{samples_, exit_time_, false,
                                                           Tangency::NonTangential});
    transport_frame();
    check_injectivity();
  }

  void check_self_intersection(const GeodesicPath& path) const {
    const auto& s = path.samples;
    const std::size_t stride = std::max<std::size_t>(1, s.size() / 600);
    for (std::size_t i = 0; i < s.size(); i += stride)
      for (std::size_t j = i + 1; j < s.size(); j += stride) {
        if (s[j].tau - s[i].tau <= 4.0 * half_width_) continue;
        if (norm(s[j].x - s[i].x) < 0.5 * half_width_)
          throw UnsupportedGeometryError(
              "fermi chart: geodesic self-intersects; quasimode gluing is unsupported");
      }
  }

  void extend(double step, double margin) {
    const int n = static_cast<int>(std::ceil(margin / step));
    std::vector<PathSample> ext;
    // Backwards from the entry point.
    geometry::detail::PhaseState s{samples_.front().x, -samples_.front().v};
    for (int i = 1; i <= n; ++i) {
      s = geometry::detail::rk4_step(m_, s, step);
      ext.push_back({-step * i, s.x, -s.v});
    }
    std::reverse(ext.begin(), ext.end());
    ext.insert(ext.end(), samples_.begin(), samples_.end());
    // Forwards past the exit point.
    s = {samples_.back().x, samples_.back().v};
    const double tau_exit = samples_.back().tau;
    for (int i = 1; i <= n; ++i) {
      s = geometry::detail::rk4_step(m_, s, step);
      ext.push_back({tau_exit + step * i, s.x, s.v});
    }
    samples_ = std::move(ext);
  }

  // Parallel transport e along the axis: e' = -Gamma(v, e), RK4 on the
  // sample grid. Initialised with the metric rotation of the tangent, which
  // the transported frame then tracks to integrator accuracy.
  void transport_frame() {
    frames_.resize(samples_.size());
    Vec2 e = metric_rotate(m_.metric(samples_.front().x), samples_.front().v);
    frames_[0] = e;
    auto rhs = [&](double tau, const Vec2& ev) {
      const PathSample a = axis_->at(tau);
      const Christoffel G = geometry::christoffel(m_, a.x);
      return Vec2{-inner(G[0], a.v, ev), -inner(G[1], a.v, ev)};
    };
    for (std::size_t i = 0; i + 1 < samples_.size(); ++i) {
      const double t0 = samples_[i].tau;
      const double h = samples_[i + 1].tau - t0;
      const Vec2 k1 = rhs(t0, e);
      const Vec2 k2 = rhs(t0 + 0.5 * h, e + 0.5 * h * k1);
      const Vec2 k3 = rhs(t0 + 0.5 * h, e + 0.5 * h * k2);
      const Vec2 k4 = rhs(t0 + h, e + h * k3);
      e += (h / 6.0) * (k1 + 2.0 * (k2 + k3) + k4);
      frames_[i + 1] = e;
    }
  }

  FrameSample frame_at(double tau) const {
    // Hermite interpolation matching the transport ODE.
    const auto& s = samples_;
    std::size_t lo = 0, hi = s.size() - 1;
    if (tau <= s.front().tau)
      hi = 1;
    else if (tau >= s.back().tau)
      lo = s.size() - 2;
    else
      while (hi - lo > 1) {
        const std::size_t mid = (lo + hi) / 2;
        (s[mid].tau <= tau ? lo : hi) = mid;
      }
    const double dt = s[hi].tau - s[lo].tau;
    const double t = (tau - s[lo].tau) / dt;
    auto de = [&](std::size_t i) {
      const Christoffel G = geometry::christoffel(m_, s[i].x);
      return Vec2{-inner(G[0], s[i].v, frames_[i]), -inner(G[1], s[i].v, frames_[i])};
    };
    const Vec2 e0 = frames_[lo], e1 = frames_[hi];
    const Vec2 d0 = de(lo), d1 = de(hi);
    const double t2 = t * t, t3 = t2 * t;
    const double h00 = 2.0 * t3 - 3.0 * t2 + 1.0, h10 = t3 - 2.0 * t2 + t;
    const double h01 = -2.0 * t3 + 3.0 * t2, h11 = t3 - t2;
    FrameSample out;
    out.e = h00 * e0 + (h10 * dt) * d0 + h01 * e1 + (h11 * dt) * d1;
    out.de = d0;  // only used for diagnostics
    return out;
  }

  // Tube points must stay nearest to their own stretch of axis; overlap
  // means the half-width exceeds the focal radius.
  void check_injectivity() const {
    const std::size_t stride = std::max<std::size_t>(1, samples_.size() / 40);
    for (std::size_t i = 0; i < samples_.size(); i += stride) {
      const double tau = samples_[i].tau;
      for (double y : {half_width_, -half_width_}) {
        const Vec2 p = from_fermi(tau, y);
        double best = 1e300;
        double best_tau = tau;
        for (const auto& s : samples_) {
          const double d = norm(s.x - p);
          if (d < best) {
            best = d;
            best_tau = s.tau;
          }
        }
        if (std::abs(best_tau - tau) > 2.0 * half_width_ + 1e-9)
          throw TubeTooWideError("fermi chart: tube of half-width " +
                                 std::to_string(half_width_) + " overlaps itself");
      }
    }
  }

  TransversalManifold m_;
  double half_width_;
  double exit_time_;
  double fd_step_;
  double substep_;
  double curvature_stencil_ = 0.02;
  std::vector<PathSample> samples_;
  std::vector<Vec2> frames_;
  std::unique_ptr<PathInterpolant> axis_;
};

// Spec-level constructor. `half_width` is the tube radius delta'.
inline std::shared_ptr<const FermiChart> build_fermi_chart(const TransversalManifold& m,
                                                           const GeodesicPath& path,
                                                           double half_width,
                                                           double margin = 0.06) {
  return std::make_shared<const FermiChart>(m, path, half_width, margin, 1e-3, 0.01);
}

inline double riccati_driver(const FermiChart& chart, double tau) {
  return chart.riccati_driver(tau);
}

}  // namespace beamlab::fermi

#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <set>

#include "beamlab/geodesic.hpp"
#include "beamlab/manifold.hpp"
#include "oracles.hpp"

using namespace beamlab;
using namespace beamlab::geometry;

namespace {

InflowPoint diameter_inflow(const TransversalManifold& m) {
  InflowPoint p;
  p.x = {-m.domain().radius, 0.0};
  p.xi = {1.0, 0.0};
  // normalise in g0
  p.xi = p.xi * (1.0 / metric_norm(m.metric(p.x), p.xi));
  return p;
}

}  // namespace

TEST_CASE("christoffel: flat metric vanishes") {
  auto m = euclidean_disk();
  const Christoffel G = christoffel(m, {0.3, -0.4});
  for (const auto& gk : G) CHECK(gk.max_abs() == 0.0);
}

TEST_CASE("christoffel: hyperbolic disk vanishes at the origin") {
  auto m = hyperbolic_disk(0.5);
  const Christoffel G = christoffel(m, {0.0, 0.0});
  for (const auto& gk : G) CHECK(gk.max_abs() < 1e-14);
}

TEST_CASE("christoffel: hyperbolic disk matches finite-difference oracle") {
  auto m = hyperbolic_disk(0.5);
  const Vec2 p{0.3, 0.0};
  const Christoffel impl = christoffel(m, p);
  const Christoffel fd = oracles::fd_christoffel(m, p, 1e-5);
  for (int k = 0; k < 2; ++k) {
    CHECK(std::abs(impl[k].xx - fd[k].xx) < 1e-6);
    CHECK(std::abs(impl[k].xy - fd[k].xy) < 1e-6);
    CHECK(std::abs(impl[k].yy - fd[k].yy) < 1e-6);
  }
}

TEST_CASE("christoffel: metric derivative identity on radial-herglotz") {
  auto m = radial_herglotz();
  for (const Vec2 p : {Vec2{0.2, 0.1}, Vec2{-0.4, 0.35}, Vec2{0.0, -0.6}}) {
    const MetricJet j = m.metric_jet(p);
    const Christoffel G = christoffel(m, p);
    const double g[2][2] = {{j.g.xx, j.g.xy}, {j.g.xy, j.g.yy}};
    const double dg[2][2][2] = {{{j.d1.xx, j.d1.xy}, {j.d1.xy, j.d1.yy}},
                                {{j.d2.xx, j.d2.xy}, {j.d2.xy, j.d2.yy}}};
    const double Gm[2][2][2] = {{{G[0].xx, G[0].xy}, {G[0].xy, G[0].yy}},
                                {{G[1].xx, G[1].xy}, {G[1].xy, G[1].yy}}};
    for (int k = 0; k < 2; ++k)
      for (int i = 0; i < 2; ++i)
        for (int jj = 0; jj < 2; ++jj) {
          double rhs = 0.0;
          for (int l = 0; l < 2; ++l) rhs += Gm[l][k][i] * g[l][jj] + Gm[l][k][jj] * g[i][l];
          CHECK(std::abs(dg[k][i][jj] - rhs) < 1e-12);
        }
  }
}

TEST_CASE("christoffel: outside chart raises geometry error") {
  auto m = euclidean_disk();
  CHECK_THROWS_AS(christoffel(m, {5.0, 0.0}), GeometryError);
}

TEST_CASE("custom-grid metric reproduces herglotz geometry") {
  auto analytic = radial_herglotz();
  const GridMetricData data =
      sample_grid_metric(analytic, {-1.3, 1.3, -1.3, 1.3}, 131, 131);
  Domain dom;
  dom.kind = DomainKind::Disk;
  dom.radius = 1.0;
  auto gridded = custom_grid(data, dom);
  const Vec2 p{0.31, -0.22};
  CHECK(std::abs(gridded.metric(p).xx - analytic.metric(p).xx) < 1e-5);
  const Christoffel a = christoffel(analytic, p);
  const Christoffel b = christoffel(gridded, p);
  for (int k = 0; k < 2; ++k) CHECK(std::abs(a[k].xx - b[k].xx) < 1e-3);
}

TEST_CASE("trace: unit disk diameter has exit time 2") {
  auto m = euclidean_disk();
  const GeodesicPath path = trace_geodesic(m, diameter_inflow(m), 1e-3);
  REQUIRE(!path.trapped);
  CHECK(std::abs(path.exit_time - 2.0) < 1e-6);
  CHECK(std::abs(path.back().x.x - 1.0) < 1e-6);
}

TEST_CASE("trace: vertical diameter by rotational symmetry") {
  auto m = euclidean_disk();
  InflowPoint p;
  p.x = {0.0, -1.0};
  p.xi = {0.0, 1.0};
  const GeodesicPath path = trace_geodesic(m, p, 1e-3);
  CHECK(std::abs(path.exit_time - 2.0) < 1e-6);
}

TEST_CASE("trace: chord at offset 0.5 has length sqrt(3)") {
  auto m = euclidean_disk();
  InflowPoint p;
  p.x = {-std::sqrt(3.0) / 2.0, 0.5};
  p.xi = {1.0, 0.0};
  const GeodesicPath path = trace_geodesic(m, p, 1e-3);
  CHECK(std::abs(path.exit_time - std::sqrt(3.0)) < 1e-6);
}

TEST_CASE("trace: step validation") {
  auto m = euclidean_disk();
  CHECK_THROWS_AS(trace_geodesic(m, diameter_inflow(m), 0.0), ArgumentError);
}

TEST_CASE("trace: energy conservation on bundled metrics") {
  for (auto make : {+[] { return euclidean_disk(); }, +[] { return hyperbolic_disk(0.5); },
                    +[] { return radial_herglotz(); }}) {
    auto m = make();
    const GeodesicPath path = trace_geodesic(m, diameter_inflow(m), 1e-3);
    double drift = 0.0;
    for (const auto& s : path.samples)
      drift = std::max(drift, std::abs(metric_norm(m.metric(s.x), s.v) - 1.0));
    CHECK(drift <= 1e-6);
  }
}

TEST_CASE("trace: reversibility") {
  auto flat = euclidean_disk();
  auto herg = radial_herglotz();
  {
    InflowPoint p;
    p.x = {-std::sqrt(3.0) / 2.0, 0.5};
    p.xi = {1.0, 0.0};
    const GeodesicPath fwd = trace_geodesic(flat, p, 1e-3);
    InflowPoint back;
    back.x = fwd.back().x;
    back.xi = -fwd.back().v;
    const GeodesicPath rev = trace_geodesic(flat, back, 1e-3);
    CHECK(norm(rev.back().x - p.x) < 1e-5);
  }
  {
    const InflowPoint p = inflow_point(herg, 0.37, 0.4);
    const GeodesicPath fwd = trace_geodesic(herg, p, 1e-3);
    InflowPoint back;
    back.x = fwd.back().x;
    back.xi = -fwd.back().v;
    const GeodesicPath rev = trace_geodesic(herg, back, 1e-3);
    CHECK(norm(rev.back().x - p.x) < 1e-4);
  }
}

TEST_CASE("trace: exit time converges at 4th order") {
  auto m = radial_herglotz();
  const InflowPoint p = inflow_point(m, 0.12, 0.5);
  const double t1 = trace_geodesic(m, p, 2e-2).exit_time;
  const double t2 = trace_geodesic(m, p, 1e-2).exit_time;
  const double t3 = trace_geodesic(m, p, 5e-3).exit_time;
  CHECK(std::abs(t1 - t2) / std::abs(t2 - t3) >= 8.0);
}

TEST_CASE("trace: max_len flags trapped") {
  auto m = euclidean_disk();
  const GeodesicPath path = trace_geodesic(m, diameter_inflow(m), 1e-3, 0.5);
  CHECK(path.trapped);
  CHECK(path.tangency == Tangency::Trapped);
  CHECK_THROWS_AS(classify_tangency(path, m), ArgumentError);
}

TEST_CASE("classify: diameter is non-tangential") {
  auto m = euclidean_disk();
  const GeodesicPath path = trace_geodesic(m, diameter_inflow(m), 1e-3);
  CHECK(classify_tangency(path, m) == Tangency::NonTangential);
}

TEST_CASE("classify: near-grazing chord is tangential at entry") {
  auto m = euclidean_disk();
  const InflowPoint p = inflow_point(m, 0.0, 89.99 * pi / 180.0);
  const GeodesicPath path = trace_geodesic(m, p, 1e-4);
  CHECK(classify_tangency(path, m) == Tangency::TangentialEntry);
}

TEST_CASE("classify: chord at offset 0.5 meets the boundary at -sqrt(3)/2") {
  auto m = euclidean_disk();
  InflowPoint p;
  p.x = {-std::sqrt(3.0) / 2.0, 0.5};
  p.xi = {1.0, 0.0};
  const double c = inner(m.metric(p.x), p.xi, outward_normal(m, p.x));
  CHECK(std::abs(c - (-std::sqrt(3.0) / 2.0)) < 1e-12);
  const GeodesicPath path = trace_geodesic(m, p, 1e-3);
  CHECK(classify_tangency(path, m) == Tangency::NonTangential);
}

TEST_CASE("fan: counts, inflow invariant, duplicates, angle range") {
  auto m = euclidean_disk();
  const auto small = generate_fan(m, 4, 2);
  REQUIRE(small.size() == 8);
  for (const auto& p : small) CHECK(inner(m.metric(p.x), p.xi, outward_normal(m, p.x)) < 0.0);

  const auto big = generate_fan(m, 64, 32);
  REQUIRE(big.size() == 2048);
  std::set<std::pair<double, double>> keys;
  for (const auto& p : big) keys.insert({p.boundary_param, p.angle});
  CHECK(keys.size() == big.size());

  double amax = 0.0;
  for (const auto& p : big) amax = std::max(amax, std::abs(p.angle));
  CHECK(std::abs(amax - (pi / 2.0 - 0.05)) < 1e-12);

  CHECK_THROWS_AS(generate_fan(m, 3, 2), ArgumentError);
  CHECK_THROWS_AS(generate_fan(m, 4, 1), ArgumentError);
}

TEST_CASE("rectangle domain traces straight through") {
  Domain dom;
  dom.kind = DomainKind::Rectangle;
  dom.rect = {0.0, 2.0, 0.0, 1.0};
  auto jet = [](const Vec2&) {
    MetricJet j;
    j.g = SymMat2::identity();
    return j;
  };
  TransversalManifold m(MetricKind::CustomGrid, dom, jet, {}, true);
  InflowPoint p;
  p.x = {0.0, 0.5};
  p.xi = {1.0, 0.0};
  const GeodesicPath path = trace_geodesic(m, p, 1e-3);
  CHECK(std::abs(path.exit_time - 2.0) < 1e-6);
}

#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "beamlab/raytransform.hpp"
#include "oracles.hpp"

using namespace beamlab;
using namespace beamlab::geometry;
using namespace beamlab::raytransform;

namespace {

LatticeSpec disk_lattice(int n) { return {{-1.05, 1.05, -1.05, 1.05}, n, n}; }

InflowPoint flat_ray(Vec2 x, Vec2 xi) {
  InflowPoint p;
  p.x = x;
  p.xi = xi;
  return p;
}

}  // namespace

TEST_CASE("transform: chord lengths for f == 1") {
  auto m = euclidean_disk();
  std::vector<InflowPoint> fan = {
      flat_ray({-1.0, 0.0}, {1.0, 0.0}),
      flat_ray({-std::sqrt(3.0) / 2.0, 0.5}, {1.0, 0.0}),
  };
  RayCache cache(m, fan);
  const RealField one = RealField::sample(disk_lattice(33), [](Vec2) { return 1.0; }, m.domain());
  const auto sino = forward_transform(cache, one, 0.0);
  REQUIRE(sino.size() == 2);
  CHECK(std::abs(sino.values[0] - 2.0) < 1e-6);
  CHECK(std::abs(sino.values[1] - std::sqrt(3.0)) < 1e-6);
  
}

TEST_CASE("transform: constant attenuation closed form") {
  auto m = euclidean_disk();
  std::vector<InflowPoint> fan = {flat_ray({-1.0, 0.0}, {1.0, 0.0}),
                                  flat_ray({-std::sqrt(3.0) / 2.0, 0.5}, {1.0, 0.0})};
  RayCache cache(m, fan);
  const RealField one = RealField::sample(disk_lattice(33), [](Vec2) { return 1.0; }, m.domain());
  const double a = 0.3;
  const auto sino = forward_transform(cache, one, a);
  const double L0 = 2.0, L1 = std::sqrt(3.0);
  CHECK(std::abs(sino.values[0] - (std::exp(a * L0) - 1.0) / a) < 1e-6);
  CHECK(std::abs(sino.values[1] - (std::exp(a * L1) - 1.0) / a) < 1e-6);
}

TEST_CASE("transform: refined-quadrature oracle on a gaussian bump") {
  auto m = euclidean_disk();
  std::vector<InflowPoint> fan = {flat_ray({-1.0, 0.0}, {1.0, 0.0}),
                                  flat_ray({-std::sqrt(3.0) / 2.0, 0.5}, {1.0, 0.0})};
  TransformOptions coarse;
  coarse.quad_step = 1e-3;
  coarse.trace_step = 1e-3;
  RayCache cache(m, fan, coarse);
  const RealField f = RealField::sample(
      disk_lattice(65), [](Vec2 p) { return gaussian_bump(p, {0.2, 0.1}, 0.4); }, m.domain());
  const double a = 0.1;
  const auto sino = forward_transform(cache, f, a);
  // 10x refined quadrature along the same geodesics
  TransformOptions fine = coarse;
  fine.quad_step = 1e-4;
  fine.trace_step = 1e-4;
  RayCache cache_fine(m, fan, fine);
  const auto sino_fine = forward_transform(cache_fine, f, a);
  for (std::size_t i = 0; i < sino.size(); ++i)
    CHECK(std::abs(sino.values[i] - sino_fine.values[i]) / std::abs(sino_fine.values[i]) < 1e-7);
}

TEST_CASE("transform: tangential and trapped rays are flagged, not errors") {
  auto m = euclidean_disk();
  std::vector<InflowPoint> fan = {inflow_point(m, 0.0, 89.99 * pi / 180.0),
                                  flat_ray({-1.0, 0.0}, {1.0, 0.0})};
  TransformOptions opt;
  opt.max_len = 1.0;  // forces the diameter to be flagged trapped
  RayCache cache(m, fan, opt);
  const RealField one = RealField::sample(disk_lattice(17), [](Vec2) { return 1.0; }, m.domain());
  const auto sino = forward_transform(cache, one, 0.0);
  CHECK(sino.usable[0] == 0);
  CHECK(sino.tangency[0] == Tangency::TangentialEntry);
  CHECK(sino.usable[1] == 0);
  CHECK(sino.tangency[1] == Tangency::Trapped);
  CHECK(sino.max_abs() == 0.0);
}

TEST_CASE("transform: linearity to machine precision") {
  auto m = radial_herglotz();
  RayCache cache(m, generate_fan(m, 8, 4));
  const LatticeSpec spec = disk_lattice(33);
  const RealField f1 = RealField::sample(
      spec, [](Vec2 p) { return gaussian_bump(p, {0.3, 0.0}, 0.35); }, m.domain());
  const RealField f2 = RealField::sample(
      spec, [](Vec2 p) { return gaussian_bump(p, {-0.2, 0.25}, 0.3); }, m.domain());
  RealField combo = RealField::zeros(spec, m.domain());
  for (std::size_t k = 0; k < combo.values.size(); ++k)
    combo.values[k] = 2.5 * f1.values[k] - 1.25 * f2.values[k];
  const auto s1 = forward_transform(cache, f1, 0.15);
  const auto s2 = forward_transform(cache, f2, 0.15);
  const auto sc = forward_transform(cache, combo, 0.15);
  for (std::size_t i = 0; i < sc.size(); ++i)
    if (sc.usable[i])
      CHECK(std::abs(sc.values[i] - (2.5 * s1.values[i] - 1.25 * s2.values[i])) < 1e-12);
}

TEST_CASE("transform: distinct phantoms produce distinct data") {
  auto m = euclidean_disk();
  RayCache cache(m, generate_fan(m, 16, 8));
  const LatticeSpec spec = disk_lattice(33);
  const RealField f1 = RealField::sample(
      spec, [](Vec2 p) { return compact_bump(p, {0.25, 0.0}, 0.45); }, m.domain());
  const RealField f2 = RealField::sample(
      spec, [](Vec2 p) { return compact_bump(p, {-0.25, 0.1}, 0.45); }, m.domain());
  const auto s1 = forward_transform(cache, f1, 0.0);
  const auto s2 = forward_transform(cache, f2, 0.0);
  double diff = 0.0;
  for (std::size_t i = 0; i < s1.size(); ++i)
    if (s1.usable[i]) diff = std::max(diff, std::abs(s1.values[i] - s2.values[i]));
  CHECK(diff >= 1e-3);
}

TEST_CASE("adjoint: dot-product identity at 1e-10") {
  auto m = euclidean_disk();
  RayCache cache(m, generate_fan(m, 8, 4));
  const LatticeSpec spec = disk_lattice(8);
  std::mt19937 rng(12345);
  std::uniform_real_distribution<double> uni(-1.0, 1.0);
  ComplexField f = ComplexField::zeros(spec, m.domain());
  for (auto& v : f.values) v = cplx(uni(rng), uni(rng));
  const RaySinogram If = forward_transform(cache, f, 0.2);
  auto g = If;
  for (std::size_t i = 0; i < g.values.size(); ++i)
    g.values[i] = g.usable[i] ? cplx(uni(rng), uni(rng)) : cplx(0.0);
  const ComplexField Ig = adjoint_transform(cache, g, spec, m.domain());
  const cplx lhs = sinogram_dot(g, If);
  const cplx rhs = lattice_dot(Ig.values, f.values);
  CHECK(std::abs(lhs - rhs) / std::abs(lhs) < 1e-10);
}

TEST_CASE("adjoint: zero sinogram and single-ray support") {
  auto m = euclidean_disk();
  std::vector<InflowPoint> fan = {flat_ray({-1.0, 0.0}, {1.0, 0.0}),
                                  flat_ray({0.0, -1.0}, {0.0, 1.0})};
  RayCache cache(m, fan);
  const LatticeSpec spec = disk_lattice(21);
  auto zero = forward_transform(
      cache, ComplexField::sample(spec, [](Vec2) { return cplx(0.0); }, m.domain()), 0.0);
  const ComplexField z = adjoint_transform(cache, zero, spec, m.domain());
  for (const cplx& v : z.values) CHECK(v == cplx(0.0));

  // single horizontal ray: backprojection vanishes away from the x-axis band
  auto single = zero;
  single.values[0] = 1.0;
  single.usable[0] = 1;
  single.usable[1] = 0;
  const ComplexField bp = adjoint_transform(cache, single, spec, m.domain());
  double off_axis = 0.0, on_axis = 0.0;
  for (int j = 0; j < spec.ny; ++j)
    for (int i = 0; i < spec.nx; ++i) {
      const Vec2 p = spec.node(i, j);
      const double v = std::abs(bp.values[static_cast<std::size_t>(j) * spec.nx + i]);
      if (std::abs(p.y) > 0.25) off_axis = std::max(off_axis, v);
      if (std::abs(p.y) < 0.1 && std::abs(p.x) < 0.8) on_axis = std::max(on_axis, v);
    }
  CHECK(off_axis == 0.0);
  CHECK(on_axis > 0.0);

  RaySinogram empty;
  CHECK_THROWS_AS(adjoint_transform(cache, empty, spec, m.domain()), ArgumentError);
}

TEST_CASE("invert: zero data gives exactly zero") {
  auto m = euclidean_disk();
  RayCache cache(m, generate_fan(m, 16, 8));
  const LatticeSpec spec = disk_lattice(17);
  const auto zero = forward_transform(
      cache, ComplexField::sample(spec, [](Vec2) { return cplx(0.0); }, m.domain()), 0.0);
  InversionReport rep;
  const ComplexField rec = invert_transform(cache, zero, spec, m.domain(), {}, &rep);
  for (const cplx& v : rec.values) CHECK(v == cplx(0.0));
  CHECK(rep.converged);
}

TEST_CASE("invert: small round trip on a smooth bump") {
  auto m = euclidean_disk();
  RayCache cache(m, generate_fan(m, 32, 12));
  const LatticeSpec spec = disk_lattice(33);
  auto phantom = [](Vec2 p) { return compact_bump(p, {0.15, -0.1}, 0.55); };
  const RealField truth =
      RealField::sample(spec, [&](Vec2 p) { return phantom(p); }, m.domain());
  const auto data = forward_transform(cache, truth, 0.0);
  InversionReport rep;
  InversionOptions opt;
  const RealField rec = invert_transform(cache, data, spec, m.domain(), opt, &rep, &truth);
  CHECK(rep.rel_error <= 0.15);
  CHECK(rep.final_residual <= 1e-6);
}

TEST_CASE("invert: attenuation bound is enforced") {
  auto m = euclidean_disk();
  RayCache cache(m, generate_fan(m, 8, 4));
  const LatticeSpec spec = disk_lattice(9);
  auto sino = forward_transform(
      cache, RealField::sample(spec, [](Vec2) { return 1.0; }, m.domain()), 0.0);
  sino.attenuation = 1.5;  // beyond the default a_max = 1
  CHECK_THROWS_AS(invert_transform(cache, sino, spec, m.domain(), {}), ArgumentError);
}

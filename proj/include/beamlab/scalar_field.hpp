// Scalar fields on a regular lattice over the chart bounding box, bicubic
// (Catmull-Rom) interpolation, extension by zero outside { rho >= 0 }.

#pragma once

#include <optional>
#include <vector>

#include "beamlab/manifold.hpp"

namespace beamlab::raytransform {

using geometry::Domain;
using geometry::Rect;

// Lattice geometry shared by fields and the transform stencils.
struct LatticeSpec {
  Rect box;
  int nx = 0, ny = 0;

  double dx() const { return (box.xmax - box.xmin) / (nx - 1); }
  double dy() const { return (box.ymax - box.ymin) / (ny - 1); }
  std::size_t size() const { return static_cast<std::size_t>(nx) * ny; }
  Vec2 node(int i, int j) const {
    return {box.xmin + dx() * i, box.ymin + dy() * j};
  }
};

// One bicubic evaluation = 16 lattice nodes with fixed weights; the same
// stencil drives interpolation (gather) and backprojection (scatter), which
// keeps the discrete adjoint exact.
struct Stencil {
  std::array<std::size_t, 16> index;
  std::array<double, 16> weight;
};

namespace detail {

inline void catmull_rom_w(double t, double w[4]) {
  const double t2 = t * t, t3 = t2 * t;
  w[0] = 0.5 * (-t3 + 2.0 * t2 - t);
  w[1] = 0.5 * (3.0 * t3 - 5.0 * t2 + 2.0);
  w[2] = 0.5 * (-3.0 * t3 + 4.0 * t2 + t);
  w[3] = 0.5 * (t3 - t2);
}

}  // namespace detail

inline Stencil bicubic_stencil(const LatticeSpec& s, const Vec2& p) {
  const double fx = (p.x - s.box.xmin) / s.dx();
  const double fy = (p.y - s.box.ymin) / s.dy();
  const int ix = std::clamp(static_cast<int>(std::floor(fx)), 0, s.nx - 2);
  const int iy = std::clamp(static_cast<int>(std::floor(fy)), 0, s.ny - 2);
  double wx[4], wy[4];
  detail::catmull_rom_w(fx - ix, wx);
  detail::catmull_rom_w(fy - iy, wy);
  Stencil st;
  int k = 0;
  for (int j = 0; j < 4; ++j) {
    const int jj = std::clamp(iy - 1 + j, 0, s.ny - 1);
    for (int i = 0; i < 4; ++i) {
      const int ii = std::clamp(ix - 1 + i, 0, s.nx - 1);
      st.index[k] = static_cast<std::size_t>(jj) * s.nx + ii;
      st.weight[k] = wx[i] * wy[j];
      ++k;
    }
  }
  return st;
}

// Zero-extension indicator shared by interpolation and backprojection; the
// adjoint must apply exactly the mask the forward evaluation applies.
inline bool lattice_masked(const LatticeSpec& s, const std::optional<Domain>& dom, const Vec2& p) {
  return !s.box.contains(p) || (dom && dom->rho(p) < 0.0);
}

template <typename T>
struct ScalarField {
  LatticeSpec lattice;
  std::vector<T> values;             // row-major, ny rows of nx
  std::optional<Domain> domain;      // zero-extension boundary, if any

  static ScalarField zeros(const LatticeSpec& s, std::optional<Domain> dom = std::nullopt) {
    ScalarField f;
    f.lattice = s;
    f.values.assign(s.size(), T{});
    f.domain = dom;
    return f;
  }

  template <typename Fn>
  static ScalarField sample(const LatticeSpec& s, Fn&& fn,
                            std::optional<Domain> dom = std::nullopt) {
    ScalarField f = zeros(s, dom);
    for (int j = 0; j < s.ny; ++j)
      for (int i = 0; i < s.nx; ++i) f.values[static_cast<std::size_t>(j) * s.nx + i] = fn(s.node(i, j));
    return f;
  }

  T eval(const Vec2& p) const {
    if (lattice_masked(lattice, domain, p)) return T{};
    const Stencil st = bicubic_stencil(lattice, p);
    T acc{};
    for (int k = 0; k < 16; ++k) acc += weight_cast(st.weight[k]) * values[st.index[k]];
    return acc;
  }

  // L2-type lattice norm restricted to the domain interior.
  double interior_l2(const ScalarField* reference = nullptr) const {
    double acc = 0.0;
    for (int j = 0; j < lattice.ny; ++j)
      for (int i = 0; i < lattice.nx; ++i) {
        const Vec2 p = lattice.node(i, j);
        if (domain && domain->rho(p) < 0.0) continue;
        const std::size_t k = static_cast<std::size_t>(j) * lattice.nx + i;
        const T d = reference ? values[k] - reference->values[k] : values[k];
        acc += std::norm(cplx(d));
      }
    return std::sqrt(acc);
  }

 private:
  static T weight_cast(double w) {
    if constexpr (std::is_same_v<T, double>)
      return w;
    else
      return T(w, 0.0);
  }
};

using RealField = ScalarField<double>;
using ComplexField = ScalarField<cplx>;

// ---------------------------------------------------------------------------
// Phantom builders
// ---------------------------------------------------------------------------

// C-infinity bump supported on |x - c| < r.
inline double compact_bump(const Vec2& p, const Vec2& center, double radius, double amp = 1.0) {
  const double u2 = dot(p - center, p - center) / (radius * radius);
  if (u2 >= 1.0) return 0.0;
  return amp * std::exp(1.0 - 1.0 / (1.0 - u2));
}

inline double gaussian_bump(const Vec2& p, const Vec2& center, double sigma, double amp = 1.0) {
  return amp * std::exp(-dot(p - center, p - center) / (sigma * sigma));
}

}  // namespace beamlab::raytransform

// Attenuated geodesic ray transform I^a, its exact discrete adjoint, and
// Tikhonov-regularized conjugate-gradient inversion on the normal equations.

#pragma once

#include "beamlab/geodesic.hpp"
#include "beamlab/scalar_field.hpp"

namespace beamlab::raytransform {

using geometry::GeodesicPath;
using geometry::InflowPoint;
using geometry::Tangency;
using geometry::TransversalManifold;

struct TransformOptions {
  double trace_step = 2e-3;
  double quad_step = 2e-3;  // clamped to trace_step, per the forward contract
  double max_len = 50.0;
  double tangency_eps = 1e-3;
  double a_max = 1.0;  // small-attenuation bound for the inversion
  int threads = 1;
};

// One ray with its Simpson quadrature nodes; reused across attenuations.
struct CachedRay {
  InflowPoint inflow;
  Tangency tangency = Tangency::NonTangential;
  bool usable = false;  // non-tangential and not trapped
  double exit_time = 0.0;
  std::vector<Vec2> points;
  std::vector<double> t;  // arclength at the nodes
  std::vector<double> w;  // Simpson weights
};

// Rays are traced once per geometry and shared by every forward, adjoint,
// and inversion that follows.
class RayCache {
 public:
  RayCache(const TransversalManifold& m, const std::vector<InflowPoint>& fan,
           TransformOptions opt = {})
      : opt_(opt) {
    opt_.quad_step = std::min(opt_.quad_step, opt_.trace_step);
    rays_.resize(fan.size());
    parallel_for(fan.size(), opt_.threads, [&](std::size_t i) {
      CachedRay& ray = rays_[i];
      ray.inflow = fan[i];
      const GeodesicPath path = geometry::trace_geodesic(m, fan[i], opt_.trace_step, opt_.max_len);
      if (path.trapped) {
        ray.tangency = Tangency::Trapped;
        return;
      }
      ray.tangency = geometry::classify_tangency(path, m, opt_.tangency_eps);
      ray.exit_time = path.exit_time;
      if (ray.tangency != Tangency::NonTangential) return;
      ray.usable = true;
      const geometry::PathInterpolant interp(path);
      int n = std::max(2, static_cast<int>(std::ceil(path.exit_time / opt_.quad_step)));
      if (n % 2 == 1) ++n;
      const double dt = path.exit_time / n;
      ray.points.resize(static_cast<std::size_t>(n) + 1);
      ray.t.resize(static_cast<std::size_t>(n) + 1);
      ray.w.resize(static_cast<std::size_t>(n) + 1);
      for (int k = 0; k <= n; ++k) {
        const double tk = dt * k;
        // endpoints sit on rho = 0 up to bisection noise; evaluate a hair
        // inside so the zero-extension mask stays deterministic
        const double teval = std::clamp(tk, 1e-9, path.exit_time - 1e-9);
        ray.points[static_cast<std::size_t>(k)] = interp.at(teval).x;
        ray.t[static_cast<std::size_t>(k)] = tk;
        const double simpson = (k == 0 || k == n) ? 1.0 : (k % 2 == 1 ? 4.0 : 2.0);
        ray.w[static_cast<std::size_t>(k)] = simpson * dt / 3.0;
      }
    });
  }

  const std::vector<CachedRay>& rays() const { return rays_; }
  const TransformOptions& options() const { return opt_; }
  std::size_t usable_count() const {
    std::size_t n = 0;
    for (const auto& r : rays_) n += r.usable ? 1 : 0;
    return n;
  }

 private:
  TransformOptions opt_;
  std::vector<CachedRay> rays_;
};

// Transform samples over the inflow fan; flagged (trapped/tangential) rays
// carry no value and are excluded downstream.
template <typename S>
struct Sinogram {
  std::vector<InflowPoint> inflow;
  std::vector<Tangency> tangency;
  std::vector<uint8_t> usable;
  std::vector<S> values;
  double attenuation = 0.0;

  std::size_t size() const { return values.size(); }

  double max_abs() const {
    double m = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i)
      if (usable[i]) m = std::max(m, std::abs(values[i]));
    return m;
  }
};

using RaySinogram = Sinogram<cplx>;

namespace detail {

inline double conj_of(double v) { return v; }
inline cplx conj_of(const cplx& v) { return std::conj(v); }

// Deterministic parallel backprojection: rays map to a fixed number of
// buckets independent of the thread count, and bucket buffers are reduced
// in index order.
inline constexpr int kScatterBuckets = 8;

}  // namespace detail

// I^a(f)(ray) = sum_k w_k e^{a t_k} f(x_k), composite Simpson along the ray.
template <typename T>
Sinogram<T> forward_transform(const RayCache& cache, const ScalarField<T>& f, double a) {
  const auto& rays = cache.rays();
  Sinogram<T> sino;
  sino.attenuation = a;
  sino.inflow.resize(rays.size());
  sino.tangency.resize(rays.size());
  sino.usable.assign(rays.size(), 0);
  sino.values.assign(rays.size(), T{});
  parallel_for(rays.size(), cache.options().threads, [&](std::size_t i) {
    const CachedRay& ray = rays[i];
    sino.inflow[i] = ray.inflow;
    sino.tangency[i] = ray.tangency;
    if (!ray.usable) return;
    sino.usable[i] = 1;
    T acc{};
    for (std::size_t k = 0; k < ray.points.size(); ++k)
      acc += (ray.w[k] * std::exp(a * ray.t[k])) * f.eval(ray.points[k]);
    sino.values[i] = acc;
  });
  return sino;
}

// Exact discrete adjoint of forward_transform on the given lattice.
template <typename S>
ScalarField<S> adjoint_transform(const RayCache& cache, const Sinogram<S>& sino,
                                 const LatticeSpec& grid,
                                 std::optional<Domain> domain = std::nullopt) {
  if (sino.size() == 0) throw ArgumentError("adjoint_transform: empty sinogram");
  if (sino.size() != cache.rays().size())
    throw ArgumentError("adjoint_transform: sinogram does not match the ray cache");
  const double a = sino.attenuation;
  std::vector<std::vector<S>> buckets(detail::kScatterBuckets,
                                      std::vector<S>(grid.size(), S{}));
  const auto& rays = cache.rays();
  parallel_for(detail::kScatterBuckets, cache.options().threads, [&](std::size_t b) {
    auto& buf = buckets[b];
    for (std::size_t i = b; i < rays.size(); i += detail::kScatterBuckets) {
      if (!sino.usable[i] || !rays[i].usable) continue;
      const CachedRay& ray = rays[i];
      const S d = sino.values[i];
      for (std::size_t k = 0; k < ray.points.size(); ++k) {
        if (lattice_masked(grid, domain, ray.points[k])) continue;
        const S c = d * (ray.w[k] * std::exp(a * ray.t[k]));
        const Stencil st = bicubic_stencil(grid, ray.points[k]);
        for (int s = 0; s < 16; ++s) buf[st.index[s]] += st.weight[s] * c;
      }
    }
  });
  ScalarField<S> out = ScalarField<S>::zeros(grid, domain);
  for (const auto& buf : buckets)
    for (std::size_t k = 0; k < grid.size(); ++k) out.values[k] += buf[k];
  return out;
}

// Plain lattice/sinogram inner products for the dot-product test and CG.
template <typename S>
S lattice_dot(const std::vector<S>& a, const std::vector<S>& b) {
  S acc{};
  for (std::size_t k = 0; k < a.size(); ++k) acc += detail::conj_of(a[k]) * b[k];
  return acc;
}

template <typename S>
S sinogram_dot(const Sinogram<S>& a, const Sinogram<S>& b) {
  S acc{};
  for (std::size_t k = 0; k < a.values.size(); ++k)
    if (a.usable[k] && b.usable[k]) acc += detail::conj_of(a.values[k]) * b.values[k];
  return acc;
}

struct InversionReport {
  int iterations = 0;
  double final_residual = 0.0;  // relative CG residual
  double rel_error = -1.0;      // vs. truth, when provided
  bool converged = false;
};

struct InversionOptions {
  double reg = 1e-4;
  int max_iters = 400;
  double tol = 1e-8;
  int divergence_run = 10;
};

namespace detail {

// Dimensionless 5-point Laplacian (sum of neighbours minus 4 times center),
// zero beyond the lattice edge; self-adjoint.
template <typename S>
void discrete_laplacian(const LatticeSpec& s, const std::vector<S>& in, std::vector<S>& out) {
  out.assign(in.size(), S{});
  for (int j = 0; j < s.ny; ++j)
    for (int i = 0; i < s.nx; ++i) {
      const std::size_t k = static_cast<std::size_t>(j) * s.nx + i;
      S acc = -4.0 * in[k];
      if (i > 0) acc += in[k - 1];
      if (i + 1 < s.nx) acc += in[k + 1];
      if (j > 0) acc += in[k - s.nx];
      if (j + 1 < s.ny) acc += in[k + static_cast<std::size_t>(s.nx)];
      out[k] = acc;
    }
}

}  // namespace detail

// Tikhonov-regularized least squares: (I* I + reg L* L) f = I* d by
// Jacobi-preconditioned CG. Realizes the injectivity assumption numerically.
template <typename S>
ScalarField<S> invert_transform(const RayCache& cache, const Sinogram<S>& sino,
                                const LatticeSpec& grid, std::optional<Domain> domain,
                                const InversionOptions& opt, InversionReport* report = nullptr,
                                const ScalarField<S>* truth = nullptr) {
  if (std::abs(sino.attenuation) >= cache.options().a_max)
    throw ArgumentError("invert_transform: |a| exceeds the configured a_max bound");

  const std::size_t n = grid.size();

  ScalarField<S> work = ScalarField<S>::zeros(grid, domain);
  auto apply_normal = [&](const std::vector<S>& f, std::vector<S>& out) {
    work.values = f;
    const Sinogram<S> af = forward_transform(cache, work, sino.attenuation);
    const ScalarField<S> back = adjoint_transform(cache, af, grid, domain);
    std::vector<S> lap, lap2;
    detail::discrete_laplacian(grid, f, lap);
    detail::discrete_laplacian(grid, lap, lap2);
    out.resize(n);
    for (std::size_t k = 0; k < n; ++k) out[k] = back.values[k] + opt.reg * lap2[k];
  };

  // Jacobi preconditioner: diag(A* A) by squared scatter + diag(L* L) ~ 20.
  std::vector<double> diag(n, opt.reg * 20.0);
  for (const CachedRay& ray : cache.rays()) {
    if (!ray.usable) continue;
    for (std::size_t k = 0; k < ray.points.size(); ++k) {
      if (lattice_masked(grid, domain, ray.points[k])) continue;
      const double c = ray.w[k] * std::exp(sino.attenuation * ray.t[k]);
      const Stencil st = bicubic_stencil(grid, ray.points[k]);
      for (int s = 0; s < 16; ++s) diag[st.index[s]] += sq(c * st.weight[s]);
    }
  }
  for (double& d : diag) d = d > 0.0 ? 1.0 / d : 1.0;

  const ScalarField<S> bfield = adjoint_transform(cache, sino, grid, domain);
  const std::vector<S>& b = bfield.values;
  const double bnorm = std::sqrt(std::abs(lattice_dot(b, b)));

  ScalarField<S> out = ScalarField<S>::zeros(grid, domain);
  if (report) *report = {};
  if (bnorm == 0.0) {
    if (report) report->converged = true;
    return out;  // zero data inverts to zero exactly
  }

  std::vector<S> x(n, S{}), r = b, z(n), p(n), q(n);
  for (std::size_t k = 0; k < n; ++k) z[k] = diag[k] * r[k];
  p = z;
  S rz = lattice_dot(r, z);
  double res = 1.0;
  int rising = 0;
  double prev = 1e300;
  int it = 0;
  for (; it < opt.max_iters; ++it) {
    res = std::sqrt(std::abs(lattice_dot(r, r))) / bnorm;
    if (res <= opt.tol) break;
    if (res > prev) {
      if (++rising >= opt.divergence_run)
        throw NumericError("invert_transform: CG residual increased for " +
                           std::to_string(opt.divergence_run) + " consecutive iterations");
    } else {
      rising = 0;
    }
    prev = res;
    apply_normal(p, q);
    const S alpha = rz / lattice_dot(p, q);
    for (std::size_t k = 0; k < n; ++k) {
      x[k] += alpha * p[k];
      r[k] -= alpha * q[k];
    }
    for (std::size_t k = 0; k < n; ++k) z[k] = diag[k] * r[k];
    const S rz_new = lattice_dot(r, z);
    const S beta = rz_new / rz;
    rz = rz_new;
    for (std::size_t k = 0; k < n; ++k) p[k] = z[k] + beta * p[k];
  }

  out.values = std::move(x);
  if (report) {
    report->iterations = it;
    report->final_residual = res;
    report->converged = res <= opt.tol;
    if (truth) {
      const double tn = truth->interior_l2();
      report->rel_error = tn > 0.0 ? out.interior_l2(truth) / tn : out.interior_l2();
    }
  }
  return out;
}

}  // namespace beamlab::raytransform

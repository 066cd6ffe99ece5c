// Constructive recovery surrogate: from attenuated ray-transform data of the
// Fourier slices f(x', beta, lambda) over a (lambda, beta) grid, recover the
// slices by regularized inversion, extrapolate the cone-limited spectrum of
// cq under support and realness constraints, and unscale by the conformal
// factor.

#pragma once

#include "beamlab/beam.hpp"
#include "beamlab/raytransform.hpp"

namespace beamlab::recovery {

using geometry::Domain;
using geometry::TransversalManifold;
using raytransform::ComplexField;
using raytransform::LatticeSpec;
using raytransform::RayCache;
using raytransform::Sinogram;

// ---------------------------------------------------------------------------
// Space-time potential q(t, x1, x') on Q = (0,T) x M, zero on the boundary
// faces of Q.
// ---------------------------------------------------------------------------

struct SpaceTimeAxes {
  double t0 = 0.0, t1 = 8.0;
  int nt = 40;
  double x0 = 0.0, x1 = 8.0;
  int nx = 40;
  LatticeSpec xp;  // transversal lattice
  Domain domain;   // transversal zero-extension

  double t_at(int i) const { return t0 + (t1 - t0) * i / (nt - 1); }
  double x_at(int j) const { return x0 + (x1 - x0) * j / (nx - 1); }
  double wt(int i) const { return ((i == 0 || i == nt - 1) ? 0.5 : 1.0) * (t1 - t0) / (nt - 1); }
  double wx(int j) const { return ((j == 0 || j == nx - 1) ? 0.5 : 1.0) * (x1 - x0) / (nx - 1); }
  std::size_t euclidean_size() const { return static_cast<std::size_t>(nt) * nx; }
  std::size_t size() const { return euclidean_size() * xp.size(); }
};

struct SpaceTimePotential {
  SpaceTimeAxes axes;
  std::vector<double> values;  // [(it*nx + ix) * xp.size() + node]

  std::size_t idx(int it, int ix, std::size_t node) const {
    return (static_cast<std::size_t>(it) * axes.nx + ix) * axes.xp.size() + node;
  }

  template <typename Fn>
  static SpaceTimePotential sample(const SpaceTimeAxes& axes, Fn&& fn) {
    SpaceTimePotential q;
    q.axes = axes;
    q.values.assign(axes.size(), 0.0);
    for (int it = 0; it < axes.nt; ++it)
      for (int ix = 0; ix < axes.nx; ++ix)
        for (int j = 0; j < axes.xp.ny; ++j)
          for (int i = 0; i < axes.xp.nx; ++i) {
            const std::size_t node = static_cast<std::size_t>(j) * axes.xp.nx + i;
            q.values[q.idx(it, ix, node)] = fn(axes.t_at(it), axes.x_at(ix), axes.xp.node(i, j));
          }
    q.enforce_boundary();
    return q;
  }

  // q = 0 on every boundary face of the grid (the Theorem hypothesis
  // realized as zero extension).
  void enforce_boundary() {
    for (int it = 0; it < axes.nt; ++it)
      for (int ix = 0; ix < axes.nx; ++ix) {
        const bool t_face = (it == 0 || it == axes.nt - 1);
        const bool x_face = (ix == 0 || ix == axes.nx - 1);
        for (int j = 0; j < axes.xp.ny; ++j)
          for (int i = 0; i < axes.xp.nx; ++i) {
            const bool p_face = (i == 0 || i == axes.xp.nx - 1 || j == 0 || j == axes.xp.ny - 1);
            if (t_face || x_face || p_face) {
              const std::size_t node = static_cast<std::size_t>(j) * axes.xp.nx + i;
              values[idx(it, ix, node)] = 0.0;
            }
          }
      }
  }

  // lattice L2 over interior transversal nodes
  double interior_l2(const SpaceTimePotential* ref = nullptr) const {
    double acc = 0.0;
    for (int j = 0; j < axes.xp.ny; ++j)
      for (int i = 0; i < axes.xp.nx; ++i) {
        if (axes.domain.rho(axes.xp.node(i, j)) < 0.0) continue;
        const std::size_t node = static_cast<std::size_t>(j) * axes.xp.nx + i;
        for (int it = 0; it < axes.nt; ++it)
          for (int ix = 0; ix < axes.nx; ++ix) {
            const double d =
                ref ? values[idx(it, ix, node)] - ref->values[idx(it, ix, node)]
                    : values[idx(it, ix, node)];
            acc += d * d;
          }
      }
    return std::sqrt(acc);
  }
};

using ConformalFn = std::function<double(double, Vec2)>;

// ---------------------------------------------------------------------------
// Slice set over the (lambda, beta) grid
// ---------------------------------------------------------------------------

struct SlicePair {
  double lambda = 0.0;
  double beta = 0.0;
  double attenuation() const { return -std::sqrt(1.0 - beta * beta) * lambda; }
};

struct SliceSet {
  std::vector<SlicePair> pairs;
  std::vector<ComplexField> slices;  // one complex field per pair

  void validate(double a_max) const {
    for (std::size_t p = 0; p < pairs.size(); ++p) {
      if (pairs[p].lambda == 0.0) throw ArgumentError("slice set: lambda must be nonzero");
      if (!(pairs[p].beta > beam::beta_lower && pairs[p].beta < 1.0))
        throw ArgumentError("slice set: beta must lie in (1/sqrt(3), 1)");
      if (std::abs(pairs[p].attenuation()) >= a_max)
        throw ConfigError("slice set: attenuation " + std::to_string(pairs[p].attenuation()) +
                          " exceeds a_max");
      for (std::size_t r = p + 1; r < pairs.size(); ++r)
        if (pairs[p].lambda * pairs[p].beta == pairs[r].lambda * pairs[r].beta &&
            pairs[p].lambda == pairs[r].lambda)
          throw ArgumentError("slice set: frequency pairs must be pairwise distinct");
    }
  }
};

// lambda in {0.5, 1.0, ..., 8.0}, beta in {0.60, 0.65, ..., 0.95}; negative
// lambda slices follow from Hermitian symmetry of real potentials and are
// supplied to the cone step by conjugation.
inline std::vector<SlicePair> default_pairs() {
  std::vector<SlicePair> out;
  for (int i = 1; i <= 16; ++i)
    for (int j = 0; j < 8; ++j) out.push_back({0.5 * i, 0.60 + 0.05 * j});
  return out;
}

// ---------------------------------------------------------------------------
// fourier_slice: f(x', beta, lambda) = int int e^{i lambda (beta t + x1)}
// (c q)(t, x1, x') dx1 dt by the trapezoid rule, per transversal node.
// ---------------------------------------------------------------------------

inline ComplexField fourier_slice(const SpaceTimePotential& q, const ConformalFn& c,
                                  double lambda, double beta) {
  if (lambda == 0.0)
    throw ArgumentError("fourier_slice: lambda must be nonzero (the frequency map "
                        "degenerates at lambda = 0)");
  const SpaceTimeAxes& ax = q.axes;
  ComplexField out = ComplexField::zeros(ax.xp, ax.domain);

  std::vector<cplx> et(static_cast<std::size_t>(ax.nt)), ex(static_cast<std::size_t>(ax.nx));
  for (int i = 0; i < ax.nt; ++i)
    et[static_cast<std::size_t>(i)] = ax.wt(i) * std::exp(cplx(0.0, lambda * beta * ax.t_at(i)));
  for (int j = 0; j < ax.nx; ++j)
    ex[static_cast<std::size_t>(j)] = ax.wx(j) * std::exp(cplx(0.0, lambda * ax.x_at(j)));

  for (int jn = 0; jn < ax.xp.ny; ++jn)
    for (int in = 0; in < ax.xp.nx; ++in) {
      const std::size_t node = static_cast<std::size_t>(jn) * ax.xp.nx + in;
      const Vec2 xp = ax.xp.node(in, jn);
      cplx acc = 0.0;
      for (int it = 0; it < ax.nt; ++it) {
        cplx row = 0.0;
        for (int ix = 0; ix < ax.nx; ++ix)
          row += ex[static_cast<std::size_t>(ix)] * (c(ax.x_at(ix), xp) * q.values[q.idx(it, ix, node)]);
        acc += et[static_cast<std::size_t>(it)] * row;
      }
      out.values[node] = acc;
    }
  return out;
}

inline SliceSet fourier_slices(const SpaceTimePotential& q, const ConformalFn& c,
                               const std::vector<SlicePair>& pairs, int threads = 1) {
  SliceSet set;
  set.pairs = pairs;
  set.slices.resize(pairs.size());
  parallel_for(pairs.size(), threads, [&](std::size_t p) {
    set.slices[p] = fourier_slice(q, c, pairs[p].lambda, pairs[p].beta);
  });
  return set;
}

// ---------------------------------------------------------------------------
// synthesize_data: the transform data I^{-sqrt(1-b^2) l}(f(., b, l)) per pair,
// with a triple-integral consistency probe on a few rays of the first pair.
// ---------------------------------------------------------------------------

// bicubic in x' of the sampled potential at fixed (it, ix)
inline double interp_q(const SpaceTimePotential& q, int it, int ix, const Vec2& xp) {
  const SpaceTimeAxes& ax = q.axes;
  if (raytransform::lattice_masked(ax.xp, ax.domain, xp)) return 0.0;
  const raytransform::Stencil st = raytransform::bicubic_stencil(ax.xp, xp);
  const std::size_t base = (static_cast<std::size_t>(it) * ax.nx + ix) * ax.xp.size();
  double acc = 0.0;
  for (int s = 0; s < 16; ++s) acc += st.weight[s] * q.values[base + st.index[s]];
  return acc;
}

struct SynthesisOptions {
  int threads = 1;
  int probe_rays = 3;          // rays checked against the direct triple integral
  double probe_rel_tol = 5e-4;
  const SpaceTimePotential* probe_truth = nullptr;  // enables the probe
  ConformalFn probe_conformal;
};

inline std::vector<Sinogram<cplx>> synthesize_data(const SliceSet& slices, const RayCache& cache,
                                                   const SynthesisOptions& opt = {}) {
  slices.validate(cache.options().a_max);
  std::vector<Sinogram<cplx>> out(slices.pairs.size());
  parallel_for(slices.pairs.size(), opt.threads, [&](std::size_t p) {
    out[p] = raytransform::forward_transform(cache, slices.slices[p],
                                             slices.pairs[p].attenuation());
  });

  if (opt.probe_truth && opt.probe_rays > 0 && !slices.pairs.empty()) {
    // Direct quadrature of the triple integral of the data identity along a
    // small subsample of rays.
    const SpaceTimePotential& q = *opt.probe_truth;
    const SpaceTimeAxes& ax = q.axes;
    const SlicePair pair = slices.pairs.front();
    const double a = pair.attenuation();
    std::size_t probed = 0;
    for (std::size_t r = 0; r < cache.rays().size() && probed < static_cast<std::size_t>(opt.probe_rays);
         r += std::max<std::size_t>(1, cache.rays().size() / opt.probe_rays)) {
      const auto& ray = cache.rays()[r];
      if (!ray.usable) continue;
      ++probed;
      cplx direct = 0.0;
      for (std::size_t k = 0; k < ray.points.size(); ++k) {
        const Vec2 xp = ray.points[k];
        if (ax.domain.rho(xp) < 0.0) continue;
        cplx fval = 0.0;
        for (int it = 0; it < ax.nt; ++it) {
          const cplx et = ax.wt(it) * std::exp(cplx(0.0, pair.lambda * pair.beta * ax.t_at(it)));
          cplx row = 0.0;
          for (int ix = 0; ix < ax.nx; ++ix) {
            const double cv = opt.probe_conformal ? opt.probe_conformal(ax.x_at(ix), xp) : 1.0;
            row += ax.wx(ix) * std::exp(cplx(0.0, pair.lambda * ax.x_at(ix))) * cv *
                   interp_q(q, it, ix, xp);
          }
          fval += et * row;
        }
        direct += ray.w[k] * std::exp(a * ray.t[k]) * fval;
      }
      const cplx synthesized = out.front().values[r];
      const double scale = std::max(std::abs(direct), out.front().max_abs());
      if (scale > 0.0 && std::abs(direct - synthesized) > opt.probe_rel_tol * scale)
        throw NumericError("synthesize_data: slice-then-transform disagrees with the "
                           "triple-integral probe on ray " + std::to_string(r));
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// recover_slices: regularized inversion per pair
// ---------------------------------------------------------------------------

struct SliceRecoveryOptions {
  raytransform::InversionOptions inversion;
  int threads = 1;
};

struct SliceRecoveryReport {
  std::vector<raytransform::InversionReport> per_pair;
};

inline SliceSet recover_slices(const std::vector<SlicePair>& pairs,
                               const std::vector<Sinogram<cplx>>& data, const RayCache& cache,
                               const LatticeSpec& grid, const Domain& domain,
                               const SliceRecoveryOptions& opt = {},
                               SliceRecoveryReport* report = nullptr) {
  if (pairs.size() != data.size())
    throw ArgumentError("recover_slices: pairs and sinograms must align");
  SliceSet out;
  out.pairs = pairs;
  out.slices.resize(pairs.size());
  if (report) report->per_pair.resize(pairs.size());
  parallel_for(pairs.size(), opt.threads, [&](std::size_t p) {
    raytransform::InversionReport rep;
    try {
      out.slices[p] =
          raytransform::invert_transform(cache, data[p], grid, domain, opt.inversion, &rep);
    } catch (const NumericError& e) {
      throw NumericError("slice (lambda=" + std::to_string(pairs[p].lambda) +
                         ", beta=" + std::to_string(pairs[p].beta) + "): " + e.what());
    }
    if (report) report->per_pair[p] = rep;
  });
  return out;
}

// ---------------------------------------------------------------------------
// cone_reconstruct: alternating projections between the data-consistency
// affine set { A u = b } (A = trapezoid Fourier rows at the sampled cone
// frequencies) and the support + realness constraint. Gerchberg-Papoulis
// with exact projections; per-node problems decouple across x'.
// ---------------------------------------------------------------------------

struct SupportMask {
  double t_lo = 2.0, t_hi = 6.0;
  double x_lo = 2.0, x_hi = 6.0;

  bool contains(double t, double x) const {
    return t >= t_lo && t <= t_hi && x >= x_lo && x <= x_hi;
  }
};

struct ConeOptions {
  int iterations = 200;
  double min_coverage = 0.25;  // data DOF per support DOF
  double stagnation_threshold = 0.5;
  int threads = 1;
};

struct ConeReport {
  std::vector<double> correction_norm;  // non-increasing projection distances
  std::vector<double> data_residual;    // relative ||Au - b|| after support step
  bool ill_posed_warning = false;
  double coverage = 0.0;
};

namespace detail {

// Dense Hermitian Cholesky, in place; A row-major n x n.
inline void cholesky(std::vector<cplx>& A, std::size_t n) {
  for (std::size_t j = 0; j < n; ++j) {
    double d = A[j * n + j].real();
    for (std::size_t k = 0; k < j; ++k) d -= std::norm(A[j * n + k]);
    if (d <= 0.0) throw NumericError("cone_reconstruct: Gram matrix not positive definite");
    const double ld = std::sqrt(d);
    A[j * n + j] = ld;
    for (std::size_t i = j + 1; i < n; ++i) {
      cplx s = A[i * n + j];
      for (std::size_t k = 0; k < j; ++k) s -= A[i * n + k] * std::conj(A[j * n + k]);
      A[i * n + j] = s / ld;
    }
  }
}

inline void cholesky_solve(const std::vector<cplx>& L, std::size_t n, std::vector<cplx>& y) {
  for (std::size_t i = 0; i < n; ++i) {
    cplx s = y[i];
    for (std::size_t k = 0; k < i; ++k) s -= L[i * n + k] * y[k];
    y[i] = s / L[i * n + i].real();
  }
  for (std::size_t ii = n; ii-- > 0;) {
    cplx s = y[ii];
    for (std::size_t k = ii + 1; k < n; ++k) s -= std::conj(L[k * n + ii]) * y[k];
    y[ii] = s / L[ii * n + ii].real();
  }
}

}  // namespace detail

inline SpaceTimePotential cone_reconstruct(const SliceSet& slices, const SpaceTimeAxes& axes,
                                           const SupportMask& support, const ConeOptions& opt = {},
                                           ConeReport* report = nullptr) {
  const std::size_t P = slices.pairs.size();
  if (P == 0) throw ArgumentError("cone_reconstruct: empty slice set");
  const int nt = axes.nt, nx = axes.nx;
  const std::size_t N = axes.euclidean_size();

  // support DOF coverage: 2P real constraints (Hermitian pairs implied by
  // realness) versus the unknowns inside the mask
  std::size_t support_dof = 0;
  std::vector<uint8_t> mask(N, 0);
  for (int it = 0; it < nt; ++it)
    for (int ix = 0; ix < nx; ++ix)
      if (support.contains(axes.t_at(it), axes.x_at(ix))) {
        mask[static_cast<std::size_t>(it) * nx + ix] = 1;
        ++support_dof;
      }
  const double coverage =
      support_dof > 0 ? (2.0 * static_cast<double>(P)) / static_cast<double>(support_dof) : 0.0;
  if (report) report->coverage = coverage;
  if (coverage < opt.min_coverage)
    throw ConfigError("cone_reconstruct: cone samples cover " + std::to_string(coverage) +
                      " of the support degrees of freedom; need >= " +
                      std::to_string(opt.min_coverage));

  // distinct lambda groups and phase tables
  std::vector<double> lambdas;
  std::vector<std::size_t> group(P);
  for (std::size_t p = 0; p < P; ++p) {
    const double l = slices.pairs[p].lambda;
    std::size_t g = lambdas.size();
    for (std::size_t k = 0; k < lambdas.size(); ++k)
      if (lambdas[k] == l) {
        g = k;
        break;
      }
    if (g == lambdas.size()) lambdas.push_back(l);
    group[p] = g;
  }
  const std::size_t G = lambdas.size();

  std::vector<cplx> ex(G * static_cast<std::size_t>(nx));  // w_x e^{i l x}
  for (std::size_t g = 0; g < G; ++g)
    for (int ix = 0; ix < nx; ++ix)
      ex[g * nx + ix] = axes.wx(ix) * std::exp(cplx(0.0, lambdas[g] * axes.x_at(ix)));
  std::vector<cplx> et(P * static_cast<std::size_t>(nt));  // w_t e^{i l b t}
  for (std::size_t p = 0; p < P; ++p)
    for (int it = 0; it < nt; ++it)
      et[p * nt + it] = axes.wt(it) * std::exp(cplx(0.0, slices.pairs[p].lambda *
                                                             slices.pairs[p].beta * axes.t_at(it)));

  // Gram matrix A A^H via the tensor product structure
  std::vector<cplx> gram(P * P);
  for (std::size_t p = 0; p < P; ++p)
    for (std::size_t r = 0; r <= p; ++r) {
      cplx st = 0.0;
      for (int it = 0; it < nt; ++it) st += et[p * nt + it] * std::conj(et[r * nt + it]);
      cplx sx = 0.0;
      for (int ix = 0; ix < nx; ++ix) sx += ex[group[p] * nx + ix] * std::conj(ex[group[r] * nx + ix]);
      gram[p * P + r] = st * sx;
      gram[r * P + p] = std::conj(st * sx);
    }
  double trace = 0.0;
  for (std::size_t p = 0; p < P; ++p) trace += gram[p * P + p].real();
  for (std::size_t p = 0; p < P; ++p) gram[p * P + p] += 1e-12 * trace / static_cast<double>(P);
  detail::cholesky(gram, P);

  // interior transversal nodes to reconstruct
  std::vector<std::size_t> nodes;
  for (int j = 0; j < axes.xp.ny; ++j)
    for (int i = 0; i < axes.xp.nx; ++i)
      if (axes.domain.rho(axes.xp.node(i, j)) >= 0.0)
        nodes.push_back(static_cast<std::size_t>(j) * axes.xp.nx + i);

  SpaceTimePotential out;
  out.axes = axes;
  out.values.assign(axes.size(), 0.0);

  std::vector<std::vector<double>> corr(nodes.size()), resid(nodes.size());
  parallel_for(nodes.size(), opt.threads, [&](std::size_t ni) {
    const std::size_t node = nodes[ni];
    std::vector<cplx> b(P);
    double bnorm2 = 0.0;
    for (std::size_t p = 0; p < P; ++p) {
      b[p] = slices.slices[p].values[node];
      bnorm2 += std::norm(b[p]);
    }
    const double bscale = std::sqrt(bnorm2);

    std::vector<cplx> u(N, cplx(0.0));
    std::vector<cplx> cx(G * static_cast<std::size_t>(nt));
    std::vector<cplx> r(P), gt(G * static_cast<std::size_t>(nt));
    corr[ni].resize(static_cast<std::size_t>(opt.iterations));
    resid[ni].resize(static_cast<std::size_t>(opt.iterations));

    for (int iter = 0; iter < opt.iterations; ++iter) {
      // r = A u - b via the x1 contraction per lambda group
      std::fill(cx.begin(), cx.end(), cplx(0.0));
      for (std::size_t g = 0; g < G; ++g)
        for (int it = 0; it < nt; ++it) {
          cplx acc = 0.0;
          const cplx* row = &u[static_cast<std::size_t>(it) * nx];
          const cplx* e = &ex[g * nx];
          for (int ix = 0; ix < nx; ++ix) acc += e[ix] * row[ix];
          cx[g * nt + it] = acc;
        }
      double rnorm2 = 0.0;
      for (std::size_t p = 0; p < P; ++p) {
        cplx acc = 0.0;
        const cplx* e = &et[p * nt];
        const cplx* c = &cx[group[p] * nt];
        for (int it = 0; it < nt; ++it) acc += e[it] * c[it];
        r[p] = acc - b[p];
        rnorm2 += std::norm(r[p]);
      }
      resid[ni][static_cast<std::size_t>(iter)] =
          bscale > 0.0 ? std::sqrt(rnorm2) / bscale : std::sqrt(rnorm2);

      // y = (A A^H)^{-1} r ; u <- u - A^H y (projection onto {A u = b})
      detail::cholesky_solve(gram, P, r);
      std::fill(gt.begin(), gt.end(), cplx(0.0));
      for (std::size_t p = 0; p < P; ++p) {
        const cplx* e = &et[p * nt];
        for (int it = 0; it < nt; ++it) gt[group[p] * nt + it] += std::conj(e[it]) * r[p];
      }
      double corr2 = 0.0;
      for (int it = 0; it < nt; ++it)
        for (std::size_t g = 0; g < G; ++g) {
          const cplx gv = gt[g * nt + it];
          if (gv == cplx(0.0)) continue;
          cplx* row = &u[static_cast<std::size_t>(it) * nx];
          const cplx* e = &ex[g * nx];
          for (int ix = 0; ix < nx; ++ix) {
            const cplx delta = std::conj(e[ix]) * gv;
            row[ix] -= delta;
            corr2 += std::norm(delta);
          }
        }
      corr[ni][static_cast<std::size_t>(iter)] = std::sqrt(corr2);

      // support + realness projection
      for (std::size_t k = 0; k < N; ++k) u[k] = mask[k] ? cplx(u[k].real(), 0.0) : cplx(0.0);
    }

    for (int it = 0; it < nt; ++it)
      for (int ix = 0; ix < nx; ++ix)
        out.values[out.idx(it, ix, node)] = u[static_cast<std::size_t>(it) * nx + ix].real();
  });

  if (report) {
    report->correction_norm.assign(static_cast<std::size_t>(opt.iterations), 0.0);
    report->data_residual.assign(static_cast<std::size_t>(opt.iterations), 0.0);
    for (int iter = 0; iter < opt.iterations; ++iter) {
      double c2 = 0.0, r2 = 0.0;
      for (std::size_t ni = 0; ni < nodes.size(); ++ni) {
        c2 += sq(corr[ni][static_cast<std::size_t>(iter)]);
        r2 += sq(resid[ni][static_cast<std::size_t>(iter)]);
      }
      report->correction_norm[static_cast<std::size_t>(iter)] = std::sqrt(c2);
      report->data_residual[static_cast<std::size_t>(iter)] =
          std::sqrt(r2 / static_cast<double>(nodes.size()));
    }
    report->ill_posed_warning =
        !report->data_residual.empty() && report->data_residual.back() > opt.stagnation_threshold;
  }
  out.enforce_boundary();
  return out;
}

// conformal_unscale: q = (cq) / c pointwise; exact inverse of multiplication.
inline SpaceTimePotential conformal_unscale(const SpaceTimePotential& cq, const ConformalFn& c,
                                            double c_min = 1e-8) {
  SpaceTimePotential out = cq;
  const SpaceTimeAxes& ax = cq.axes;
  for (int it = 0; it < ax.nt; ++it)
    for (int ix = 0; ix < ax.nx; ++ix)
      for (int j = 0; j < ax.xp.ny; ++j)
        for (int i = 0; i < ax.xp.nx; ++i) {
          const double cv = c(ax.x_at(ix), ax.xp.node(i, j));
          if (!(cv >= c_min))
            throw GeometryError("conformal_unscale: conformal factor below c_min");
          const std::size_t node = static_cast<std::size_t>(j) * ax.xp.nx + i;
          out.values[out.idx(it, ix, node)] /= cv;
        }
  return out;
}

// ---------------------------------------------------------------------------
// Full pipeline: phantom -> slices -> data -> inversion -> cone -> unscale
// ---------------------------------------------------------------------------

struct PipelineOptions {
  std::vector<SlicePair> pairs = default_pairs();
  raytransform::TransformOptions transform;
  raytransform::InversionOptions inversion;
  ConeOptions cone;
  SupportMask support;
  int threads = 1;
  bool probe_consistency = true;
};

struct PipelineResult {
  SpaceTimePotential reconstruction;  // unscaled potential estimate
  double rel_error = -1.0;            // vs truth when available
  SliceRecoveryReport slice_report;
  ConeReport cone_report;
};

inline PipelineResult run_pipeline(const SpaceTimePotential& truth, const ConformalFn& c,
                                   const RayCache& cache, const PipelineOptions& opt) {
  PipelineResult result;
  const SpaceTimeAxes& axes = truth.axes;

  SliceSet exact = fourier_slices(truth, c, opt.pairs, opt.threads);
  SynthesisOptions sopt;
  sopt.threads = opt.threads;
  sopt.probe_truth = opt.probe_consistency ? &truth : nullptr;
  sopt.probe_conformal = c;
  const std::vector<Sinogram<cplx>> data = synthesize_data(exact, cache, sopt);

  SliceRecoveryOptions ropt;
  ropt.inversion = opt.inversion;
  ropt.threads = opt.threads;
  const SliceSet recovered =
      recover_slices(opt.pairs, data, cache, axes.xp, axes.domain, ropt, &result.slice_report);

  ConeOptions copt = opt.cone;
  copt.threads = opt.threads;
  SpaceTimePotential cq =
      cone_reconstruct(recovered, axes, opt.support, copt, &result.cone_report);
  result.reconstruction = conformal_unscale(cq, c);

  const double tn = truth.interior_l2();
  if (tn > 0.0) result.rel_error = result.reconstruction.interior_l2(&truth) / tn;
  return result;
}

}  // namespace beamlab::recovery

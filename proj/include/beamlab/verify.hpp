// Sweep harness for the asymptotic claims: log-log slope fits, quasimode
// norm/residual sweeps in h, concentration against the attenuated line
// integral, and the product-limit identity on Q = (0,T) x M.

#pragma once

#include <string>

#include "beamlab/beam.hpp"

namespace beamlab::verify {

using beam::BeamParams;
using beam::Quasimode;
using fermi::FermiChart;

struct SweepSample {
  double value = 0.0;        // parameter (h or |y|)
  double measurement = 0.0;  // measured quantity at that parameter
};

struct SweepReport {
  std::string parameter;  // swept parameter name
  std::string quantity;   // measured quantity name
  std::vector<SweepSample> samples;
  double fitted_slope = 0.0;
  double fitted_intercept = 0.0;
  bool pass = false;
  std::string criterion;  // human-readable bound that `pass` reflects

  void require_shape() const {
    if (samples.size() < 4) throw ArgumentError("sweep: at least 4 samples for any slope fit");
    for (std::size_t i = 1; i < samples.size(); ++i)
      if (!(samples[i].value < samples[i - 1].value))
        throw ArgumentError("sweep: samples must be strictly decreasing in the parameter");
  }
};

// Ordinary least squares on (log value, log measurement).
inline std::pair<double, double> fit_slope(const std::vector<SweepSample>& samples) {
  if (samples.size() < 2) throw ArgumentError("fit_slope: need at least two samples");
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (const auto& s : samples) {
    if (!(s.measurement > 0.0))
      throw DataError("fit_slope: non-positive measurement at value=" + std::to_string(s.value));
    const double x = std::log(s.value), y = std::log(s.measurement);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  const double n = static_cast<double>(samples.size());
  const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  const double intercept = (sy - slope * sx) / n;
  return {slope, intercept};
}

// A quasimode family differing only in h.
struct BeamFamily {
  std::shared_ptr<const FermiChart> chart;
  BeamParams base;
  std::vector<double> hs = {0.04, 0.02, 0.01, 0.005};  // descending

  Quasimode mode_at(double h) const {
    BeamParams p = base;
    p.h = h;
    return beam::assemble_quasimode(chart, p);
  }
};

struct SweepOptions {
  beam::ResidualOptions residual;
  double norm_dtau = 5e-3;
  double norm_slope_lo = -0.1, norm_slope_hi = 0.1;
  double residual_slope_lo = 1.4, residual_slope_hi = 2.1;
  int threads = 1;
};

struct NormSweepResult {
  SweepReport norm;
  SweepReport residual;
};

// Asserts the norm estimate ||v_s|| = O(1) (slope ~ 0) and the residual
// estimate O(h^{3/2}) (slope within the configured window).
inline NormSweepResult norm_sweep(const BeamFamily& family, const std::function<cplx(Vec2)>& q,
                                  const SweepOptions& opt = {}) {
  NormSweepResult out;
  out.norm.parameter = out.residual.parameter = "h";
  out.norm.quantity = "quasimode_l2_norm";
  out.residual.quantity = "conjugated_residual_l2";
  out.norm.samples.resize(family.hs.size());
  out.residual.samples.resize(family.hs.size());

  parallel_for(family.hs.size(), opt.threads, [&](std::size_t i) {
    const double h = family.hs[i];
    const Quasimode mode = family.mode_at(h);
    const beam::BeamGrid grid = beam::default_beam_grid(mode, opt.norm_dtau);
    out.norm.samples[i] = {h, beam::quasimode_l2_norm(mode, grid)};
    out.residual.samples[i] = {h, beam::residual_norm(q, mode, opt.residual.adjoint, opt.residual)};
  });

  out.norm.require_shape();
  out.residual.require_shape();
  std::tie(out.norm.fitted_slope, out.norm.fitted_intercept) = fit_slope(out.norm.samples);
  std::tie(out.residual.fitted_slope, out.residual.fitted_intercept) =
      fit_slope(out.residual.samples);
  out.norm.pass =
      out.norm.fitted_slope >= opt.norm_slope_lo && out.norm.fitted_slope <= opt.norm_slope_hi;
  out.norm.criterion = "norm slope in [" + std::to_string(opt.norm_slope_lo) + ", " +
                       std::to_string(opt.norm_slope_hi) + "]";
  out.residual.pass = out.residual.fitted_slope >= opt.residual_slope_lo &&
                      out.residual.fitted_slope <= opt.residual_slope_hi;
  out.residual.criterion = "residual slope in [" + std::to_string(opt.residual_slope_lo) + ", " +
                           std::to_string(opt.residual_slope_hi) + "]";
  return out;
}

// Line integral int_0^L e^{-2 mu lambda tau} psi(gamma(tau)) dtau.
inline double concentration_limit(const FermiChart& chart, const BeamParams& p,
                                  const std::function<double(Vec2)>& psi, int n = 4000) {
  const double L = chart.exit_time();
  const double rate = 2.0 * p.mu() * p.lambda;
  double s = 0.0;
  const double h = L / n;
  auto f = [&](double tau) { return std::exp(-rate * tau) * psi(chart.axis(tau).x); };
  s += f(0.0) + f(L);
  for (int i = 1; i < n; ++i) s += f(i * h) * (i % 2 == 1 ? 4.0 : 2.0);
  return s * h / 3.0;
}

struct ConcentrationOptions {
  double rel_tol = 0.05;      // final relative error at the smallest h
  bool require_monotone = true;
  double dtau = 5e-3;
  int threads = 1;
};

// | int |v_s|^2 psi dV - line integral | per h; pass when the gap decreases
// monotonically and the final relative error meets rel_tol.
inline SweepReport concentration_test(const BeamFamily& family,
                                      const std::function<double(Vec2)>& psi,
                                      const ConcentrationOptions& opt = {}) {
  SweepReport rep;
  rep.parameter = "h";
  rep.quantity = "concentration_gap";
  const double limit = concentration_limit(*family.chart, family.base, psi);
  rep.samples.resize(family.hs.size());
  parallel_for(family.hs.size(), opt.threads, [&](std::size_t i) {
    const double h = family.hs[i];
    const Quasimode mode = family.mode_at(h);
    const beam::BeamGrid grid = beam::default_beam_grid(mode, opt.dtau);
    const double measured = beam::tube_density_integral(mode, grid, psi);
    rep.samples[i] = {h, std::abs(measured - limit)};
  });
  rep.require_shape();

  bool monotone = true;
  for (std::size_t i = 1; i < rep.samples.size(); ++i)
    monotone = monotone && rep.samples[i].measurement <= rep.samples[i - 1].measurement;
  const double scale = std::abs(limit) > 0.0 ? std::abs(limit) : 1.0;
  const double final_rel = rep.samples.back().measurement / scale;
  rep.pass = final_rel <= opt.rel_tol && (!opt.require_monotone || monotone);
  rep.criterion = "gap monotone decreasing, final relative error <= " + std::to_string(opt.rel_tol);
  if (rep.samples.back().measurement > 0.0 && rep.samples.front().measurement > 0.0)
    std::tie(rep.fitted_slope, rep.fitted_intercept) = fit_slope(rep.samples);
  return rep;
}

// Rectangular grid on the Euclidean factors (t, x1) with trapezoid weights.
struct ProductGrid {
  double t0 = 0.0, t1 = 4.0;
  int nt = 48;
  double x0 = 0.0, x1 = 4.0;
  int nx = 48;

  double t_at(int i) const { return t0 + (t1 - t0) * i / (nt - 1); }
  double x_at(int j) const { return x0 + (x1 - x0) * j / (nx - 1); }
  double wt(int i) const { return ((i == 0 || i == nt - 1) ? 0.5 : 1.0) * (t1 - t0) / (nt - 1); }
  double wx(int j) const { return ((j == 0 || j == nx - 1) ? 0.5 : 1.0) * (x1 - x0) / (nx - 1); }
};

// q(t, x1, x') on Q, continuous, compactly supported; c = c(x1, x').
using SpaceTimeFn = std::function<double(double, double, Vec2)>;
using ConformalFn = std::function<double(double, Vec2)>;

// 2-D Fourier-type factor int int e^{2 i lambda (beta t + x1)} (c q) dt dx1 at x'.
inline cplx euclidean_factor(const SpaceTimeFn& q, const ConformalFn& c, const ProductGrid& grid,
                             double lambda, double beta, const Vec2& xp) {
  cplx acc = 0.0;
  for (int i = 0; i < grid.nt; ++i) {
    const double t = grid.t_at(i);
    const cplx et = std::exp(cplx(0.0, 2.0 * lambda * beta * t)) * grid.wt(i);
    cplx row = 0.0;
    for (int j = 0; j < grid.nx; ++j) {
      const double x1 = grid.x_at(j);
      row += std::exp(cplx(0.0, 2.0 * lambda * x1)) * grid.wx(j) * c(x1, xp) * q(t, x1, xp);
    }
    acc += et * row;
  }
  return acc;
}

// Left side: int_Q e^{2 i lambda (beta t + x1)} c^{-1/2} q |v_s|^2 dV_g dt,
// with dV_g = c^{3/2} dx1 dV_{g0} for n = 3.
inline cplx product_limit_lhs(const Quasimode& mode, const SpaceTimeFn& q, const ConformalFn& c,
                              const ProductGrid& grid, double dtau = 5e-3) {
  const beam::BeamGrid tube = beam::default_beam_grid(mode, dtau);
  const double lambda = mode.params().lambda, beta = mode.params().beta;
  return beam::tube_density_integral(mode, tube, [&](const Vec2& xp) {
    return euclidean_factor(q, c, grid, lambda, beta, xp);
  });
}

// Right side of the limit: int_0^L int int e^{2 i lambda (beta t + x1)
// - 2 mu lambda tau} (c q)(t, x1, gamma(tau)) dx1 dt dtau.
inline cplx product_limit_rhs(const FermiChart& chart, const BeamParams& p, const SpaceTimeFn& q,
                              const ConformalFn& c, const ProductGrid& grid, int n = 1200) {
  const double L = chart.exit_time();
  const double rate = 2.0 * p.mu() * p.lambda;
  auto f = [&](double tau) {
    return std::exp(-rate * tau) *
           euclidean_factor(q, c, grid, p.lambda, p.beta, chart.axis(tau).x);
  };
  cplx s = f(0.0) + f(L);
  const double h = L / n;
  for (int i = 1; i < n; ++i) s += f(i * h) * (i % 2 == 1 ? 4.0 : 2.0);
  return s * (h / 3.0);
}

// Convergence of the product limit, reported like concentration_test.
inline SweepReport product_limit_test(const BeamFamily& family, const SpaceTimeFn& q,
                                      const ConformalFn& c, const ProductGrid& grid,
                                      const ConcentrationOptions& opt = {}) {
  SweepReport rep;
  rep.parameter = "h";
  rep.quantity = "product_limit_gap";
  const cplx rhs = product_limit_rhs(*family.chart, family.base, q, c, grid);
  rep.samples.resize(family.hs.size());
  parallel_for(family.hs.size(), opt.threads, [&](std::size_t i) {
    const double h = family.hs[i];
    const Quasimode mode = family.mode_at(h);
    const cplx lhs = product_limit_lhs(mode, q, c, grid, opt.dtau);
    rep.samples[i] = {h, std::abs(lhs - rhs)};
  });
  rep.require_shape();
  bool monotone = true;
  for (std::size_t i = 1; i < rep.samples.size(); ++i)
    monotone = monotone && rep.samples[i].measurement <= rep.samples[i - 1].measurement;
  const double scale = std::abs(rhs) > 0.0 ? std::abs(rhs) : 1.0;
  rep.pass = rep.samples.back().measurement / scale <= opt.rel_tol &&
             (!opt.require_monotone || monotone);
  rep.criterion =
      "gap monotone decreasing, final relative error <= " + std::to_string(opt.rel_tol);
  if (rep.samples.back().measurement > 0.0)
    std::tie(rep.fitted_slope, rep.fitted_intercept) = fit_slope(rep.samples);
  return rep;
}

}  // namespace beamlab::verify

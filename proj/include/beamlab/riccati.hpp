// Riccati phase ODE H' + H^2 = F(tau) along the geodesic and the transport
// amplitude b0 = exp(-1/2 int tr H). In two transversal dimensions H is the
// 1x1 Hessian block of the phase, so everything here is scalar complex.

#pragma once

#include <complex>
#include <vector>

#include "beamlab/fermi.hpp"

namespace beamlab::beam {

using fermi::FermiChart;

struct RiccatiSolution {
  std::vector<double> grid;        // tau samples, ascending, uniform
  std::vector<cplx> H;             // Hessian block per sample
  std::vector<cplx> trace_integral;  // int_0^tau tr H ds per sample
  std::vector<double> F;           // driver samples (for Hermite slopes)

  double tau_front() const { return grid.front(); }
  double tau_back() const { return grid.back(); }

  // Cubic Hermite interpolation with ODE-consistent slopes.
  cplx H_at(double tau) const {
    const auto [i, t, dt] = locate(tau);
    const cplx d0 = F[i] - H[i] * H[i];
    const cplx d1 = F[i + 1] - H[i + 1] * H[i + 1];
    return hermite(H[i], d0, H[i + 1], d1, t, dt);
  }

  cplx trace_integral_at(double tau) const {
    const auto [i, t, dt] = locate(tau);
    return hermite(trace_integral[i], H[i], trace_integral[i + 1], H[i + 1], t, dt);
  }

  double F_at(double tau) const {
    const auto [i, t, dt] = locate(tau);
    return ((1.0 - t) * F[i] + t * F[i + 1]);
  }

 private:
  std::tuple<std::size_t, double, double> locate(double tau) const {
    std::size_t lo = 0, hi = grid.size() - 1;
    if (tau <= grid.front())
      hi = 1;
    else if (tau >= grid.back())
      lo = grid.size() - 2;
    else
      while (hi - lo > 1) {
        const std::size_t mid = (lo + hi) / 2;
        (grid[mid] <= tau ? lo : hi) = mid;
      }
    const double dt = grid[hi] - grid[lo];
    return {lo, (tau - grid[lo]) / dt, dt};
  }

  static cplx hermite(cplx v0, cplx d0, cplx v1, cplx d1, double t, double dt) {
    const double t2 = t * t, t3 = t2 * t;
    return (2.0 * t3 - 3.0 * t2 + 1.0) * v0 + ((t3 - 2.0 * t2 + t) * dt) * d0 +
           (-2.0 * t3 + 3.0 * t2) * v1 + ((t3 - t2) * dt) * d1;
  }
};

// RK4 on (H, int tr H) over `grid`, asserting Im H > 0 at every sample.
// `driver` is F(tau); grids must be uniform and cover [0, tau_exit].
inline RiccatiSolution solve_riccati(const std::function<double(double)>& driver, cplx H0,
                                     const std::vector<double>& grid) {
  if (grid.size() < 2) throw ArgumentError("solve_riccati: grid needs >= 2 samples");
  if (!(H0.imag() > 0.0)) throw ArgumentError("solve_riccati: Im H0 must be positive definite");

  RiccatiSolution out;
  out.grid = grid;
  out.H.resize(grid.size());
  out.trace_integral.resize(grid.size());
  out.F.resize(grid.size());

  // Driver at whole and half grid points, one evaluation each.
  std::vector<double> f_half(grid.size() - 1);
  for (std::size_t i = 0; i < grid.size(); ++i) out.F[i] = driver(grid[i]);
  for (std::size_t i = 0; i + 1 < grid.size(); ++i)
    f_half[i] = driver(0.5 * (grid[i] + grid[i + 1]));

  cplx H = H0;
  cplx I = 0.0;
  out.H[0] = H;
  out.trace_integral[0] = I;
  for (std::size_t i = 0; i + 1 < grid.size(); ++i) {
    const double h = grid[i + 1] - grid[i];
    const double f0 = out.F[i], fm = f_half[i], f1 = out.F[i + 1];
    const cplx k1 = f0 - H * H;
    const cplx l1 = H;
    const cplx H2 = H + 0.5 * h * k1;
    const cplx k2 = fm - H2 * H2;
    const cplx l2 = H2;
    const cplx H3 = H + 0.5 * h * k2;
    const cplx k3 = fm - H3 * H3;
    const cplx l3 = H3;
    const cplx H4 = H + h * k3;
    const cplx k4 = f1 - H4 * H4;
    const cplx l4 = H4;
    H += (h / 6.0) * (k1 + 2.0 * (k2 + k3) + k4);
    I += (h / 6.0) * (l1 + 2.0 * (l2 + l3) + l4);
    if (!(H.imag() > 0.0))
      throw NumericError("Riccati blow-up: Im H lost positivity at tau=" +
                         std::to_string(grid[i + 1]));
    out.H[i + 1] = H;
    out.trace_integral[i + 1] = I;
  }
  return out;
}

inline RiccatiSolution solve_riccati(const FermiChart& chart, cplx H0,
                                     const std::vector<double>& grid) {
  return solve_riccati([&chart](double tau) { return chart.riccati_driver(tau); }, H0, grid);
}

// b0(tau) = normalization * exp(-1/2 int_0^tau tr H ds); never zero.
inline std::vector<cplx> solve_transport(const RiccatiSolution& ric, double normalization) {
  std::vector<cplx> b0(ric.grid.size());
  for (std::size_t i = 0; i < b0.size(); ++i)
    b0[i] = normalization * std::exp(-0.5 * ric.trace_integral[i]);
  return b0;
}

}  // namespace beamlab::beam

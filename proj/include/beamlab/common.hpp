// beamlab: small 2-D linear algebra, error types, and shared utilities.

#pragma once

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <complex>
#include <cstdint>
#include <functional>
#include <mutex>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace beamlab {

using cplx = std::complex<double>;

inline constexpr double pi = 3.14159265358979323846;

// ---------------------------------------------------------------------------
// Errors. The CLI maps these onto exit codes, so keep the taxonomy small.
// ---------------------------------------------------------------------------

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Bad call arguments (step <= 0, empty input, ...).
struct ArgumentError : Error {
  using Error::Error;
};

// Point outside the chart, non-SPD metric, conformal factor below floor.
struct GeometryError : Error {
  using Error::Error;
};

// Runtime numerical failure: Riccati blow-up, CG divergence.
struct NumericError : Error {
  using Error::Error;
};

// Grid too coarse for the requested finite differences.
struct ResolutionError : Error {
  using Error::Error;
};

// Config/schema violations (CLI exit code 2).
struct ConfigError : Error {
  using Error::Error;
};

// Malformed measurement data (non-positive samples in a log fit, ...).
struct DataError : Error {
  using Error::Error;
};

// ---------------------------------------------------------------------------
// 2-D vectors and symmetric 2x2 matrices
// ---------------------------------------------------------------------------

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  Vec2() = default;
  Vec2(double x_, double y_) : x(x_), y(y_) {}

  Vec2 operator+(const Vec2& o) const { return {x + o.x, y + o.y}; }
  Vec2 operator-(const Vec2& o) const { return {x - o.x, y - o.y}; }
  Vec2 operator*(double s) const { return {x * s, y * s}; }
  Vec2 operator-() const { return {-x, -y}; }
  Vec2& operator+=(const Vec2& o) {
    x += o.x;
    y += o.y;
    return *this;
  }
  double operator[](int i) const { return i == 0 ? x : y; }
};

inline Vec2 operator*(double s, const Vec2& v) { return v * s; }
inline double dot(const Vec2& a, const Vec2& b) { return a.x * b.x + a.y * b.y; }
inline double norm(const Vec2& v) { return std::sqrt(dot(v, v)); }
inline Vec2 perp(const Vec2& v) { return {-v.y, v.x}; }

// Symmetric 2x2 matrix, the shape of every metric tensor in the library.
struct SymMat2 {
  double xx = 0.0;
  double xy = 0.0;
  double yy = 0.0;

  SymMat2() = default;
  SymMat2(double xx_, double xy_, double yy_) : xx(xx_), xy(xy_), yy(yy_) {}

  static SymMat2 identity() { return {1.0, 0.0, 1.0}; }

  double det() const { return xx * yy - xy * xy; }
  double trace() const { return xx + yy; }

  SymMat2 inverse() const {
    const double d = det();
    return {yy / d, -xy / d, xx / d};
  }

  Vec2 operator*(const Vec2& v) const { return {xx * v.x + xy * v.y, xy * v.x + yy * v.y}; }

  SymMat2 operator+(const SymMat2& o) const { return {xx + o.xx, xy + o.xy, yy + o.yy}; }
  SymMat2 operator-(const SymMat2& o) const { return {xx - o.xx, xy - o.xy, yy - o.yy}; }
  SymMat2 operator*(double s) const { return {xx * s, xy * s, yy * s}; }

  double min_eigenvalue() const {
    const double m = 0.5 * trace();
    const double r = std::sqrt(0.25 * (xx - yy) * (xx - yy) + xy * xy);
    return m - r;
  }

  bool spd(double floor = 0.0) const { return min_eigenvalue() > floor; }

  double max_abs() const { return std::max({std::abs(xx), std::abs(xy), std::abs(yy)}); }
};

inline double inner(const SymMat2& g, const Vec2& a, const Vec2& b) {
  return a.x * (g.xx * b.x + g.xy * b.y) + a.y * (g.xy * b.x + g.yy * b.y);
}

inline double metric_norm(const SymMat2& g, const Vec2& v) { return std::sqrt(inner(g, v, v)); }

// Christoffel symbols Gamma^k_{ij}; symmetric in (i, j), one SymMat2 per k.
using Christoffel = std::array<SymMat2, 2>;

// ---------------------------------------------------------------------------
// Small helpers
// ---------------------------------------------------------------------------

inline double sq(double v) { return v * v; }

inline std::vector<double> linspace(double a, double b, int n) {
  std::vector<double> out(static_cast<std::size_t>(n));
  if (n == 1) {
    out[0] = a;
    return out;
  }
  const double step = (b - a) / (n - 1);
  for (int i = 0; i < n; ++i) out[static_cast<std::size_t>(i)] = a + step * i;
  out.back() = b;
  return out;
}

// Dispatches [0, n) over a worker pool. Results must be written to
// caller-owned slots indexed by i so the outcome is thread-count independent.
inline void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& fn) {
  if (threads <= 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  const int workers = std::min<int>(threads, static_cast<int>(n));
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  std::exception_ptr first_error;
  std::mutex error_mutex;
  pool.reserve(static_cast<std::size_t>(workers));
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (;;) {
        const std::size_t i = next.fetch_add(1);
        if (i >= n) return;
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (!first_error) first_error = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

inline int default_threads() {
  const unsigned hc = std::thread::hardware_concurrency();
  return hc == 0 ? 1 : static_cast<int>(hc);
}

}  // namespace beamlab

#pragma once
// Reference computations used by the tests. None of these call into the
// library's solvers; they are deliberately naive.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <vector>

namespace oracle {

using Dense = std::vector<std::vector<double>>;

inline Dense matmul(const Dense& a, const Dense& b) {
  const std::size_t n = a.size();
  Dense c(n, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t k = 0; k < n; ++k) {
      if (a[i][k] == 0.0) continue;
      for (std::size_t j = 0; j < n; ++j) c[i][j] += a[i][k] * b[k][j];
    }
  return c;
}

inline double max_abs(const Dense& a) {
  double m = 0.0;
  for (const auto& r : a)
    for (double v : r) m = std::max(m, std::abs(v));
  return m;
}

/// Spectral radius by repeated squaring: log||M^(2^k)|| / 2^k, with the
/// matrix renormalized after every squaring. Returns 0 for nilpotent input.
inline double growth_rate(Dense m, int squarings = 64) {
  double logn = 0.0;
  double scale = 1.0;  // 2^k
  double norm = max_abs(m);
  if (norm == 0.0) return 0.0;
  for (auto& r : m)
    for (double& v : r) v /= norm;
  logn = std::log(norm);
  for (int k = 0; k < squarings; ++k) {
    m = matmul(m, m);
    norm = max_abs(m);
    if (norm == 0.0) return 0.0;
    for (auto& r : m)
      for (double& v : r) v /= norm;
    logn = 2.0 * logn + std::log(norm);
    scale *= 2.0;
  }
  return std::exp(logn / scale);
}

/// Exact Ulam matrix of x -> 3x mod 1 killed on [1/3, 2/3) at resolution 3^k.
inline Dense ternary_ulam(int k) {
  int n = 1;
  for (int i = 0; i < k; ++i) n *= 3;
  auto survives = [n](int c) { return 3 * c < n || 3 * c >= 2 * n; };
  Dense m(n, std::vector<double>(n, 0.0));
  for (int i = 0; i < n; ++i) {
    if (!survives(i)) continue;
    for (int d = 0; d < 3; ++d) {
      const int j = (3 * i + d) % n;
      if (survives(j)) m[i][j] += 1.0 / 3.0;
    }
  }
  return m;
}

/// Cantor function by ternary digit expansion.
inline double cantor(double x, int depth = 40) {
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  double y = 0.0, bit = 0.5;
  for (int i = 0; i < depth; ++i) {
    x *= 3.0;
    const int d = static_cast<int>(std::floor(x));
    x -= d;
    if (d == 1) return y + bit;
    if (d == 2) y += bit;
    bit *= 0.5;
  }
  return y;
}

/// int_0^1 |x - C(x)| dx by composite Simpson on a fine grid.
inline double w1_uniform_vs_cantor(int panels = 1 << 20) {
  const double h = 1.0 / panels;
  double s = 0.0;
  for (int i = 0; i <= panels; ++i) {
    const double x = i * h;
    const double f = std::abs(x - cantor(x));
    s += f * (i == 0 || i == panels ? 1.0 : (i % 2 ? 4.0 : 2.0));
  }
  return s * h / 3.0;
}

/// Mean and variance of the uniform Bernoulli measure on the middle-thirds
/// Cantor set by enumerating depth-d cylinders.
struct CantorMoments {
  double mean;
  double variance;
};

inline CantorMoments cantor_moments_by_enumeration(int depth = 14) {
  // X = sum_i xi_i 3^-i, xi fair on {0, 2}; truncate at `depth` and add the
  // tail exactly (tail has mean 3^-d/2, variance 3^-2d/8).
  const long count = 1L << depth;
  double m1 = 0.0, m2 = 0.0;
  for (long w = 0; w < count; ++w) {
    double x = 0.0, p = 1.0;
    for (int i = 0; i < depth; ++i) {
      p /= 3.0;
      if ((w >> i) & 1) x += 2.0 * p;
    }
    const double tail_mean = p / 2.0, tail_var = p * p / 8.0;
    m1 += x + tail_mean;
    m2 += (x + tail_mean) * (x + tail_mean) + tail_var;
  }
  m1 /= count;
  m2 /= count;
  return {m1, m2 - m1 * m1};
}

/// Perron eigenvalue of a 2x2 nonnegative matrix in closed form.
inline double perron_2x2(double a, double b, double c, double d) {
  const double tr = a + d, det = a * d - b * c;
  return tr / 2.0 + std::sqrt(tr * tr / 4.0 - det);
}

inline constexpr double golden = 1.6180339887498948482;

}  // namespace oracle

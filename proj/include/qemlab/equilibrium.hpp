#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>
#include <vector>

#include "qemlab/error.hpp"
#include "qemlab/grid.hpp"

namespace qemlab {

/// Where the depth-k cylinder a_0 ... a_{k-1} sits in [lo, hi):
/// x = lo + (hi - lo) * sum_i digit[a_i] base^{-(i+1)}, width (hi - lo) base^{-k}.
struct CylinderGeometry {
  double lo = 0.0;
  double hi = 1.0;
  int base = 2;
  std::vector<int> digit;
};

/// Symbolic model of the survivor dynamics: psi[a][b] is the potential on
/// the transition a -> b, -inf marks a forbidden transition.
struct MarkovModel {
  std::vector<std::vector<double>> log_weights;
  CylinderGeometry geometry;
  std::string label;

  int n_states() const noexcept { return static_cast<int>(log_weights.size()); }

  std::vector<std::vector<double>> matrix() const {
    const int n = n_states();
    std::vector<std::vector<double>> a(n, std::vector<double>(n, 0.0));
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) a[i][j] = std::exp(log_weights[i][j]);
    return a;
  }

  MarkovModel shifted(double c) const {
    MarkovModel m = *this;
    for (auto& row : m.log_weights)
      for (double& v : row) v += c;
    return m;
  }
};

inline MarkovModel constant_model(int states, double psi, CylinderGeometry geo, std::string label) {
  MarkovModel m;
  m.log_weights.assign(states, std::vector<double>(states, psi));
  m.geometry = std::move(geo);
  m.label = std::move(label);
  return m;
}

/// Two branches of slope 3 over [0,1/3) and [2/3,1).
inline MarkovModel ternary_model() {
  return constant_model(2, -std::log(3.0), {0.0, 1.0, 3, {0, 2}}, "ternary_hole");
}

/// Three branches of slope 5 over [0,3/5).
inline MarkovModel five_model() {
  return constant_model(3, -std::log(5.0), {0.0, 1.0, 5, {0, 1, 2}}, "five_hole");
}

/// Golden-mean shift, transition 1 -> 1 forbidden, psi = 0.
inline MarkovModel golden_mean_model() {
  MarkovModel m = constant_model(2, 0.0, {0.0, 1.0, 2, {0, 1}}, "golden_mean");
  m.log_weights[1][1] = -std::numeric_limits<double>::infinity();
  return m;
}

namespace detail {

/// Strongly connected components of the positive pattern (Tarjan, iterative
/// enough for the small alphabets used here).
inline std::vector<std::vector<int>> positive_sccs(const std::vector<std::vector<double>>& a) {
  const int n = static_cast<int>(a.size());
  std::vector<int> index(n, -1), low(n, 0), stack;
  std::vector<char> on_stack(n, 0);
  std::vector<std::vector<int>> out;
  int counter = 0;
  auto strong = [&](auto&& self, int v) -> void {
    index[v] = low[v] = counter++;
    stack.push_back(v);
    on_stack[v] = 1;
    for (int w = 0; w < n; ++w) {
      if (!(a[v][w] > 0.0)) continue;
      if (index[w] < 0) {
        self(self, w);
        low[v] = std::min(low[v], low[w]);
      } else if (on_stack[w]) {
        low[v] = std::min(low[v], index[w]);
      }
    }
    if (low[v] == index[v]) {
      std::vector<int> comp;
      int w;
      do {
        w = stack.back();
        stack.pop_back();
        on_stack[w] = 0;
        comp.push_back(w);
      } while (w != v);
      std::sort(comp.begin(), comp.end());
      out.push_back(std::move(comp));
    }
  };
  for (int v = 0; v < n; ++v)
    if (index[v] < 0) strong(strong, v);
  return out;
}

struct Perron {
  double root = 0.0;
  std::vector<double> right;
  std::vector<double> left;
};

/// Perron data of an irreducible nonnegative matrix. Iterates A + I so that
/// periodic matrices converge too.
inline Perron perron(const std::vector<std::vector<double>>& a, double tol = 1e-14, long max_iters = 2000000) {
  const int n = static_cast<int>(a.size());
  auto run = [&](bool transpose) {
    std::vector<double> v(n, 1.0), w(n);
    double rho = 0.0;
    for (long it = 0; it < max_iters; ++it) {
      for (int i = 0; i < n; ++i) {
        double s = v[i];
        for (int j = 0; j < n; ++j) s += (transpose ? a[j][i] : a[i][j]) * v[j];
        w[i] = s;
      }
      double m = 0.0;
      for (double x : w) m = std::max(m, x);
      double change = 0.0;
      for (int i = 0; i < n; ++i) {
        w[i] /= m;
        change = std::max(change, std::abs(w[i] - v[i]));
      }
      v.swap(w);
      rho = m;
      if (change <= tol) return std::pair{rho - 1.0, v};
    }
    throw NonConvergence("Perron iteration did not converge", 0.0);
  };
  auto [root, right] = run(false);
  auto [root_t, left] = run(true);
  (void)root_t;
  return {root, right, left};
}

inline std::vector<std::vector<double>> submatrix(const std::vector<std::vector<double>>& a,
                                                  const std::vector<int>& idx) {
  std::vector<std::vector<double>> s(idx.size(), std::vector<double>(idx.size()));
  for (std::size_t i = 0; i < idx.size(); ++i)
    for (std::size_t j = 0; j < idx.size(); ++j) s[i][j] = a[idx[i]][idx[j]];
  return s;
}

}  // namespace detail

/// log of the Perron root of exp(psi), maximized over irreducible blocks.
inline double pressure_sft(const MarkovModel& model) {
  const auto a = model.matrix();
  double best = 0.0;
  bool any = false;
  for (const auto& comp : detail::positive_sccs(a)) {
    if (comp.size() == 1 && !(a[comp[0]][comp[0]] > 0.0)) continue;
    best = std::max(best, detail::perron(detail::submatrix(a, comp)).root);
    any = true;
  }
  if (!any || !(best > 0.0)) throw ConfigError("E_WEIGHT", "weight matrix has no positive cycle");
  return std::log(best);
}

struct ReferenceMeasure {
  int depth = 0;
  std::vector<std::vector<int>> words;
  std::vector<double> masses;
  std::vector<double> lo;
  std::vector<double> hi;

  static std::string word_string(const std::vector<int>& w) {
    std::string s;
    for (int a : w) {
      if (!s.empty() && a >= 10) s += '.';
      s += std::to_string(a);
    }
    return s;
  }

  /// Mass spread uniformly over each cylinder interval and binned by overlap.
  std::vector<double> project(const GridPartition& grid) const {
    if (grid.dim() != 1) throw ConfigError("E_GEOMETRY", "cylinder projection needs a 1D grid");
    std::vector<double> out(grid.n_cells(), 0.0);
    for (std::size_t k = 0; k < masses.size(); ++k) {
      const double width = hi[k] - lo[k];
      for (int b = 0; b < static_cast<int>(grid.boxes().size()); ++b) {
        const Box& G = grid.boxes()[b];
        const double a = std::max(lo[k], G.lo[0]);
        const double z = std::min(hi[k], G.hi[0]);
        if (!(a < z)) continue;
        const int first = grid.axis_index(b, 0, a);
        const int last = grid.axis_index(b, 0, z);
        for (int i = first; i <= last; ++i) {
          const double ov = std::min(z, grid.edge(b, 0, i + 1)) - std::max(a, grid.edge(b, 0, i));
          if (ov > 0.0) out[b * grid.cells_per_box() + i] += masses[k] * ov / width;
        }
      }
    }
    return out;
  }
};

/// Parry-type Gibbs measure: p_a = l_a r_a / <l, r>, Q[a][b] = A[a][b] r_b / (lambda r_a).
inline ReferenceMeasure equilibrium_cylinder_measure(const MarkovModel& model, int depth) {
  if (depth < 1) throw ConfigError("E_PARAMETER", "depth must be >= 1");
  const auto a = model.matrix();
  const int n = model.n_states();
  const auto comps = detail::positive_sccs(a);
  if (comps.size() != 1) throw ConfigError("E_WEIGHT", "weight matrix is not irreducible");
  const auto pf = detail::perron(a);
  if (!(pf.root > 0.0)) throw ConfigError("E_WEIGHT", "weight matrix has no positive cycle");
  double lr = 0.0;
  for (int i = 0; i < n; ++i) lr += pf.left[i] * pf.right[i];
  std::vector<double> p(n);
  for (int i = 0; i < n; ++i) p[i] = pf.left[i] * pf.right[i] / lr;
  std::vector<std::vector<double>> q(n, std::vector<double>(n));
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) q[i][j] = a[i][j] * pf.right[j] / (pf.root * pf.right[i]);

  const auto& geo = model.geometry;
  if (static_cast<int>(geo.digit.size()) != n) throw ConfigError("E_GEOMETRY", "cylinder digits do not match states");
  ReferenceMeasure rm;
  rm.depth = depth;
  std::vector<int> word;
  auto rec = [&](auto&& self, double mass, double x, double width) -> void {
    if (static_cast<int>(word.size()) == depth) {
      rm.words.push_back(word);
      rm.masses.push_back(mass);
      rm.lo.push_back(x);
      rm.hi.push_back(x + width);
      return;
    }
    const double w = width / geo.base;
    for (int s = 0; s < n; ++s) {
      const double m = word.empty() ? p[s] : mass * q[word.back()][s];
      if (!(m > 0.0)) continue;
      word.push_back(s);
      self(self, m, x + geo.digit[s] * w, w);
      word.pop_back();
    }
  };
  rec(rec, 1.0, geo.lo, geo.hi - geo.lo);
  return rm;
}

/// {1} and cos(2 pi k x_j) / (2 pi k), sin(2 pi k x_j) / (2 pi k), k = 1..K.
struct TestDictionary {
  int K = 8;
  int dim = 1;

  int size() const noexcept { return 1 + 2 * K * dim; }

  double eval(int f, const Point& x) const noexcept {
    if (f == 0) return 1.0;
    const int r = f - 1;
    const int j = r / (2 * K);
    const int k = (r % (2 * K)) / 2 + 1;
    const double c = 2.0 * std::numbers::pi * k;
    return (r % 2 == 0 ? std::cos(c * x[j]) : std::sin(c * x[j])) / c;
  }
};

/// max over the dictionary of |sum (mu - nu) f(cell center)|.
inline double weak_star_discrepancy(const std::vector<double>& mu, const std::vector<double>& nu,
                                    const TestDictionary& dict, const GridPartition& grid) {
  if (mu.size() != nu.size() || static_cast<int>(mu.size()) != grid.n_cells())
    throw ConfigError("E_DIMENSION", "grid mismatch");
  if (dict.dim > grid.dim()) throw ConfigError("E_DIMENSION", "dictionary dimension exceeds grid dimension");
  std::vector<Point> centers(mu.size());
  for (std::size_t i = 0; i < mu.size(); ++i) centers[i] = grid.center(static_cast<int>(i));
  double worst = 0.0;
  for (int f = 0; f < dict.size(); ++f) {
    double s = 0.0;
    for (std::size_t i = 0; i < mu.size(); ++i) s += (mu[i] - nu[i]) * dict.eval(f, centers[i]);
    worst = std::max(worst, std::abs(s));
  }
  return worst;
}

/// Exact 1-Wasserstein distance between the atomic measures at cell centers.
inline double w1_1d(const std::vector<double>& mu, const std::vector<double>& nu, const GridPartition& grid) {
  if (grid.dim() != 1) throw ConfigError("E_DIMENSION", "w1_1d needs a 1D grid");
  if (mu.size() != nu.size() || static_cast<int>(mu.size()) != grid.n_cells())
    throw ConfigError("E_DIMENSION", "grid mismatch");
  const int n = grid.n_cells();
  std::vector<int> order(n);
  for (int i = 0; i < n; ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(),
                   [&](int l, int r) { return grid.center(l)[0] < grid.center(r)[0]; });
  double cdf = 0.0;
  double w = 0.0;
  for (int k = 0; k + 1 < n; ++k) {
    cdf += mu[order[k]] - nu[order[k]];
    w += std::abs(cdf) * (grid.center(order[k + 1])[0] - grid.center(order[k])[0]);
  }
  return w;
}

struct Moments {
  double mean = 0.0;
  double variance = 0.0;
};

/// Mean and variance of the cell-center coordinate `axis` under `mass`.
inline Moments grid_moments(const std::vector<double>& mass, const GridPartition& grid, int axis = 0) {
  double s = 0.0, m1 = 0.0, m2 = 0.0;
  for (int i = 0; i < grid.n_cells(); ++i) {
    const double x = grid.center(i)[axis];
    s += mass[i];
    m1 += mass[i] * x;
    m2 += mass[i] * x * x;
  }
  if (!(s > 0.0)) throw ConfigError("E_PARAMETER", "zero total mass");
  m1 /= s;
  return {m1, m2 / s - m1 * m1};
}

/// sum_i mass_i h(center_i) / sum_i mass_i.
template <class F>
double grid_expectation(const std::vector<double>& mass, const GridPartition& grid, F&& h) {
  double s = 0.0, e = 0.0;
  for (int i = 0; i < grid.n_cells(); ++i) {
    s += mass[i];
    e += mass[i] * h(grid.center(i));
  }
  return e / s;
}

}  // namespace qemlab

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include "qemlab/error.hpp"
#include "qemlab/rng.hpp"
#include "qemlab/ulam.hpp"

namespace qemlab {

struct SolverOptions {
  double tol = 1e-10;
  long max_iters = 100000;
  std::uint64_t seed = 0;
};

struct EigenResult {
  double lambda = 0.0;
  std::vector<double> vector;
  double residual = 0.0;
  long iterations = 0;
};

namespace detail {

inline double sup_norm(std::span<const double> v) noexcept {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

inline double l1_norm(std::span<const double> v) noexcept {
  double s = 0.0;
  for (double x : v) s += std::abs(x);
  return s;
}

/// Power iteration v <- A v / ||A v|| from the all-ones vector. `adjoint`
/// selects A = M^T. Residual is ||A v - lambda v||_inf for ||v||_inf = 1.
inline EigenResult power_iterate(const AnnealedMatrix& m, bool adjoint, const SolverOptions& opt) {
  if (!(opt.tol > 0.0)) throw ConfigError("E_PARAMETER", "solver tolerance must be positive");
  const int n = m.n_cells();
  if (n == 0 || m.nnz() == 0) throw NumericalError("no positive spectral radius");
  std::vector<double> v(n, 1.0);
  double residual = std::numeric_limits<double>::infinity();
  double lambda = 0.0;
  for (long it = 1; it <= opt.max_iters; ++it) {
    std::vector<double> w = adjoint ? qemlab::apply_adjoint(m, v) : qemlab::apply(m, v);
    lambda = sup_norm(w);
    if (!(lambda > 0.0) || !std::isfinite(lambda)) throw NumericalError("no positive spectral radius");
    residual = 0.0;
    for (int i = 0; i < n; ++i) {
      w[i] /= lambda;
      residual = std::max(residual, std::abs(w[i] - v[i]));
    }
    v.swap(w);
    // residual above is ||A v_old - lambda v_old|| / lambda
    if (residual <= opt.tol) {
      std::vector<double> check = adjoint ? qemlab::apply_adjoint(m, v) : qemlab::apply(m, v);
      double lam = sup_norm(check);
      double r = 0.0;
      for (int i = 0; i < n; ++i) r = std::max(r, std::abs(check[i] - lam * v[i]));
      if (r <= opt.tol * lam) {
        for (double& x : v) x = std::max(x, 0.0);
        return {lam, std::move(v), r, it};
      }
    }
  }
  throw NonConvergence("power iteration did not converge", residual * lambda);
}

}  // namespace detail

/// Dominant eigenvalue and right eigenvector, sup-norm 1.
inline EigenResult leading_pair(const AnnealedMatrix& m, const SolverOptions& opt = {}) {
  return detail::power_iterate(m, false, opt);
}

/// Dominant eigenvalue and left eigen-density, normalized so that
/// sum(left * cell_volume) = 1. The residual refers to the mass vector
/// (left * volume) scaled to sup-norm 1.
inline EigenResult leading_left(const AnnealedMatrix& m, const SolverOptions& opt = {}) {
  EigenResult r = detail::power_iterate(m, true, opt);
  const auto& vol = m.cell_volume();
  double total = 0.0;
  for (double x : r.vector) total += x;
  if (!(total > 0.0)) throw NumericalError("no positive spectral radius");
  for (std::size_t i = 0; i < r.vector.size(); ++i) r.vector[i] = r.vector[i] / total / vol[i];
  return r;
}

inline double pairing(std::span<const double> right, std::span<const double> left,
                      std::span<const double> volume) {
  if (right.size() != left.size() || right.size() != volume.size())
    throw ConfigError("E_DIMENSION", "eigendata length mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < right.size(); ++i)
    s += std::max(right[i], 0.0) * std::max(left[i], 0.0) * volume[i];
  return s;
}

/// nu_i = right_i left_i vol_i / pairing.
inline std::vector<double> assemble_qem(std::span<const double> right, std::span<const double> left,
                                        std::span<const double> volume) {
  const double p = pairing(right, left, volume);
  if (!(p > 0.0)) throw NumericalError("degenerate eigendata");
  std::vector<double> q(right.size());
  for (std::size_t i = 0; i < q.size(); ++i)
    q[i] = std::max(right[i], 0.0) * std::max(left[i], 0.0) * volume[i] / p;
  return q;
}

struct GapEstimate {
  double ratio = 1.0;
  bool converged = false;
};

/// |lambda_2| / lambda_1 by power iteration on M(I - P), where P projects
/// onto the dominant right vector along the dominant left functional.
/// Returns ratio 1 with converged = false when the estimate does not settle.
inline GapEstimate gap_estimate(const AnnealedMatrix& m, double lambda, std::span<const double> right,
                                std::span<const double> left, const SolverOptions& opt = {},
                                long max_iters = 5000, double settle = 1e-4) {
  const int n = m.n_cells();
  const auto& vol = m.cell_volume();
  std::vector<double> mass(n);
  double ur = 0.0;
  for (int i = 0; i < n; ++i) {
    mass[i] = left[i] * vol[i];
    ur += mass[i] * right[i];
  }
  if (!(ur > 0.0) || !(lambda > 0.0)) return {};
  auto project = [&](std::vector<double>& v) {
    double c = 0.0;
    for (int i = 0; i < n; ++i) c += mass[i] * v[i];
    c /= ur;
    for (int i = 0; i < n; ++i) v[i] -= c * right[i];
  };
  Rng rng(opt.seed, 0x6a70);
  std::vector<double> v(n);
  for (double& x : v) x = rng.uniform(-1.0, 1.0);
  project(v);
  double nv = detail::sup_norm(v);
  if (!(nv > 0.0)) return {0.0, true};
  for (double& x : v) x /= nv;

  std::vector<double> log_growth;
  log_growth.reserve(static_cast<std::size_t>(max_iters));
  double previous = -1.0;
  for (long it = 1; it <= max_iters; ++it) {
    std::vector<double> w = qemlab::apply(m, v);
    project(w);
    const double nw = detail::sup_norm(w);
    if (nw <= 1e-13 * lambda) return {0.0, true};
    log_growth.push_back(std::log(nw / lambda));
    for (int i = 0; i < n; ++i) v[i] = w[i] / nw;
    if (it % 50 == 0) {
      // geometric mean over the second half damps oscillation from complex pairs
      const std::size_t half = log_growth.size() / 2;
      double s = 0.0;
      for (std::size_t k = half; k < log_growth.size(); ++k) s += log_growth[k];
      const double est = std::exp(s / static_cast<double>(log_growth.size() - half));
      if (previous >= 0.0 && std::abs(est - previous) <= settle * std::max(est, 1e-3))
        return {std::clamp(est, 0.0, 1.0), true};
      previous = est;
    }
  }
  return {1.0, false};
}

struct SupportReport {
  bool pass = true;
  double min_mass = std::numeric_limits<double>::infinity();
  std::vector<int> violations;
};

/// Every reference cell must carry qem mass >= floor.
inline SupportReport support_check(std::span<const double> qem, const std::vector<int>& reference, double floor) {
  SupportReport r;
  for (int c : reference) {
    if (c < 0 || c >= static_cast<int>(qem.size())) throw ConfigError("E_DIMENSION", "reference cell out of range");
    r.min_mass = std::min(r.min_mass, qem[c]);
    if (qem[c] < floor) r.violations.push_back(c);
  }
  if (reference.empty()) r.min_mass = 0.0;
  r.pass = r.violations.empty();
  return r;
}

struct SpectralTriple {
  double lambda = 0.0;
  double lambda_left = 0.0;
  std::vector<double> right;
  std::vector<double> left;
  double pairing = 0.0;
  std::vector<double> qem;
  double right_residual = 0.0;
  double left_residual = 0.0;
  double gap_ratio = 1.0;
  bool gap_converged = false;
  long iterations = 0;
};

inline SpectralTriple solve_spectrum(const AnnealedMatrix& m, const SolverOptions& opt = {}, bool with_gap = true) {
  SpectralTriple t;
  EigenResult r = leading_pair(m, opt);
  EigenResult l = leading_left(m, opt);
  t.lambda = r.lambda;
  t.lambda_left = l.lambda;
  t.right_residual = r.residual;
  t.left_residual = l.residual;
  t.iterations = r.iterations + l.iterations;
  t.right = std::move(r.vector);
  t.left = std::move(l.vector);
  t.pairing = pairing(t.right, t.left, m.cell_volume());
  t.qem = assemble_qem(t.right, t.left, m.cell_volume());
  if (with_gap) {
    const GapEstimate g = gap_estimate(m, t.lambda, t.right, t.left, opt);
    t.gap_ratio = g.ratio;
    t.gap_converged = g.converged;
  }
  return t;
}

}  // namespace qemlab

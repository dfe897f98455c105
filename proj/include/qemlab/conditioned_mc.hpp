#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "qemlab/dynamics.hpp"
#include "qemlab/error.hpp"
#include "qemlab/geometry.hpp"
#include "qemlab/grid.hpp"
#include "qemlab/parallel.hpp"
#include "qemlab/rng.hpp"

namespace qemlab {

using Observable = std::function<double(const Point&)>;

/// Start law: a fixed point, or uniform on the survival region.
struct UniformOnRegion {};
using StartSpec = std::variant<Point, UniformOnRegion>;

struct McOptions {
  long n = 1000;
  long n_particles = 1000;
  double resample_threshold = 0.5;
  std::uint64_t seed = 0;
  int blocks = 10;
  int threads = 1;
  double burn_in = 0.2;
  /// When set, the genealogical occupation histogram over the middle half of
  /// the time window is accumulated on this grid.
  const GridPartition* occupation_grid = nullptr;
};

struct EnsembleStats {
  std::vector<double> conditioned_average;
  std::vector<double> standard_error;
  /// Alive fraction of the ensemble at time n, averaged over blocks.
  double survival_fraction = 0.0;
  /// log of the ensemble mass E[e^{S_t phi} 1_{tau > t}], t = 0..n, block mean.
  std::vector<double> log_mass;
  std::vector<double> block_log_mass_final;
  long n = 0;
  double burn_in = 0.2;
  long resample_events = 0;
  /// Probability vector on occupation_grid, empty when not requested.
  std::vector<double> occupation;
};

namespace detail {

struct BlockResult {
  std::vector<double> average;
  std::vector<double> log_mass;
  double alive_fraction = 0.0;
  long resamples = 0;
  std::vector<double> occupation;
};

inline Point sample_uniform(const RegionSpec& region, Rng& rng) {
  double total = 0.0;
  for (const auto& b : region.boxes()) total += b.volume();
  double u = rng.uniform() * total;
  const Box* pick = &region.boxes().back();
  for (const auto& b : region.boxes()) {
    if (u < b.volume()) {
      pick = &b;
      break;
    }
    u -= b.volume();
  }
  Point p{0.0, 0.0};
  for (int a = 0; a < pick->dim; ++a) p[a] = rng.uniform(pick->lo[a], pick->hi[a]);
  return p;
}

/// Systematic resampling: returns parent indices for the new population.
inline std::vector<int> systematic_resample(const std::vector<double>& w, Rng& rng) {
  const int n = static_cast<int>(w.size());
  double total = 0.0;
  for (double x : w) total += x;
  std::vector<int> parent(n);
  const double step = total / n;
  double u = rng.uniform() * step;
  double cum = w[0];
  int j = 0;
  for (int i = 0; i < n; ++i) {
    while (u >= cum && j + 1 < n) cum += w[++j];
    parent[i] = j;
    u += step;
  }
  return parent;
}

inline BlockResult run_block(const MapSystem& map, const NoiseModel& noise, const WeightField& weight,
                             const RegionSpec& region, const StartSpec& start, const std::vector<Observable>& obs,
                             long particles, const McOptions& opt, int block) {
  Rng rng(opt.seed, static_cast<std::uint64_t>(block));
  const int dim = map.dim;
  const std::size_t m = obs.size();
  const long n = opt.n;
  std::vector<Point> x(particles);
  std::vector<double> w(particles, 1.0);
  std::vector<double> sums(particles * m, 0.0);
  for (long i = 0; i < particles; ++i) {
    x[i] = std::holds_alternative<Point>(start) ? std::get<Point>(start) : sample_uniform(region, rng);
    if (!region.contains(x[i])) {
      x[i] = kCemetery;
      w[i] = 0.0;
    }
  }

  // genealogy for the occupation histogram: cell and parent per step in the window
  const GridPartition* og = opt.occupation_grid;
  const long win_lo = n / 4;
  const long win_hi = (3 * n) / 4;
  std::vector<std::vector<int>> cell_log, parent_log;
  if (og) {
    cell_log.resize(win_hi - win_lo);
    parent_log.resize(n - win_lo);
  }

  BlockResult out;
  out.log_mass.assign(n + 1, 0.0);
  double total0 = 0.0;
  for (double v : w) total0 += v;
  if (total0 == 0.0) throw EnsembleExtinct(0);
  for (double& v : w) v *= particles / total0;
  out.log_mass[0] = std::log(total0 / particles);

  for (long t = 0; t < n; ++t) {
    if (og && t >= win_lo && t < win_hi) {
      auto& cl = cell_log[t - win_lo];
      cl.resize(particles);
      for (long i = 0; i < particles; ++i) {
        const auto c = w[i] > 0.0 ? og->locate(x[i]) : std::nullopt;
        cl[i] = c ? *c : -1;
      }
    }
    double total = 0.0;
    for (long i = 0; i < particles; ++i) {
      if (w[i] == 0.0) continue;
      for (std::size_t k = 0; k < m; ++k) sums[i * m + k] += obs[k](x[i]);
      w[i] *= eval_weight(weight, x[i], dim);
      x[i] = step_random(map, noise, x[i], rng);
      if (!region.contains(x[i])) {
        w[i] = 0.0;
        x[i] = kCemetery;
      }
      total += w[i];
    }
    if (!(total > 0.0)) throw EnsembleExtinct(t + 1);
    out.log_mass[t + 1] = out.log_mass[t] + std::log(total / particles);
    double sq = 0.0;
    for (double& v : w) {
      v *= particles / total;
      sq += v * v;
    }
    const double ess_ratio = static_cast<double>(particles) / sq;  // (sum w)^2 / sum w^2 / N
    const bool resample = ess_ratio < opt.resample_threshold;
    std::vector<int> parent;
    if (resample) {
      parent = systematic_resample(w, rng);
      std::vector<Point> nx(particles);
      std::vector<double> ns(particles * m);
      for (long i = 0; i < particles; ++i) {
        nx[i] = x[parent[i]];
        for (std::size_t k = 0; k < m; ++k) ns[i * m + k] = sums[parent[i] * m + k];
      }
      x.swap(nx);
      sums.swap(ns);
      std::fill(w.begin(), w.end(), 1.0);
      ++out.resamples;
    }
    if (og && t >= win_lo) parent_log[t - win_lo] = std::move(parent);
  }

  double total = 0.0;
  long alive = 0;
  out.average.assign(m, 0.0);
  for (long i = 0; i < particles; ++i) {
    if (w[i] == 0.0) continue;
    ++alive;
    total += w[i];
    for (std::size_t k = 0; k < m; ++k) out.average[k] += w[i] * (sums[i * m + k] / static_cast<double>(n));
  }
  for (double& a : out.average) a /= total;
  out.alive_fraction = static_cast<double>(alive) / static_cast<double>(particles);

  if (og) {
    // push final weights back along the genealogy through the window
    std::vector<double> mass(w);
    out.occupation.assign(og->n_cells(), 0.0);
    for (long t = n - 1; t >= win_lo; --t) {
      const auto& pl = parent_log[t - win_lo];
      if (!pl.empty()) {
        std::vector<double> back(particles, 0.0);
        for (long i = 0; i < particles; ++i) back[pl[i]] += mass[i];
        mass.swap(back);
      }
      if (t >= win_hi) continue;
      const auto& cl = cell_log[t - win_lo];
      for (long i = 0; i < particles; ++i)
        if (cl[i] >= 0) out.occupation[cl[i]] += mass[i];
    }
    double s = 0.0;
    for (double v : out.occupation) s += v;
    if (s > 0.0)
      for (double& v : out.occupation) v /= s;
  }
  return out;
}

}  // namespace detail

/// Weighted killed ensemble estimate of
///   E_x[e^{S_n phi} 1_{tau > n} (1/n) sum_{i<n} h(X_i)] / E_x[e^{S_n phi} 1_{tau > n}]
/// for each observable h. The population is split into independent blocks
/// with their own random streams; the estimate is the block mean and the
/// standard error is the jackknife over blocks.
inline EnsembleStats run_conditioned(const MapSystem& map, const NoiseModel& noise, const WeightField& weight,
                                     const RegionSpec& region, const StartSpec& start,
                                     const std::vector<Observable>& observables, const McOptions& opt) {
  if (opt.n < 1) throw ConfigError("E_PARAMETER", "n must be >= 1");
  if (opt.n_particles < 2) throw ConfigError("E_PARAMETER", "n_particles must be >= 2");
  if (opt.blocks < 2) throw ConfigError("E_PARAMETER", "at least two blocks are needed for a standard error");
  if (opt.n_particles < opt.blocks) throw ConfigError("E_PARAMETER", "fewer particles than blocks");
  if (observables.empty()) throw ConfigError("E_PARAMETER", "no observables");
  if (!(opt.resample_threshold >= 0.0 && opt.resample_threshold <= 1.0))
    throw ConfigError("E_PARAMETER", "resample_threshold must lie in [0,1]");

  const int B = opt.blocks;
  std::vector<detail::BlockResult> blocks(B);
  parallel_for(B, opt.threads, [&](long b) {
    const long lo = opt.n_particles * b / B;
    const long hi = opt.n_particles * (b + 1) / B;
    blocks[b] = detail::run_block(map, noise, weight, region, start, observables, hi - lo, opt,
                                  static_cast<int>(b));
  });

  EnsembleStats st;
  st.n = opt.n;
  st.burn_in = opt.burn_in;
  const std::size_t m = observables.size();
  st.conditioned_average.assign(m, 0.0);
  st.standard_error.assign(m, 0.0);
  for (std::size_t k = 0; k < m; ++k) {
    double mean = 0.0;
    for (const auto& b : blocks) mean += b.average[k];
    mean /= B;
    st.conditioned_average[k] = mean;
    // jackknife: leave-one-block-out means
    double var = 0.0;
    for (const auto& b : blocks) {
      const double loo = (mean * B - b.average[k]) / (B - 1);
      var += (loo - mean) * (loo - mean);
    }
    st.standard_error[k] = std::sqrt(var * (B - 1) / B);
  }
  st.log_mass.assign(opt.n + 1, 0.0);
  for (const auto& b : blocks) {
    for (long t = 0; t <= opt.n; ++t) st.log_mass[t] += b.log_mass[t] / B;
    st.block_log_mass_final.push_back(b.log_mass.back());
    st.survival_fraction += b.alive_fraction / B;
    st.resample_events += b.resamples;
  }
  if (opt.occupation_grid) {
    st.occupation.assign(opt.occupation_grid->n_cells(), 0.0);
    for (const auto& b : blocks)
      for (std::size_t i = 0; i < st.occupation.size(); ++i) st.occupation[i] += b.occupation[i] / B;
  }
  return st;
}

/// -(1/dn) log(mass ratio) between the end of the burn-in and time n.
inline double escape_rate_mc(const EnsembleStats& st) {
  const long n = static_cast<long>(st.log_mass.size()) - 1;
  if (n < 1) throw ConfigError("E_PARAMETER", "no mass data");
  const long b = static_cast<long>(std::floor(st.burn_in * n));
  if (n - b < 2) throw ConfigError("E_PARAMETER", "need at least two windows past the burn-in");
  return -(st.log_mass[n] - st.log_mass[b]) / static_cast<double>(n - b);
}

struct IndependenceReport {
  bool pass = true;
  std::vector<double> difference;
  std::vector<double> bound;
  EnsembleStats a;
  EnsembleStats b;
};

/// Runs from two starts with the same seed and compares every observable
/// against 3 (SE_a + SE_b).
inline IndependenceReport starting_point_independence(const MapSystem& map, const NoiseModel& noise,
                                                      const WeightField& weight, const RegionSpec& region,
                                                      const Point& xa, const Point& xb,
                                                      const std::vector<Observable>& observables,
                                                      const McOptions& opt) {
  IndependenceReport r;
  r.a = run_conditioned(map, noise, weight, region, xa, observables, opt);
  r.b = run_conditioned(map, noise, weight, region, xb, observables, opt);
  for (std::size_t k = 0; k < observables.size(); ++k) {
    const double d = std::abs(r.a.conditioned_average[k] - r.b.conditioned_average[k]);
    const double bound = 3.0 * (r.a.standard_error[k] + r.b.standard_error[k]);
    r.difference.push_back(d);
    r.bound.push_back(bound);
    if (d > bound) r.pass = false;
  }
  return r;
}

}  // namespace qemlab

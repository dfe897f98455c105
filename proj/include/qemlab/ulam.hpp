#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "qemlab/dynamics.hpp"
#include "qemlab/error.hpp"
#include "qemlab/geometry.hpp"
#include "qemlab/grid.hpp"
#include "qemlab/parallel.hpp"
#include "qemlab/rng.hpp"

namespace qemlab {

struct MatrixMetadata {
  std::string system;
  double epsilon = 0.0;
  std::string weight;
  std::string region;
  int samples_per_cell = 0;
  std::uint64_t seed = 0;
};

/// Row-compressed nonnegative matrix discretizing the weighted killed
/// transfer operator. Entry (i, j) is the weighted probability to move from
/// cell i into cell j while staying in the survival region.
class AnnealedMatrix {
 public:
  using Row = std::vector<std::pair<int, double>>;

  AnnealedMatrix() = default;

  /// Builds from per-row sorted (column, value) lists.
  AnnealedMatrix(const std::vector<Row>& rows, std::vector<double> row_weight,
                 std::vector<double> cell_volume, MatrixMetadata meta = {})
      : n_(static_cast<int>(rows.size())),
        row_weight_(std::move(row_weight)),
        volume_(std::move(cell_volume)),
        meta_(std::move(meta)) {
    if (row_weight_.size() != rows.size() || volume_.size() != rows.size())
      throw Error("matrix metadata length mismatch");
    row_ptr_.reserve(rows.size() + 1);
    for (const auto& r : rows) {
      for (const auto& [j, v] : r) {
        if (j < 0 || j >= n_) throw Error("matrix column out of range");
        if (v < 0.0) throw Error("matrix entries must be nonnegative");
        col_.push_back(j);
        val_.push_back(v);
      }
      row_ptr_.push_back(col_.size());
    }
  }

  /// Dense constructor for small hand-built matrices; row weights default to
  /// the row sums.
  static AnnealedMatrix from_dense(const std::vector<std::vector<double>>& dense,
                                   std::vector<double> cell_volume = {}) {
    const std::size_t n = dense.size();
    std::vector<Row> rows(n);
    std::vector<double> weight(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      if (dense[i].size() != n) throw Error("dense matrix must be square");
      for (std::size_t j = 0; j < n; ++j) {
        if (dense[i][j] != 0.0) rows[i].emplace_back(static_cast<int>(j), dense[i][j]);
        weight[i] += dense[i][j];
      }
    }
    if (cell_volume.empty()) cell_volume.assign(n, 1.0);
    return AnnealedMatrix(rows, std::move(weight), std::move(cell_volume));
  }

  int n_cells() const noexcept { return n_; }
  std::size_t nnz() const noexcept { return val_.size(); }
  const std::vector<double>& row_weight() const noexcept { return row_weight_; }
  const std::vector<double>& cell_volume() const noexcept { return volume_; }
  const MatrixMetadata& metadata() const noexcept { return meta_; }

  std::span<const int> row_columns(int i) const noexcept {
    return {col_.data() + row_ptr_[i], row_ptr_[i + 1] - row_ptr_[i]};
  }
  std::span<const double> row_values(int i) const noexcept {
    return {val_.data() + row_ptr_[i], row_ptr_[i + 1] - row_ptr_[i]};
  }

  double entry(int i, int j) const noexcept {
    const auto cols = row_columns(i);
    const auto it = std::lower_bound(cols.begin(), cols.end(), j);
    if (it == cols.end() || *it != j) return 0.0;
    return row_values(i)[static_cast<std::size_t>(it - cols.begin())];
  }

  double row_sum(int i) const noexcept {
    double s = 0.0;
    for (double v : row_values(i)) s += v;
    return s;
  }

  std::vector<std::vector<double>> to_dense() const {
    std::vector<std::vector<double>> d(n_, std::vector<double>(n_, 0.0));
    for (int i = 0; i < n_; ++i) {
      const auto cols = row_columns(i);
      const auto vals = row_values(i);
      for (std::size_t k = 0; k < cols.size(); ++k) d[i][cols[k]] = vals[k];
    }
    return d;
  }

  std::vector<Row> rows() const {
    std::vector<Row> out(n_);
    for (int i = 0; i < n_; ++i) {
      const auto cols = row_columns(i);
      const auto vals = row_values(i);
      for (std::size_t k = 0; k < cols.size(); ++k) out[i].emplace_back(cols[k], vals[k]);
    }
    return out;
  }

  bool operator==(const AnnealedMatrix& o) const {
    return n_ == o.n_ && row_ptr_ == o.row_ptr_ && col_ == o.col_ && val_ == o.val_ &&
           row_weight_ == o.row_weight_ && volume_ == o.volume_;
  }

 private:
  int n_ = 0;
  std::vector<std::size_t> row_ptr_{0};
  std::vector<int> col_;
  std::vector<double> val_;
  std::vector<double> row_weight_;
  std::vector<double> volume_;
  MatrixMetadata meta_;
};

namespace detail {

/// P(X < t) for X = U + V, U uniform on [c-w, c+w], V uniform on [-e, e].
inline double sum_uniform_cdf(double t, double c, double w, double e) noexcept {
  const double s = w + e;
  if (s == 0.0) return t > c ? 1.0 : 0.0;
  const double u = t - (c - s);
  if (u <= 0.0) return 0.0;
  if (u >= 2.0 * s) return 1.0;
  const double p = std::min(w, e);
  const double q = std::max(w, e);
  if (p == 0.0) return u / (2.0 * q);
  if (u <= 2.0 * p) return u * u / (8.0 * p * q);
  if (u <= 2.0 * q) return p / (2.0 * q) + (u - 2.0 * p) / (2.0 * q);
  const double r = 2.0 * s - u;
  return 1.0 - r * r / (8.0 * p * q);
}

struct AxisMass {
  int index;
  double mass;
};

/// Masses of (uniform image on [c-w, c+w]) + (uniform kernel on [-e, e]) over
/// the cells of grid box `b` along `axis`, clipped to [clip_lo, clip_hi).
/// `period` > 0 folds the distribution onto the box as a circle.
inline void axis_masses(const GridPartition& grid, int b, int axis, double c, double w, double e,
                        double clip_lo, double clip_hi, double period, std::vector<AxisMass>& out) {
  out.clear();
  const double s = w + e;
  int shifts = 0;
  if (period > 0.0) shifts = static_cast<int>(std::ceil(s / period)) + 1;
  for (int k = -shifts; k <= shifts; ++k) {
    const double ck = c + k * period;
    const double lo = std::max(ck - s, clip_lo);
    const double hi = std::min(ck + s, clip_hi);
    if (!(lo < hi) && !(s == 0.0 && ck >= clip_lo && ck < clip_hi)) continue;
    const int first = grid.axis_index(b, axis, lo);
    const int last = grid.axis_index(b, axis, std::min(hi, clip_hi));
    for (int idx = first; idx <= last; ++idx) {
      const double a = std::max(grid.edge(b, axis, idx), clip_lo);
      const double z = std::min(grid.edge(b, axis, idx + 1), clip_hi);
      if (!(a < z)) continue;
      const double m = sum_uniform_cdf(z, ck, w, e) - sum_uniform_cdf(a, ck, w, e);
      if (m <= 0.0) continue;
      auto it = std::find_if(out.begin(), out.end(), [idx](const AxisMass& am) { return am.index == idx; });
      if (it == out.end())
        out.push_back({idx, m});
      else
        it->mass += m;
    }
  }
}

}  // namespace detail

/// Entries smaller than this fraction of the row weight are floating-point
/// slivers (image edges landing on cell edges up to roundoff) and dropped.
inline constexpr double kDropTolerance = 1e-13;

struct AssemblyOptions {
  int samples_per_cell = 16;
  std::uint64_t seed = 0;
  int threads = 1;
  /// Membership subsamples for strata straddling the survival boundary.
  int boundary_subsamples = 16;
};

/// Ulam discretization of the weighted annealed operator
///   f -> e^phi E[ f(T x + delta) 1_Y(T x + delta) ].
/// Each source cell is split into strata; a stratum contributes its
/// linearized image convolved with the kernel, integrated in closed form over
/// every target cell ∩ Y. Strata straddling the boundary of Y are weighted by
/// their covered fraction.
inline AnnealedMatrix assemble_operator(const MapSystem& map, const NoiseModel& noise,
                                        const WeightField& weight, const RegionSpec& region,
                                        const GridPartition& grid, const AssemblyOptions& opt = {}) {
  if (opt.samples_per_cell < 1) throw ConfigError("E_SAMPLES", "samples_per_cell must be >= 1");
  if (region.dim() != grid.dim() || grid.dim() != map.dim)
    throw ConfigError("E_GEOMETRY", "map, region and grid dimensions differ");
  bool meets = false;
  for (const auto& gb : grid.boxes())
    for (const auto& rb : region.boxes())
      if (gb.overlap(rb) > 0.0) meets = true;
  if (!meets) throw ConfigError("E_REGION", "empty conditioning region");

  const int dim = grid.dim();
  const int n = grid.n_cells();
  const int per_axis =
      std::max(1, static_cast<int>(std::ceil(std::pow(static_cast<double>(opt.samples_per_cell), 1.0 / dim) - 1e-9)));
  const int strata = dim == 1 ? per_axis : per_axis * per_axis;
  const double eps = noise.epsilon;
  const bool wrap = noise.boundary == BoundaryRule::periodic_wrap;

  std::vector<AnnealedMatrix::Row> rows(n);
  std::vector<double> row_weight(n, 0.0);

  parallel_for(n, opt.threads, [&](long cell_l) {
    const int cell = static_cast<int>(cell_l);
    const Box cb = grid.cell_box(cell);
    if (region.overlap_volume(cb) <= 0.0) return;
    const double wgt = eval_weight(weight, cb.center(), dim);
    row_weight[cell] = wgt;
    if (wgt == 0.0) return;

    AnnealedMatrix::Row acc;
    std::vector<detail::AxisMass> mx, my;
    for (int s = 0; s < strata; ++s) {
      const int sx = s % per_axis;
      const int sy = s / per_axis;
      Box sb{dim, {}, {}};
      sb.lo[0] = cb.lo[0] + cb.extent(0) * sx / per_axis;
      sb.hi[0] = cb.lo[0] + cb.extent(0) * (sx + 1) / per_axis;
      if (dim == 2) {
        sb.lo[1] = cb.lo[1] + cb.extent(1) * sy / per_axis;
        sb.hi[1] = cb.lo[1] + cb.extent(1) * (sy + 1) / per_axis;
      }
      const double frac = region_fraction(region, sb, opt.boundary_subsamples,
                                          derive_seed(opt.seed, static_cast<std::uint64_t>(cell) * strata + s));
      if (frac <= 0.0) continue;
      const Point mid = sb.center();
      const Point img = map.forward(mid);
      if (is_cemetery(img)) continue;
      std::array<double, kMaxDim> half{0.0, 0.0};
      if (map.axis_stretch) {
        const auto st = map.axis_stretch(mid);
        for (int a = 0; a < dim; ++a) half[a] = 0.5 * std::abs(st[a]) * sb.extent(a);
      }
      const double scale = wgt * frac / strata;

      for (int gb = 0; gb < static_cast<int>(grid.boxes().size()); ++gb) {
        const Box& G = grid.boxes()[gb];
        // wrapped noise stays on the box holding the image
        if (wrap && !G.contains(img)) continue;
        for (const Box& R : region.boxes()) {
          if (G.overlap(R) <= 0.0) continue;
          const double px = (wrap && map.domain.periodic[0]) ? G.extent(0) : 0.0;
          detail::axis_masses(grid, gb, 0, img[0], half[0], eps, std::max(G.lo[0], R.lo[0]),
                              std::min(G.hi[0], R.hi[0]), px, mx);
          if (mx.empty()) continue;
          const int offset = gb * grid.cells_per_box();
          if (dim == 1) {
            for (const auto& a : mx) acc.emplace_back(offset + a.index, scale * a.mass);
          } else {
            const double py = (wrap && map.domain.periodic[1]) ? G.extent(1) : 0.0;
            detail::axis_masses(grid, gb, 1, img[1], half[1], eps, std::max(G.lo[1], R.lo[1]),
                                std::min(G.hi[1], R.hi[1]), py, my);
            for (const auto& b : my)
              for (const auto& a : mx)
                acc.emplace_back(offset + b.index * grid.resolution() + a.index, scale * a.mass * b.mass);
          }
        }
      }
    }
    std::sort(acc.begin(), acc.end(), [](const auto& l, const auto& r) { return l.first < r.first; });
    AnnealedMatrix::Row merged;
    for (const auto& [j, v] : acc) {
      if (!merged.empty() && merged.back().first == j)
        merged.back().second += v;
      else
        merged.emplace_back(j, v);
    }
    const double floor = kDropTolerance * wgt;
    std::erase_if(merged, [floor](const auto& e) { return e.second <= floor; });
    rows[cell] = std::move(merged);
  });

  MatrixMetadata meta{map.label, eps, weight.label, region.label(), opt.samples_per_cell, opt.seed};
  return AnnealedMatrix(rows, std::move(row_weight), grid.volumes(), std::move(meta));
}

/// Principal restriction: rows and columns outside `keep` are zeroed, the
/// dimension and cell indexing are unchanged.
inline AnnealedMatrix restrict_operator(const AnnealedMatrix& m, const std::vector<int>& keep) {
  if (keep.empty()) throw ConfigError("E_SUBSET", "restriction subset is empty");
  std::vector<char> in(m.n_cells(), 0);
  for (int c : keep) {
    if (c < 0 || c >= m.n_cells()) throw ConfigError("E_SUBSET", "restriction cell out of range");
    in[c] = 1;
  }
  auto rows = m.rows();
  std::vector<double> weight = m.row_weight();
  for (int i = 0; i < m.n_cells(); ++i) {
    if (!in[i]) {
      rows[i].clear();
      weight[i] = 0.0;
      continue;
    }
    std::erase_if(rows[i], [&](const auto& e) { return !in[e.first]; });
  }
  MatrixMetadata meta = m.metadata();
  meta.region += "|restricted";
  return AnnealedMatrix(rows, std::move(weight), m.cell_volume(), std::move(meta));
}

/// (M v)_i = sum_j M[i][j] v_j.
inline std::vector<double> apply(const AnnealedMatrix& m, std::span<const double> v) {
  if (static_cast<int>(v.size()) != m.n_cells()) throw ConfigError("E_DIMENSION", "vector length mismatch");
  std::vector<double> out(v.size(), 0.0);
  for (int i = 0; i < m.n_cells(); ++i) {
    const auto cols = m.row_columns(i);
    const auto vals = m.row_values(i);
    double s = 0.0;
    for (std::size_t k = 0; k < cols.size(); ++k) s += vals[k] * v[cols[k]];
    out[i] = s;
  }
  return out;
}

/// (M^T u)_j = sum_i M[i][j] u_i.
inline std::vector<double> apply_adjoint(const AnnealedMatrix& m, std::span<const double> u) {
  if (static_cast<int>(u.size()) != m.n_cells()) throw ConfigError("E_DIMENSION", "vector length mismatch");
  std::vector<double> out(u.size(), 0.0);
  for (int i = 0; i < m.n_cells(); ++i) {
    const double ui = u[i];
    if (ui == 0.0) continue;
    const auto cols = m.row_columns(i);
    const auto vals = m.row_values(i);
    for (std::size_t k = 0; k < cols.size(); ++k) out[cols[k]] += vals[k] * ui;
  }
  return out;
}

}  // namespace qemlab

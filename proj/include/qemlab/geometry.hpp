#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "qemlab/error.hpp"
#include "qemlab/rng.hpp"

namespace qemlab {

inline constexpr int kMaxDim = 2;

/// A point of the ambient space. Only the first `dim` coordinates of the
/// owning system are meaningful; the rest stay 0.
using Point = std::array<double, kMaxDim>;

/// The cemetery state. It lies outside every box.
inline constexpr Point kCemetery{std::numeric_limits<double>::infinity(),
                                 std::numeric_limits<double>::infinity()};

inline bool is_cemetery(const Point& p) noexcept { return std::isinf(p[0]); }

/// Axis-aligned half-open box [lo, hi).
struct Box {
  int dim = 1;
  std::array<double, kMaxDim> lo{};
  std::array<double, kMaxDim> hi{};

  static Box interval(double a, double b) { return Box{1, {a, 0.0}, {b, 0.0}}; }
  static Box rect(double x0, double x1, double y0, double y1) {
    return Box{2, {x0, y0}, {x1, y1}};
  }

  double extent(int axis) const noexcept { return hi[axis] - lo[axis]; }

  double volume() const noexcept {
    double v = 1.0;
    for (int a = 0; a < dim; ++a) v *= std::max(0.0, extent(a));
    return v;
  }

  Point center() const noexcept {
    Point c{};
    for (int a = 0; a < dim; ++a) c[a] = 0.5 * (lo[a] + hi[a]);
    return c;
  }

  bool contains(const Point& p) const noexcept {
    for (int a = 0; a < dim; ++a)
      if (!(p[a] >= lo[a] && p[a] < hi[a])) return false;
    return true;
  }

  /// True when `other` lies inside this box (closed comparison on edges).
  bool encloses(const Box& other) const noexcept {
    for (int a = 0; a < dim; ++a)
      if (other.lo[a] < lo[a] || other.hi[a] > hi[a]) return false;
    return true;
  }

  /// Volume of the intersection with `other`.
  double overlap(const Box& other) const noexcept {
    double v = 1.0;
    for (int a = 0; a < dim; ++a) {
      const double w = std::min(hi[a], other.hi[a]) - std::max(lo[a], other.lo[a]);
      if (w <= 0.0) return 0.0;
      v *= w;
    }
    return v;
  }

  bool operator==(const Box&) const = default;
};

/// A region described as a union of pairwise disjoint boxes.
class RegionSpec {
 public:
  RegionSpec() = default;
  RegionSpec(std::vector<Box> boxes, std::string label = {})
      : boxes_(std::move(boxes)), label_(std::move(label)) {
    if (boxes_.empty()) throw ConfigError("E_REGION", "region needs at least one box");
    dim_ = boxes_.front().dim;
    for (const auto& b : boxes_) {
      if (b.dim != dim_) throw ConfigError("E_REGION", "region boxes of mixed dimension");
      if (b.volume() <= 0.0) throw ConfigError("E_REGION", "degenerate region box");
    }
    for (std::size_t i = 0; i < boxes_.size(); ++i)
      for (std::size_t j = i + 1; j < boxes_.size(); ++j)
        if (boxes_[i].overlap(boxes_[j]) > 0.0)
          throw ConfigError("E_REGION", "region boxes must be pairwise disjoint");
  }

  int dim() const noexcept { return dim_; }
  const std::vector<Box>& boxes() const noexcept { return boxes_; }
  const std::string& label() const noexcept { return label_; }
  bool empty() const noexcept { return boxes_.empty(); }

  bool contains(const Point& p) const noexcept {
    if (is_cemetery(p)) return false;
    return std::any_of(boxes_.begin(), boxes_.end(), [&](const Box& b) { return b.contains(p); });
  }

  /// Exact volume of `cell` ∩ region.
  double overlap_volume(const Box& cell) const noexcept {
    double v = 0.0;
    for (const auto& b : boxes_) v += b.overlap(cell);
    return v;
  }

 private:
  std::vector<Box> boxes_;
  std::string label_;
  int dim_ = 1;
};

/// Fraction of `cell` covered by `region`: exactly 0 or 1 when the cell lies
/// outside every box or inside one box, otherwise a stratified jittered
/// estimate from `subsamples` membership tests.
inline double region_fraction(const RegionSpec& region, const Box& cell, int subsamples,
                              std::uint64_t seed) {
  if (cell.volume() <= 0.0) throw ConfigError("E_GEOMETRY", "zero-volume cell");
  if (subsamples < 1) throw ConfigError("E_GEOMETRY", "subsamples must be >= 1");
  bool touches = false;
  for (const auto& b : region.boxes()) {
    if (b.encloses(cell)) return 1.0;
    if (b.overlap(cell) > 0.0) touches = true;
  }
  if (!touches) return 0.0;

  const int d = cell.dim;
  const int per_axis =
      std::max(1, static_cast<int>(std::ceil(std::pow(static_cast<double>(subsamples), 1.0 / d) - 1e-9)));
  Rng rng(seed);
  long inside = 0;
  long total = 0;
  const int ny = d == 2 ? per_axis : 1;
  for (int iy = 0; iy < ny; ++iy) {
    for (int ix = 0; ix < per_axis; ++ix) {
      Point p{};
      p[0] = cell.lo[0] + (ix + rng.uniform()) * cell.extent(0) / per_axis;
      if (d == 2) p[1] = cell.lo[1] + (iy + rng.uniform()) * cell.extent(1) / per_axis;
      inside += region.contains(p) ? 1 : 0;
      ++total;
    }
  }
  return static_cast<double>(inside) / static_cast<double>(total);
}

}  // namespace qemlab

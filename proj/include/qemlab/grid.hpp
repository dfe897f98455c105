#pragma once

#include <cmath>
#include <optional>
#include <vector>

#include "qemlab/error.hpp"
#include "qemlab/geometry.hpp"

namespace qemlab {

/// Uniform tiling of one or more boxes into `resolution` cells per axis.
/// Cell index = box offset + iy * resolution + ix.
class GridPartition {
 public:
  struct CellCoord {
    int box = 0;
    int ix = 0;
    int iy = 0;
  };

  GridPartition() = default;

  GridPartition(std::vector<Box> boxes, int resolution) : boxes_(std::move(boxes)), res_(resolution) {
    if (res_ < 1) throw ConfigError("E_RESOLUTION", "grid resolution must be >= 1");
    if (boxes_.empty()) throw ConfigError("E_GEOMETRY", "grid needs at least one box");
    dim_ = boxes_.front().dim;
    per_box_ = dim_ == 1 ? res_ : res_ * res_;
    for (const auto& b : boxes_) {
      if (b.dim != dim_) throw ConfigError("E_GEOMETRY", "grid boxes of mixed dimension");
      if (b.volume() <= 0.0) throw ConfigError("E_GEOMETRY", "zero-volume grid box");
    }
  }

  int dim() const noexcept { return dim_; }
  int resolution() const noexcept { return res_; }
  const std::vector<Box>& boxes() const noexcept { return boxes_; }
  int n_cells() const noexcept { return static_cast<int>(boxes_.size()) * per_box_; }
  int cells_per_box() const noexcept { return per_box_; }

  CellCoord coord(int cell) const noexcept {
    CellCoord c;
    c.box = cell / per_box_;
    const int r = cell % per_box_;
    c.ix = r % res_;
    c.iy = r / res_;
    return c;
  }

  int index(const CellCoord& c) const noexcept { return c.box * per_box_ + c.iy * res_ + c.ix; }

  /// Edge k (0..resolution) along `axis` of box `b`.
  double edge(int b, int axis, int k) const noexcept {
    const Box& bx = boxes_[b];
    if (k == res_) return bx.hi[axis];
    return bx.lo[axis] + bx.extent(axis) * (static_cast<double>(k) / res_);
  }

  double width(int b, int axis) const noexcept { return boxes_[b].extent(axis) / res_; }

  Box cell_box(int cell) const noexcept {
    const CellCoord c = coord(cell);
    Box out{dim_, {}, {}};
    out.lo[0] = edge(c.box, 0, c.ix);
    out.hi[0] = edge(c.box, 0, c.ix + 1);
    if (dim_ == 2) {
      out.lo[1] = edge(c.box, 1, c.iy);
      out.hi[1] = edge(c.box, 1, c.iy + 1);
    }
    return out;
  }

  Point center(int cell) const noexcept { return cell_box(cell).center(); }
  double volume(int cell) const noexcept { return cell_box(cell).volume(); }

  std::vector<double> volumes() const {
    std::vector<double> v(n_cells());
    for (int i = 0; i < n_cells(); ++i) v[i] = volume(i);
    return v;
  }

  /// Index along `axis` of box `b` containing coordinate x (clamped).
  int axis_index(int b, int axis, double x) const noexcept {
    const Box& bx = boxes_[b];
    int k = static_cast<int>(std::floor((x - bx.lo[axis]) / bx.extent(axis) * res_));
    if (k < 0) k = 0;
    if (k >= res_) k = res_ - 1;
    // Floating edges may disagree with the division by one cell.
    while (k > 0 && x < edge(b, axis, k)) --k;
    while (k + 1 < res_ && x >= edge(b, axis, k + 1)) ++k;
    return k;
  }

  std::optional<int> locate(const Point& p) const noexcept {
    if (is_cemetery(p)) return std::nullopt;
    for (int b = 0; b < static_cast<int>(boxes_.size()); ++b) {
      if (!boxes_[b].contains(p)) continue;
      CellCoord c{b, axis_index(b, 0, p[0]), dim_ == 2 ? axis_index(b, 1, p[1]) : 0};
      return index(c);
    }
    return std::nullopt;
  }

  /// Cells whose center lies in `region`.
  std::vector<int> cells_in(const RegionSpec& region) const {
    std::vector<int> out;
    for (int i = 0; i < n_cells(); ++i)
      if (region.contains(center(i))) out.push_back(i);
    return out;
  }

  bool operator==(const GridPartition& o) const {
    return res_ == o.res_ && boxes_ == o.boxes_;
  }

 private:
  std::vector<Box> boxes_;
  int res_ = 1;
  int dim_ = 1;
  int per_box_ = 1;
};

inline GridPartition build_grid(std::vector<Box> boxes, int resolution) {
  return GridPartition(std::move(boxes), resolution);
}

}  // namespace qemlab

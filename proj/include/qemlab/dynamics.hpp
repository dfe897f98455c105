#pragma once

#include <array>
#include <cmath>
#include <functional>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "qemlab/error.hpp"
#include "qemlab/geometry.hpp"
#include "qemlab/rng.hpp"

namespace qemlab {

struct Domain {
  std::vector<Box> boxes;
  /// Axes on which each box is a torus coordinate.
  std::array<bool, kMaxDim> periodic{false, false};

  /// Index of the box containing p, or -1.
  int box_of(const Point& p) const noexcept {
    if (is_cemetery(p)) return -1;
    for (std::size_t b = 0; b < boxes.size(); ++b)
      if (boxes[b].contains(p)) return static_cast<int>(b);
    return -1;
  }
};

/// A deterministic map T together with the Jacobian data the operator
/// assembly and the equilibrium oracles need.
struct MapSystem {
  std::string label;
  int dim = 1;
  Domain domain;
  std::function<Point(const Point&)> forward;
  /// |det DT_x|.
  std::function<double(const Point&)> jacobian_det;
  /// log |det DT_x restricted to E^u|.
  std::function<double(const Point&)> unstable_log_expansion;
  /// Per-axis stretch |dT_a/dx_a| for maps whose Jacobian is diagonal. When
  /// empty, sub-cell images are treated as points.
  std::function<std::array<double, kMaxDim>(const Point&)> axis_stretch;
  /// True on the (measure zero) discontinuity set of a piecewise map.
  std::function<bool(const Point&)> on_branch_boundary;

  bool in_domain(const Point& p) const noexcept {
    if (is_cemetery(p)) return false;
    for (const auto& b : domain.boxes)
      if (b.contains(p)) return true;
    return false;
  }
};

enum class BoundaryRule { periodic_wrap, absorb };

/// Additive product-uniform noise on [-epsilon, epsilon]^dim.
struct NoiseModel {
  double epsilon = 0.0;
  BoundaryRule boundary = BoundaryRule::periodic_wrap;

  NoiseModel() = default;
  explicit NoiseModel(double eps, BoundaryRule rule = BoundaryRule::periodic_wrap) : epsilon(eps), boundary(rule) {
    if (!(eps >= 0.0)) throw ConfigError("E_EPSILON_NEGATIVE", "noise half-width must be >= 0");
  }

  /// Kernel density at `offset`; only defined for epsilon > 0.
  double density(const Point& offset, int dim) const noexcept {
    double d = 1.0;
    for (int a = 0; a < dim; ++a) {
      if (std::abs(offset[a]) > epsilon) return 0.0;
      d /= 2.0 * epsilon;
    }
    return d;
  }

  Point sample_offset(Rng& rng, int dim) const noexcept {
    Point o{};
    for (int a = 0; a < dim; ++a) o[a] = epsilon * (2.0 * rng.uniform() - 1.0);
    return o;
  }
};

/// Smooth transition: 0 for s <= 0, 1 for s >= 1, C-infinity in between and
/// strictly positive for s > 0.
inline double smooth_step(double s) noexcept {
  if (s <= 0.0) return 0.0;
  if (s >= 1.0) return 1.0;
  const double a = std::exp(-1.0 / s);
  const double b = std::exp(-1.0 / (1.0 - s));
  return a / (a + b);
}

/// Taper that vanishes on the boundary of a union of boxes. Each box tapers
/// over a layer of width `layer` inside its own faces.
struct SupportCutoff {
  std::vector<Box> boxes;
  double layer = 0.0;
  /// Period per axis (0 = not periodic); points are also tested at their
  /// periodic images so a box may straddle the seam.
  std::array<double, kMaxDim> period{0.0, 0.0};
  /// Boxes on which the taper is held at 1 (the weight is left untouched).
  std::vector<Box> keep;

  double taper(const Point& p, int dim) const noexcept {
    for (const auto& k : keep)
      if (k.contains(p)) return 1.0;
    double best = 0.0;
    const int sx = period[0] > 0.0 ? 1 : 0;
    const int sy = (dim > 1 && period[1] > 0.0) ? 1 : 0;
    for (int kx = -sx; kx <= sx; ++kx) {
      for (int ky = -sy; ky <= sy; ++ky) {
        Point q = p;
        q[0] += kx * period[0];
        if (dim > 1) q[1] += ky * period[1];
        for (const auto& b : boxes) {
          if (!b.contains(q)) continue;
          double d = std::numeric_limits<double>::infinity();
          for (int a = 0; a < dim; ++a) d = std::min({d, q[a] - b.lo[a], b.hi[a] - q[a]});
          best = std::max(best, layer > 0.0 ? smooth_step(d / layer) : 1.0);
        }
      }
    }
    return best;
  }
};

/// Log-weight field phi and optional support cutoff. The multiplicative
/// weight is e^phi times the taper.
struct WeightField {
  std::string label = "zero";
  std::function<double(const Point&)> log_weight = [](const Point&) { return 0.0; };
  std::optional<SupportCutoff> cutoff;

  static WeightField zero() { return {}; }

  static WeightField constant(double phi) {
    WeightField w;
    w.label = "constant(" + std::to_string(phi) + ")";
    w.log_weight = [phi](const Point&) { return phi; };
    return w;
  }

  /// Piecewise-constant phi: value[k] on boxes[k], `fallback` elsewhere.
  static WeightField table(std::vector<Box> boxes, std::vector<double> values, double fallback = 0.0) {
    if (boxes.size() != values.size())
      throw ConfigError("E_WEIGHT", "weight table needs one value per box");
    WeightField w;
    w.label = "table";
    w.log_weight = [boxes = std::move(boxes), values = std::move(values), fallback](const Point& p) {
      for (std::size_t k = 0; k < boxes.size(); ++k)
        if (boxes[k].contains(p)) return values[k];
      return fallback;
    };
    return w;
  }

  /// phi + shift, same cutoff.
  WeightField shifted(double shift) const {
    WeightField w = *this;
    w.label = label + "+" + std::to_string(shift);
    w.log_weight = [base = log_weight, shift](const Point& p) { return base(p) + shift; };
    return w;
  }

  WeightField with_cutoff(SupportCutoff c) const {
    WeightField w = *this;
    w.label = label + "|cutoff";
    w.cutoff = std::move(c);
    return w;
  }
};

/// e^{phi(x)}, tapered when a cutoff is present.
inline double eval_weight(const WeightField& w, const Point& x, int dim = 1) {
  double v = std::exp(w.log_weight(x));
  if (w.cutoff) v *= w.cutoff->taper(x, dim);
  return v;
}

struct PotentialValue {
  double value = 0.0;
  bool on_branch_boundary = false;
};

/// psi = -log|det DT|_{E^u}|.
inline PotentialValue geometric_potential(const MapSystem& map, const Point& x) {
  PotentialValue out;
  out.on_branch_boundary = map.on_branch_boundary && map.on_branch_boundary(x);
  out.value = -map.unstable_log_expansion(x);
  return out;
}

namespace detail {

inline double wrap_into(double v, double lo, double hi) noexcept {
  const double len = hi - lo;
  double w = v - len * std::floor((v - lo) / len);
  if (w >= hi) w = lo;
  return w;
}

/// x*k mod 1 with the branch boundary assigned to the left-closed branch.
inline double expand_mod1(double x, double k) noexcept {
  const double y = k * x;
  return y - std::floor(y);
}

inline bool on_grid_of(double x, double k) noexcept {
  const double y = k * x;
  return y == std::floor(y);
}

}  // namespace detail

/// T(x) + delta with delta drawn from the kernel, boundary rule applied.
/// Returns the cemetery for points leaving an absorbing domain.
inline Point step_random(const MapSystem& map, const NoiseModel& noise, const Point& x, Rng& rng) {
  if (is_cemetery(x)) return kCemetery;
  Point y = map.forward(x);
  if (is_cemetery(y)) return kCemetery;
  // the noise wraps around the box holding the deterministic image
  const int home = map.domain.box_of(y);
  if (noise.epsilon > 0.0) {
    const Point d = noise.sample_offset(rng, map.dim);
    for (int a = 0; a < map.dim; ++a) y[a] += d[a];
  }
  if (noise.boundary == BoundaryRule::periodic_wrap && home >= 0) {
    const Box& b = map.domain.boxes[home];
    for (int a = 0; a < map.dim; ++a)
      if (map.domain.periodic[a]) y[a] = detail::wrap_into(y[a], b.lo[a], b.hi[a]);
  }
  return map.in_domain(y) ? y : kCemetery;
}

// ---------------------------------------------------------------------------
// Builtin systems

/// A builtin map with its natural survival region (the complement of the
/// hole) and boundary rule.
struct BuiltinSystem {
  MapSystem map;
  RegionSpec survival;
  BoundaryRule boundary = BoundaryRule::periodic_wrap;

  NoiseModel noise(double epsilon) const { return NoiseModel(epsilon, boundary); }
};

inline BuiltinSystem ternary_hole() {
  BuiltinSystem s;
  auto& m = s.map;
  m.label = "ternary_hole";
  m.dim = 1;
  m.domain = {{Box::interval(0.0, 1.0)}, {true, false}};
  m.forward = [](const Point& p) { return Point{detail::expand_mod1(p[0], 3.0), 0.0}; };
  m.jacobian_det = [](const Point&) { return 3.0; };
  m.unstable_log_expansion = [](const Point&) { return std::log(3.0); };
  m.axis_stretch = [](const Point&) { return std::array<double, kMaxDim>{3.0, 0.0}; };
  m.on_branch_boundary = [](const Point& p) { return detail::on_grid_of(p[0], 3.0); };
  s.survival = RegionSpec({Box::interval(0.0, 1.0 / 3.0), Box::interval(2.0 / 3.0, 1.0)}, "ternary_survivors");
  return s;
}

inline BuiltinSystem five_hole() {
  BuiltinSystem s;
  auto& m = s.map;
  m.label = "five_hole";
  m.dim = 1;
  m.domain = {{Box::interval(0.0, 1.0)}, {true, false}};
  m.forward = [](const Point& p) { return Point{detail::expand_mod1(p[0], 5.0), 0.0}; };
  m.jacobian_det = [](const Point&) { return 5.0; };
  m.unstable_log_expansion = [](const Point&) { return std::log(5.0); };
  m.axis_stretch = [](const Point&) { return std::array<double, kMaxDim>{5.0, 0.0}; };
  m.on_branch_boundary = [](const Point& p) { return detail::on_grid_of(p[0], 5.0); };
  // Branches 3 and 4 ([3/5, 1)) are the hole.
  s.survival = RegionSpec({Box::interval(0.0, 3.0 / 5.0)}, "five_survivors");
  return s;
}

/// Open baker: (x, y) -> (3x mod 1, (y + floor(3x)) / 3) on the torus, hole
/// {1/3 <= x < 2/3}. |det DT| = 1; the unstable expansion is 3.
inline BuiltinSystem open_baker() {
  BuiltinSystem s;
  auto& m = s.map;
  m.label = "open_baker";
  m.dim = 2;
  m.domain = {{Box::rect(0.0, 1.0, 0.0, 1.0)}, {true, true}};
  m.forward = [](const Point& p) {
    const double k = std::floor(3.0 * p[0]);
    return Point{3.0 * p[0] - k, (p[1] + k) / 3.0};
  };
  m.jacobian_det = [](const Point&) { return 1.0; };
  m.unstable_log_expansion = [](const Point&) { return std::log(3.0); };
  m.axis_stretch = [](const Point&) { return std::array<double, kMaxDim>{3.0, 1.0 / 3.0}; };
  m.on_branch_boundary = [](const Point& p) { return detail::on_grid_of(p[0], 3.0); };
  s.survival = RegionSpec({Box::rect(0.0, 1.0 / 3.0, 0.0, 1.0), Box::rect(2.0 / 3.0, 1.0, 0.0, 1.0)},
                          "baker_survivors");
  return s;
}

/// Disjoint copies of ternary_hole on [0,1) and five_hole on [2,3), each a
/// circle of its own; the cemetery is everything else.
inline BuiltinSystem two_repeller() {
  BuiltinSystem s;
  auto& m = s.map;
  m.label = "two_repeller";
  m.dim = 1;
  m.domain = {{Box::interval(0.0, 1.0), Box::interval(2.0, 3.0)}, {true, false}};
  m.forward = [](const Point& p) {
    if (p[0] >= 0.0 && p[0] < 1.0) return Point{detail::expand_mod1(p[0], 3.0), 0.0};
    if (p[0] >= 2.0 && p[0] < 3.0) return Point{2.0 + detail::expand_mod1(p[0] - 2.0, 5.0), 0.0};
    return kCemetery;
  };
  m.jacobian_det = [](const Point& p) { return p[0] < 1.5 ? 3.0 : 5.0; };
  m.unstable_log_expansion = [](const Point& p) { return std::log(p[0] < 1.5 ? 3.0 : 5.0); };
  m.axis_stretch = [](const Point& p) {
    return std::array<double, kMaxDim>{p[0] < 1.5 ? 3.0 : 5.0, 0.0};
  };
  m.on_branch_boundary = [](const Point& p) {
    return p[0] < 1.5 ? detail::on_grid_of(p[0], 3.0) : detail::on_grid_of(p[0] - 2.0, 5.0);
  };
  s.survival = RegionSpec({Box::interval(0.0, 1.0 / 3.0), Box::interval(2.0 / 3.0, 1.0),
                           Box::interval(2.0, 2.0 + 3.0 / 5.0)},
                          "two_repeller_survivors");
  return s;
}

/// ternary_hole with forward map x -> 3x + a sin(2 pi x) mod 1, |a| < 0.05.
inline BuiltinSystem smooth_perturbed(double amplitude = 0.03) {
  if (!(std::abs(amplitude) < 0.05))
    throw ConfigError("E_PARAMETER", "smooth_perturbed amplitude must satisfy |a| < 0.05");
  BuiltinSystem s = ternary_hole();
  auto& m = s.map;
  constexpr double two_pi = 2.0 * std::numbers::pi;
  const double a = amplitude;
  m.label = "smooth_perturbed";
  m.forward = [a](const Point& p) {
    const double y = 3.0 * p[0] + a * std::sin(two_pi * p[0]);
    return Point{y - std::floor(y), 0.0};
  };
  m.jacobian_det = [a](const Point& p) { return 3.0 + two_pi * a * std::cos(two_pi * p[0]); };
  m.unstable_log_expansion = [a](const Point& p) {
    return std::log(3.0 + two_pi * a * std::cos(two_pi * p[0]));
  };
  m.axis_stretch = [a](const Point& p) {
    return std::array<double, kMaxDim>{3.0 + two_pi * a * std::cos(two_pi * p[0]), 0.0};
  };
  m.on_branch_boundary = [a](const Point& p) {
    const double y = 3.0 * p[0] + a * std::sin(two_pi * p[0]);
    return y == std::floor(y);
  };
  return s;
}

inline const std::vector<std::string>& builtin_labels() {
  static const std::vector<std::string> labels{"ternary_hole", "open_baker", "five_hole", "two_repeller",
                                               "smooth_perturbed"};
  return labels;
}

inline BuiltinSystem make_builtin(const std::string& label, double amplitude = 0.03) {
  if (label == "ternary_hole") return ternary_hole();
  if (label == "open_baker") return open_baker();
  if (label == "five_hole") return five_hole();
  if (label == "two_repeller") return two_repeller();
  if (label == "smooth_perturbed") return smooth_perturbed(amplitude);
  throw ConfigError("E_UNKNOWN_LABEL", "unknown system label '" + label + "'");
}

}  // namespace qemlab

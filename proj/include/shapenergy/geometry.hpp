#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "shapenergy/errors.hpp"

namespace shapenergy {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  friend constexpr Vec2 operator+(Vec2 a, Vec2 b) noexcept { return {a.x + b.x, a.y + b.y}; }
  friend constexpr Vec2 operator-(Vec2 a, Vec2 b) noexcept { return {a.x - b.x, a.y - b.y}; }
  friend constexpr Vec2 operator*(double s, Vec2 a) noexcept { return {s * a.x, s * a.y}; }
  friend constexpr bool operator==(Vec2, Vec2) = default;
};

constexpr double dot(Vec2 a, Vec2 b) noexcept { return a.x * b.x + a.y * b.y; }
constexpr double cross(Vec2 a, Vec2 b) noexcept { return a.x * b.y - a.y * b.x; }
inline double norm(Vec2 a) noexcept { return std::hypot(a.x, a.y); }

// The four facade offsets in meters: x1 south, x2 east, x3 north, x4 west.
// Positive pushes the middle half of that side outward, negative notches it.
class ShapeParams {
 public:
  static constexpr double kMaxOffset = 3.5;

  constexpr ShapeParams() = default;
  ShapeParams(double x1, double x2, double x3, double x4) : x_{x1, x2, x3, x4} {
    for (std::size_t i = 0; i < 4; ++i) {
      if (!(std::abs(x_[i]) <= kMaxOffset)) {
        throw RangeError("shape offset x" + std::to_string(i + 1) + " = " + std::to_string(x_[i]) +
                         " outside [-3.5, 3.5]");
      }
    }
  }
  explicit ShapeParams(const std::array<double, 4>& x) : ShapeParams(x[0], x[1], x[2], x[3]) {}

  double operator[](std::size_t i) const { return x_[i]; }
  const std::array<double, 4>& values() const noexcept { return x_; }
  bool is_zero() const noexcept { return x_[0] == 0 && x_[1] == 0 && x_[2] == 0 && x_[3] == 0; }

  friend bool operator==(const ShapeParams&, const ShapeParams&) = default;

 private:
  std::array<double, 4> x_{};
};

// Long side runs east-west; the south facade is a long side.
struct GeometryConfig {
  double area_target = 990.0;
  double width_to_length = 0.5;

  double length() const { return std::sqrt(area_target / width_to_length); }
  double width() const { return width_to_length * length(); }

  void validate() const {
    if (!(area_target > 0) || !(width_to_length > 0)) {
      throw RangeError("geometry config requires positive area and width/length ratio");
    }
  }
};

double polygon_area(std::span<const Vec2> vertices);
double polygon_perimeter(std::span<const Vec2> vertices);

// Closed polygon, counter-clockwise, closing edge implicit.
class Footprint {
 public:
  Footprint() = default;
  explicit Footprint(std::vector<Vec2> vertices)
      : vertices_(std::move(vertices)),
        area_(polygon_area(vertices_)),
        perimeter_(polygon_perimeter(vertices_)) {}

  const std::vector<Vec2>& vertices() const noexcept { return vertices_; }
  std::size_t size() const noexcept { return vertices_.size(); }
  double area() const noexcept { return area_; }
  double perimeter() const noexcept { return perimeter_; }

  Vec2 edge_start(std::size_t i) const { return vertices_[i]; }
  Vec2 edge_end(std::size_t i) const { return vertices_[(i + 1) % vertices_.size()]; }

 private:
  std::vector<Vec2> vertices_;
  double area_ = 0.0;
  double perimeter_ = 0.0;
};

inline double polygon_area(std::span<const Vec2> v) {
  if (v.size() < 3) throw ShapeError("polygon needs at least 3 vertices");
  double twice = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    twice += cross(v[i], v[(i + 1) % v.size()]);
  }
  return 0.5 * twice;
}

inline double polygon_perimeter(std::span<const Vec2> v) {
  if (v.size() < 3) throw ShapeError("polygon needs at least 3 vertices");
  double sum = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) sum += norm(v[(i + 1) % v.size()] - v[i]);
  return sum;
}

inline double polygon_area(const Footprint& f) { return polygon_area(f.vertices()); }
inline double polygon_perimeter(const Footprint& f) { return polygon_perimeter(f.vertices()); }

inline Vec2 polygon_centroid(std::span<const Vec2> v) {
  const double area = polygon_area(v);
  double cx = 0.0;
  double cy = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    const Vec2 p = v[i];
    const Vec2 q = v[(i + 1) % v.size()];
    const double c = cross(p, q);
    cx += (p.x + q.x) * c;
    cy += (p.y + q.y) * c;
  }
  return {cx / (6.0 * area), cy / (6.0 * area)};
}

inline Footprint base_rectangle(const GeometryConfig& cfg) {
  cfg.validate();
  const double L = cfg.length();
  const double W = cfg.width();
  return Footprint({{0.0, 0.0}, {L, 0.0}, {L, W}, {0.0, W}});
}

// Offset polygon before area restoration. Each side's middle half
// (t in [1/4, 3/4]) is pushed along the outward normal by its offset; zero
// offsets add no vertices.
inline std::vector<Vec2> offset_outline(const ShapeParams& p, const GeometryConfig& cfg) {
  cfg.validate();
  const double L = cfg.length();
  const double W = cfg.width();
  const std::array<Vec2, 4> corners{{{0.0, 0.0}, {L, 0.0}, {L, W}, {0.0, W}}};
  const std::array<Vec2, 4> normals{{{0.0, -1.0}, {1.0, 0.0}, {0.0, 1.0}, {-1.0, 0.0}}};

  std::vector<Vec2> out;
  out.reserve(20);
  for (std::size_t side = 0; side < 4; ++side) {
    const Vec2 a = corners[side];
    const Vec2 b = corners[(side + 1) % 4];
    out.push_back(a);
    const double offset = p[side];
    if (offset == 0.0) continue;
    const Vec2 n = offset * normals[side];
    const Vec2 q1 = a + 0.25 * (b - a);
    const Vec2 q3 = a + 0.75 * (b - a);
    out.push_back(q1);
    out.push_back(q1 + n);
    out.push_back(q3 + n);
    out.push_back(q3);
  }
  return out;
}

// Area-preserving parametric footprint: offset the side middles, then scale
// uniformly about the centroid back to cfg.area_target.
inline Footprint build_footprint(const ShapeParams& p, const GeometryConfig& cfg = {}) {
  if (p.is_zero()) return base_rectangle(cfg);
  std::vector<Vec2> v = offset_outline(p, cfg);
  const double pre_area = polygon_area(v);
  const double s = std::sqrt(cfg.area_target / pre_area);
  const Vec2 c = polygon_centroid(v);
  for (auto& q : v) q = c + s * (q - c);
  return Footprint(std::move(v));
}

// East/west swap: the footprint mirrored about the north-south axis.
inline ShapeParams mirror_ew(const ShapeParams& p) {
  return ShapeParams(p[0], p[3], p[2], p[1]);
}

// Crossing-number test with the half-open rule: an edge point counts as
// inside when the interior lies directly above it (horizontal edge) or
// directly to its right (vertical edge). Adjacent polygons sharing an edge
// therefore partition the plane with no point claimed twice.
inline bool contains_point(const Footprint& f, Vec2 q) {
  const auto& v = f.vertices();
  bool inside = false;
  for (std::size_t i = 0, j = v.size() - 1; i < v.size(); j = i++) {
    const Vec2 a = v[i];
    const Vec2 b = v[j];
    if ((a.y > q.y) != (b.y > q.y)) {
      const double x_cross = a.x + (q.y - a.y) * (b.x - a.x) / (b.y - a.y);
      if (q.x < x_cross) inside = !inside;
    }
  }
  return inside;
}

inline bool is_rectilinear(const Footprint& f) {
  for (std::size_t i = 0; i < f.size(); ++i) {
    const Vec2 a = f.edge_start(i);
    const Vec2 b = f.edge_end(i);
    if ((a.x == b.x) == (a.y == b.y)) return false;  // diagonal or zero length
  }
  return true;
}

inline bool is_counter_clockwise(const Footprint& f) { return f.area() > 0.0; }

namespace detail {

inline int orientation(Vec2 a, Vec2 b, Vec2 c) {
  const double v = cross(b - a, c - a);
  return (v > 0) - (v < 0);
}

inline bool on_segment(Vec2 a, Vec2 b, Vec2 p) {
  return std::min(a.x, b.x) <= p.x && p.x <= std::max(a.x, b.x) && std::min(a.y, b.y) <= p.y &&
         p.y <= std::max(a.y, b.y);
}

inline bool segments_touch(Vec2 p1, Vec2 p2, Vec2 q1, Vec2 q2) {
  const int o1 = orientation(p1, p2, q1);
  const int o2 = orientation(p1, p2, q2);
  const int o3 = orientation(q1, q2, p1);
  const int o4 = orientation(q1, q2, p2);
  if (o1 != o2 && o3 != o4) return true;
  if (o1 == 0 && on_segment(p1, p2, q1)) return true;
  if (o2 == 0 && on_segment(p1, p2, q2)) return true;
  if (o3 == 0 && on_segment(q1, q2, p1)) return true;
  if (o4 == 0 && on_segment(q1, q2, p2)) return true;
  return false;
}

}  // namespace detail

// O(n^2) check that no two non-adjacent edges touch and adjacent edges only
// share their common vertex.
inline bool is_simple(const Footprint& f) {
  const std::size_t n = f.size();
  if (n < 3) return false;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const bool adjacent = (j == i + 1) || (i == 0 && j == n - 1);
      const Vec2 a1 = f.edge_start(i), a2 = f.edge_end(i);
      const Vec2 b1 = f.edge_start(j), b2 = f.edge_end(j);
      if (adjacent) {
        // Only collinear overlap would be a defect; vertices are shared.
        const Vec2 shared = (j == i + 1) ? a2 : a1;
        const Vec2 other_a = (j == i + 1) ? a1 : a2;
        const Vec2 other_b = (j == i + 1) ? b2 : b1;
        if (detail::orientation(other_a, shared, other_b) == 0 &&
            dot(other_a - shared, other_b - shared) > 0) {
          return false;
        }
        continue;
      }
      if (detail::segments_touch(a1, a2, b1, b2)) return false;
    }
  }
  return true;
}

}  // namespace shapenergy

#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "shapenergy/geometry.hpp"
#include "shapenergy/rng.hpp"

using namespace shapenergy;

namespace {

// Independent area oracle: sum of trapezoids under each edge.
double trapezoid_area(const std::vector<Vec2>& v) {
  double a = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    const Vec2 p = v[i];
    const Vec2 q = v[(i + 1) % v.size()];
    a += (p.x - q.x) * (p.y + q.y) / 2.0;
  }
  return a;
}

ShapeParams random_params(Xoshiro256& rng) {
  return ShapeParams(rng.uniform(-3.5, 3.5), rng.uniform(-3.5, 3.5), rng.uniform(-3.5, 3.5), rng.uniform(-3.5, 3.5));
}

}  // namespace

TEST(Geometry, BaseRectangleDimensions) {
  const GeometryConfig cfg;
  EXPECT_NEAR(cfg.length(), 44.497191, 5e-7);
  EXPECT_NEAR(cfg.width(), 22.248595, 5e-7);
  EXPECT_NEAR(cfg.length() * cfg.width(), 990.0, 990.0 * 1e-9);
  const Footprint f = base_rectangle(cfg);
  ASSERT_EQ(f.size(), 4u);
  EXPECT_NEAR(polygon_area(f), 990.0, 1e-9);
  EXPECT_NEAR(polygon_perimeter(f), 133.491573, 5e-7);
}

TEST(Geometry, UnitSquareConfig) {
  const Footprint f = base_rectangle({1.0, 1.0});
  const std::vector<Vec2> want{{0, 0}, {1, 0}, {1, 1}, {0, 1}};
  ASSERT_EQ(f.vertices().size(), want.size());
  for (std::size_t i = 0; i < want.size(); ++i) {
    EXPECT_DOUBLE_EQ(f.vertices()[i].x, want[i].x);
    EXPECT_DOUBLE_EQ(f.vertices()[i].y, want[i].y);
  }
  EXPECT_DOUBLE_EQ(polygon_area(f), 1.0);
  EXPECT_DOUBLE_EQ(polygon_perimeter(f), 4.0);
}

TEST(Geometry, PolygonAreaSmallCases) {
  const std::vector<Vec2> tri{{0, 0}, {1, 0}, {0, 1}};
  EXPECT_DOUBLE_EQ(polygon_area(tri), 0.5);
  const std::vector<Vec2> two{{0, 0}, {1, 0}};
  EXPECT_THROW(polygon_area(two), ShapeError);
  EXPECT_THROW(polygon_perimeter(two), ShapeError);
}

TEST(Geometry, ZeroParamsGiveBaseRectangle) {
  const Footprint f = build_footprint(ShapeParams{});
  const Footprint b = base_rectangle({});
  ASSERT_EQ(f.size(), b.size());
  for (std::size_t i = 0; i < f.size(); ++i) {
    EXPECT_EQ(f.vertices()[i].x, b.vertices()[i].x);
    EXPECT_EQ(f.vertices()[i].y, b.vertices()[i].y);
  }
}

TEST(Geometry, SouthBumpPreScaleArea) {
  const GeometryConfig cfg;
  const auto outline = offset_outline(ShapeParams(3.5, 0, 0, 0), cfg);
  EXPECT_EQ(outline.size(), 8u);
  const double pre = trapezoid_area(outline);
  EXPECT_NEAR(pre, 990.0 + 3.5 * cfg.length() / 2.0, 1e-9);
  EXPECT_NEAR(pre, 1067.870084, 5e-7);
  EXPECT_NEAR(std::sqrt(990.0 / pre), 0.962849, 5e-7);
  EXPECT_NEAR(polygon_area(build_footprint(ShapeParams(3.5, 0, 0, 0))), 990.0, 1e-6);
}

TEST(Geometry, AllNotchesPreScaleArea) {
  const GeometryConfig cfg;
  const auto outline = offset_outline(ShapeParams(-3.5, -3.5, -3.5, -3.5), cfg);
  EXPECT_EQ(outline.size(), 20u);
  const double pre = trapezoid_area(outline);
  EXPECT_NEAR(pre, 990.0 - 3.5 * (cfg.length() + cfg.width()), 1e-9);
  EXPECT_NEAR(pre, 756.389748, 5e-7);
  EXPECT_NEAR(std::sqrt(990.0 / pre), 1.144049, 5e-7);
  EXPECT_NEAR(polygon_area(build_footprint(ShapeParams(-3.5, -3.5, -3.5, -3.5))), 990.0, 1e-6);
}

TEST(Geometry, NotchAddsTwoRisersToPerimeter) {
  const auto outline = offset_outline(ShapeParams(-3.5, 0, 0, 0), {});
  EXPECT_NEAR(polygon_perimeter(outline), 140.491573, 5e-7);
}

TEST(Geometry, RejectsOutOfRangeParams) {
  EXPECT_THROW(ShapeParams(3.5000001, 0, 0, 0), RangeError);
  EXPECT_THROW(ShapeParams(0, 0, 0, -4), RangeError);
  EXPECT_THROW(ShapeParams(0, std::nan(""), 0, 0), RangeError);
  EXPECT_NO_THROW(ShapeParams(3.5, -3.5, 3.5, -3.5));
}

TEST(Geometry, RandomFootprintsSatisfyInvariants) {
  Xoshiro256 rng(7);
  for (int i = 0; i < 500; ++i) {
    const ShapeParams p = random_params(rng);
    const Footprint f = build_footprint(p);
    EXPECT_TRUE(is_simple(f));
    EXPECT_TRUE(is_rectilinear(f));
    EXPECT_TRUE(is_counter_clockwise(f));
    EXPECT_NEAR(trapezoid_area(f.vertices()), 990.0, 1e-6);
  }
}

TEST(Geometry, MirrorSwapsEastWest) {
  const ShapeParams m = mirror_ew(ShapeParams(1, 2, 3, 3.5));
  EXPECT_EQ(m.values(), (std::array<double, 4>{1, 3.5, 3, 2}));
  EXPECT_TRUE(mirror_ew(ShapeParams{}).is_zero());
}

TEST(Geometry, MirrorIsPointReflection) {
  Xoshiro256 rng(11);
  const double cx = GeometryConfig{}.length() / 2.0;
  for (int i = 0; i < 50; ++i) {
    const ShapeParams p = random_params(rng);
    EXPECT_EQ(mirror_ew(mirror_ew(p)).values(), p.values());
    const Footprint a = build_footprint(p);
    const Footprint b = build_footprint(mirror_ew(p));
    EXPECT_NEAR(polygon_area(b), 990.0, 1e-6);
    ASSERT_EQ(a.size(), b.size());
    // Every reflected vertex of a is a vertex of b.
    for (const Vec2& v : a.vertices()) {
      const Vec2 r{2 * cx - v.x, v.y};
      bool found = false;
      for (const Vec2& w : b.vertices()) found = found || (std::abs(w.x - r.x) < 1e-9 && std::abs(w.y - r.y) < 1e-9);
      EXPECT_TRUE(found);
    }
  }
}

TEST(Geometry, ContainsPoint) {
  const Footprint sq = base_rectangle({1.0, 1.0});
  EXPECT_TRUE(contains_point(sq, {0.5, 0.5}));
  EXPECT_FALSE(contains_point(sq, {1.5, 0.5}));
  const Footprint r = base_rectangle({});
  EXPECT_TRUE(contains_point(r, polygon_centroid(r.vertices())));
}

TEST(Geometry, ContainsPointHalfOpenPartition) {
  // Two unit squares sharing the edge x = 1: every point of the shared edge
  // belongs to exactly one of them.
  const Footprint left(std::vector<Vec2>{{0, 0}, {1, 0}, {1, 1}, {0, 1}});
  const Footprint right(std::vector<Vec2>{{1, 0}, {2, 0}, {2, 1}, {1, 1}});
  for (double y : {0.1, 0.5, 0.9}) {
    EXPECT_NE(contains_point(left, {1.0, y}), contains_point(right, {1.0, y}));
  }
  const Footprint below(std::vector<Vec2>{{0, -1}, {1, -1}, {1, 0}, {0, 0}});
  for (double x : {0.1, 0.5, 0.9}) {
    EXPECT_NE(contains_point(left, {x, 0.0}), contains_point(below, {x, 0.0}));
  }
}

TEST(Geometry, SimplicityDetectsSelfIntersection) {
  const Footprint bowtie(std::vector<Vec2>{{0, 0}, {1, 1}, {1, 0}, {0, 1}});
  EXPECT_FALSE(is_simple(bowtie));
  const Footprint diamond(std::vector<Vec2>{{0, -1}, {1, 0}, {0, 1}, {-1, 0}});
  EXPECT_TRUE(is_simple(diamond));
  EXPECT_FALSE(is_rectilinear(diamond));
}

#pragma once

#include <array>
#include <cmath>
#include <optional>
#include <span>
#include <utility>
#include <vector>

namespace trifuse::geom {

// Tolerances used by the exact geometric predicates. Distances are meters.
constexpr double kDegenerateArea = 1e-12;   // m^2, triangles/polygons below are slivers
constexpr double kBoundaryTol = 1e-9;       // m, inclusive boundary band
constexpr double kRayMinT = 1e-9;           // m, hits closer than this are behind/self
constexpr double kBaryEps = 1e-12;          // relative slack so exact edge hits register

struct Vec3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  Vec3() = default;
  Vec3(double x_, double y_, double z_) : x(x_), y(y_), z(z_) {}

  Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
  Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
  Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }
  Vec3 operator/(double s) const { return {x / s, y / s, z / s}; }
  Vec3 operator-() const { return {-x, -y, -z}; }
  Vec3& operator+=(const Vec3& o) {
    x += o.x;
    y += o.y;
    z += o.z;
    return *this;
  }
  Vec3& operator-=(const Vec3& o) {
    x -= o.x;
    y -= o.y;
    z -= o.z;
    return *this;
  }
  bool operator==(const Vec3& o) const { return x == o.x && y == o.y && z == o.z; }

  double operator[](int i) const { return i == 0 ? x : (i == 1 ? y : z); }
};

inline Vec3 operator*(double s, const Vec3& v) { return v * s; }

inline double dot(const Vec3& a, const Vec3& b) { return a.x * b.x + a.y * b.y + a.z * b.z; }

inline Vec3 cross(const Vec3& a, const Vec3& b) {
  return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}

inline double norm_squared(const Vec3& v) { return dot(v, v); }
inline double norm(const Vec3& v) { return std::sqrt(norm_squared(v)); }

inline Vec3 normalized(const Vec3& v) {
  const double n = norm(v);
  return v / n;
}

inline bool finite(const Vec3& v) {
  return std::isfinite(v.x) && std::isfinite(v.y) && std::isfinite(v.z);
}

// Plane as {x : dot(unit_normal, x) == offset}.
struct Plane {
  Vec3 unit_normal{0.0, 0.0, 1.0};
  double offset = 0.0;

  static Plane from_point_normal(const Vec3& p, const Vec3& normal) {
    const Vec3 n = normalized(normal);
    return {n, dot(n, p)};
  }

  double signed_distance(const Vec3& p) const { return dot(unit_normal, p) - offset; }
};

struct Ray {
  Vec3 origin;
  Vec3 direction;  // unit length

  Vec3 at(double t) const { return origin + direction * t; }
};

struct Aabb {
  Vec3 min;
  Vec3 max;

  void expand(const Vec3& p) {
    min.x = std::min(min.x, p.x);
    min.y = std::min(min.y, p.y);
    min.z = std::min(min.z, p.z);
    max.x = std::max(max.x, p.x);
    max.y = std::max(max.y, p.y);
    max.z = std::max(max.z, p.z);
  }
  void expand(const Aabb& b) {
    expand(b.min);
    expand(b.max);
  }
  Vec3 center() const { return (min + max) * 0.5; }
  Vec3 extent() const { return max - min; }
  bool contains(const Vec3& p, double tol = 0.0) const {
    return p.x >= min.x - tol && p.x <= max.x + tol && p.y >= min.y - tol &&
           p.y <= max.y + tol && p.z >= min.z - tol && p.z <= max.z + tol;
  }
  std::array<Vec3, 8> corners() const {
    return {Vec3{min.x, min.y, min.z}, Vec3{max.x, min.y, min.z}, Vec3{min.x, max.y, min.z},
            Vec3{max.x, max.y, min.z}, Vec3{min.x, min.y, max.z}, Vec3{max.x, min.y, max.z},
            Vec3{min.x, max.y, max.z}, Vec3{max.x, max.y, max.z}};
  }
};

// Convex polyhedron with explicit boundary, used for the stretched camera
// pyramid. Half-space normals point inward.
struct ConvexPolyhedron {
  std::vector<Plane> half_spaces;
  std::vector<Vec3> vertices;
  std::vector<std::array<int, 2>> edges;        // endpoint indices into vertices
  std::vector<std::vector<int>> faces;          // planar vertex loops
};

enum class TriClass { Inside, OnBoundary, Outside };

struct RayHit {
  double t = 0.0;
  Vec3 point;
};

// Orthogonal projection of p onto the plane. Returns (foot, signed distance);
// p == foot + d * unit_normal.
std::pair<Vec3, double> project_point_to_plane(const Vec3& p, const Plane& plane);

// Classifies a point lying on the face plane against the triangle borders.
// edge_tolerance is metric (meters): within that distance of an edge line is
// OnBoundary. Throws Error on degenerate triangles (area < kDegenerateArea).
TriClass classify_point_in_triangle(const Vec3& p, const Vec3& a, const Vec3& b, const Vec3& c,
                                    double edge_tolerance);

// Ray/triangle intersection; boundary hits are reported. Returns nothing for
// misses, parallel rays, and hits with t <= kRayMinT. Throws on degenerate
// triangles.
std::optional<RayHit> ray_triangle_intersect(const Ray& ray, const Vec3& a, const Vec3& b,
                                             const Vec3& c);

// Inclusive point-in-polyhedron test: inside iff every inward half-space is
// satisfied within kBoundaryTol.
bool point_in_polyhedron(const Vec3& p, const ConvexPolyhedron& poly);

// True iff segment [a,b] crosses or touches the polygon's plane at a point
// inside the (convex, planar) polygon; endpoints on the polygon count.
// Throws on polygons with area < kDegenerateArea.
bool segment_polygon_intersect(const Vec3& a, const Vec3& b, std::span<const Vec3> polygon);

// Minimal axis-aligned box containing all points. Throws on empty input.
Aabb aabb_of(std::span<const Vec3> points);

}  // namespace trifuse::geom

#include "geom.hpp"

#include <algorithm>
#include <limits>

#include "error.hpp"

namespace trifuse::geom {

std::pair<Vec3, double> project_point_to_plane(const Vec3& p, const Plane& plane) {
  const double d = plane.signed_distance(p);
  return {p - plane.unit_normal * d, d};
}

namespace {

struct TriFrame {
  Vec3 normal;     // unnormalized, |normal| = 2 * area
  double area2;    // |normal|
};

TriFrame tri_frame(const Vec3& a, const Vec3& b, const Vec3& c) {
  TriFrame f;
  f.normal = cross(b - a, c - a);
  f.area2 = norm(f.normal);
  return f;
}

}  // namespace

TriClass classify_point_in_triangle(const Vec3& p, const Vec3& a, const Vec3& b, const Vec3& c,
                                    double edge_tolerance) {
  const TriFrame f = tri_frame(a, b, c);
  if (0.5 * f.area2 < kDegenerateArea) {
    throw_input("classify_point_in_triangle: degenerate triangle");
  }
  // Metric distance of p to each edge line, positive toward the interior:
  // with barycentric coordinate l_i, distance to the opposite edge is
  // l_i * 2 * area / |edge_i|.
  const Vec3 verts[3] = {a, b, c};
  double min_dist = std::numeric_limits<double>::infinity();
  for (int i = 0; i < 3; ++i) {
    const Vec3& e0 = verts[(i + 1) % 3];
    const Vec3& e1 = verts[(i + 2) % 3];
    const Vec3 edge = e1 - e0;
    const double elen = norm(edge);
    // l_i * area2 = dot(normal, cross(edge, p - e0))
    const double bary_scaled = dot(f.normal, cross(edge, p - e0));
    const double dist = bary_scaled / (f.area2 * elen);
    min_dist = std::min(min_dist, dist);
  }
  if (min_dist > edge_tolerance) return TriClass::Inside;
  if (min_dist >= -edge_tolerance) return TriClass::OnBoundary;
  return TriClass::Outside;
}

std::optional<RayHit> ray_triangle_intersect(const Ray& ray, const Vec3& a, const Vec3& b,
                                             const Vec3& c) {
  const Vec3 e1 = b - a;
  const Vec3 e2 = c - a;
  if (0.5 * norm(cross(e1, e2)) < kDegenerateArea) {
    throw_input("ray_triangle_intersect: degenerate triangle");
  }
  // Moller-Trumbore, inclusive on the triangle boundary.
  const Vec3 pvec = cross(ray.direction, e2);
  const double det = dot(e1, pvec);
  if (std::abs(det) < 1e-300) return std::nullopt;  // parallel
  const double inv_det = 1.0 / det;
  const Vec3 tvec = ray.origin - a;
  const double u = dot(tvec, pvec) * inv_det;
  if (u < -kBaryEps || u > 1.0 + kBaryEps) return std::nullopt;
  const Vec3 qvec = cross(tvec, e1);
  const double v = dot(ray.direction, qvec) * inv_det;
  if (v < -kBaryEps || u + v > 1.0 + kBaryEps) return std::nullopt;
  const double t = dot(e2, qvec) * inv_det;
  if (t <= kRayMinT) return std::nullopt;
  return RayHit{t, ray.at(t)};
}

bool point_in_polyhedron(const Vec3& p, const ConvexPolyhedron& poly) {
  for (const Plane& h : poly.half_spaces) {
    if (h.signed_distance(p) < -kBoundaryTol) return false;
  }
  return true;
}

namespace {

// Newell normal; robust for planar vertex loops.
Vec3 polygon_normal(std::span<const Vec3> poly) {
  Vec3 n{0.0, 0.0, 0.0};
  const std::size_t k = poly.size();
  for (std::size_t i = 0; i < k; ++i) {
    const Vec3& p = poly[i];
    const Vec3& q = poly[(i + 1) % k];
    n.x += (p.y - q.y) * (p.z + q.z);
    n.y += (p.z - q.z) * (p.x + q.x);
    n.z += (p.x - q.x) * (p.y + q.y);
  }
  return n;
}

// Inclusive containment for a convex planar polygon; tol is metric.
bool point_in_convex_polygon(const Vec3& p, std::span<const Vec3> poly, const Vec3& unit_normal,
                             double tol) {
  const std::size_t k = poly.size();
  for (std::size_t i = 0; i < k; ++i) {
    const Vec3& e0 = poly[i];
    const Vec3& e1 = poly[(i + 1) % k];
    const Vec3 edge = e1 - e0;
    const double elen = norm(edge);
    if (elen == 0.0) continue;
    // In-plane inward edge normal.
    const Vec3 inward = cross(unit_normal, edge) / elen;
    if (dot(inward, p - e0) < -tol) return false;
  }
  return true;
}

}  // namespace

bool segment_polygon_intersect(const Vec3& a, const Vec3& b, std::span<const Vec3> polygon) {
  const Vec3 n = polygon_normal(polygon);
  const double area = 0.5 * norm(n);
  if (area < kDegenerateArea) throw_input("segment_polygon_intersect: degenerate polygon");
  const Vec3 un = n / norm(n);
  const Plane plane{un, dot(un, polygon[0])};

  const double da = plane.signed_distance(a);
  const double db = plane.signed_distance(b);
  const bool a_on = std::abs(da) <= kBoundaryTol;
  const bool b_on = std::abs(db) <= kBoundaryTol;

  if (a_on && b_on) {
    // Segment (nearly) in the polygon plane: endpoint containment or a 2D
    // edge crossing counts.
    if (point_in_convex_polygon(a, polygon, un, kBoundaryTol)) return true;
    if (point_in_convex_polygon(b, polygon, un, kBoundaryTol)) return true;
    const std::size_t k = polygon.size();
    for (std::size_t i = 0; i < k; ++i) {
      const Vec3& e0 = polygon[i];
      const Vec3& e1 = polygon[(i + 1) % k];
      // Segment-segment proximity in the plane: parametrize and compare.
      const Vec3 d1 = b - a;
      const Vec3 d2 = e1 - e0;
      const Vec3 r = e0 - a;
      const Vec3 cr = cross(d1, d2);
      const double denom = norm_squared(cr);
      if (denom < 1e-30) continue;  // parallel edges
      const double t = dot(cross(r, d2), cr) / denom;
      const double s = dot(cross(r, d1), cr) / denom;
      if (t < -kBaryEps || t > 1.0 + kBaryEps || s < -kBaryEps || s > 1.0 + kBaryEps) continue;
      const Vec3 p1 = a + d1 * t;
      const Vec3 p2 = e0 + d2 * s;
      if (norm(p1 - p2) <= kBoundaryTol) return true;
    }
    return false;
  }

  if (da > kBoundaryTol && db > kBoundaryTol) return false;
  if (da < -kBoundaryTol && db < -kBoundaryTol) return false;

  // One endpoint on the plane within tolerance: test its foot point.
  if (a_on || b_on) {
    const Vec3& touch = a_on ? a : b;
    const Vec3 foot = touch - un * plane.signed_distance(touch);
    if (point_in_convex_polygon(foot, polygon, un, kBoundaryTol)) return true;
    if (a_on && b_on) return false;
  }
  if (std::abs(da - db) < 1e-300) return false;
  const double t = da / (da - db);
  if (t < 0.0 || t > 1.0) return false;
  const Vec3 hit = a + (b - a) * t;
  return point_in_convex_polygon(hit, polygon, un, kBoundaryTol);
}

Aabb aabb_of(std::span<const Vec3> points) {
  if (points.empty()) throw_input("aabb_of: empty input");
  Aabb box{points[0], points[0]};
  for (const Vec3& p : points.subspan(1)) box.expand(p);
  return box;
}

}  // namespace trifuse::geom

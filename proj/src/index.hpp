#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <vector>

#include "geom.hpp"
#include "scene.hpp"

namespace trifuse::index {

// Balanced kD-tree over point positions; median split on the widest
// dimension. Queries are exact (no approximation) and results are sorted by
// point index, so they are independent of build details and thread count.
class PointKdTree {
 public:
  static constexpr int kDefaultLeafSize = 32;

  explicit PointKdTree(const std::vector<geom::Vec3>& points, int leaf_size = kDefaultLeafSize,
                       int threads = 1);

  // All indices with ||p - center|| <= r (inclusive), ascending.
  std::vector<uint32_t> ball_query(const geom::Vec3& center, double r) const;

  std::size_t size() const { return points_.size(); }

 private:
  struct Node {
    geom::Aabb box;
    int32_t left = -1;    // children, -1 for leaves
    int32_t right = -1;
    uint32_t begin = 0;   // leaf range into order_
    uint32_t end = 0;
  };

  geom::Aabb range_box(uint32_t begin, uint32_t end) const;
  uint32_t split_range(uint32_t begin, uint32_t end, const geom::Aabb& box);
  int32_t build(uint32_t begin, uint32_t end, std::vector<Node>& nodes);
  void build_parallel(int threads);
  void query(int32_t node, const geom::Vec3& center, double r2,
             std::vector<uint32_t>& out) const;

  std::vector<geom::Vec3> points_;
  std::vector<uint32_t> order_;
  std::vector<Node> nodes_;
  int leaf_size_;
};

struct BvhHit {
  int32_t face_id = -1;
  double t = 0.0;
  geom::Vec3 point;
};

// Binary BVH over the non-degenerate faces of one mesh tile; median split on
// face centroids along the widest axis. Ray queries return exactly the
// brute-force minimum-t hit; equal-t candidates (within 1e-12) resolve to the
// lowest face id.
class FaceBvh {
 public:
  static constexpr int kDefaultLeafSize = 8;
  static constexpr double kTieTol = 1e-12;

  FaceBvh(const scene::MeshTile& tile, const std::vector<scene::FaceDerived>& derived,
          int leaf_size = kDefaultLeafSize);

  std::optional<BvhHit> raycast(const geom::Ray& ray) const;

  const geom::Aabb& bounds() const { return nodes_[0].box; }
  std::size_t face_count() const { return faces_.size(); }
  int degenerate_count() const { return degenerate_count_; }

 private:
  struct Node {
    geom::Aabb box;
    int32_t left = -1;
    int32_t right = -1;
    uint32_t begin = 0;
    uint32_t end = 0;
  };

  struct RaycastState {
    double t_min = std::numeric_limits<double>::infinity();
    std::vector<BvhHit> candidates;
  };

  int32_t build(uint32_t begin, uint32_t end);
  void raycast_node(int32_t node, const geom::Ray& ray, RaycastState& state) const;

  struct FaceData {
    geom::Vec3 a, b, c;
    geom::Vec3 centroid;
    geom::Aabb box;
    int32_t face_id;
  };

  std::vector<FaceData> faces_;  // reordered during build
  std::vector<Node> nodes_;
  int leaf_size_;
  int degenerate_count_ = 0;
};

// Inclusive slab test; returns entry parameter through tmin.
bool ray_aabb_intersect(const geom::Ray& ray, const geom::Aabb& box, double& tmin, double& tmax);

}  // namespace trifuse::index

#include "index.hpp"

#include <algorithm>
#include <functional>
#include <limits>

#include "error.hpp"
#include "parallel.hpp"

namespace trifuse::index {

namespace {

int widest_axis(const geom::Aabb& box) {
  const geom::Vec3 e = box.extent();
  if (e.x >= e.y && e.x >= e.z) return 0;
  return e.y >= e.z ? 1 : 2;
}

}  // namespace

PointKdTree::PointKdTree(const std::vector<geom::Vec3>& points, int leaf_size, int threads)
    : points_(points), leaf_size_(std::max(1, leaf_size)) {
  if (points_.empty()) throw_input("PointKdTree: empty cloud");
  order_.resize(points_.size());
  for (uint32_t i = 0; i < order_.size(); ++i) order_[i] = i;
  threads = resolve_threads(threads);
  if (threads > 1 && order_.size() > static_cast<std::size_t>(16 * leaf_size_)) {
    build_parallel(threads);
  } else {
    nodes_.reserve(2 * points_.size() / leaf_size_ + 2);
    build(0, static_cast<uint32_t>(order_.size()), nodes_);
  }
}

geom::Aabb PointKdTree::range_box(uint32_t begin, uint32_t end) const {
  geom::Aabb box{points_[order_[begin]], points_[order_[begin]]};
  for (uint32_t i = begin + 1; i < end; ++i) box.expand(points_[order_[i]]);
  return box;
}

// Median partition along the widest axis; the index tie-break keeps the
// split deterministic for duplicate points.
uint32_t PointKdTree::split_range(uint32_t begin, uint32_t end, const geom::Aabb& box) {
  const int axis = widest_axis(box);
  const uint32_t mid = begin + (end - begin) / 2;
  std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end,
                   [&](uint32_t a, uint32_t b) {
                     const double ca = points_[a][axis];
                     const double cb = points_[b][axis];
                     return ca != cb ? ca < cb : a < b;
                   });
  return mid;
}

int32_t PointKdTree::build(uint32_t begin, uint32_t end, std::vector<Node>& nodes) {
  Node node;
  node.box = range_box(begin, end);
  const int32_t id = static_cast<int32_t>(nodes.size());
  nodes.push_back(node);
  if (end - begin <= static_cast<uint32_t>(leaf_size_)) {
    nodes[id].begin = begin;
    nodes[id].end = end;
    return id;
  }
  const uint32_t mid = split_range(begin, end, node.box);
  const int32_t left = build(begin, mid, nodes);
  const int32_t right = build(mid, end, nodes);
  nodes[id].left = left;
  nodes[id].right = right;
  return id;
}

// Serial top-level splits down to ~2x the worker count, then independent
// subtree builds in parallel. The recursion is identical to the sequential
// build, so queries see the same tree shape.
void PointKdTree::build_parallel(int threads) {
  struct Skeleton {
    uint32_t begin, end;
    geom::Aabb box;
    int32_t left = -1, right = -1;  // skeleton children
    int range = -1;                 // leaf: index into ranges
  };
  std::vector<Skeleton> skeleton;
  std::vector<std::pair<uint32_t, uint32_t>> ranges;

  int depth = 1;
  while ((1 << depth) < 2 * threads) ++depth;

  // Phase 1: serial breadth-first splits.
  std::function<int32_t(uint32_t, uint32_t, int)> split_skel =
      [&](uint32_t begin, uint32_t end, int remaining) -> int32_t {
    const int32_t id = static_cast<int32_t>(skeleton.size());
    skeleton.push_back({begin, end, range_box(begin, end)});
    if (remaining == 0 || end - begin <= static_cast<uint32_t>(leaf_size_)) {
      skeleton[id].range = static_cast<int>(ranges.size());
      ranges.push_back({begin, end});
      return id;
    }
    const uint32_t mid = split_range(begin, end, skeleton[id].box);
    const int32_t left = split_skel(begin, mid, remaining - 1);
    const int32_t right = split_skel(mid, end, remaining - 1);
    skeleton[id].left = left;
    skeleton[id].right = right;
    return id;
  };
  split_skel(0, static_cast<uint32_t>(order_.size()), depth);

  // Phase 2: subtree builds, one local node vector per range.
  std::vector<std::vector<Node>> subtrees(ranges.size());
  parallel_for(ranges.size(), threads, [&](std::size_t r) {
    subtrees[r].reserve(2 * (ranges[r].second - ranges[r].first) / leaf_size_ + 2);
    build(ranges[r].first, ranges[r].second, subtrees[r]);
  });

  // Phase 3: stitch. Skeleton nodes first, then the subtrees with offsets.
  nodes_.clear();
  nodes_.resize(skeleton.size());
  std::vector<int32_t> subtree_root(ranges.size());
  for (std::size_t r = 0; r < ranges.size(); ++r) {
    const int32_t offset = static_cast<int32_t>(nodes_.size());
    subtree_root[r] = offset;
    for (Node node : subtrees[r]) {
      if (node.left >= 0) node.left += offset;
      if (node.right >= 0) node.right += offset;
      nodes_.push_back(node);
    }
  }
  for (std::size_t s = skeleton.size(); s-- > 0;) {
    const Skeleton& sk = skeleton[s];
    Node& node = nodes_[s];
    if (sk.range >= 0) {
      // Skeleton leaf slot takes over the subtree root's content.
      node = nodes_[subtree_root[sk.range]];
    } else {
      node.box = sk.box;
      node.left = sk.left;
      node.right = sk.right;
    }
  }
}

std::vector<uint32_t> PointKdTree::ball_query(const geom::Vec3& center, double r) const {
  std::vector<uint32_t> out;
  if (r < 0.0) return out;
  query(0, center, r * r, out);
  std::sort(out.begin(), out.end());
  return out;
}

void PointKdTree::query(int32_t node_id, const geom::Vec3& center, double r2,
                        std::vector<uint32_t>& out) const {
  const Node& node = nodes_[node_id];
  // Squared distance from center to the box.
  double d2 = 0.0;
  for (int a = 0; a < 3; ++a) {
    const double lo = node.box.min[a];
    const double hi = node.box.max[a];
    const double c = center[a];
    if (c < lo) {
      d2 += (lo - c) * (lo - c);
    } else if (c > hi) {
      d2 += (c - hi) * (c - hi);
    }
  }
  if (d2 > r2) return;
  if (node.left < 0) {
    for (uint32_t i = node.begin; i < node.end; ++i) {
      const uint32_t idx = order_[i];
      if (geom::norm_squared(points_[idx] - center) <= r2) out.push_back(idx);
    }
    return;
  }
  query(node.left, center, r2, out);
  query(node.right, center, r2, out);
}

bool ray_aabb_intersect(const geom::Ray& ray, const geom::Aabb& box, double& tmin, double& tmax) {
  tmin = 0.0;
  tmax = std::numeric_limits<double>::infinity();
  for (int a = 0; a < 3; ++a) {
    const double o = ray.origin[a];
    const double d = ray.direction[a];
    const double lo = box.min[a];
    const double hi = box.max[a];
    if (d == 0.0) {
      if (o < lo || o > hi) return false;
      continue;
    }
    double t1 = (lo - o) / d;
    double t2 = (hi - o) / d;
    if (t1 > t2) std::swap(t1, t2);
    tmin = std::max(tmin, t1);
    tmax = std::min(tmax, t2);
    if (tmin > tmax) return false;
  }
  return true;
}

FaceBvh::FaceBvh(const scene::MeshTile& tile, const std::vector<scene::FaceDerived>& derived,
                 int leaf_size)
    : leaf_size_(std::max(1, leaf_size)) {
  faces_.reserve(tile.faces.size());
  for (std::size_t f = 0; f < tile.faces.size(); ++f) {
    if (derived[f].degenerate) {
      ++degenerate_count_;
      continue;
    }
    FaceData fd;
    fd.a = tile.vertices[tile.faces[f][0]];
    fd.b = tile.vertices[tile.faces[f][1]];
    fd.c = tile.vertices[tile.faces[f][2]];
    fd.centroid = derived[f].cog;
    fd.box = geom::Aabb{fd.a, fd.a};
    fd.box.expand(fd.b);
    fd.box.expand(fd.c);
    fd.face_id = static_cast<int32_t>(f);
    faces_.push_back(fd);
  }
  if (faces_.empty()) throw_input("FaceBvh: tile has no valid faces");
  nodes_.reserve(2 * faces_.size() / leaf_size_ + 2);
  build(0, static_cast<uint32_t>(faces_.size()));
}

int32_t FaceBvh::build(uint32_t begin, uint32_t end) {
  Node node;
  node.box = faces_[begin].box;
  for (uint32_t i = begin + 1; i < end; ++i) node.box.expand(faces_[i].box);
  const int32_t id = static_cast<int32_t>(nodes_.size());
  nodes_.push_back(node);
  if (end - begin <= static_cast<uint32_t>(leaf_size_)) {
    nodes_[id].begin = begin;
    nodes_[id].end = end;
    return id;
  }
  geom::Aabb cbox{faces_[begin].centroid, faces_[begin].centroid};
  for (uint32_t i = begin + 1; i < end; ++i) cbox.expand(faces_[i].centroid);
  const int axis = widest_axis(cbox);
  const uint32_t mid = begin + (end - begin) / 2;
  std::nth_element(faces_.begin() + begin, faces_.begin() + mid, faces_.begin() + end,
                   [axis](const FaceData& a, const FaceData& b) {
                     const double ca = a.centroid[axis];
                     const double cb = b.centroid[axis];
                     return ca != cb ? ca < cb : a.face_id < b.face_id;
                   });
  const int32_t left = build(begin, mid);
  const int32_t right = build(mid, end);
  nodes_[id].left = left;
  nodes_[id].right = right;
  return id;
}

std::optional<BvhHit> FaceBvh::raycast(const geom::Ray& ray) const {
  // Candidates within kTieTol of the running minimum t are collected and the
  // winner picked afterwards, so the result does not depend on visit order.
  RaycastState state;
  raycast_node(0, ray, state);
  std::optional<BvhHit> best;
  for (const BvhHit& h : state.candidates) {
    if (h.t > state.t_min + kTieTol) continue;
    if (!best || h.face_id < best->face_id) best = h;
  }
  return best;
}

void FaceBvh::raycast_node(int32_t node_id, const geom::Ray& ray, RaycastState& state) const {
  const Node& node = nodes_[node_id];
  double tmin = 0.0;
  double tmax = 0.0;
  if (!ray_aabb_intersect(ray, node.box, tmin, tmax)) return;
  if (tmin > state.t_min + kTieTol) return;
  if (node.left < 0) {
    for (uint32_t i = node.begin; i < node.end; ++i) {
      const FaceData& fd = faces_[i];
      const auto hit = geom::ray_triangle_intersect(ray, fd.a, fd.b, fd.c);
      if (!hit || hit->t > state.t_min + kTieTol) continue;
      state.t_min = std::min(state.t_min, hit->t);
      state.candidates.push_back(BvhHit{fd.face_id, hit->t, hit->point});
      if (state.candidates.size() > 64) {  // drop hits the shrunken bound ruled out
        std::erase_if(state.candidates,
                      [&](const BvhHit& h) { return h.t > state.t_min + kTieTol; });
      }
    }
    return;
  }
  raycast_node(node.left, ray, state);
  raycast_node(node.right, ray, state);
}

}  // namespace trifuse::index

#include "imgma.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "error.hpp"
#include "parallel.hpp"

namespace trifuse::imgma {

CameraPyramid build_camera_pyramid(const scene::CameraModel& cam, double z_floor) {
  if (!(z_floor < cam.center.z - 1e-12)) {
    throw_input("build_camera_pyramid: z_floor must lie strictly below the projection center");
  }
  // Corner rays through the exact image corners (continuous coordinates), so
  // the pyramid holds precisely the points projecting inside the bounds.
  const double w = cam.width;
  const double h = cam.height;
  const geom::Vec3 dirs[4] = {
      cam.image_point_ray(0.0, 0.0).direction,
      cam.image_point_ray(w, 0.0).direction,
      cam.image_point_ray(w, h).direction,
      cam.image_point_ray(0.0, h).direction,
  };

  CameraPyramid pyr;
  pyr.apex = cam.center;
  pyr.z_floor = z_floor;
  pyr.poly.vertices.push_back(cam.center);
  for (const geom::Vec3& d : dirs) {
    if (d.z >= -1e-12) {
      throw_input("build_camera_pyramid: corner ray does not descend to the floor");
    }
    const double t = (z_floor - cam.center.z) / d.z;
    pyr.poly.vertices.push_back(cam.center + d * t);
  }

  // Lateral half-spaces through adjacent corner-ray pairs, oriented inward.
  const geom::Vec3 inside = cam.rotate_to_world({0.0, 0.0, 1.0});
  for (int i = 0; i < 4; ++i) {
    const geom::Vec3& d0 = dirs[i];
    const geom::Vec3& d1 = dirs[(i + 1) % 4];
    geom::Vec3 n = geom::cross(d0, d1);
    if (geom::dot(n, inside) < 0.0) n = -n;
    pyr.poly.half_spaces.push_back(geom::Plane::from_point_normal(cam.center, n));
  }
  // Bottom half-space: z >= z_floor.
  pyr.poly.half_spaces.push_back(geom::Plane{{0.0, 0.0, 1.0}, z_floor});

  // Boundary for the edge/face stages: apex edges then base rim.
  for (int i = 1; i <= 4; ++i) pyr.poly.edges.push_back({0, i});
  for (int i = 0; i < 4; ++i) pyr.poly.edges.push_back({1 + i, 1 + (i + 1) % 4});
  for (int i = 0; i < 4; ++i) {
    pyr.poly.faces.push_back({0, 1 + i, 1 + (i + 1) % 4});
  }
  pyr.poly.faces.push_back({1, 2, 3, 4});
  return pyr;
}

MbbVisibility mbb_visible(const CameraPyramid& pyramid, const geom::Aabb& box) {
  // Stage 1: any box corner inside the pyramid.
  for (const geom::Vec3& corner : box.corners()) {
    if (geom::point_in_polyhedron(corner, pyramid.poly)) {
      return {true, VisibilityStage::CornerInside};
    }
  }

  const auto corners = box.corners();
  static constexpr int kBoxFaces[6][4] = {
      {0, 1, 3, 2},  // z = min
      {4, 5, 7, 6},  // z = max
      {0, 1, 5, 4},  // y = min
      {2, 3, 7, 6},  // y = max
      {0, 2, 6, 4},  // x = min
      {1, 3, 7, 5},  // x = max
  };
  static constexpr int kBoxEdges[12][2] = {{0, 1}, {2, 3}, {4, 5}, {6, 7}, {0, 2}, {1, 3},
                                           {4, 6}, {5, 7}, {0, 4}, {1, 5}, {2, 6}, {3, 7}};

  // Flat tiles collapse some box faces to slivers; those cannot be crossed.
  const auto degenerate_quad = [](const geom::Vec3* q) {
    return 0.5 * geom::norm(geom::cross(q[2] - q[0], q[3] - q[1])) < geom::kDegenerateArea;
  };

  // Stage 2: pyramid edges from the projection center against box faces.
  for (int e = 0; e < 4; ++e) {
    const auto [v0, v1] = std::pair{pyramid.poly.edges[e][0], pyramid.poly.edges[e][1]};
    const geom::Vec3& a = pyramid.poly.vertices[v0];
    const geom::Vec3& b = pyramid.poly.vertices[v1];
    for (const auto& face : kBoxFaces) {
      const geom::Vec3 quad[4] = {corners[face[0]], corners[face[1]], corners[face[2]],
                                  corners[face[3]]};
      if (degenerate_quad(quad)) continue;
      if (geom::segment_polygon_intersect(a, b, quad)) {
        return {true, VisibilityStage::PyramidEdge};
      }
    }
  }

  // Stage 3: box edges against pyramid faces.
  for (const auto& edge : kBoxEdges) {
    const geom::Vec3& a = corners[edge[0]];
    const geom::Vec3& b = corners[edge[1]];
    if (geom::norm(b - a) < geom::kBoundaryTol) continue;
    for (const auto& loop : pyramid.poly.faces) {
      std::vector<geom::Vec3> poly;
      poly.reserve(loop.size());
      for (int idx : loop) poly.push_back(pyramid.poly.vertices[idx]);
      if (geom::segment_polygon_intersect(a, b, poly)) {
        return {true, VisibilityStage::BoxEdge};
      }
    }
  }
  return {false, VisibilityStage::None};
}

TileSelection select_visible_tiles(const scene::CameraModel& cam, const scene::TiledMesh& mesh) {
  TileSelection sel;
  if (mesh.tiles.empty()) return sel;

  double z_floor = std::numeric_limits<double>::infinity();
  for (const auto& tile : mesh.tiles) z_floor = std::min(z_floor, tile.mbb.min.z);

  CameraPyramid pyramid;
  try {
    pyramid = build_camera_pyramid(cam, z_floor);
  } catch (const Error&) {
    // Unbounded or floor-level pyramid: keep every tile (still a superset).
    sel.pyramid_valid = false;
    for (const auto& tile : mesh.tiles) sel.tile_ids.push_back(tile.tile_id);
    return sel;
  }

  for (const auto& tile : mesh.tiles) {
    const MbbVisibility vis = mbb_visible(pyramid, tile.mbb);
    if (vis.visible) {
      sel.tile_ids.push_back(tile.tile_id);
      sel.stages[tile.tile_id] = vis.stage;
    }
  }
  std::sort(sel.tile_ids.begin(), sel.tile_ids.end());
  return sel;
}

namespace {

// Conservative pixel rectangle covered by the box; falls back to the full
// image when a corner is not strictly in front of the camera. Distortion is
// irrelevant here because pixel rays are undistorted.
struct PixelRect {
  int row0, row1, col0, col1;  // inclusive
  bool empty() const { return row0 > row1 || col0 > col1; }
};

PixelRect conservative_pixel_rect(const scene::CameraModel& cam, const geom::Aabb& box) {
  double min_u = std::numeric_limits<double>::infinity();
  double max_u = -min_u;
  double min_v = std::numeric_limits<double>::infinity();
  double max_v = -min_v;
  for (const geom::Vec3& corner : box.corners()) {
    const geom::Vec3 c = cam.to_camera(corner);
    if (c.z <= 1e-9) {
      return {0, cam.height - 1, 0, cam.width - 1};
    }
    const double u = cam.cx + cam.fx * (c.x / c.z);
    const double v = cam.cy + cam.fy * (c.y / c.z);
    min_u = std::min(min_u, u);
    max_u = std::max(max_u, u);
    min_v = std::min(min_v, v);
    max_v = std::max(max_v, v);
  }
  PixelRect r;
  r.col0 = std::max(0, static_cast<int>(std::floor(min_u - 0.5)) - 1);
  r.col1 = std::min(cam.width - 1, static_cast<int>(std::ceil(max_u - 0.5)) + 1);
  r.row0 = std::max(0, static_cast<int>(std::floor(min_v - 0.5)) - 1);
  r.row1 = std::min(cam.height - 1, static_cast<int>(std::ceil(max_v - 0.5)) + 1);
  return r;
}

}  // namespace

std::vector<PixelRecord> raycast_image_tile(const scene::CameraModel& cam,
                                            const index::FaceBvh& tile_bvh, int32_t tile_id,
                                            int threads) {
  const PixelRect rect = conservative_pixel_rect(cam, tile_bvh.bounds());
  std::vector<PixelRecord> out;
  if (rect.empty()) return out;

  const int rows = rect.row1 - rect.row0 + 1;
  std::vector<std::vector<PixelRecord>> per_row(rows);
  parallel_for(static_cast<std::size_t>(rows), threads, [&](std::size_t r) {
    const int row = rect.row0 + static_cast<int>(r);
    auto& bucket = per_row[r];
    for (int col = rect.col0; col <= rect.col1; ++col) {
      const geom::Ray ray = cam.pixel_ray(row, col);
      const auto hit = tile_bvh.raycast(ray);
      if (!hit) continue;
      // Depth is camera-frame z, not ray length.
      const double depth = cam.to_camera(hit->point).z;
      if (depth <= 1e-9) continue;
      bucket.push_back(PixelRecord{static_cast<uint32_t>(row), static_cast<uint32_t>(col), depth,
                                   tile_id, hit->face_id});
    }
  });

  std::size_t total = 0;
  for (const auto& b : per_row) total += b.size();
  out.reserve(total);
  for (auto& b : per_row) out.insert(out.end(), b.begin(), b.end());
  return out;
}

SparsePixelCloud fuse_depth(int32_t image_id,
                            const std::vector<std::vector<PixelRecord>>& per_tile_results,
                            double depth_tie_tol) {
  // Gather all candidates per pixel before deciding; the tie rule stays
  // canonical even when depths straddle the tolerance band.
  std::vector<PixelRecord> all;
  std::size_t total = 0;
  for (const auto& r : per_tile_results) total += r.size();
  all.reserve(total);
  for (const auto& r : per_tile_results) all.insert(all.end(), r.begin(), r.end());
  std::sort(all.begin(), all.end(), [](const PixelRecord& a, const PixelRecord& b) {
    if (a.row != b.row) return a.row < b.row;
    if (a.col != b.col) return a.col < b.col;
    if (a.depth != b.depth) return a.depth < b.depth;
    if (a.tile_id != b.tile_id) return a.tile_id < b.tile_id;
    return a.face_id < b.face_id;
  });

  SparsePixelCloud cloud;
  cloud.image_id = image_id;
  std::size_t i = 0;
  while (i < all.size()) {
    std::size_t j = i;
    while (j < all.size() && all[j].row == all[i].row && all[j].col == all[i].col) ++j;
    // Group [i, j) is depth-sorted; the minimum is at i.
    const double d_min = all[i].depth;
    PixelRecord best = all[i];
    for (std::size_t k = i + 1; k < j; ++k) {
      if (all[k].depth > d_min + depth_tie_tol) break;
      if (all[k].tile_id < best.tile_id ||
          (all[k].tile_id == best.tile_id && all[k].face_id < best.face_id)) {
        best = all[k];
      }
    }
    cloud.records.push_back(best);
    i = j;
  }
  return cloud;
}

const scene::LabelColumn* SparsePixelCloud::find_label(const std::string& name) const {
  for (const auto& c : labels) {
    if (c.name == name) return &c;
  }
  return nullptr;
}
scene::LabelColumn& SparsePixelCloud::ensure_label(const std::string& name) {
  for (auto& c : labels) {
    if (c.name == name) {
      c.values.assign(records.size(), scene::kUnlabeled);
      return c;
    }
  }
  labels.push_back({name, std::vector<int32_t>(records.size(), scene::kUnlabeled)});
  return labels.back();
}
const scene::FeatureColumn* SparsePixelCloud::find_feature(const std::string& name) const {
  for (const auto& c : features) {
    if (c.name == name) return &c;
  }
  return nullptr;
}
scene::FeatureColumn& SparsePixelCloud::ensure_feature(const std::string& name) {
  for (auto& c : features) {
    if (c.name == name) {
      c.values.assign(records.size(), 0.0);
      return c;
    }
  }
  features.push_back({name, std::vector<double>(records.size(), 0.0)});
  return features.back();
}

void VisibilityTable::add(int32_t image_id, const std::vector<int32_t>& tiles) {
  image_tiles[image_id] = tiles;
  for (int32_t t : tiles) tile_images[t].push_back(image_id);
}

ImgmaResult imgma_run(const std::vector<scene::CameraModel>& cameras,
                      const scene::TiledMesh& mesh,
                      const std::vector<index::FaceBvh>& tile_bvhs, const ImgmaConfig& cfg) {
  ImgmaResult result;
  result.pixel_clouds.resize(cameras.size());

  for (std::size_t c = 0; c < cameras.size(); ++c) {
    const scene::CameraModel& cam = cameras[c];
    SparsePixelCloud& cloud = result.pixel_clouds[c];
    cloud.image_id = cam.image_id;
    try {
      const TileSelection sel = select_visible_tiles(cam, mesh);
      if (!sel.pyramid_valid) {
        result.warnings.push_back("image " + std::to_string(cam.image_id) +
                                  ": camera pyramid unbounded, ray casting all tiles");
      }
      for (const auto& [tile, stage] : sel.stages) {
        (void)tile;
        ++result.stage_counts[static_cast<int>(stage)];
      }
      result.visibility.add(cam.image_id, sel.tile_ids);

      std::vector<std::vector<PixelRecord>> per_tile;
      per_tile.reserve(sel.tile_ids.size());
      for (int32_t tile_id : sel.tile_ids) {
        // Tiles are stored sorted by id; find the dense index.
        std::size_t t = 0;
        while (t < mesh.tiles.size() && mesh.tiles[t].tile_id != tile_id) ++t;
        if (t == mesh.tiles.size()) throw_internal("imgma_run: tile id missing");
        per_tile.push_back(raycast_image_tile(cam, tile_bvhs[t], tile_id, cfg.threads));
      }
      cloud = fuse_depth(cam.image_id, per_tile, cfg.depth_tie_tol);
    } catch (const Error& e) {
      result.warnings.push_back("image " + std::to_string(cam.image_id) + " skipped: " +
                                e.what());
      cloud = SparsePixelCloud{};
      cloud.image_id = cam.image_id;
      result.visibility.add(cam.image_id, {});
    }
  }
  return result;
}

}  // namespace trifuse::imgma

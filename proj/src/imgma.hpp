#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "geom.hpp"
#include "index.hpp"
#include "scene.hpp"

namespace trifuse::imgma {

// Frustum from the projection center through the image corners, truncated
// below by the lowest tile-box face.
struct CameraPyramid {
  geom::ConvexPolyhedron poly;
  geom::Vec3 apex;
  double z_floor = 0.0;
};

enum class VisibilityStage { None = 0, CornerInside = 1, PyramidEdge = 2, BoxEdge = 3 };

struct MbbVisibility {
  bool visible = false;
  VisibilityStage stage = VisibilityStage::None;
};

// Throws when z_floor is not strictly below the projection center or a
// corner ray does not descend (pyramid would be unbounded).
CameraPyramid build_camera_pyramid(const scene::CameraModel& cam, double z_floor);

// Three-stage intersection check; stops at the first succeeding stage.
// Complete for boxes that do not reach below the pyramid floor, which tile
// boxes never do (the floor is the minimum over all of them).
MbbVisibility mbb_visible(const CameraPyramid& pyramid, const geom::Aabb& box);

struct TileSelection {
  std::vector<int32_t> tile_ids;                       // ascending
  std::map<int32_t, VisibilityStage> stages;           // per visible tile
  bool pyramid_valid = true;                           // false -> fallback: all tiles
};

// Stage (I): preselects tiles whose MBB intersects the stretched pyramid.
// z_floor is the minimum z over all tile boxes. Cameras whose pyramid cannot
// be built keep every tile (conservative superset).
TileSelection select_visible_tiles(const scene::CameraModel& cam, const scene::TiledMesh& mesh);

struct PixelRecord {
  uint32_t row = 0;
  uint32_t col = 0;
  double depth = 0.0;  // camera-frame z, m
  int32_t tile_id = 0;
  int32_t face_id = 0;
};

// Per-image list of pixels linked to a face, sorted row-major, one record
// per pixel. Attribute columns run parallel to records.
struct SparsePixelCloud {
  int32_t image_id = 0;
  std::vector<PixelRecord> records;
  std::vector<scene::LabelColumn> labels;
  std::vector<scene::FeatureColumn> features;

  std::size_t size() const { return records.size(); }
  const scene::LabelColumn* find_label(const std::string& name) const;
  scene::LabelColumn& ensure_label(const std::string& name);
  const scene::FeatureColumn* find_feature(const std::string& name) const;
  scene::FeatureColumn& ensure_feature(const std::string& name);
};

struct VisibilityTable {
  std::map<int32_t, std::vector<int32_t>> image_tiles;  // image -> visible tiles
  std::map<int32_t, std::vector<int32_t>> tile_images;  // transpose

  void add(int32_t image_id, const std::vector<int32_t>& tiles);
};

// Stage (II): every pixel ray of the image against one tile's BVH.
std::vector<PixelRecord> raycast_image_tile(const scene::CameraModel& cam,
                                            const index::FaceBvh& tile_bvh, int32_t tile_id,
                                            int threads = 1);

// Stage (III): min-depth fusion across per-tile results of one image.
// Candidates within depth_tie_tol of the per-pixel minimum resolve to the
// lowest (tile_id, face_id); the outcome is independent of tile order.
SparsePixelCloud fuse_depth(int32_t image_id,
                            const std::vector<std::vector<PixelRecord>>& per_tile_results,
                            double depth_tie_tol = 1e-9);

struct ImgmaConfig {
  double depth_tie_tol = 1e-9;
  int threads = 1;
};

struct ImgmaResult {
  VisibilityTable visibility;
  std::vector<SparsePixelCloud> pixel_clouds;  // one per camera, camera order
  std::vector<std::string> warnings;
  std::map<int, std::size_t> stage_counts;     // histogram over succeeding stages
};

ImgmaResult imgma_run(const std::vector<scene::CameraModel>& cameras,
                      const scene::TiledMesh& mesh,
                      const std::vector<index::FaceBvh>& tile_bvhs, const ImgmaConfig& cfg);

}  // namespace trifuse::imgma

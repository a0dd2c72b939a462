#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "geom.hpp"

namespace trifuse::scene {

constexpr int32_t kUnlabeled = -1;
// Pixels linked to an unlabeled face; distinct from "not linked" (-1).
constexpr int32_t kLinkedUnlabeled = -2;

struct FaceRef {
  int32_t tile_id = -1;
  int32_t face_id = -1;

  bool valid() const { return tile_id >= 0 && face_id >= 0; }
  bool operator==(const FaceRef&) const = default;
  bool operator<(const FaceRef& o) const {
    return tile_id != o.tile_id ? tile_id < o.tile_id : face_id < o.face_id;
  }
};

inline constexpr FaceRef kNoFace{-1, -1};

struct LabelColumn {
  std::string name;
  std::vector<int32_t> values;
};

struct FeatureColumn {
  std::string name;
  std::vector<double> values;
};

struct PointCloud {
  std::vector<geom::Vec3> positions;
  std::vector<LabelColumn> labels;      // int32 columns ("label", ...)
  std::vector<FeatureColumn> features;  // float64 columns, original order kept
  std::vector<FaceRef> assoc;           // empty, or one slot per point

  std::size_t size() const { return positions.size(); }

  const LabelColumn* find_label(const std::string& name) const;
  LabelColumn* find_label(const std::string& name);
  const FeatureColumn* find_feature(const std::string& name) const;
  FeatureColumn* find_feature(const std::string& name);
  LabelColumn& ensure_label(const std::string& name);
  FeatureColumn& ensure_feature(const std::string& name);
  void reset_assoc() { assoc.assign(positions.size(), kNoFace); }
};

struct MeshTile {
  int32_t tile_id = 0;
  std::vector<geom::Vec3> vertices;
  std::vector<std::array<int32_t, 3>> faces;  // CCW vertex index triples
  std::vector<LabelColumn> face_labels;
  std::vector<FeatureColumn> face_features;
  geom::Aabb mbb{};

  std::size_t face_count() const { return faces.size(); }
  void recompute_mbb() { mbb = geom::aabb_of(vertices); }

  const LabelColumn* find_label(const std::string& name) const;
  LabelColumn& ensure_label(const std::string& name);
  const FeatureColumn* find_feature(const std::string& name) const;
  FeatureColumn& ensure_feature(const std::string& name);
};

// Per-face derived data used by the association mechanisms.
struct FaceDerived {
  geom::Vec3 cog;          // centroid of the three vertices
  geom::Vec3 unit_normal;  // from CCW vertex order
  double area = 0.0;       // m^2
  double t_max = 0.0;      // max distance COG -> vertex, m
  bool degenerate = false;
};

struct TiledMesh {
  std::vector<MeshTile> tiles;                 // sorted by tile_id
  std::map<int32_t, std::string> tile_paths;   // manifest: tile_id -> source file

  std::size_t total_faces() const {
    std::size_t n = 0;
    for (const auto& t : tiles) n += t.face_count();
    return n;
  }
  const MeshTile* find_tile(int32_t tile_id) const;
  MeshTile* find_tile(int32_t tile_id);
};

std::vector<FaceDerived> compute_face_derived(const MeshTile& tile);

struct PixelProjection {
  double row = 0.0;  // down
  double col = 0.0;  // right
  double depth = 0.0;  // z in camera frame, m
};

// Central-perspective camera; x_cam = R * (X - C), pixel origin at the
// top-left corner of the top-left pixel, integer pixel (r,c) covers
// [r,r+1) x [c,c+1).
struct CameraModel {
  int32_t image_id = 0;
  int32_t width = 0;
  int32_t height = 0;
  double fx = 0.0, fy = 0.0;
  double cx = 0.0, cy = 0.0;
  double k1 = 0.0, k2 = 0.0;
  std::array<double, 9> rotation{1, 0, 0, 0, 1, 0, 0, 0, 1};  // world->camera, row-major
  geom::Vec3 center;  // projection center, world frame

  geom::Vec3 to_camera(const geom::Vec3& world) const;
  geom::Vec3 rotate_to_world(const geom::Vec3& cam_dir) const;

  // Collinearity projection with the optional two-parameter radial model.
  // Empty when the point is not in front of the camera (z <= 1e-9).
  std::optional<PixelProjection> project(const geom::Vec3& world) const;

  // Undistorted ray through the pixel center (col+0.5, row+0.5).
  // Throws when the pixel is outside the image.
  geom::Ray pixel_ray(int row, int col) const;

  // Undistorted ray through a continuous image coordinate (u right, v down);
  // (0,0) is the image corner, (width,height) the opposite corner.
  geom::Ray image_point_ray(double u, double v) const;

  // Max deviation of R^T R from identity.
  double orthonormality_error() const;
};

struct LabelClass {
  std::string name;
  std::array<int, 3> rgb{0, 0, 0};
};

struct LabelScheme {
  std::map<int32_t, LabelClass> classes;  // ids unique, non-negative

  // Stable fallback color for ids without an entry.
  std::array<int, 3> color_of(int32_t id) const;
};

}  // namespace trifuse::scene

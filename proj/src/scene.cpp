#include "scene.hpp"

#include <algorithm>
#include <cmath>

#include "error.hpp"

namespace trifuse::scene {

namespace {

template <typename Col>
auto* find_column(std::vector<Col>& cols, const std::string& name) {
  for (auto& c : cols) {
    if (c.name == name) return &c;
  }
  return static_cast<Col*>(nullptr);
}

template <typename Col>
const auto* find_column(const std::vector<Col>& cols, const std::string& name) {
  for (const auto& c : cols) {
    if (c.name == name) return &c;
  }
  return static_cast<const Col*>(nullptr);
}

template <typename Col, typename Value>
Col& ensure_column(std::vector<Col>& cols, const std::string& name, std::size_t n, Value fill) {
  if (auto* c = find_column(cols, name)) {
    c->values.assign(n, fill);
    return *c;
  }
  cols.push_back(Col{name, std::vector<Value>(n, fill)});
  return cols.back();
}

}  // namespace

const LabelColumn* PointCloud::find_label(const std::string& name) const {
  return find_column(labels, name);
}
LabelColumn* PointCloud::find_label(const std::string& name) { return find_column(labels, name); }
const FeatureColumn* PointCloud::find_feature(const std::string& name) const {
  return find_column(features, name);
}
FeatureColumn* PointCloud::find_feature(const std::string& name) {
  return find_column(features, name);
}
LabelColumn& PointCloud::ensure_label(const std::string& name) {
  return ensure_column<LabelColumn, int32_t>(labels, name, size(), kUnlabeled);
}
FeatureColumn& PointCloud::ensure_feature(const std::string& name) {
  return ensure_column<FeatureColumn, double>(features, name, size(), 0.0);
}

const LabelColumn* MeshTile::find_label(const std::string& name) const {
  return find_column(face_labels, name);
}
LabelColumn& MeshTile::ensure_label(const std::string& name) {
  return ensure_column<LabelColumn, int32_t>(face_labels, name, face_count(), kUnlabeled);
}
const FeatureColumn* MeshTile::find_feature(const std::string& name) const {
  return find_column(face_features, name);
}
FeatureColumn& MeshTile::ensure_feature(const std::string& name) {
  return ensure_column<FeatureColumn, double>(face_features, name, face_count(), 0.0);
}

const MeshTile* TiledMesh::find_tile(int32_t tile_id) const {
  for (const auto& t : tiles) {
    if (t.tile_id == tile_id) return &t;
  }
  return nullptr;
}
MeshTile* TiledMesh::find_tile(int32_t tile_id) {
  for (auto& t : tiles) {
    if (t.tile_id == tile_id) return &t;
  }
  return nullptr;
}

std::vector<FaceDerived> compute_face_derived(const MeshTile& tile) {
  std::vector<FaceDerived> out(tile.faces.size());
  for (std::size_t f = 0; f < tile.faces.size(); ++f) {
    const auto& idx = tile.faces[f];
    const geom::Vec3& a = tile.vertices[idx[0]];
    const geom::Vec3& b = tile.vertices[idx[1]];
    const geom::Vec3& c = tile.vertices[idx[2]];
    FaceDerived d;
    d.cog = (a + b + c) / 3.0;
    const geom::Vec3 n = geom::cross(b - a, c - a);
    const double n2 = geom::norm(n);
    d.area = 0.5 * n2;
    if (d.area < geom::kDegenerateArea) {
      d.degenerate = true;
      d.unit_normal = {0.0, 0.0, 0.0};
    } else {
      d.unit_normal = n / n2;
    }
    d.t_max = std::max({geom::norm(a - d.cog), geom::norm(b - d.cog), geom::norm(c - d.cog)});
    out[f] = d;
  }
  return out;
}

geom::Vec3 CameraModel::to_camera(const geom::Vec3& world) const {
  const geom::Vec3 v = world - center;
  const auto& r = rotation;
  return {r[0] * v.x + r[1] * v.y + r[2] * v.z, r[3] * v.x + r[4] * v.y + r[5] * v.z,
          r[6] * v.x + r[7] * v.y + r[8] * v.z};
}

geom::Vec3 CameraModel::rotate_to_world(const geom::Vec3& d) const {
  const auto& r = rotation;  // R^T d
  return {r[0] * d.x + r[3] * d.y + r[6] * d.z, r[1] * d.x + r[4] * d.y + r[7] * d.z,
          r[2] * d.x + r[5] * d.y + r[8] * d.z};
}

std::optional<PixelProjection> CameraModel::project(const geom::Vec3& world) const {
  const geom::Vec3 cam = to_camera(world);
  if (cam.z <= 1e-9) return std::nullopt;
  double xn = cam.x / cam.z;
  double yn = cam.y / cam.z;
  if (k1 != 0.0 || k2 != 0.0) {
    const double r2 = xn * xn + yn * yn;
    const double factor = 1.0 + r2 * (k1 + k2 * r2);
    xn *= factor;
    yn *= factor;
  }
  return PixelProjection{cy + fy * yn, cx + fx * xn, cam.z};
}

geom::Ray CameraModel::pixel_ray(int row, int col) const {
  if (row < 0 || row >= height || col < 0 || col >= width) {
    throw_input("pixel_ray: pixel outside image bounds");
  }
  return image_point_ray(col + 0.5, row + 0.5);
}

geom::Ray CameraModel::image_point_ray(double u, double v) const {
  const geom::Vec3 dir_cam{(u - cx) / fx, (v - cy) / fy, 1.0};
  return geom::Ray{center, geom::normalized(rotate_to_world(dir_cam))};
}

double CameraModel::orthonormality_error() const {
  const auto& r = rotation;
  double worst = 0.0;
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      double s = 0.0;
      for (int k = 0; k < 3; ++k) s += r[k * 3 + i] * r[k * 3 + j];
      worst = std::max(worst, std::abs(s - (i == j ? 1.0 : 0.0)));
    }
  }
  return worst;
}

std::array<int, 3> LabelScheme::color_of(int32_t id) const {
  auto it = classes.find(id);
  if (it != classes.end()) return it->second.rgb;
  // Deterministic palette for ids the scheme does not name.
  const uint32_t h = static_cast<uint32_t>(id) * 2654435761u;
  return {static_cast<int>(64 + (h & 0x7F)), static_cast<int>(64 + ((h >> 8) & 0x7F)),
          static_cast<int>(64 + ((h >> 16) & 0x7F))};
}

}  // namespace trifuse::scene

#include "synthkit.hpp"

#include <algorithm>
#include <cmath>

#include "error.hpp"

namespace trifuse::synthkit {

Template parse_template(const std::string& name) {
  if (name == "plane") return Template::Plane;
  if (name == "cube") return Template::Cube;
  if (name == "rooftwoplane") return Template::RoofTwoPlane;
  if (name == "town") return Template::Town;
  throw_input("unknown scene template '" + name + "'");
}

std::string template_name(Template t) {
  switch (t) {
    case Template::Plane: return "plane";
    case Template::Cube: return "cube";
    case Template::RoofTwoPlane: return "rooftwoplane";
    case Template::Town: return "town";
  }
  return "?";
}

double Rng::normal(double sigma) {
  // Box-Muller on the raw generator keeps runs portable across libraries.
  double u1 = uniform();
  while (u1 <= 0.0) u1 = uniform();
  const double u2 = uniform();
  return sigma * std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * 3.14159265358979323846 * u2);
}

scene::CameraModel make_nadir_camera(int32_t image_id, const geom::Vec3& position, int width,
                                     int height, double focal) {
  scene::CameraModel cam;
  cam.image_id = image_id;
  cam.width = width;
  cam.height = height;
  cam.fx = cam.fy = focal;
  cam.cx = width / 2.0;
  cam.cy = height / 2.0;
  cam.center = position;
  // Looking straight down: x_cam = x_w, y_cam = -y_w, z_cam = -z_w.
  cam.rotation = {1, 0, 0, 0, -1, 0, 0, 0, -1};
  return cam;
}

scene::CameraModel make_lookat_camera(int32_t image_id, const geom::Vec3& position,
                                      const geom::Vec3& target, int width, int height,
                                      double focal) {
  scene::CameraModel cam;
  cam.image_id = image_id;
  cam.width = width;
  cam.height = height;
  cam.fx = cam.fy = focal;
  cam.cx = width / 2.0;
  cam.cy = height / 2.0;
  cam.center = position;

  const geom::Vec3 z = geom::normalized(target - position);
  const geom::Vec3 world_down{0.0, 0.0, -1.0};
  geom::Vec3 y = world_down - z * geom::dot(world_down, z);
  if (geom::norm(y) < 1e-9) y = {0.0, -1.0, 0.0};  // nadir/zenith view
  y = geom::normalized(y);
  const geom::Vec3 x = geom::cross(y, z);
  cam.rotation = {x.x, x.y, x.z, y.x, y.y, y.z, z.x, z.y, z.z};
  return cam;
}

namespace {

struct TileBuilder {
  scene::MeshTile tile;
  std::vector<int32_t> face_classes;

  int32_t add_vertex(const geom::Vec3& v) {
    // Dedupe exact duplicates; templates share vertices along seams.
    for (std::size_t i = 0; i < tile.vertices.size(); ++i) {
      if (tile.vertices[i] == v) return static_cast<int32_t>(i);
    }
    tile.vertices.push_back(v);
    return static_cast<int32_t>(tile.vertices.size() - 1);
  }

  void add_face(const geom::Vec3& a, const geom::Vec3& b, const geom::Vec3& c, int32_t cls) {
    tile.faces.push_back({add_vertex(a), add_vertex(b), add_vertex(c)});
    face_classes.push_back(cls);
  }

  // Axis-aligned quad split into two CCW triangles with normal toward `out`.
  void add_quad(const geom::Vec3& a, const geom::Vec3& b, const geom::Vec3& c,
                const geom::Vec3& d, const geom::Vec3& out, int32_t cls) {
    const geom::Vec3 n = geom::cross(b - a, c - a);
    if (geom::dot(n, out) >= 0.0) {
      add_face(a, b, c, cls);
      add_face(a, c, d, cls);
    } else {
      add_face(a, c, b, cls);
      add_face(a, d, c, cls);
    }
  }

  scene::MeshTile finish(int32_t tile_id) {
    tile.tile_id = tile_id;
    auto& col = tile.ensure_label("label");
    col.values.assign(face_classes.begin(), face_classes.end());
    tile.recompute_mbb();
    return std::move(tile);
  }
};

struct Proto {
  // One builder per tile region.
  std::vector<TileBuilder> builders;
  scene::LabelScheme scheme;
  std::vector<scene::CameraModel> cameras;
};

void add_box_walls_and_top(TileBuilder& b, double x0, double y0, double x1, double y1, double z0,
                           double z1, int32_t wall_cls, int32_t top_cls) {
  const geom::Vec3 p000{x0, y0, z0}, p100{x1, y0, z0}, p010{x0, y1, z0}, p110{x1, y1, z0};
  const geom::Vec3 p001{x0, y0, z1}, p101{x1, y0, z1}, p011{x0, y1, z1}, p111{x1, y1, z1};
  b.add_quad(p000, p100, p101, p001, {0, -1, 0}, wall_cls);
  b.add_quad(p110, p010, p011, p111, {0, 1, 0}, wall_cls);
  b.add_quad(p010, p000, p001, p011, {-1, 0, 0}, wall_cls);
  b.add_quad(p100, p110, p111, p101, {1, 0, 0}, wall_cls);
  b.add_quad(p001, p101, p111, p011, {0, 0, 1}, top_cls);
}

void add_gable_house(TileBuilder& b, double x0, double y0, double x1, double y1, double wall_h,
                     double ridge_h, int32_t wall_cls, int32_t roof_cls) {
  const double xm = 0.5 * (x0 + x1);
  // Walls along the eaves.
  b.add_quad({x0, y0, 0}, {x0, y1, 0}, {x0, y1, wall_h}, {x0, y0, wall_h}, {-1, 0, 0}, wall_cls);
  b.add_quad({x1, y0, 0}, {x1, y1, 0}, {x1, y1, wall_h}, {x1, y0, wall_h}, {1, 0, 0}, wall_cls);
  // Gable ends: wall rectangle plus top triangle.
  b.add_quad({x0, y0, 0}, {x1, y0, 0}, {x1, y0, wall_h}, {x0, y0, wall_h}, {0, -1, 0}, wall_cls);
  b.add_quad({x0, y1, 0}, {x1, y1, 0}, {x1, y1, wall_h}, {x0, y1, wall_h}, {0, 1, 0}, wall_cls);
  b.add_face({x0, y0, wall_h}, {xm, y0, ridge_h}, {x1, y0, wall_h}, wall_cls);
  b.add_face({x0, y1, wall_h}, {x1, y1, wall_h}, {xm, y1, ridge_h}, wall_cls);
  // Roof slopes.
  b.add_quad({x0, y0, wall_h}, {x0, y1, wall_h}, {xm, y1, ridge_h}, {xm, y0, ridge_h},
             {-1, 0, 1}, roof_cls);
  b.add_quad({xm, y0, ridge_h}, {xm, y1, ridge_h}, {x1, y1, wall_h}, {x1, y0, wall_h},
             {1, 0, 1}, roof_cls);
}

Proto build_plane(const SceneSpec& spec) {
  Proto proto;
  const double e = spec.extent;
  const int n = std::max(1, spec.subdiv);
  const int tile_grid = n >= 2 ? 2 : 1;
  proto.builders.resize(static_cast<std::size_t>(tile_grid) * tile_grid);
  const double cell = e / n;
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < n; ++i) {
      const double x0 = i * cell, x1 = (i + 1) * cell;
      const double y0 = j * cell, y1 = (j + 1) * cell;
      const int ti = std::min(tile_grid - 1, i * tile_grid / n);
      const int tj = std::min(tile_grid - 1, j * tile_grid / n);
      proto.builders[tj * tile_grid + ti].add_quad({x0, y0, 0}, {x1, y0, 0}, {x1, y1, 0},
                                                   {x0, y1, 0}, {0, 0, 1}, 1);
    }
  }
  proto.scheme.classes[1] = {"ground", {127, 127, 127}};
  if (spec.with_cameras) {
    proto.cameras.push_back(make_nadir_camera(1, {e / 2, e / 2, e}, 64, 48, 40.0));
  }
  return proto;
}

Proto build_cube(const SceneSpec& spec) {
  Proto proto;
  const double s = spec.extent;
  proto.builders.resize(2);
  // All six cube faces, including the bottom; triangles split between two
  // tiles by centroid height.
  TileBuilder all;
  const geom::Vec3 p000{0, 0, 0}, p100{s, 0, 0}, p010{0, s, 0}, p110{s, s, 0};
  const geom::Vec3 p001{0, 0, s}, p101{s, 0, s}, p011{0, s, s}, p111{s, s, s};
  all.add_quad(p000, p010, p110, p100, {0, 0, -1}, 0);  // bottom
  all.add_quad(p000, p100, p101, p001, {0, -1, 0}, 1);
  all.add_quad(p110, p010, p011, p111, {0, 1, 0}, 1);
  all.add_quad(p010, p000, p001, p011, {-1, 0, 0}, 1);
  all.add_quad(p100, p110, p111, p101, {1, 0, 0}, 1);
  all.add_quad(p001, p101, p111, p011, {0, 0, 1}, 2);   // top
  for (std::size_t f = 0; f < all.tile.faces.size(); ++f) {
    const auto& tri = all.tile.faces[f];
    const geom::Vec3 cog = (all.tile.vertices[tri[0]] + all.tile.vertices[tri[1]] +
                            all.tile.vertices[tri[2]]) /
                           3.0;
    const int which = cog.z < s / 2 ? 0 : 1;
    proto.builders[which].add_face(all.tile.vertices[tri[0]], all.tile.vertices[tri[1]],
                                   all.tile.vertices[tri[2]], all.face_classes[f]);
  }
  proto.scheme.classes[0] = {"bottom", {90, 60, 30}};
  proto.scheme.classes[1] = {"facade", {255, 255, 255}};
  proto.scheme.classes[2] = {"roof", {255, 0, 0}};
  if (spec.with_cameras) {
    proto.cameras.push_back(make_nadir_camera(1, {s / 2, s / 2, 3 * s}, 64, 48, 40.0));
    proto.cameras.push_back(
        make_lookat_camera(2, {-1.5 * s, -1.5 * s, 3 * s}, {s / 2, s / 2, s / 2}, 64, 48, 60.0));
  }
  return proto;
}

Proto build_roof(const SceneSpec& spec) {
  Proto proto;
  const double e = spec.extent;
  const double h = e / 2;  // 45 degree slopes
  proto.builders.resize(1);
  TileBuilder& b = proto.builders[0];
  const geom::Vec3 v0{0, 0, 0}, v1{0, e, 0}, v2{e / 2, 0, h}, v3{e / 2, e, h}, v4{e, 0, 0},
      v5{e, e, 0};
  b.add_face(v0, v3, v1, 2);  // west slope
  b.add_face(v0, v2, v3, 2);
  b.add_face(v2, v5, v3, 3);  // east slope
  b.add_face(v2, v4, v5, 3);
  proto.scheme.classes[2] = {"roof_west", {255, 0, 0}};
  proto.scheme.classes[3] = {"roof_east", {255, 140, 0}};
  if (spec.with_cameras) {
    proto.cameras.push_back(make_nadir_camera(1, {e / 2, e / 2, 2 * e}, 64, 48, 40.0));
    proto.cameras.push_back(
        make_lookat_camera(2, {-e, e / 2, 2 * e}, {e / 2, e / 2, h / 2}, 64, 48, 60.0));
  }
  return proto;
}

Proto build_town(const SceneSpec& spec) {
  Proto proto;
  const double e = spec.extent;
  proto.builders.resize(4);  // 2x2 tile grid by footprint
  auto builder_for = [&](const geom::Vec3& cog) -> TileBuilder& {
    const int ti = cog.x < e / 2 ? 0 : 1;
    const int tj = cog.y < e / 2 ? 0 : 1;
    return proto.builders[tj * 2 + ti];
  };
  auto add_tri = [&](const geom::Vec3& a, const geom::Vec3& b, const geom::Vec3& c, int32_t cls) {
    builder_for((a + b + c) / 3.0).add_face(a, b, c, cls);
  };

  // Ground: 4x4 cells.
  const int n = 4;
  const double cell = e / n;
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < n; ++i) {
      const double x0 = i * cell, x1 = (i + 1) * cell;
      const double y0 = j * cell, y1 = (j + 1) * cell;
      add_tri({x0, y0, 0}, {x1, y0, 0}, {x1, y1, 0}, 0);
      add_tri({x0, y0, 0}, {x1, y1, 0}, {x0, y1, 0}, 0);
    }
  }

  // One flat-roof block and one gable house; both span tile borders lightly.
  TileBuilder block;
  add_box_walls_and_top(block, 0.15 * e, 0.15 * e, 0.35 * e, 0.35 * e, 0.0, 0.25 * e, 1, 2);
  for (std::size_t f = 0; f < block.tile.faces.size(); ++f) {
    const auto& tri = block.tile.faces[f];
    add_tri(block.tile.vertices[tri[0]], block.tile.vertices[tri[1]],
            block.tile.vertices[tri[2]], block.face_classes[f]);
  }
  TileBuilder house;
  add_gable_house(house, 0.55 * e, 0.55 * e, 0.85 * e, 0.8 * e, 0.15 * e, 0.3 * e, 1, 2);
  for (std::size_t f = 0; f < house.tile.faces.size(); ++f) {
    const auto& tri = house.tile.faces[f];
    add_tri(house.tile.vertices[tri[0]], house.tile.vertices[tri[1]],
            house.tile.vertices[tri[2]], house.face_classes[f]);
  }

  proto.scheme.classes[0] = {"ground", {127, 127, 127}};
  proto.scheme.classes[1] = {"facade", {255, 255, 255}};
  proto.scheme.classes[2] = {"roof", {255, 0, 0}};
  if (spec.with_cameras) {
    proto.cameras.push_back(make_nadir_camera(1, {e / 2, e / 2, 1.5 * e}, 64, 48, 40.0));
    proto.cameras.push_back(
        make_lookat_camera(2, {-0.8 * e, e / 2, 1.2 * e}, {e / 2, e / 2, 0.0}, 64, 48, 60.0));
    proto.cameras.push_back(
        make_lookat_camera(3, {e / 2, 1.8 * e, 1.4 * e}, {e / 2, e / 2, 0.0}, 64, 48, 60.0));
  }
  return proto;
}

}  // namespace

SyntheticScene generate(const SceneSpec& spec) {
  if (spec.extent <= 0.0) throw_input("scene spec: extent must be > 0");
  if (spec.density < 0.0) throw_input("scene spec: density must be >= 0");
  if (spec.noise_sigma < 0.0) throw_input("scene spec: noise sigma must be >= 0");

  Proto proto;
  switch (spec.scene_template) {
    case Template::Plane: proto = build_plane(spec); break;
    case Template::Cube: proto = build_cube(spec); break;
    case Template::RoofTwoPlane: proto = build_roof(spec); break;
    case Template::Town: proto = build_town(spec); break;
  }

  SyntheticScene scene_out;
  scene_out.scheme = proto.scheme;
  scene_out.cameras = proto.cameras;
  int32_t tile_id = 0;
  for (auto& b : proto.builders) {
    if (b.tile.faces.empty()) continue;
    scene_out.mesh.tiles.push_back(b.finish(tile_id++));
  }

  Rng rng(spec.seed);
  scene_out.cloud.ensure_label("label");
  scene_out.cloud.ensure_label("gt_tile");
  scene_out.cloud.ensure_label("gt_face");
  auto& labels = *scene_out.cloud.find_label("label");
  auto& gt_tile_col = *scene_out.cloud.find_label("gt_tile");
  auto& gt_face_col = *scene_out.cloud.find_label("gt_face");

  for (const auto& tile : scene_out.mesh.tiles) {
    const auto derived = scene::compute_face_derived(tile);
    const auto* cls = tile.find_label("label");
    for (std::size_t f = 0; f < tile.face_count(); ++f) {
      const auto& tri = tile.faces[f];
      const geom::Vec3& a = tile.vertices[tri[0]];
      const geom::Vec3& b = tile.vertices[tri[1]];
      const geom::Vec3& c = tile.vertices[tri[2]];
      const double expected = spec.density * derived[f].area;
      std::size_t count = static_cast<std::size_t>(std::floor(expected));
      if (rng.uniform() < expected - std::floor(expected)) ++count;
      for (std::size_t k = 0; k < count; ++k) {
        double u = rng.uniform();
        double v = rng.uniform();
        if (u + v > 1.0) {
          u = 1.0 - u;
          v = 1.0 - v;
        }
        geom::Vec3 p = a + (b - a) * u + (c - a) * v;
        if (spec.noise_sigma > 0.0) {
          p += derived[f].unit_normal * rng.normal(spec.noise_sigma);
        }
        scene_out.cloud.positions.push_back(p + spec.shift);
        labels.values.push_back(cls->values[f]);
        gt_tile_col.values.push_back(tile.tile_id);
        gt_face_col.values.push_back(static_cast<int32_t>(f));
        scene_out.gt_face.push_back(scene::FaceRef{tile.tile_id, static_cast<int32_t>(f)});
      }
    }
  }

  if (spec.scene_template == Template::RoofTwoPlane) {
    pcma::ThresholdSchedule schedule;
    schedule.levels = {{0.05, 0.05}, {0.10, 0.10}, {0.15, 0.15}};
    append_dead_zone_points(scene_out, spec, schedule);
  }
  return scene_out;
}

void append_dead_zone_points(SyntheticScene& scene_out, const SceneSpec& spec,
                             const pcma::ThresholdSchedule& schedule) {
  if (spec.scene_template != Template::RoofTwoPlane) {
    throw_input("dead zone points require the rooftwoplane template");
  }
  const double e = spec.extent;
  const double h = e / 2;
  const double theta1 = schedule.levels.front().theta_plus;
  const double theta_max = schedule.theta_max();
  const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
  const geom::Vec3 west_normal{-inv_sqrt2, 0.0, inv_sqrt2};

  auto* labels = scene_out.cloud.find_label("label");
  auto* gt_tile_col = scene_out.cloud.find_label("gt_tile");
  auto* gt_face_col = scene_out.cloud.find_label("gt_face");

  auto push = [&](const geom::Vec3& p, int32_t cls, scene::FaceRef gt, const std::string& case_id,
                  DeadZoneCase::Expected expected) {
    const uint32_t idx = static_cast<uint32_t>(scene_out.cloud.positions.size());
    scene_out.cloud.positions.push_back(p + spec.shift);
    labels->values.push_back(cls);
    gt_tile_col->values.push_back(gt.tile_id);
    gt_face_col->values.push_back(gt.face_id);
    scene_out.gt_face.push_back(gt);
    scene_out.dead_zone_cases.push_back({idx, case_id, expected});
  };

  // Surface point on the west slope (z == x for x <= e/2); the quad diagonal
  // runs from (0,0) to (e/2,e), so (e/4, e/4) falls into face 1.
  const geom::Vec3 base1{e / 4, e / 4, e / 4};

  // Supports: one on-surface point per face, linked at level 1.
  push(base1, 2, {0, 1}, "S1", DeadZoneCase::Expected::Associated);
  push({e / 4, 3 * e / 4, e / 4}, 2, {0, 0}, "S0", DeadZoneCase::Expected::Associated);
  push({3 * e / 4, e / 4, e / 4}, 3, {0, 3}, "S3", DeadZoneCase::Expected::Associated);
  push({3 * e / 4, 3 * e / 4, e / 4}, 3, {0, 2}, "S2", DeadZoneCase::Expected::Associated);

  // A1: beyond every threshold along the normal.
  push(base1 + west_normal * (1.5 * theta_max), 2, scene::kNoFace, "A1",
       DeadZoneCase::Expected::NotAssociated);
  // A2: within a later band, but the face already linked at level 1.
  push(base1 + west_normal * (0.5 * (theta1 + schedule.levels[1].theta_plus)), 2, scene::kNoFace,
       "A2", DeadZoneCase::Expected::NotAssociated);
  // B1/B2: above the ridge, inside the wedge both prisms miss.
  push({e / 2, e / 2, h + 0.5 * theta1}, 2, scene::kNoFace, "B1",
       DeadZoneCase::Expected::NotAssociated);
  push({e / 2, 0.4 * e, h + theta_max}, 2, scene::kNoFace, "B2",
       DeadZoneCase::Expected::NotAssociated);
  // C1: exactly on a ridge vertex (faces 0, 1, 2 share it; face 0 wins under
  // the include policy).
  push({e / 2, e, h}, 2, {0, 0}, "C1", DeadZoneCase::Expected::PolicyDependent);
  // C2: on the interior of the ridge edge shared by faces 1 and 2.
  push({e / 2, e / 2, h}, 2, {0, 1}, "C2", DeadZoneCase::Expected::PolicyDependent);
}

}  // namespace trifuse::synthkit

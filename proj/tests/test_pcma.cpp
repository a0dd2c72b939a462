#include <doctest.h>

#include <cmath>
#include <random>

#include "error.hpp"
#include "oracles.hpp"
#include "pcma.hpp"
#include "scene.hpp"
#include "synthkit.hpp"

using namespace trifuse;
using geom::Vec3;

namespace {

pcma::PcmaConfig h3d_config(pcma::BoundaryPolicy policy = pcma::BoundaryPolicy::Exclude) {
  pcma::PcmaConfig cfg;
  cfg.schedule.levels = {{0.05, 0.05}, {0.10, 0.10}, {0.15, 0.15}};
  cfg.boundary_policy = policy;
  return cfg;
}

std::vector<std::vector<scene::FaceDerived>> derive_all(const scene::TiledMesh& mesh) {
  std::vector<std::vector<scene::FaceDerived>> out;
  for (const auto& tile : mesh.tiles) out.push_back(scene::compute_face_derived(tile));
  return out;
}

void check_equals_oracle(const scene::TiledMesh& mesh, const scene::PointCloud& cloud,
                         const pcma::PcmaConfig& cfg, int threads = 2) {
  const auto derived = derive_all(mesh);
  const pcma::PcmaResult mine = pcma::pcma_run(mesh, derived, cloud, cfg, threads);
  const oracles::PcmaOracleResult theirs = oracles::pcma_brute_force(mesh, cloud, cfg);

  REQUIRE(mine.point_face.size() == theirs.point_face.size());
  for (std::size_t p = 0; p < mine.point_face.size(); ++p) {
    CHECK(mine.point_face[p] == theirs.point_face[p]);
  }
  REQUIRE(mine.faces.size() == theirs.faces.size());
  for (std::size_t t = 0; t < mine.faces.size(); ++t) {
    REQUIRE(mine.faces[t].size() == theirs.faces[t].size());
    for (std::size_t f = 0; f < mine.faces[t].size(); ++f) {
      CHECK(mine.faces[t][f].level == theirs.faces[t][f].level);
      CHECK(mine.faces[t][f].points == theirs.faces[t][f].points);
    }
  }
}

}  // namespace

TEST_CASE("association_radius") {
  CHECK(pcma::association_radius(3.0, 4.0) == doctest::Approx(5.0).epsilon(1e-15));
  CHECK(pcma::association_radius(7.5, 0.0) == 7.5);
  CHECK(pcma::association_radius(0.4, 0.3) == doctest::Approx(0.5).epsilon(1e-15));

  // r >= max(t_max, theta) so neither the face nor the band is prefiltered.
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> d(0.0, 100.0);
  for (int i = 0; i < 10000; ++i) {
    const double t = d(rng), th = d(rng);
    CHECK(pcma::association_radius(t, th) >= std::max(t, th));
  }
}

TEST_CASE("adaptive_threshold_filter early stopping") {
  pcma::ThresholdSchedule schedule;
  schedule.levels = {{0.05, 0.05}, {0.10, 0.10}, {0.15, 0.15}};

  {
    const auto [kept, level] = pcma::adaptive_threshold_filter({0.03, 0.12}, schedule);
    CHECK(level == 1);
    CHECK(kept == std::vector<std::size_t>{0});
  }
  {
    // 0.12 exceeds the level-2 band; only -0.08 is linked there.
    const auto [kept, level] = pcma::adaptive_threshold_filter({0.12, -0.08}, schedule);
    CHECK(level == 2);
    CHECK(kept == std::vector<std::size_t>{1});
  }
  {
    const auto [kept, level] = pcma::adaptive_threshold_filter({0.5}, schedule);
    CHECK(level == pcma::kNoLevel);
    CHECK(kept.empty());
  }
  {
    // Asymmetric bands filter by sign.
    pcma::ThresholdSchedule asym;
    asym.levels = {{0.01, 0.20}};
    const auto [kept, level] = pcma::adaptive_threshold_filter({0.15, -0.15}, asym);
    CHECK(level == 1);
    CHECK(kept == std::vector<std::size_t>{0});
  }
}

TEST_CASE("threshold schedule validation") {
  pcma::ThresholdSchedule empty;
  CHECK_THROWS_AS(empty.validate(), Error);
  pcma::ThresholdSchedule decreasing;
  decreasing.levels = {{0.10, 0.10}, {0.05, 0.05}};
  CHECK_THROWS_AS(decreasing.validate(), Error);
}

TEST_CASE("filter_out_of_face boundary policy") {
  scene::MeshTile tile;
  tile.vertices = {{0, 0, 0}, {1, 0, 0}, {1, 1, 0}, {0, 1, 0}};
  tile.faces = {{0, 1, 2}, {0, 2, 3}};
  const auto derived = scene::compute_face_derived(tile);

  scene::PointCloud cloud;
  cloud.positions = {
      {0.6, 0.3, 0.02},   // over face 0 interior
      {2.0, 2.0, 0.0},    // far outside
      {0.5, 0.5, 0.01},   // over the shared diagonal
  };
  const std::vector<uint32_t> candidates{0, 1, 2};

  const auto excl = pcma::filter_out_of_face(candidates, tile.vertices[0], tile.vertices[1],
                                             tile.vertices[2], derived[0].unit_normal,
                                             cloud.positions, pcma::BoundaryPolicy::Exclude, 1e-9);
  REQUIRE(excl.size() == 1);
  CHECK(excl[0].point == 0);
  CHECK(excl[0].signed_distance == doctest::Approx(0.02));

  const auto incl = pcma::filter_out_of_face(candidates, tile.vertices[0], tile.vertices[1],
                                             tile.vertices[2], derived[0].unit_normal,
                                             cloud.positions, pcma::BoundaryPolicy::Include, 1e-9);
  REQUIRE(incl.size() == 2);
  CHECK(incl[1].point == 2);
}

TEST_CASE("on-surface square scene associates everything at level 1") {
  scene::TiledMesh mesh;
  scene::MeshTile tile;
  tile.tile_id = 0;
  tile.vertices = {{0, 0, 0}, {1, 0, 0}, {1, 1, 0}, {0, 1, 0}};
  tile.faces = {{0, 1, 2}, {0, 2, 3}};
  tile.recompute_mbb();
  mesh.tiles.push_back(tile);

  scene::PointCloud cloud;
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> d(0.01, 0.99);
  for (int i = 0; i < 100; ++i) cloud.positions.push_back({d(rng), d(rng), 0.0});

  const auto derived = derive_all(mesh);
  const auto result = pcma::pcma_run(mesh, derived, cloud, h3d_config());
  CHECK(result.associated_points() == 100);
  for (std::size_t f = 0; f < 2; ++f) {
    if (!result.faces[0][f].points.empty()) CHECK(result.faces[0][f].level == 1);
  }
  // Each point went to the triangle containing it.
  for (std::size_t p = 0; p < cloud.size(); ++p) {
    const bool lower = cloud.positions[p].y < cloud.positions[p].x;  // below the diagonal
    CHECK(result.point_face[p].face_id == (lower ? 0 : 1));
  }
  check_equals_oracle(mesh, cloud, h3d_config());
}

TEST_CASE("lifted cloud lands on the level its offset requires") {
  synthkit::SceneSpec spec;
  spec.scene_template = synthkit::Template::Plane;
  spec.extent = 10.0;
  spec.density = 20.0;
  spec.shift = {0.0, 0.0, 0.12};
  spec.seed = 9;
  const auto scene_data = synthkit::generate(spec);

  const auto derived = derive_all(scene_data.mesh);
  const auto result = pcma::pcma_run(scene_data.mesh, derived, scene_data.cloud, h3d_config());
  CHECK(result.associated_points() == scene_data.cloud.size());
  for (const auto& per_tile : result.faces) {
    for (const auto& fl : per_tile) {
      if (!fl.points.empty()) CHECK(fl.level == 3);
    }
  }
}

TEST_CASE("dead zone above a roof ridge stays unassociated") {
  synthkit::SceneSpec spec;
  spec.scene_template = synthkit::Template::RoofTwoPlane;
  spec.extent = 10.0;
  spec.density = 10.0;
  spec.seed = 21;
  const auto scene_data = synthkit::generate(spec);

  const auto derived = derive_all(scene_data.mesh);
  const auto result =
      pcma::pcma_run(scene_data.mesh, derived, scene_data.cloud, h3d_config());
  for (const auto& c : scene_data.dead_zone_cases) {
    INFO("case ", c.case_id);
    if (c.expected == synthkit::DeadZoneCase::Expected::NotAssociated) {
      CHECK(result.point_face[c.point_index] == scene::kNoFace);
    } else if (c.expected == synthkit::DeadZoneCase::Expected::Associated) {
      CHECK(result.point_face[c.point_index].valid());
    }
  }
}

TEST_CASE("pcma_run equals the brute-force associator on synthetic scenes") {
  // Varied templates, noise, shifts and schedules.
  struct Case {
    synthkit::Template tmpl;
    double sigma;
    Vec3 shift;
    pcma::BoundaryPolicy policy;
  };
  const Case cases[] = {
      {synthkit::Template::Plane, 0.0, {0, 0, 0}, pcma::BoundaryPolicy::Exclude},
      {synthkit::Template::Plane, 0.04, {0, 0, 0}, pcma::BoundaryPolicy::Exclude},
      {synthkit::Template::Cube, 0.02, {0.02, -0.01, 0.03}, pcma::BoundaryPolicy::Exclude},
      {synthkit::Template::RoofTwoPlane, 0.03, {0, 0, 0}, pcma::BoundaryPolicy::Include},
      {synthkit::Template::Town, 0.05, {0.05, 0.02, -0.04}, pcma::BoundaryPolicy::Exclude},
  };
  uint64_t seed = 100;
  for (const auto& c : cases) {
    synthkit::SceneSpec spec;
    spec.scene_template = c.tmpl;
    spec.extent = 10.0;
    spec.density = 8.0;
    spec.noise_sigma = c.sigma;
    spec.shift = c.shift;
    spec.seed = seed++;
    spec.with_cameras = false;
    const auto scene_data = synthkit::generate(spec);
    check_equals_oracle(scene_data.mesh, scene_data.cloud, h3d_config(c.policy));
  }
}

TEST_CASE("partition invariant: face lists are disjoint and cover associated points") {
  synthkit::SceneSpec spec;
  spec.scene_template = synthkit::Template::Town;
  spec.extent = 10.0;
  spec.density = 10.0;
  spec.noise_sigma = 0.03;
  spec.seed = 31;
  spec.with_cameras = false;
  const auto scene_data = synthkit::generate(spec);
  const auto derived = derive_all(scene_data.mesh);
  const auto result = pcma::pcma_run(scene_data.mesh, derived, scene_data.cloud, h3d_config());

  std::vector<int> owner_count(scene_data.cloud.size(), 0);
  for (const auto& per_tile : result.faces) {
    for (const auto& fl : per_tile) {
      for (uint32_t p : fl.points) ++owner_count[p];
    }
  }
  std::size_t covered = 0;
  for (std::size_t p = 0; p < owner_count.size(); ++p) {
    CHECK(owner_count[p] <= 1);
    CHECK((owner_count[p] == 1) == result.point_face[p].valid());
    if (owner_count[p]) ++covered;
  }
  CHECK(covered == result.associated_points());
}

TEST_CASE("monotonicity: widening every threshold keeps existing links") {
  synthkit::SceneSpec spec;
  spec.scene_template = synthkit::Template::RoofTwoPlane;
  spec.extent = 10.0;
  spec.density = 15.0;
  spec.noise_sigma = 0.05;
  spec.seed = 77;
  spec.with_cameras = false;
  const auto scene_data = synthkit::generate(spec);
  const auto derived = derive_all(scene_data.mesh);

  pcma::PcmaConfig narrow = h3d_config();
  pcma::PcmaConfig wide = narrow;
  for (auto& level : wide.schedule.levels) {
    level.theta_minus *= 2.0;
    level.theta_plus *= 2.0;
  }
  const auto before = pcma::pcma_run(scene_data.mesh, derived, scene_data.cloud, narrow);
  const auto after = pcma::pcma_run(scene_data.mesh, derived, scene_data.cloud, wide);
  for (std::size_t p = 0; p < before.point_face.size(); ++p) {
    if (before.point_face[p].valid()) CHECK(after.point_face[p].valid());
  }
}

TEST_CASE("favoring near-surface points across competing faces") {
  synthkit::SceneSpec spec;
  spec.scene_template = synthkit::Template::Cube;
  spec.extent = 6.0;
  spec.density = 12.0;
  spec.noise_sigma = 0.04;
  spec.seed = 55;
  spec.with_cameras = false;
  const auto scene_data = synthkit::generate(spec);
  const auto derived = derive_all(scene_data.mesh);
  const pcma::PcmaConfig cfg = h3d_config();
  const auto result = pcma::pcma_run(scene_data.mesh, derived, scene_data.cloud, cfg);

  // For each associated point, no other face that kept it at its own level
  // may be strictly closer.
  for (std::size_t t = 0; t < scene_data.mesh.tiles.size(); ++t) {
    const auto& tile = scene_data.mesh.tiles[t];
    for (std::size_t f = 0; f < tile.face_count(); ++f) {
      if (result.faces[t][f].level == pcma::kNoLevel) continue;
      std::vector<pcma::PointLink> links;
      pcma::associate_face(tile, static_cast<int32_t>(f), derived[t][f],
                           index::PointKdTree(scene_data.cloud.positions), scene_data.cloud, cfg,
                           &links);
      for (const auto& link : links) {
        if (!result.point_face[link.point].valid()) continue;
        CHECK(std::abs(result.point_distance[link.point]) <=
              std::abs(link.signed_distance) + 1e-15);
      }
    }
  }
}

TEST_CASE("pcma_run rejects empty inputs") {
  scene::TiledMesh mesh;
  scene::MeshTile tile;
  tile.tile_id = 0;
  tile.vertices = {{0, 0, 0}, {1, 0, 0}, {0, 1, 0}};
  tile.faces = {{0, 1, 2}};
  tile.recompute_mbb();
  mesh.tiles.push_back(tile);
  const auto derived = derive_all(mesh);

  scene::PointCloud empty;
  CHECK_THROWS_AS(pcma::pcma_run(mesh, derived, empty, h3d_config()), Error);

  // Only degenerate faces: no valid targets.
  scene::TiledMesh slivers;
  scene::MeshTile sliver;
  sliver.tile_id = 0;
  sliver.vertices = {{0, 0, 0}, {1, 0, 0}, {2, 0, 0}};
  sliver.faces = {{0, 1, 2}};
  sliver.recompute_mbb();
  slivers.tiles.push_back(sliver);
  scene::PointCloud one;
  one.positions = {{0, 0, 0}};
  CHECK_THROWS_AS(pcma::pcma_run(slivers, derive_all(slivers), one, h3d_config()), Error);
}

#include <doctest.h>

#include <set>

#include "error.hpp"
#include "pcma.hpp"
#include "synthkit.hpp"

using namespace trifuse;

TEST_CASE("generation is reproducible for a fixed seed") {
  synthkit::SceneSpec spec;
  spec.scene_template = synthkit::Template::Town;
  spec.extent = 12.0;
  spec.density = 15.0;
  spec.noise_sigma = 0.02;
  spec.seed = 424242;
  const auto a = synthkit::generate(spec);
  const auto b = synthkit::generate(spec);
  REQUIRE(a.cloud.size() == b.cloud.size());
  for (std::size_t p = 0; p < a.cloud.size(); ++p) {
    CHECK(a.cloud.positions[p] == b.cloud.positions[p]);
  }
  CHECK(a.cloud.find_label("label")->values == b.cloud.find_label("label")->values);

  spec.seed = 424243;
  const auto c = synthkit::generate(spec);
  bool identical = a.cloud.size() == c.cloud.size();
  if (identical) {
    for (std::size_t p = 0; p < a.cloud.size(); ++p) {
      if (!(a.cloud.positions[p] == c.cloud.positions[p])) {
        identical = false;
        break;
      }
    }
  }
  CHECK(!identical);
}

TEST_CASE("templates produce the promised tiling") {
  synthkit::SceneSpec spec;
  spec.density = 1.0;
  spec.extent = 10.0;

  spec.scene_template = synthkit::Template::Town;
  CHECK(synthkit::generate(spec).mesh.tiles.size() >= 4);

  spec.scene_template = synthkit::Template::Cube;
  CHECK(synthkit::generate(spec).mesh.tiles.size() >= 2);

  spec.scene_template = synthkit::Template::Plane;
  spec.subdiv = 4;
  CHECK(synthkit::generate(spec).mesh.tiles.size() == 4);

  // Tile boxes hold all their vertices; ids are unique.
  spec.scene_template = synthkit::Template::Town;
  const auto town = synthkit::generate(spec);
  std::set<int32_t> ids;
  for (const auto& tile : town.mesh.tiles) {
    CHECK(ids.insert(tile.tile_id).second);
    for (const auto& v : tile.vertices) CHECK(tile.mbb.contains(v, 1e-12));
  }
}

TEST_CASE("ground-truth closure: on-surface generation is recovered exactly") {
  synthkit::SceneSpec spec;
  spec.scene_template = synthkit::Template::Town;
  spec.extent = 10.0;
  spec.density = 12.0;
  spec.seed = 99;
  spec.with_cameras = false;
  const auto scene_data = synthkit::generate(spec);

  std::vector<std::vector<scene::FaceDerived>> derived;
  for (const auto& tile : scene_data.mesh.tiles) {
    derived.push_back(scene::compute_face_derived(tile));
  }
  pcma::PcmaConfig cfg;
  cfg.schedule.levels = {{0.05, 0.05}, {0.10, 0.10}, {0.15, 0.15}};
  cfg.boundary_policy = pcma::BoundaryPolicy::Include;
  const auto assoc = pcma::pcma_run(scene_data.mesh, derived, scene_data.cloud, cfg);

  for (std::size_t p = 0; p < scene_data.cloud.size(); ++p) {
    CHECK(assoc.point_face[p] == scene_data.gt_face[p]);
  }
}

TEST_CASE("dead zone construction covers every taxonomy case") {
  synthkit::SceneSpec spec;
  spec.scene_template = synthkit::Template::RoofTwoPlane;
  spec.extent = 10.0;
  spec.density = 5.0;
  spec.seed = 1;
  const auto scene_data = synthkit::generate(spec);

  std::set<std::string> cases;
  for (const auto& c : scene_data.dead_zone_cases) cases.insert(c.case_id);
  for (const char* id : {"A1", "A2", "B1", "B2", "C1", "C2"}) {
    CHECK(cases.count(id) == 1);
  }

  // Policy toggles the C cases; A/B stay unlinked either way.
  std::vector<std::vector<scene::FaceDerived>> derived;
  for (const auto& tile : scene_data.mesh.tiles) {
    derived.push_back(scene::compute_face_derived(tile));
  }
  pcma::PcmaConfig cfg;
  cfg.schedule.levels = {{0.05, 0.05}, {0.10, 0.10}, {0.15, 0.15}};

  cfg.boundary_policy = pcma::BoundaryPolicy::Exclude;
  const auto excl = pcma::pcma_run(scene_data.mesh, derived, scene_data.cloud, cfg);
  cfg.boundary_policy = pcma::BoundaryPolicy::Include;
  const auto incl = pcma::pcma_run(scene_data.mesh, derived, scene_data.cloud, cfg);

  for (const auto& c : scene_data.dead_zone_cases) {
    INFO("case ", c.case_id);
    switch (c.expected) {
      case synthkit::DeadZoneCase::Expected::Associated:
        CHECK(excl.point_face[c.point_index].valid());
        CHECK(incl.point_face[c.point_index].valid());
        break;
      case synthkit::DeadZoneCase::Expected::NotAssociated:
        CHECK(!excl.point_face[c.point_index].valid());
        CHECK(!incl.point_face[c.point_index].valid());
        break;
      case synthkit::DeadZoneCase::Expected::PolicyDependent:
        CHECK(!excl.point_face[c.point_index].valid());
        CHECK(incl.point_face[c.point_index].valid());
        CHECK(incl.point_face[c.point_index] == scene_data.gt_face[c.point_index]);
        break;
    }
  }
}

TEST_CASE("invalid specs are rejected") {
  synthkit::SceneSpec spec;
  spec.extent = -1.0;
  CHECK_THROWS_AS(synthkit::generate(spec), Error);
  CHECK_THROWS_AS(synthkit::parse_template("nope"), Error);
}

TEST_CASE("cameras of every template build valid pyramids") {
  for (const auto tmpl : {synthkit::Template::Plane, synthkit::Template::Cube,
                          synthkit::Template::RoofTwoPlane, synthkit::Template::Town}) {
    synthkit::SceneSpec spec;
    spec.scene_template = tmpl;
    spec.extent = 10.0;
    spec.density = 0.0;
    const auto scene_data = synthkit::generate(spec);
    for (const auto& cam : scene_data.cameras) {
      CHECK(cam.orthonormality_error() < 1e-12);
    }
  }
}

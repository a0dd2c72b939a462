#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <random>

#include "error.hpp"
#include "io.hpp"
#include "synthkit.hpp"

using namespace trifuse;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir() {
  static int counter = 0;
  const fs::path dir = fs::temp_directory_path() / ("trifuse_io_" + std::to_string(counter++));
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(is), {});
}

scene::PointCloud random_cloud(std::size_t n, uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> d(-100.0, 100.0);
  std::uniform_int_distribution<int32_t> label(0, 9);
  scene::PointCloud cloud;
  for (std::size_t i = 0; i < n; ++i) cloud.positions.push_back({d(rng), d(rng), d(rng)});
  auto& labels = cloud.ensure_label("label");
  for (auto& v : labels.values) v = label(rng);
  auto& feat = cloud.ensure_feature("intensity");
  for (auto& v : feat.values) v = d(rng);
  cloud.assoc.assign(n, scene::kNoFace);
  for (std::size_t i = 0; i < n; i += 3) cloud.assoc[i] = {1, static_cast<int32_t>(i)};
  return cloud;
}

bool clouds_equal(const scene::PointCloud& a, const scene::PointCloud& b) {
  if (a.positions.size() != b.positions.size()) return false;
  for (std::size_t i = 0; i < a.positions.size(); ++i) {
    if (!(a.positions[i] == b.positions[i])) return false;
  }
  if (a.labels.size() != b.labels.size() || a.features.size() != b.features.size()) return false;
  for (std::size_t c = 0; c < a.labels.size(); ++c) {
    if (a.labels[c].name != b.labels[c].name || a.labels[c].values != b.labels[c].values) {
      return false;
    }
  }
  for (std::size_t c = 0; c < a.features.size(); ++c) {
    if (a.features[c].name != b.features[c].name || a.features[c].values != b.features[c].values) {
      return false;
    }
  }
  return a.assoc == b.assoc;
}

}  // namespace

TEST_CASE("PLY binary round trip is byte identical") {
  const fs::path dir = temp_dir();
  const scene::PointCloud cloud = random_cloud(1000, 7);
  const fs::path p1 = dir / "a.ply";
  const fs::path p2 = dir / "b.ply";
  io::write_point_cloud(p1, cloud);
  const scene::PointCloud reread = io::read_point_cloud(p1);
  io::write_point_cloud(p2, reread);
  CHECK(slurp(p1) == slurp(p2));
  CHECK(clouds_equal(cloud, reread));
}

TEST_CASE("ASCII and binary encodings load identically") {
  const fs::path dir = temp_dir();
  const scene::PointCloud cloud = random_cloud(500, 8);
  io::write_point_cloud(dir / "bin.ply", cloud, {true});
  io::write_point_cloud(dir / "asc.ply", cloud, {false});
  const auto a = io::read_point_cloud(dir / "bin.ply");
  const auto b = io::read_point_cloud(dir / "asc.ply");
  CHECK(clouds_equal(a, b));
}

TEST_CASE("PLY error cases") {
  const fs::path dir = temp_dir();
  {
    std::ofstream os(dir / "bad.ply");
    os << "not a ply\n";
  }
  CHECK_THROWS_AS(io::read_point_cloud(dir / "bad.ply"), Error);
  {
    std::ofstream os(dir / "short.ply");
    os << "ply\nformat ascii 1.0\nelement vertex 5\nproperty double x\nproperty double y\n"
          "property double z\nend_header\n0 0 0\n1 1 1\n";
  }
  CHECK_THROWS_AS(io::read_point_cloud(dir / "short.ply"), Error);
  {
    std::ofstream os(dir / "list.ply");
    os << "ply\nformat ascii 1.0\nelement vertex 1\nproperty list uchar int vertex_indices\n"
          "end_header\n";
  }
  CHECK_THROWS_AS(io::read_point_cloud(dir / "list.ply"), Error);
  CHECK_THROWS_AS(io::read_point_cloud(dir / "missing.ply"), Error);
}

TEST_CASE("cloud with every assoc -1 loads with empty associations kept as sentinels") {
  const fs::path dir = temp_dir();
  scene::PointCloud cloud;
  cloud.positions = {{0, 0, 0}, {1, 1, 1}};
  cloud.assoc.assign(2, scene::kNoFace);
  io::write_point_cloud(dir / "none.ply", cloud);
  const auto reread = io::read_point_cloud(dir / "none.ply");
  REQUIRE(reread.assoc.size() == 2);
  CHECK(reread.assoc[0] == scene::kNoFace);
  CHECK(reread.assoc[1] == scene::kNoFace);
}

TEST_CASE("mesh tiles round trip through OBJ + manifest + sidecars") {
  const fs::path dir = temp_dir();
  synthkit::SceneSpec spec;
  spec.scene_template = synthkit::Template::Town;
  spec.extent = 10.0;
  spec.density = 0.0;
  spec.seed = 5;
  spec.with_cameras = false;
  auto scene_data = synthkit::generate(spec);
  scene_data.mesh.tiles[0].ensure_feature("quality").values.assign(
      scene_data.mesh.tiles[0].face_count(), 0.5);

  io::write_mesh_tiles(dir / "manifest.txt", scene_data.mesh);
  const auto reread = io::read_mesh_tiles(dir / "manifest.txt");
  REQUIRE(reread.tiles.size() == scene_data.mesh.tiles.size());
  for (std::size_t t = 0; t < reread.tiles.size(); ++t) {
    const auto& a = scene_data.mesh.tiles[t];
    const auto& b = reread.tiles[t];
    CHECK(a.tile_id == b.tile_id);
    REQUIRE(a.vertices.size() == b.vertices.size());
    for (std::size_t v = 0; v < a.vertices.size(); ++v) CHECK(a.vertices[v] == b.vertices[v]);
    CHECK(a.faces == b.faces);
    CHECK(a.find_label("label")->values == b.find_label("label")->values);
  }
  CHECK(reread.tiles[0].find_feature("quality")->values[0] == 0.5);
}

TEST_CASE("mesh loader rejects quads, dangling indices and stale manifests") {
  const fs::path dir = temp_dir();
  {
    std::ofstream obj(dir / "tile_0.obj");
    obj << "v 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\nf 1 2 3 4\n";
    std::ofstream man(dir / "manifest.txt");
    man << "version 1\ntile 0 tile_0.obj 0 0 0 1 1 0\n";
  }
  CHECK_THROWS_WITH_AS(io::read_mesh_tiles(dir / "manifest.txt"),
                       doctest::Contains("non-triangle"), Error);
  {
    std::ofstream obj(dir / "tile_0.obj");
    obj << "v 0 0 0\nv 1 0 0\nf 1 2 7\n";
  }
  CHECK_THROWS_WITH_AS(io::read_mesh_tiles(dir / "manifest.txt"), doctest::Contains("dangling"),
                       Error);
  {
    std::ofstream obj(dir / "tile_0.obj");
    obj << "v 0 0 0\nv 1 0 0\nv 1 1 0\nf 1 2 3\n";
    std::ofstream man(dir / "manifest.txt");
    man << "version 1\ntile 0 tile_0.obj 0 0 0 5 5 5\n";  // wrong box
  }
  CHECK_THROWS_WITH_AS(io::read_mesh_tiles(dir / "manifest.txt"),
                       doctest::Contains("bounding box"), Error);
}

TEST_CASE("camera file round trip and validation") {
  const fs::path dir = temp_dir();
  std::vector<scene::CameraModel> cams;
  cams.push_back(synthkit::make_nadir_camera(1, {4, 5, 20}, 640, 480, 500.0));
  cams.push_back(synthkit::make_lookat_camera(2, {0, -10, 15}, {5, 5, 0}, 800, 600, 700.0));
  cams[1].k1 = 1e-4;
  io::write_cameras(dir / "cams.txt", cams);
  const auto reread = io::read_cameras(dir / "cams.txt");
  REQUIRE(reread.size() == 2);
  CHECK(reread[0].image_id == 1);
  CHECK(reread[1].k1 == 1e-4);
  for (int i = 0; i < 9; ++i) {
    CHECK(reread[1].rotation[i] == doctest::Approx(cams[1].rotation[i]).epsilon(1e-15));
  }

  // Identity camera line parses.
  {
    std::ofstream os(dir / "one.txt");
    os << "# comment\n";
    os << "7 100 100 100 100 50 50 0 0 1 0 0 0 1 0 0 0 1 0 0 0\n";
  }
  const auto one = io::read_cameras(dir / "one.txt");
  REQUIRE(one.size() == 1);
  CHECK(one[0].rotation[0] == 1.0);

  // Wrong field count.
  {
    std::ofstream os(dir / "short.txt");
    os << "7 100 100 100 100 50 50 0 0 1 0 0 0 1 0 0\n";
  }
  CHECK_THROWS_WITH_AS(io::read_cameras(dir / "short.txt"), doctest::Contains("21 fields"),
                       Error);

  // Non-orthonormal rotation (column-major mix-up style corruption).
  {
    std::ofstream os(dir / "bad.txt");
    os << "7 100 100 100 100 50 50 0 0 1 0.5 0 0 1 0 0 0 1 0 0 0\n";
  }
  CHECK_THROWS_WITH_AS(io::read_cameras(dir / "bad.txt"), doctest::Contains("orthonormal"),
                       Error);

  // Duplicate image ids.
  {
    std::ofstream os(dir / "dup.txt");
    os << "7 100 100 100 100 50 50 0 0 1 0 0 0 1 0 0 0 1 0 0 0\n";
    os << "7 100 100 100 100 50 50 0 0 1 0 0 0 1 0 0 0 1 0 0 0\n";
  }
  CHECK_THROWS_WITH_AS(io::read_cameras(dir / "dup.txt"), doctest::Contains("duplicate"),
                       Error);
}

TEST_CASE("SPXC round trip is byte identical and validates sortedness") {
  const fs::path dir = temp_dir();
  imgma::SparsePixelCloud cloud;
  cloud.image_id = 3;
  cloud.records = {{0, 1, 4.5, 0, 10}, {0, 2, 6.25, 1, 3}, {5, 0, 2.0, 0, 0}};
  cloud.labels.push_back({"label", {2, scene::kLinkedUnlabeled, 0}});
  cloud.features.push_back({"ndvi", {0.25, -0.5, 1.0}});

  const fs::path p1 = dir / "a.spxc";
  const fs::path p2 = dir / "b.spxc";
  io::write_spxc(p1, cloud);
  const auto reread = io::read_spxc(p1);
  io::write_spxc(p2, reread);
  CHECK(slurp(p1) == slurp(p2));
  CHECK(reread.image_id == 3);
  REQUIRE(reread.records.size() == 3);
  CHECK(reread.records[1].depth == doctest::Approx(6.25));
  CHECK(reread.find_label("label")->values[1] == scene::kLinkedUnlabeled);
  CHECK(reread.find_feature("ndvi")->values[2] == 1.0);

  // Empty cloud: header only.
  imgma::SparsePixelCloud empty;
  empty.image_id = 9;
  io::write_spxc(dir / "empty.spxc", empty);
  const auto empty_reread = io::read_spxc(dir / "empty.spxc");
  CHECK(empty_reread.records.empty());
  CHECK(empty_reread.image_id == 9);

  // Unsorted records rejected.
  imgma::SparsePixelCloud unsorted;
  unsorted.image_id = 1;
  unsorted.records = {{5, 0, 1.0, 0, 0}, {0, 0, 1.0, 0, 1}};
  io::write_spxc(dir / "unsorted.spxc", unsorted);
  CHECK_THROWS_WITH_AS(io::read_spxc(dir / "unsorted.spxc"), doctest::Contains("sorted"), Error);

  // Bad magic.
  {
    std::ofstream os(dir / "bad.spxc", std::ios::binary);
    os << "NOPE";
  }
  CHECK_THROWS_WITH_AS(io::read_spxc(dir / "bad.spxc"), doctest::Contains("magic"), Error);
}

TEST_CASE("FASC round trip and index validation") {
  const fs::path dir = temp_dir();
  scene::TiledMesh mesh;
  for (int t = 0; t < 2; ++t) {
    scene::MeshTile tile;
    tile.tile_id = t;
    tile.vertices = {{0, 0, 0}, {1, 0, 0}, {0, 1, 0}};
    tile.faces = {{0, 1, 2}};
    tile.recompute_mbb();
    mesh.tiles.push_back(tile);
  }
  pcma::PcmaResult assoc;
  assoc.faces.resize(2);
  assoc.faces[0].resize(1);
  assoc.faces[0][0].level = 2;
  assoc.faces[0][0].points = {1, 4, 7};
  assoc.faces[1].resize(1);
  assoc.faces[1][0].level = pcma::kNoLevel;
  assoc.point_face.assign(8, scene::kNoFace);

  const fs::path p1 = dir / "a.fasc";
  io::write_face_assoc(p1, mesh, assoc);
  const auto reread = io::read_face_assoc(p1, 8);
  CHECK(reread.faces[0][0].level == 2);
  CHECK(reread.faces[0][0].points == std::vector<uint32_t>{1, 4, 7});
  CHECK(reread.faces[1][0].level == pcma::kNoLevel);
  CHECK(reread.faces[1][0].points.empty());
  CHECK(reread.point_face[4] == scene::FaceRef{0, 0});
  CHECK(reread.point_face[0] == scene::kNoFace);

  const fs::path p2 = dir / "b.fasc";
  io::write_face_assoc(p2, mesh, reread);
  CHECK(slurp(p1) == slurp(p2));

  // Dangling point index (cloud smaller than stored indices).
  CHECK_THROWS_WITH_AS(io::read_face_assoc(p1, 5), doctest::Contains("out of range"), Error);
  {
    std::ofstream os(dir / "bad.fasc", std::ios::binary);
    os << "NOPE";
  }
  CHECK_THROWS_WITH_AS(io::read_face_assoc(dir / "bad.fasc", 8), doctest::Contains("magic"),
                       Error);
}

TEST_CASE("config parsing") {
  const fs::path dir = temp_dir();

  // Defaults when the file is absent match the H3D preset.
  const auto defaults = io::read_config(dir / "absent.cfg");
  REQUIRE(defaults.pcma_cfg.schedule.levels.size() == 3);
  CHECK(defaults.pcma_cfg.schedule.levels[0].theta_plus == 0.05);
  CHECK(defaults.pcma_cfg.schedule.levels[2].theta_minus == 0.15);
  CHECK(defaults.pcma_cfg.boundary_policy == pcma::BoundaryPolicy::Exclude);

  {
    std::ofstream os(dir / "ok.cfg");
    os << "# thresholds\n";
    os << "pcma.levels=0.30:0.30,0.60:0.60,1.20:1.20\n";
    os << "pcma.boundary_policy=include\n";
    os << "pcma.edge_tolerance=1e-8\n";
    os << "imgma.depth_tie_tol=1e-8\n";
    os << "threads=4\n";
    os << "seed=11\n";
  }
  const auto cfg = io::read_config(dir / "ok.cfg");
  CHECK(cfg.pcma_cfg.schedule.levels[2].theta_plus == 1.20);
  CHECK(cfg.pcma_cfg.boundary_policy == pcma::BoundaryPolicy::Include);
  CHECK(cfg.threads == 4);
  CHECK(cfg.seed == 11);

  {
    std::ofstream os(dir / "unknown.cfg");
    os << "nonsense=1\n";
  }
  CHECK_THROWS_WITH_AS(io::read_config(dir / "unknown.cfg"), doctest::Contains("unknown"),
                       Error);
  {
    std::ofstream os(dir / "badvalue.cfg");
    os << "pcma.levels=abc\n";
  }
  CHECK_THROWS_AS(io::read_config(dir / "badvalue.cfg"), Error);

  // Presets.
  io::Config preset = io::Config::defaults();
  preset.apply_preset("v3d");
  CHECK(preset.pcma_cfg.schedule.levels[0].theta_plus == 0.30);
  CHECK_THROWS_AS(preset.apply_preset("x3d"), Error);
}

TEST_CASE("label scheme and visibility writers") {
  const fs::path dir = temp_dir();
  scene::LabelScheme scheme;
  scheme.classes[0] = {"ground", {127, 127, 127}};
  scheme.classes[2] = {"roof", {255, 0, 0}};
  io::write_label_scheme(dir / "scheme.txt", scheme);
  const auto reread = io::read_label_scheme(dir / "scheme.txt");
  CHECK(reread.classes.at(2).name == "roof");
  CHECK(reread.classes.at(0).rgb[0] == 127);

  imgma::VisibilityTable table;
  table.add(1, {0, 2});
  table.add(2, {2});
  io::write_visibility(dir / "vis.txt", table);
  const std::string text = slurp(dir / "vis.txt");
  CHECK(text.find("image 1 : 0 2") != std::string::npos);
  CHECK(text.find("tile 2 : 1 2") != std::string::npos);
}

TEST_CASE("PPM preview colors follow the scheme") {
  const fs::path dir = temp_dir();
  imgma::SparsePixelCloud cloud;
  cloud.image_id = 1;
  cloud.records = {{0, 0, 1.0, 0, 0}, {0, 1, 1.0, 0, 1}};
  cloud.labels.push_back({"label", {2, scene::kLinkedUnlabeled}});
  scene::LabelScheme scheme;
  scheme.classes[2] = {"roof", {255, 0, 0}};
  io::write_label_ppm(dir / "p.ppm", cloud, "label", 3, 2, scheme);
  const std::string text = slurp(dir / "p.ppm");
  CHECK(text.substr(0, 2) == "P3");
  CHECK(text.find("255 0 0") != std::string::npos);   // labeled pixel
  CHECK(text.find("0 0 0") != std::string::npos);     // linked to unlabeled face
  CHECK(text.find("205 92 92") != std::string::npos); // background
}

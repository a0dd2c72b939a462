// End-to-end checks on the C interface; only the public header is used.

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>

#include "trifuse.h"

namespace fs = std::filesystem;

namespace {

struct Engine {
  trifuse_engine* handle = trifuse_engine_create();
  ~Engine() { trifuse_engine_destroy(handle); }
};

fs::path work_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("trifuse_capi_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

}  // namespace

TEST_CASE("version and error handling basics") {
  CHECK(std::strlen(trifuse_version()) > 0);
  Engine engine;
  REQUIRE(engine.handle != nullptr);
  CHECK(std::string(trifuse_last_error(engine.handle)).empty());

  CHECK(trifuse_load_mesh(engine.handle, "/nonexistent/manifest.txt") == TRIFUSE_ERR_INPUT);
  CHECK(!std::string(trifuse_last_error(engine.handle)).empty());
  CHECK(trifuse_apply_preset(engine.handle, "x3d") == TRIFUSE_ERR_INPUT);
  CHECK(trifuse_apply_preset(engine.handle, "v3d") == TRIFUSE_OK);
  CHECK(trifuse_set_option(engine.handle, "bogus.key", "1") == TRIFUSE_ERR_INPUT);
  CHECK(trifuse_set_option(engine.handle, "threads", "2") == TRIFUSE_OK);
}

TEST_CASE("synth -> pcma -> imgma -> pcimga -> transfer -> check through the C API") {
  const fs::path dir = work_dir("pipeline");
  Engine engine;
  REQUIRE(engine.handle != nullptr);

  trifuse_synth_desc synth{};
  synth.template_name = "town";
  synth.seed = 5;
  synth.extent = 10.0;
  synth.density = 25.0;
  REQUIRE(trifuse_run_synth(engine.handle, &synth, (dir / "scene").string().c_str()) ==
          TRIFUSE_OK);
  CHECK(fs::exists(dir / "scene" / "mesh" / "manifest.txt"));
  CHECK(fs::exists(dir / "scene" / "cloud.ply"));
  CHECK(fs::exists(dir / "scene" / "cameras.txt"));
  CHECK(trifuse_point_count(engine.handle) > 100);
  CHECK(trifuse_tile_count(engine.handle) == 4);
  CHECK(trifuse_camera_count(engine.handle) == 3);

  // Fresh engine fed purely from the files.
  Engine fresh;
  REQUIRE(trifuse_load_mesh(fresh.handle, (dir / "scene/mesh/manifest.txt").string().c_str()) ==
          TRIFUSE_OK);
  REQUIRE(trifuse_load_cloud(fresh.handle, (dir / "scene/cloud.ply").string().c_str()) ==
          TRIFUSE_OK);
  REQUIRE(trifuse_load_cameras(fresh.handle, (dir / "scene/cameras.txt").string().c_str()) ==
          TRIFUSE_OK);
  REQUIRE(trifuse_load_label_scheme(fresh.handle, (dir / "scene/scheme.txt").string().c_str()) ==
          TRIFUSE_OK);
  CHECK(trifuse_face_count(fresh.handle) == 56);

  const fs::path out_cloud = dir / "assoc.ply";
  const fs::path out_fasc = dir / "assoc.fasc";
  REQUIRE(trifuse_run_pcma(fresh.handle, out_cloud.string().c_str(),
                           out_fasc.string().c_str()) == TRIFUSE_OK);
  const std::string log = trifuse_run_log(fresh.handle);
  CHECK(log.find("[pcma]") != std::string::npos);
  CHECK(fs::exists(out_cloud));
  CHECK(fs::exists(out_fasc));

  REQUIRE(trifuse_run_imgma(fresh.handle, (dir / "img").string().c_str()) == TRIFUSE_OK);
  CHECK(fs::exists(dir / "img" / "image_1.spxc"));
  CHECK(fs::exists(dir / "img" / "visibility.txt"));

  REQUIRE(trifuse_run_pcimga(fresh.handle, "explicit", (dir / "links").string().c_str()) ==
          TRIFUSE_OK);
  CHECK(fs::exists(dir / "links" / "links_1.csv"));

  trifuse_transfer_desc transfer{};
  transfer.direction = "pc-to-mesh";
  transfer.kind = "label";
  transfer.src_attr = "label";
  transfer.dst_attr = "voted";
  const std::string mesh_out = (dir / "labeled_mesh").string();
  transfer.out_mesh_dir = mesh_out.c_str();
  const std::string report_path = (dir / "transfer_report.txt").string();
  transfer.report_path = report_path.c_str();
  REQUIRE(trifuse_run_transfer(fresh.handle, &transfer) == TRIFUSE_OK);
  CHECK(fs::exists(dir / "labeled_mesh" / "manifest.txt"));
  CHECK(fs::exists(dir / "transfer_report.txt"));

  const fs::path check_report = dir / "check.txt";
  REQUIRE(trifuse_run_check(fresh.handle, check_report.string().c_str()) == TRIFUSE_OK);
  std::ifstream is(check_report);
  std::string text((std::istreambuf_iterator<char>(is)), {});
  CHECK(text.find("consistency_rate 1") != std::string::npos);
}

TEST_CASE("association files round trip through the engine") {
  const fs::path dir = work_dir("fasc");
  Engine engine;
  trifuse_synth_desc synth{};
  synth.template_name = "plane";
  synth.seed = 2;
  synth.extent = 8.0;
  synth.density = 30.0;
  REQUIRE(trifuse_run_synth(engine.handle, &synth, (dir / "scene").string().c_str()) ==
          TRIFUSE_OK);
  REQUIRE(trifuse_run_pcma(engine.handle, nullptr, (dir / "a.fasc").string().c_str()) ==
          TRIFUSE_OK);

  Engine reuse;
  REQUIRE(trifuse_load_mesh(reuse.handle, (dir / "scene/mesh/manifest.txt").string().c_str()) ==
          TRIFUSE_OK);
  REQUIRE(trifuse_load_cloud(reuse.handle, (dir / "scene/cloud.ply").string().c_str()) ==
          TRIFUSE_OK);
  CHECK(trifuse_load_assoc(reuse.handle, (dir / "a.fasc").string().c_str()) == TRIFUSE_OK);

  // Transfer without recomputing the association.
  trifuse_transfer_desc transfer{};
  transfer.direction = "mesh-to-pc";
  transfer.kind = "label";
  transfer.src_attr = "label";
  transfer.dst_attr = "from_mesh";
  std::string out = (dir / "out.ply").string();
  transfer.out_cloud = out.c_str();
  CHECK(trifuse_run_transfer(reuse.handle, &transfer) == TRIFUSE_OK);
  CHECK(fs::exists(dir / "out.ply"));

  // Consistency check on the loaded association.
  const std::string report = (dir / "loaded_check.txt").string();
  CHECK(trifuse_run_check(reuse.handle, report.c_str()) == TRIFUSE_OK);
  CHECK(fs::exists(report));

  // Association files from another scene are rejected.
  Engine other;
  trifuse_synth_desc small{};
  small.template_name = "cube";
  small.seed = 1;
  small.extent = 5.0;
  small.density = 10.0;
  REQUIRE(trifuse_run_synth(other.handle, &small, (dir / "other").string().c_str()) ==
          TRIFUSE_OK);
  Engine cross;
  REQUIRE(trifuse_load_mesh(cross.handle,
                            (dir / "other/mesh/manifest.txt").string().c_str()) == TRIFUSE_OK);
  REQUIRE(trifuse_load_cloud(cross.handle, (dir / "scene/cloud.ply").string().c_str()) ==
          TRIFUSE_OK);
  CHECK(trifuse_load_assoc(cross.handle, (dir / "a.fasc").string().c_str()) ==
        TRIFUSE_ERR_INPUT);
}

TEST_CASE("null and invalid arguments return input errors") {
  Engine engine;
  CHECK(trifuse_run_pcimga(engine.handle, nullptr, "x") == TRIFUSE_ERR_INPUT);
  CHECK(trifuse_run_transfer(engine.handle, nullptr) == TRIFUSE_ERR_INPUT);
  CHECK(trifuse_run_synth(engine.handle, nullptr, "x") == TRIFUSE_ERR_INPUT);
  trifuse_synth_desc synth{};
  synth.template_name = "hexagon";
  CHECK(trifuse_run_synth(engine.handle, &synth, "/tmp/trifuse_capi_bad") == TRIFUSE_ERR_INPUT);
  // Commands on an empty engine fail cleanly.
  CHECK(trifuse_run_pcma(engine.handle, nullptr, nullptr) == TRIFUSE_ERR_INPUT);
  CHECK(trifuse_run_check(engine.handle, nullptr) == TRIFUSE_ERR_INPUT);
}

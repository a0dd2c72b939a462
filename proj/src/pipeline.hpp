#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "imgma.hpp"
#include "io.hpp"
#include "metrics.hpp"
#include "pcimga.hpp"
#include "pcma.hpp"
#include "scene.hpp"
#include "synthkit.hpp"
#include "transfer.hpp"

namespace trifuse::pipeline {

struct TransferRequest {
  std::string direction;
  std::string kind = "label";
  std::string mode;  // implicit | explicit | empty
  std::vector<std::string> src_attrs;
  std::vector<std::string> dst_attrs;
  std::string spxc_dir;      // load pixel clouds from here when set
  std::string out_cloud;     // point targets
  std::string out_mesh_dir;  // mesh targets (manifest + tiles rewritten)
  std::string out_spxc_dir;  // image targets
  std::string ppm_dir;       // optional label previews
  std::string report_path;   // optional
  bool explicit_aggregate = false;
};

struct SynthRequest {
  std::string template_name = "plane";
  uint64_t seed = 0;
  double extent = 10.0;
  double density = 50.0;
  double noise_sigma = 0.0;
  geom::Vec3 shift{0.0, 0.0, 0.0};
  int subdiv = 0;
  bool ascii_ply = false;
};

// One loaded scene plus lazily computed association state; the unit behind
// the C API handle.
class Engine {
 public:
  Engine();

  // configuration
  void load_config(const std::string& path);
  void set_option(const std::string& key, const std::string& value);
  void apply_preset(const std::string& name);
  void set_threads(int threads);
  const io::Config& config() const { return config_; }

  // inputs
  void load_mesh(const std::string& manifest_path);
  void load_cloud(const std::string& ply_path);
  void load_cameras(const std::string& path);
  void load_label_scheme(const std::string& path);
  void load_assoc(const std::string& fasc_path);

  std::size_t point_count() const { return cloud_ ? cloud_->size() : 0; }
  std::size_t face_count() const { return mesh_ ? mesh_->total_faces() : 0; }
  std::size_t tile_count() const { return mesh_ ? mesh_->tiles.size() : 0; }
  std::size_t camera_count() const { return cameras_.size(); }

  // commands (RunLog retrievable afterwards)
  void cmd_pcma(const std::string& out_cloud, const std::string& out_assoc);
  void cmd_imgma(const std::string& out_dir);
  void cmd_pcimga(const std::string& mode, const std::string& out_dir);
  void cmd_transfer(const TransferRequest& request);
  void cmd_check(const std::string& report_path);
  void cmd_synth(const SynthRequest& request, const std::string& out_dir);

  const std::string& run_log() const { return run_log_; }

  // computed state (exposed for tests and the check command)
  const pcma::PcmaResult& ensure_pcma();
  const imgma::ImgmaResult& ensure_imgma();
  const pcimga::PointPixelLinks& ensure_explicit_links();

  scene::TiledMesh* mesh() { return mesh_.get(); }
  scene::PointCloud* cloud() { return cloud_.get(); }
  const std::vector<scene::CameraModel>& cameras() const { return cameras_; }

 private:
  void ensure_derived();
  void ensure_bvhs();
  int threads() const { return config_.threads; }

  void log_line(const std::string& line);
  void begin_log(const std::string& command);

  io::Config config_;
  std::unique_ptr<scene::TiledMesh> mesh_;
  std::unique_ptr<scene::PointCloud> cloud_;
  std::vector<scene::CameraModel> cameras_;
  scene::LabelScheme scheme_;

  std::vector<std::vector<scene::FaceDerived>> derived_;
  std::vector<index::FaceBvh> bvhs_;
  std::optional<pcma::PcmaResult> pcma_;
  std::optional<imgma::ImgmaResult> imgma_;
  std::optional<pcimga::PointPixelLinks> explicit_links_;

  std::string run_log_;
};

}  // namespace trifuse::pipeline

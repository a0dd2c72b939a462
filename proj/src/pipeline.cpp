#include "pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "error.hpp"
#include "parallel.hpp"

namespace trifuse::pipeline {

namespace fs = std::filesystem;

namespace {

class Stopwatch {
 public:
  Stopwatch() : start_(std::chrono::steady_clock::now()) {}
  double ms() const {
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start_)
        .count();
  }

 private:
  std::chrono::steady_clock::time_point start_;
};

std::string spxc_filename(int32_t image_id) {
  return "image_" + std::to_string(image_id) + ".spxc";
}

}  // namespace

Engine::Engine() : config_(io::Config::defaults()) {}

void Engine::load_config(const std::string& path) { config_ = io::read_config(path); }

void Engine::set_option(const std::string& key, const std::string& value) {
  config_.set(key, value);
  pcma_.reset();
  imgma_.reset();
  explicit_links_.reset();
}

void Engine::apply_preset(const std::string& name) {
  config_.apply_preset(name);
  pcma_.reset();
  explicit_links_.reset();
}

void Engine::set_threads(int threads) {
  if (threads < 0) throw_input("threads must be >= 0");
  config_.threads = threads;
}

void Engine::load_mesh(const std::string& manifest_path) {
  mesh_ = std::make_unique<scene::TiledMesh>(io::read_mesh_tiles(manifest_path));
  derived_.clear();
  bvhs_.clear();
  pcma_.reset();
  imgma_.reset();
  explicit_links_.reset();
}

void Engine::load_cloud(const std::string& ply_path) {
  cloud_ = std::make_unique<scene::PointCloud>(io::read_point_cloud(ply_path));
  pcma_.reset();
  explicit_links_.reset();
}

void Engine::load_cameras(const std::string& path) {
  cameras_ = io::read_cameras(path);
  imgma_.reset();
  explicit_links_.reset();
}

void Engine::load_label_scheme(const std::string& path) {
  scheme_ = io::read_label_scheme(path);
}

void Engine::load_assoc(const std::string& fasc_path) {
  if (!cloud_) throw_input("load the point cloud before the association file");
  if (!mesh_) throw_input("load the mesh before the association file");
  pcma_ = io::read_face_assoc(fasc_path, cloud_->size());
  if (pcma_->faces.size() != mesh_->tiles.size()) {
    throw_input("association file tile count does not match the mesh");
  }
  for (std::size_t t = 0; t < mesh_->tiles.size(); ++t) {
    if (pcma_->faces[t].size() != mesh_->tiles[t].face_count()) {
      throw_input("association file face count does not match tile " +
                  std::to_string(mesh_->tiles[t].tile_id));
    }
  }
  explicit_links_.reset();
}

void Engine::ensure_derived() {
  if (!mesh_) throw_input("no mesh loaded");
  if (!derived_.empty()) return;
  derived_.resize(mesh_->tiles.size());
  for (std::size_t t = 0; t < mesh_->tiles.size(); ++t) {
    derived_[t] = scene::compute_face_derived(mesh_->tiles[t]);
  }
}

void Engine::ensure_bvhs() {
  ensure_derived();
  if (!bvhs_.empty()) return;
  bvhs_.reserve(mesh_->tiles.size());
  for (std::size_t t = 0; t < mesh_->tiles.size(); ++t) {
    bvhs_.emplace_back(mesh_->tiles[t], derived_[t]);
  }
}

const pcma::PcmaResult& Engine::ensure_pcma() {
  if (pcma_) return *pcma_;
  if (!cloud_) throw_input("no point cloud loaded");
  ensure_derived();
  pcma_ = pcma::pcma_run(*mesh_, derived_, *cloud_, config_.pcma_cfg,
                         resolve_threads(config_.threads));
  return *pcma_;
}

const imgma::ImgmaResult& Engine::ensure_imgma() {
  if (imgma_) return *imgma_;
  if (cameras_.empty()) throw_input("no cameras loaded");
  ensure_bvhs();
  imgma::ImgmaConfig cfg;
  cfg.depth_tie_tol = config_.depth_tie_tol;
  cfg.threads = resolve_threads(config_.threads);
  imgma_ = imgma::imgma_run(cameras_, *mesh_, bvhs_, cfg);
  return *imgma_;
}

const pcimga::PointPixelLinks& Engine::ensure_explicit_links() {
  if (explicit_links_) return *explicit_links_;
  const pcma::PcmaResult& assoc = ensure_pcma();
  const imgma::ImgmaResult& img = ensure_imgma();
  const pcimga::PointVisibility vis = pcimga::visible_points(assoc, img.pixel_clouds);
  explicit_links_ = pcimga::pcimga_explicit(*cloud_, cameras_, vis, assoc, img.pixel_clouds,
                                            resolve_threads(config_.threads));
  return *explicit_links_;
}

void Engine::log_line(const std::string& line) { run_log_ += line + "\n"; }

void Engine::begin_log(const std::string& command) {
  run_log_.clear();
  log_line("[run] command=" + command);
  std::istringstream echo(config_.echo());
  std::string line;
  while (std::getline(echo, line)) log_line("[config] " + line);
}

void Engine::cmd_pcma(const std::string& out_cloud, const std::string& out_assoc) {
  begin_log("pcma");
  if (!mesh_) throw_input("pcma: no mesh loaded");
  if (!cloud_) throw_input("pcma: no point cloud loaded");
  log_line("[input] tiles=" + std::to_string(mesh_->tiles.size()) +
           " faces=" + std::to_string(mesh_->total_faces()) +
           " points=" + std::to_string(cloud_->size()));

  Stopwatch watch;
  const pcma::PcmaResult& assoc = ensure_pcma();
  log_line("[pcma] associated_points=" + std::to_string(assoc.associated_points()) + "/" +
           std::to_string(cloud_->size()) + " contested=" +
           std::to_string(assoc.contested_points) + " degenerate_faces=" +
           std::to_string(assoc.degenerate_faces) + " time_ms=" + std::to_string(watch.ms()));

  cloud_->assoc = assoc.point_face;
  if (!out_cloud.empty()) {
    io::write_point_cloud(out_cloud, *cloud_);
    log_line("[output] cloud=" + out_cloud);
  }
  if (!out_assoc.empty()) {
    io::write_face_assoc(out_assoc, *mesh_, assoc);
    log_line("[output] assoc=" + out_assoc);
  }
}

void Engine::cmd_imgma(const std::string& out_dir) {
  begin_log("imgma");
  if (!mesh_) throw_input("imgma: no mesh loaded");
  if (cameras_.empty()) throw_input("imgma: no cameras loaded");

  Stopwatch watch;
  const imgma::ImgmaResult& result = ensure_imgma();
  std::size_t total_px = 0;
  for (const auto& pc : result.pixel_clouds) total_px += pc.size();
  log_line("[imgma] images=" + std::to_string(cameras_.size()) +
           " linked_pixels=" + std::to_string(total_px) +
           " time_ms=" + std::to_string(watch.ms()));
  for (const auto& [stage, count] : result.stage_counts) {
    log_line("[imgma] stage" + std::to_string(stage) + "_hits=" + std::to_string(count));
  }
  for (const auto& w : result.warnings) log_line("[warn] " + w);

  if (!out_dir.empty()) {
    fs::create_directories(out_dir);
    for (const auto& pc : result.pixel_clouds) {
      io::write_spxc(fs::path(out_dir) / spxc_filename(pc.image_id), pc);
    }
    io::write_visibility(fs::path(out_dir) / "visibility.txt", result.visibility);
    log_line("[output] dir=" + out_dir);
  }
}

void Engine::cmd_pcimga(const std::string& mode, const std::string& out_dir) {
  begin_log("pcimga");
  if (mode != "implicit" && mode != "explicit") {
    throw_input("pcimga: mode must be implicit or explicit");
  }
  if (!mesh_ || !cloud_) throw_input("pcimga: mesh and cloud required");
  if (cameras_.empty()) throw_input("pcimga: no cameras loaded");

  Stopwatch watch;
  const pcma::PcmaResult& assoc = ensure_pcma();
  const imgma::ImgmaResult& img = ensure_imgma();
  const pcimga::PointVisibility vis = pcimga::visible_points(assoc, img.pixel_clouds);

  if (!out_dir.empty()) fs::create_directories(out_dir);

  if (mode == "implicit") {
    // Face-mediated linking: list the visible points with their shared face.
    std::size_t total = 0;
    for (const auto& [image_id, points] : vis.visible) {
      total += points.size();
      if (out_dir.empty()) continue;
      std::ofstream os(fs::path(out_dir) / ("links_" + std::to_string(image_id) + ".csv"));
      if (!os) throw_input("pcimga: cannot write links csv");
      os << "point,tile,face\n";
      for (uint32_t p : points) {
        os << p << ',' << assoc.point_face[p].tile_id << ',' << assoc.point_face[p].face_id
           << "\n";
      }
    }
    log_line("[pcimga] mode=implicit visible_point_links=" + std::to_string(total) +
             " time_ms=" + std::to_string(watch.ms()));
  } else {
    const pcimga::PointPixelLinks& links = ensure_explicit_links();
    std::size_t retained = 0;
    std::size_t mismatches = 0;
    std::size_t behind = 0;
    std::size_t outside = 0;
    for (const auto& il : links.images) {
      retained += il.retained.size();
      mismatches += il.face_mismatch;
      behind += il.behind_camera;
      outside += il.out_of_bounds;
      if (out_dir.empty()) continue;
      std::ofstream os(fs::path(out_dir) / ("links_" + std::to_string(il.image_id) + ".csv"));
      if (!os) throw_input("pcimga: cannot write links csv");
      os << "point,row,col,depth\n";
      char buf[64];
      for (const auto& l : il.retained) {
        std::snprintf(buf, sizeof(buf), "%.17g", l.depth);
        os << l.point << ',' << l.row << ',' << l.col << ',' << buf << "\n";
      }
    }
    log_line("[pcimga] mode=explicit retained_links=" + std::to_string(retained) +
             " point_pixel_face_mismatches=" + std::to_string(mismatches) +
             " behind_camera_drops=" + std::to_string(behind) +
             " out_of_bounds_drops=" + std::to_string(outside) +
             " time_ms=" + std::to_string(watch.ms()));
  }
  if (!out_dir.empty()) log_line("[output] dir=" + out_dir);
}

void Engine::cmd_transfer(const TransferRequest& request) {
  begin_log("transfer");
  transfer::TransferSpec spec;
  spec.direction = transfer::parse_direction(request.direction);
  if (request.kind == "label") {
    spec.kind = transfer::Kind::Label;
  } else if (request.kind == "feature") {
    spec.kind = transfer::Kind::Feature;
  } else {
    throw_input("transfer: kind must be label or feature");
  }
  if (!request.mode.empty()) {
    if (request.mode == "implicit") {
      spec.mode = transfer::Mode::Implicit;
    } else if (request.mode == "explicit") {
      spec.mode = transfer::Mode::Explicit;
    } else {
      throw_input("transfer: mode must be implicit or explicit");
    }
  }
  spec.src_attrs = request.src_attrs;
  spec.dst_attrs = request.dst_attrs;
  spec.explicit_aggregate = request.explicit_aggregate;

  const bool needs_pcma = spec.direction == transfer::Direction::MeshToPc ||
                          spec.direction == transfer::Direction::PcToMesh ||
                          spec.direction == transfer::Direction::ImgToPc ||
                          (spec.direction == transfer::Direction::PcToImg &&
                           spec.mode == transfer::Mode::Implicit);
  const bool needs_images = spec.direction == transfer::Direction::MeshToImg ||
                            spec.direction == transfer::Direction::ImgToMesh ||
                            spec.direction == transfer::Direction::PcToImg ||
                            spec.direction == transfer::Direction::ImgToPc;
  const bool needs_explicit = (spec.direction == transfer::Direction::PcToImg ||
                               spec.direction == transfer::Direction::ImgToPc) &&
                              spec.mode == transfer::Mode::Explicit;

  // Image attributes come either from SPXC files of an earlier run or from
  // ray casting in-process.
  std::vector<imgma::SparsePixelCloud> loaded_spxc;
  std::vector<imgma::SparsePixelCloud>* pixel_clouds = nullptr;
  if (needs_images) {
    if (!request.spxc_dir.empty()) {
      std::vector<fs::path> files;
      for (const auto& entry : fs::directory_iterator(request.spxc_dir)) {
        if (entry.path().extension() == ".spxc") files.push_back(entry.path());
      }
      std::sort(files.begin(), files.end());
      for (const auto& f : files) loaded_spxc.push_back(io::read_spxc(f));
      if (loaded_spxc.empty()) {
        throw_input("transfer: no .spxc files in " + request.spxc_dir);
      }
      pixel_clouds = &loaded_spxc;
      log_line("[input] spxc_files=" + std::to_string(loaded_spxc.size()));
    } else {
      ensure_imgma();
      pixel_clouds = &imgma_->pixel_clouds;
    }
  }

  transfer::SceneRefs refs;
  refs.mesh = mesh_.get();
  refs.cloud = cloud_.get();
  refs.pixel_clouds = pixel_clouds;

  transfer::AssociationRefs assoc;
  pcimga::PointPixelLinks local_links;
  if (needs_pcma) assoc.pcma = &ensure_pcma();
  if (needs_explicit) {
    // Explicit links are built against in-process ray casting results; when
    // SPXC files were loaded, rebuild links against those.
    if (!request.spxc_dir.empty()) {
      const pcma::PcmaResult& pcma_res = ensure_pcma();
      const pcimga::PointVisibility vis = pcimga::visible_points(pcma_res, *pixel_clouds);
      local_links = pcimga::pcimga_explicit(*cloud_, cameras_, vis, pcma_res, *pixel_clouds,
                                            resolve_threads(config_.threads));
      assoc.explicit_links = &local_links;
      assoc.pcma = &pcma_res;
    } else {
      assoc.explicit_links = &ensure_explicit_links();
      assoc.pcma = &ensure_pcma();
    }
  }

  Stopwatch watch;
  const transfer::TransferReport report = transfer::run_transfer(spec, refs, assoc);
  std::ostringstream summary;
  summary << "[transfer] direction=" << request.direction << " kind=" << request.kind
          << " targets=" << report.targets << " transferred=" << report.transferred
          << " unlabeled=" << report.unlabeled << " aggregations=" << report.aggregations
          << " unanimity_rate=" << report.unanimity_rate() << " time_ms=" << watch.ms();
  log_line(summary.str());

  // Outputs per target modality.
  if (!request.out_cloud.empty()) {
    io::write_point_cloud(request.out_cloud, *cloud_);
    log_line("[output] cloud=" + request.out_cloud);
  }
  if (!request.out_mesh_dir.empty()) {
    io::write_mesh_tiles(fs::path(request.out_mesh_dir) / "manifest.txt", *mesh_);
    log_line("[output] mesh_dir=" + request.out_mesh_dir);
  }
  if (!request.out_spxc_dir.empty()) {
    if (!pixel_clouds) throw_input("transfer: no pixel clouds to write");
    fs::create_directories(request.out_spxc_dir);
    for (const auto& pc : *pixel_clouds) {
      io::write_spxc(fs::path(request.out_spxc_dir) / spxc_filename(pc.image_id), pc);
    }
    log_line("[output] spxc_dir=" + request.out_spxc_dir);
  }
  if (!request.ppm_dir.empty()) {
    if (!pixel_clouds) throw_input("transfer: no pixel clouds for previews");
    if (spec.kind != transfer::Kind::Label) {
      throw_input("transfer: previews only apply to label transfers");
    }
    fs::create_directories(request.ppm_dir);
    for (const auto& pc : *pixel_clouds) {
      const scene::CameraModel* cam = nullptr;
      for (const auto& c : cameras_) {
        if (c.image_id == pc.image_id) cam = &c;
      }
      if (!cam) throw_input("transfer: previews need the camera file (image dimensions)");
      io::write_label_ppm(fs::path(request.ppm_dir) /
                              ("image_" + std::to_string(pc.image_id) + ".ppm"),
                          pc, spec.dst_attrs.front(), cam->width, cam->height, scheme_);
    }
    log_line("[output] ppm_dir=" + request.ppm_dir);
  }
  if (!request.report_path.empty()) {
    std::ofstream os(request.report_path);
    if (!os) throw_input("transfer: cannot write report");
    os << "direction " << request.direction << "\nkind " << request.kind << "\n";
    if (!request.mode.empty()) os << "mode " << request.mode << "\n";
    os << "targets " << report.targets << "\ntransferred " << report.transferred
       << "\nunlabeled " << report.unlabeled << "\naggregations " << report.aggregations
       << "\nunanimous " << report.unanimous << "\nunanimity_rate " << report.unanimity_rate()
       << "\n";
    log_line("[output] report=" + request.report_path);
  }
}

void Engine::cmd_check(const std::string& report_path) {
  begin_log("check");
  if (!mesh_ || !cloud_) throw_input("check: mesh and cloud required");
  if (!cloud_->find_label("label")) {
    throw_input("check: cloud has no ground-truth 'label' column");
  }

  Stopwatch watch;
  const pcma::PcmaResult& assoc = ensure_pcma();
  ensure_derived();  // the association may have been loaded, not computed
  const metrics::ConsistencyReport consistency =
      metrics::forward_backward_check(*cloud_, "label", *mesh_, assoc);
  const metrics::AssociationRates rates =
      metrics::association_rates(*mesh_, derived_, *cloud_, "label", assoc);

  const std::string text =
      metrics::format_consistency_report(consistency) + metrics::format_association_rates(rates);
  log_line("[check] consistency_rate=" + std::to_string(consistency.consistency_rate) +
           " point_rate=" + std::to_string(rates.point_rate) +
           " time_ms=" + std::to_string(watch.ms()));

  if (!report_path.empty()) {
    std::ofstream os(report_path);
    if (!os) throw_input("check: cannot write report");
    os << text;
    log_line("[output] report=" + report_path);
  } else {
    run_log_ += text;
  }
}

void Engine::cmd_synth(const SynthRequest& request, const std::string& out_dir) {
  begin_log("synth");
  synthkit::SceneSpec spec;
  spec.scene_template = synthkit::parse_template(request.template_name);
  spec.seed = request.seed;
  spec.extent = request.extent;
  spec.density = request.density;
  spec.noise_sigma = request.noise_sigma;
  spec.shift = request.shift;
  spec.subdiv = request.subdiv;

  Stopwatch watch;
  synthkit::SyntheticScene scene = synthkit::generate(spec);
  log_line("[synth] template=" + request.template_name + " seed=" + std::to_string(request.seed) +
           " tiles=" + std::to_string(scene.mesh.tiles.size()) +
           " faces=" + std::to_string(scene.mesh.total_faces()) +
           " points=" + std::to_string(scene.cloud.size()) +
           " cameras=" + std::to_string(scene.cameras.size()) +
           " time_ms=" + std::to_string(watch.ms()));

  fs::create_directories(fs::path(out_dir) / "mesh");
  io::write_mesh_tiles(fs::path(out_dir) / "mesh" / "manifest.txt", scene.mesh);
  io::PlyWriteOptions opts;
  opts.binary = !request.ascii_ply;
  io::write_point_cloud(fs::path(out_dir) / "cloud.ply", scene.cloud, opts);
  io::write_cameras(fs::path(out_dir) / "cameras.txt", scene.cameras);
  io::write_label_scheme(fs::path(out_dir) / "scheme.txt", scene.scheme);
  if (!scene.dead_zone_cases.empty()) {
    std::ofstream os(fs::path(out_dir) / "dead_zone_cases.txt");
    os << "# point_index case expected(assoc|none|policy)\n";
    for (const auto& c : scene.dead_zone_cases) {
      const char* expected = c.expected == synthkit::DeadZoneCase::Expected::Associated
                                 ? "assoc"
                                 : (c.expected == synthkit::DeadZoneCase::Expected::NotAssociated
                                        ? "none"
                                        : "policy");
      os << c.point_index << ' ' << c.case_id << ' ' << expected << "\n";
    }
  }
  log_line("[output] dir=" + out_dir);

  // A synthesized scene replaces whatever was loaded.
  mesh_ = std::make_unique<scene::TiledMesh>(std::move(scene.mesh));
  cloud_ = std::make_unique<scene::PointCloud>(std::move(scene.cloud));
  cameras_ = scene.cameras;
  scheme_ = scene.scheme;
  derived_.clear();
  bvhs_.clear();
  pcma_.reset();
  imgma_.reset();
  explicit_links_.reset();
}

}  // namespace trifuse::pipeline

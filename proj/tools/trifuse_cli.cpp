// Command line front end; talks to the engine exclusively through the C API.

#include <cstdio>
#include <cstdlib>
#include <memory>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "trifuse.h"

namespace {

struct EngineDeleter {
  void operator()(trifuse_engine* e) const { trifuse_engine_destroy(e); }
};
using EnginePtr = std::unique_ptr<trifuse_engine, EngineDeleter>;

int finish(trifuse_engine* engine, trifuse_status status) {
  if (status == TRIFUSE_OK) {
    std::fputs(trifuse_run_log(engine), stdout);
    return 0;
  }
  std::fprintf(stderr, "error: %s\n", trifuse_last_error(engine));
  return static_cast<int>(status);
}

// Shared per-command state; every option lands here.
struct Options {
  std::string mesh, cloud, cameras, config, scheme, assoc;
  std::string preset;
  int threads = -1;  // -1: unset; FUSION_THREADS or hardware fallback
  std::string out_cloud, out_assoc, out_dir;
  std::string mode;
  std::string direction, kind = "label", attr, spxc_dir, out_mesh_dir, out_spxc_dir, ppm_dir,
              report;
  bool explicit_aggregate = false;
  std::string template_name = "plane";
  std::uint64_t seed = 0;
  double extent = 10.0, density = 50.0, sigma = 0.0;
  std::vector<double> shift;
  int subdiv = 0;
  bool ascii_ply = false;
};

trifuse_status load_common(trifuse_engine* engine, const Options& opt) {
  trifuse_status s = TRIFUSE_OK;
  if (!opt.config.empty() && (s = trifuse_load_config(engine, opt.config.c_str()))) return s;
  if (!opt.preset.empty() && (s = trifuse_apply_preset(engine, opt.preset.c_str()))) return s;
  int threads = opt.threads;
  if (threads < 0) {
    if (const char* env = std::getenv("FUSION_THREADS")) threads = std::atoi(env);
  }
  if (threads >= 0 && (s = trifuse_set_threads(engine, threads))) return s;
  if (!opt.mesh.empty() && (s = trifuse_load_mesh(engine, opt.mesh.c_str()))) return s;
  if (!opt.cloud.empty() && (s = trifuse_load_cloud(engine, opt.cloud.c_str()))) return s;
  if (!opt.cameras.empty() && (s = trifuse_load_cameras(engine, opt.cameras.c_str()))) return s;
  if (!opt.scheme.empty() && (s = trifuse_load_label_scheme(engine, opt.scheme.c_str()))) {
    return s;
  }
  if (!opt.assoc.empty() && (s = trifuse_load_assoc(engine, opt.assoc.c_str()))) return s;
  return TRIFUSE_OK;
}

void add_common_options(CLI::App* cmd, Options& opt, bool with_config = true) {
  if (with_config) {
    cmd->add_option("--config", opt.config, "key=value configuration file");
    cmd->add_option("--preset", opt.preset, "threshold preset: h3d or v3d");
  }
  cmd->add_option("--threads", opt.threads, "worker threads (0 = hardware)");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"trifuse - point cloud / mesh / imagery association and transfer"};
  app.require_subcommand(1);
  Options opt;

  CLI::App* pcma = app.add_subcommand("pcma", "associate point cloud and mesh");
  pcma->add_option("--mesh", opt.mesh, "tile manifest")->required();
  pcma->add_option("--cloud", opt.cloud, "point cloud PLY")->required();
  pcma->add_option("--out-cloud", opt.out_cloud, "attributed cloud output");
  pcma->add_option("--out-assoc", opt.out_assoc, "binary association output");
  add_common_options(pcma, opt);

  CLI::App* imgma = app.add_subcommand("imgma", "associate images and mesh");
  imgma->add_option("--mesh", opt.mesh, "tile manifest")->required();
  imgma->add_option("--cameras", opt.cameras, "camera file")->required();
  imgma->add_option("--out", opt.out_dir, "output directory")->required();
  add_common_options(imgma, opt);

  CLI::App* pcimga = app.add_subcommand("pcimga", "associate point cloud and images");
  pcimga->add_option("--mode", opt.mode, "implicit or explicit")->required();
  pcimga->add_option("--mesh", opt.mesh, "tile manifest")->required();
  pcimga->add_option("--cloud", opt.cloud, "point cloud PLY")->required();
  pcimga->add_option("--cameras", opt.cameras, "camera file")->required();
  pcimga->add_option("--out", opt.out_dir, "output directory")->required();
  pcimga->add_option("--assoc", opt.assoc, "reuse a pcma association file");
  add_common_options(pcimga, opt);

  CLI::App* transfer = app.add_subcommand("transfer", "move labels/features between modalities");
  transfer->add_option("--direction", opt.direction,
                       "pc-to-mesh mesh-to-pc mesh-to-img img-to-mesh pc-to-img img-to-pc")
      ->required();
  transfer->add_option("--kind", opt.kind, "label or feature");
  transfer->add_option("--mode", opt.mode, "implicit or explicit (pc<->img only)");
  transfer->add_option("--attr", opt.attr, "src[:dst] column names, comma separated lists")
      ->required();
  transfer->add_option("--mesh", opt.mesh, "tile manifest");
  transfer->add_option("--cloud", opt.cloud, "point cloud PLY");
  transfer->add_option("--cameras", opt.cameras, "camera file");
  transfer->add_option("--assoc", opt.assoc, "reuse a pcma association file");
  transfer->add_option("--spxc-dir", opt.spxc_dir, "existing sparse pixel clouds");
  transfer->add_option("--out-cloud", opt.out_cloud, "cloud output (point targets)");
  transfer->add_option("--out-mesh-dir", opt.out_mesh_dir, "mesh output dir (mesh targets)");
  transfer->add_option("--out-spxc-dir", opt.out_spxc_dir, "pixel cloud output dir");
  transfer->add_option("--ppm-dir", opt.ppm_dir, "label preview images (PPM)");
  transfer->add_option("--scheme", opt.scheme, "label scheme for previews");
  transfer->add_option("--report", opt.report, "transfer report path");
  transfer->add_flag("--explicit-aggregate", opt.explicit_aggregate,
                     "explicit pc-to-img: aggregate every point per pixel");
  add_common_options(transfer, opt);

  CLI::App* check = app.add_subcommand("check", "forward/backward label consistency");
  check->add_option("--cloud", opt.cloud, "ground-truth labeled cloud")->required();
  check->add_option("--mesh", opt.mesh, "tile manifest")->required();
  check->add_option("--report", opt.report, "report output path");
  add_common_options(check, opt);

  CLI::App* synth = app.add_subcommand("synth", "generate a synthetic scene");
  synth->add_option("--template", opt.template_name, "plane cube rooftwoplane town");
  synth->add_option("--seed", opt.seed, "generator seed");
  synth->add_option("--extent", opt.extent, "scene extent in meters");
  synth->add_option("--density", opt.density, "points per square meter");
  synth->add_option("--sigma", opt.sigma, "normal-offset noise sigma");
  synth->add_option("--shift", opt.shift, "rigid cloud shift x y z")->expected(3);
  synth->add_option("--subdiv", opt.subdiv, "plane grid cells per side");
  synth->add_flag("--ascii", opt.ascii_ply, "write the cloud as ASCII PLY");
  synth->add_option("--out", opt.out_dir, "output directory")->required();
  add_common_options(synth, opt, false);

  CLI11_PARSE(app, argc, argv);

  EnginePtr engine(trifuse_engine_create());
  if (!engine) {
    std::fprintf(stderr, "error: engine creation failed\n");
    return 3;
  }

  trifuse_status s = load_common(engine.get(), opt);
  if (s != TRIFUSE_OK) return finish(engine.get(), s);

  if (pcma->parsed()) {
    s = trifuse_run_pcma(engine.get(), opt.out_cloud.empty() ? nullptr : opt.out_cloud.c_str(),
                         opt.out_assoc.empty() ? nullptr : opt.out_assoc.c_str());
  } else if (imgma->parsed()) {
    s = trifuse_run_imgma(engine.get(), opt.out_dir.c_str());
  } else if (pcimga->parsed()) {
    s = trifuse_run_pcimga(engine.get(), opt.mode.c_str(), opt.out_dir.c_str());
  } else if (transfer->parsed()) {
    std::string src = opt.attr;
    std::string dst;
    const auto colon = opt.attr.find(':');
    if (colon != std::string::npos) {
      src = opt.attr.substr(0, colon);
      dst = opt.attr.substr(colon + 1);
    }
    trifuse_transfer_desc desc{};
    desc.direction = opt.direction.c_str();
    desc.kind = opt.kind.c_str();
    desc.mode = opt.mode.empty() ? nullptr : opt.mode.c_str();
    desc.src_attr = src.c_str();
    desc.dst_attr = dst.empty() ? nullptr : dst.c_str();
    desc.spxc_dir = opt.spxc_dir.empty() ? nullptr : opt.spxc_dir.c_str();
    desc.out_cloud = opt.out_cloud.empty() ? nullptr : opt.out_cloud.c_str();
    desc.out_mesh_dir = opt.out_mesh_dir.empty() ? nullptr : opt.out_mesh_dir.c_str();
    desc.out_spxc_dir = opt.out_spxc_dir.empty() ? nullptr : opt.out_spxc_dir.c_str();
    desc.ppm_dir = opt.ppm_dir.empty() ? nullptr : opt.ppm_dir.c_str();
    desc.report_path = opt.report.empty() ? nullptr : opt.report.c_str();
    desc.explicit_use_aggregate = opt.explicit_aggregate ? 1 : 0;
    s = trifuse_run_transfer(engine.get(), &desc);
  } else if (check->parsed()) {
    s = trifuse_run_check(engine.get(), opt.report.empty() ? nullptr : opt.report.c_str());
  } else if (synth->parsed()) {
    trifuse_synth_desc desc{};
    desc.template_name = opt.template_name.c_str();
    desc.seed = opt.seed;
    desc.extent = opt.extent;
    desc.density = opt.density;
    desc.noise_sigma = opt.sigma;
    if (opt.shift.size() == 3) {
      desc.shift_x = opt.shift[0];
      desc.shift_y = opt.shift[1];
      desc.shift_z = opt.shift[2];
    }
    desc.subdiv = opt.subdiv;
    desc.ascii_ply = opt.ascii_ply ? 1 : 0;
    s = trifuse_run_synth(engine.get(), &desc, opt.out_dir.c_str());
  }

  return finish(engine.get(), s);
}

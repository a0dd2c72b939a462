#include "trifuse.h"

#include <exception>
#include <string>

#include "error.hpp"
#include "pipeline.hpp"

// Opaque handle: the engine plus its last error message.
struct trifuse_engine {
  trifuse::pipeline::Engine impl;
  std::string last_error;
};

namespace {

constexpr const char* kVersion = "0.1.0";

template <typename Fn>
trifuse_status guarded(trifuse_engine* engine, Fn&& fn) {
  if (!engine) return TRIFUSE_ERR_INPUT;
  engine->last_error.clear();
  try {
    fn();
    return TRIFUSE_OK;
  } catch (const trifuse::Error& e) {
    engine->last_error = e.what();
    return e.kind() == trifuse::ErrorKind::Input ? TRIFUSE_ERR_INPUT : TRIFUSE_ERR_INTERNAL;
  } catch (const std::exception& e) {
    engine->last_error = e.what();
    return TRIFUSE_ERR_INTERNAL;
  }
}

std::string or_empty(const char* s) { return s ? std::string(s) : std::string(); }

std::vector<std::string> split_csv(const std::string& text) {
  std::vector<std::string> out;
  std::size_t begin = 0;
  while (begin <= text.size()) {
    const std::size_t comma = text.find(',', begin);
    if (comma == std::string::npos) {
      out.push_back(text.substr(begin));
      break;
    }
    out.push_back(text.substr(begin, comma - begin));
    begin = comma + 1;
  }
  return out;
}

}  // namespace

extern "C" {

const char* trifuse_version(void) { return kVersion; }

trifuse_engine* trifuse_engine_create(void) {
  try {
    return new trifuse_engine();
  } catch (...) {
    return nullptr;
  }
}

void trifuse_engine_destroy(trifuse_engine* engine) { delete engine; }

const char* trifuse_last_error(const trifuse_engine* engine) {
  return engine ? engine->last_error.c_str() : "null engine";
}

const char* trifuse_run_log(const trifuse_engine* engine) {
  return engine ? engine->impl.run_log().c_str() : "";
}

trifuse_status trifuse_load_config(trifuse_engine* engine, const char* path) {
  return guarded(engine, [&] { engine->impl.load_config(or_empty(path)); });
}

trifuse_status trifuse_set_option(trifuse_engine* engine, const char* key, const char* value) {
  return guarded(engine, [&] {
    if (!key || !value) trifuse::throw_input("set_option: key and value required");
    engine->impl.set_option(key, value);
  });
}

trifuse_status trifuse_apply_preset(trifuse_engine* engine, const char* name) {
  return guarded(engine, [&] {
    if (!name) trifuse::throw_input("apply_preset: name required");
    engine->impl.apply_preset(name);
  });
}

trifuse_status trifuse_set_threads(trifuse_engine* engine, int threads) {
  return guarded(engine, [&] { engine->impl.set_threads(threads); });
}

trifuse_status trifuse_load_mesh(trifuse_engine* engine, const char* manifest_path) {
  return guarded(engine, [&] {
    if (!manifest_path) trifuse::throw_input("load_mesh: path required");
    engine->impl.load_mesh(manifest_path);
  });
}

trifuse_status trifuse_load_cloud(trifuse_engine* engine, const char* ply_path) {
  return guarded(engine, [&] {
    if (!ply_path) trifuse::throw_input("load_cloud: path required");
    engine->impl.load_cloud(ply_path);
  });
}

trifuse_status trifuse_load_cameras(trifuse_engine* engine, const char* path) {
  return guarded(engine, [&] {
    if (!path) trifuse::throw_input("load_cameras: path required");
    engine->impl.load_cameras(path);
  });
}

trifuse_status trifuse_load_label_scheme(trifuse_engine* engine, const char* path) {
  return guarded(engine, [&] {
    if (!path) trifuse::throw_input("load_label_scheme: path required");
    engine->impl.load_label_scheme(path);
  });
}

trifuse_status trifuse_load_assoc(trifuse_engine* engine, const char* fasc_path) {
  return guarded(engine, [&] {
    if (!fasc_path) trifuse::throw_input("load_assoc: path required");
    engine->impl.load_assoc(fasc_path);
  });
}

uint64_t trifuse_point_count(const trifuse_engine* engine) {
  return engine ? engine->impl.point_count() : 0;
}
uint64_t trifuse_face_count(const trifuse_engine* engine) {
  return engine ? engine->impl.face_count() : 0;
}
uint64_t trifuse_tile_count(const trifuse_engine* engine) {
  return engine ? engine->impl.tile_count() : 0;
}
uint64_t trifuse_camera_count(const trifuse_engine* engine) {
  return engine ? engine->impl.camera_count() : 0;
}

trifuse_status trifuse_run_pcma(trifuse_engine* engine, const char* out_cloud_ply,
                                const char* out_assoc_fasc) {
  return guarded(engine,
                 [&] { engine->impl.cmd_pcma(or_empty(out_cloud_ply), or_empty(out_assoc_fasc)); });
}

trifuse_status trifuse_run_imgma(trifuse_engine* engine, const char* out_dir) {
  return guarded(engine, [&] { engine->impl.cmd_imgma(or_empty(out_dir)); });
}

trifuse_status trifuse_run_pcimga(trifuse_engine* engine, const char* mode, const char* out_dir) {
  return guarded(engine, [&] {
    if (!mode) trifuse::throw_input("pcimga: mode required");
    engine->impl.cmd_pcimga(mode, or_empty(out_dir));
  });
}

trifuse_status trifuse_run_transfer(trifuse_engine* engine, const trifuse_transfer_desc* desc) {
  return guarded(engine, [&] {
    if (!desc || !desc->direction || !desc->kind || !desc->src_attr) {
      trifuse::throw_input("transfer: direction, kind and src_attr required");
    }
    trifuse::pipeline::TransferRequest request;
    request.direction = desc->direction;
    request.kind = desc->kind;
    request.mode = or_empty(desc->mode);
    request.src_attrs = split_csv(desc->src_attr);
    request.dst_attrs = desc->dst_attr ? split_csv(desc->dst_attr) : request.src_attrs;
    request.spxc_dir = or_empty(desc->spxc_dir);
    request.out_cloud = or_empty(desc->out_cloud);
    request.out_mesh_dir = or_empty(desc->out_mesh_dir);
    request.out_spxc_dir = or_empty(desc->out_spxc_dir);
    request.ppm_dir = or_empty(desc->ppm_dir);
    request.report_path = or_empty(desc->report_path);
    request.explicit_aggregate = desc->explicit_use_aggregate != 0;
    engine->impl.cmd_transfer(request);
  });
}

trifuse_status trifuse_run_check(trifuse_engine* engine, const char* report_path) {
  return guarded(engine, [&] { engine->impl.cmd_check(or_empty(report_path)); });
}

trifuse_status trifuse_run_synth(trifuse_engine* engine, const trifuse_synth_desc* desc,
                                 const char* out_dir) {
  return guarded(engine, [&] {
    if (!desc || !desc->template_name || !out_dir) {
      trifuse::throw_input("synth: template and output directory required");
    }
    trifuse::pipeline::SynthRequest request;
    request.template_name = desc->template_name;
    request.seed = desc->seed;
    if (desc->extent > 0.0) request.extent = desc->extent;
    if (desc->density >= 0.0) request.density = desc->density;
    request.noise_sigma = desc->noise_sigma;
    request.shift = {desc->shift_x, desc->shift_y, desc->shift_z};
    request.subdiv = desc->subdiv;
    request.ascii_ply = desc->ascii_ply != 0;
    engine->impl.cmd_synth(request, out_dir);
  });
}

}  // extern "C"

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "imgma.hpp"
#include "pcma.hpp"
#include "scene.hpp"

namespace trifuse::io {

// ---- point clouds (PLY) ----------------------------------------------------
// float64 x y z; int32 label columns; int32 assoc_tile/assoc_face (-1 = none);
// any further float64 columns are features. ASCII and binary little-endian.

struct PlyWriteOptions {
  bool binary = true;
};

void write_point_cloud(const std::filesystem::path& path, const scene::PointCloud& cloud,
                       const PlyWriteOptions& opts = {});
scene::PointCloud read_point_cloud(const std::filesystem::path& path);

// ---- tiled meshes (OBJ + manifest) ------------------------------------------
// manifest: "version 1" then one "tile <id> <relpath> <min xyz> <max xyz>" per
// tile. Face labels/features live in sidecar column files next to each OBJ.

void write_mesh_tiles(const std::filesystem::path& manifest_path, const scene::TiledMesh& mesh);
scene::TiledMesh read_mesh_tiles(const std::filesystem::path& manifest_path);

// ---- cameras ----------------------------------------------------------------
// One record per line: image_id width height fx fy cx cy k1 k2 r11..r33 Cx Cy
// Cz; '#' starts a comment. Rotation is world->camera, row-major, checked for
// orthonormality (tolerance 1e-6).

void write_cameras(const std::filesystem::path& path,
                   const std::vector<scene::CameraModel>& cameras);
std::vector<scene::CameraModel> read_cameras(const std::filesystem::path& path);

// ---- sparse pixel clouds (SPXC, binary little-endian) ------------------------
// magic "SPXC", u32 version, u32 image_id, u32 record count, u16 attribute
// count, attribute descriptors (u16 name length, bytes, u8 type code:
// 1 = int32, 2 = float64), then row-major records of u32 row, u32 col,
// f32 depth, u32 tile_id, u32 face_id, attribute payload.

void write_spxc(const std::filesystem::path& path, const imgma::SparsePixelCloud& cloud);
imgma::SparsePixelCloud read_spxc(const std::filesystem::path& path);

// ---- face associations (FASC, binary little-endian) --------------------------
// magic "FASC", u32 version, u32 tile count; per tile: u32 tile_id, u32 face
// count; per face: u8 level (255 = none), u32 count, u32 point indices.

void write_face_assoc(const std::filesystem::path& path, const scene::TiledMesh& mesh,
                      const pcma::PcmaResult& assoc);
pcma::PcmaResult read_face_assoc(const std::filesystem::path& path, std::size_t point_count);

// ---- label schemes ------------------------------------------------------------
// Text: "<id> <name> <r> <g> <b>" per line.

void write_label_scheme(const std::filesystem::path& path, const scene::LabelScheme& scheme);
scene::LabelScheme read_label_scheme(const std::filesystem::path& path);

// ---- visibility tables ---------------------------------------------------------

void write_visibility(const std::filesystem::path& path, const imgma::VisibilityTable& table);

// ---- config ---------------------------------------------------------------------
// Line-oriented key=value; unknown keys and unparsable values are errors.

struct Config {
  pcma::PcmaConfig pcma_cfg;
  double depth_tie_tol = 1e-9;
  int threads = 0;   // 0 = hardware parallelism
  uint64_t seed = 0;

  static Config defaults();        // H3D preset thresholds
  void apply_preset(const std::string& name);  // "h3d" | "v3d"
  void set(const std::string& key, const std::string& value);
  std::string echo() const;        // key=value lines, canonical order
};

Config read_config(const std::filesystem::path& path);
pcma::ThresholdSchedule parse_schedule(const std::string& text);

// ---- PPM label previews -----------------------------------------------------------
// ASCII P3; pixels not in the sparse cloud render reddish, linked-but-
// unlabeled pixels black.

void write_label_ppm(const std::filesystem::path& path, const imgma::SparsePixelCloud& cloud,
                     const std::string& label_attr, int width, int height,
                     const scene::LabelScheme& scheme);

}  // namespace trifuse::io

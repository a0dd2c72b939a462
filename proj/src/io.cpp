#include "io.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <limits>
#include <sstream>

#include "error.hpp"

namespace trifuse::io {

namespace fs = std::filesystem;

// SPXC and FASC are little-endian on disk and written via memcpy.
static_assert(std::endian::native == std::endian::little,
              "binary writers assume a little-endian host");

namespace {

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::ofstream open_out(const fs::path& path, bool binary) {
  std::ofstream os(path, binary ? std::ios::binary : std::ios::out);
  if (!os) throw_input("cannot open for writing: " + path.string());
  return os;
}

std::ifstream open_in(const fs::path& path, bool binary) {
  std::ifstream is(path, binary ? std::ios::binary : std::ios::in);
  if (!is) throw_input("cannot open for reading: " + path.string());
  return is;
}

// little-endian scalar io
template <typename T>
void put(std::ostream& os, T value) {
  unsigned char bytes[sizeof(T)];
  std::memcpy(bytes, &value, sizeof(T));
  os.write(reinterpret_cast<const char*>(bytes), sizeof(T));
}

template <typename T>
T get(std::istream& is, const char* what) {
  unsigned char bytes[sizeof(T)];
  is.read(reinterpret_cast<char*>(bytes), sizeof(T));
  if (!is) throw_input(std::string("unexpected end of file reading ") + what);
  T value;
  std::memcpy(&value, bytes, sizeof(T));
  return value;
}

std::vector<std::string> split_ws(const std::string& line) {
  std::vector<std::string> out;
  std::istringstream ss(line);
  std::string tok;
  while (ss >> tok) out.push_back(tok);
  return out;
}

double parse_double(const std::string& s, const std::string& context) {
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (end == s.c_str() || *end != '\0') throw_input("unparsable number '" + s + "' in " + context);
  return v;
}

long parse_int(const std::string& s, const std::string& context) {
  char* end = nullptr;
  const long v = std::strtol(s.c_str(), &end, 10);
  if (end == s.c_str() || *end != '\0') {
    throw_input("unparsable integer '" + s + "' in " + context);
  }
  return v;
}

}  // namespace

// ---- PLY --------------------------------------------------------------------

void write_point_cloud(const fs::path& path, const scene::PointCloud& cloud,
                       const PlyWriteOptions& opts) {
  std::ofstream os = open_out(path, true);
  const std::size_t n = cloud.size();
  const bool with_assoc = !cloud.assoc.empty();

  os << "ply\n";
  os << (opts.binary ? "format binary_little_endian 1.0\n" : "format ascii 1.0\n");
  os << "element vertex " << n << "\n";
  os << "property double x\nproperty double y\nproperty double z\n";
  for (const auto& col : cloud.labels) os << "property int " << col.name << "\n";
  if (with_assoc) os << "property int assoc_tile\nproperty int assoc_face\n";
  for (const auto& col : cloud.features) os << "property double " << col.name << "\n";
  os << "end_header\n";

  for (std::size_t i = 0; i < n; ++i) {
    if (opts.binary) {
      put(os, cloud.positions[i].x);
      put(os, cloud.positions[i].y);
      put(os, cloud.positions[i].z);
      for (const auto& col : cloud.labels) put(os, col.values[i]);
      if (with_assoc) {
        put(os, cloud.assoc[i].tile_id);
        put(os, cloud.assoc[i].face_id);
      }
      for (const auto& col : cloud.features) put(os, col.values[i]);
    } else {
      os << fmt_double(cloud.positions[i].x) << ' ' << fmt_double(cloud.positions[i].y) << ' '
         << fmt_double(cloud.positions[i].z);
      for (const auto& col : cloud.labels) os << ' ' << col.values[i];
      if (with_assoc) os << ' ' << cloud.assoc[i].tile_id << ' ' << cloud.assoc[i].face_id;
      for (const auto& col : cloud.features) os << ' ' << fmt_double(col.values[i]);
      os << '\n';
    }
  }
  if (!os) throw_input("write failed: " + path.string());
}

namespace {

enum class PlyType { Double, Float, Int32, UInt32, Int16, UInt16, Int8, UInt8 };

PlyType parse_ply_type(const std::string& t) {
  if (t == "double" || t == "float64") return PlyType::Double;
  if (t == "float" || t == "float32") return PlyType::Float;
  if (t == "int" || t == "int32") return PlyType::Int32;
  if (t == "uint" || t == "uint32") return PlyType::UInt32;
  if (t == "short" || t == "int16") return PlyType::Int16;
  if (t == "ushort" || t == "uint16") return PlyType::UInt16;
  if (t == "char" || t == "int8") return PlyType::Int8;
  if (t == "uchar" || t == "uint8") return PlyType::UInt8;
  throw_input("malformed PLY header: unknown property type '" + t + "'");
}

bool ply_type_integral(PlyType t) { return t != PlyType::Double && t != PlyType::Float; }

double read_ply_binary_value(std::istream& is, PlyType t) {
  switch (t) {
    case PlyType::Double: return get<double>(is, "PLY value");
    case PlyType::Float: return get<float>(is, "PLY value");
    case PlyType::Int32: return get<int32_t>(is, "PLY value");
    case PlyType::UInt32: return get<uint32_t>(is, "PLY value");
    case PlyType::Int16: return get<int16_t>(is, "PLY value");
    case PlyType::UInt16: return get<uint16_t>(is, "PLY value");
    case PlyType::Int8: return get<int8_t>(is, "PLY value");
    case PlyType::UInt8: return get<uint8_t>(is, "PLY value");
  }
  return 0.0;
}

}  // namespace

scene::PointCloud read_point_cloud(const fs::path& path) {
  std::ifstream is = open_in(path, true);
  std::string line;
  if (!std::getline(is, line) || line != "ply") {
    throw_input("malformed PLY header (missing 'ply'): " + path.string());
  }

  bool binary = false;
  bool format_seen = false;
  std::size_t count = 0;
  bool in_vertex_element = false;
  struct Prop {
    std::string name;
    PlyType type;
  };
  std::vector<Prop> props;

  while (std::getline(is, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto tok = split_ws(line);
    if (tok.empty() || tok[0] == "comment") continue;
    if (tok[0] == "format") {
      if (tok.size() < 2) throw_input("malformed PLY format line: " + path.string());
      if (tok[1] == "ascii") {
        binary = false;
      } else if (tok[1] == "binary_little_endian") {
        binary = true;
      } else {
        throw_input("unsupported PLY format '" + tok[1] + "': " + path.string());
      }
      format_seen = true;
    } else if (tok[0] == "element") {
      if (tok.size() != 3) throw_input("malformed PLY element line: " + path.string());
      in_vertex_element = tok[1] == "vertex";
      if (in_vertex_element) count = static_cast<std::size_t>(parse_int(tok[2], "PLY header"));
      else throw_input("unsupported PLY element '" + tok[1] + "': " + path.string());
    } else if (tok[0] == "property") {
      if (!in_vertex_element) throw_input("malformed PLY header: " + path.string());
      if (tok.size() == 3) {
        props.push_back({tok[2], parse_ply_type(tok[1])});
      } else {
        throw_input("unsupported PLY list property: " + path.string());
      }
    } else if (tok[0] == "end_header") {
      break;
    } else {
      throw_input("malformed PLY header line '" + line + "': " + path.string());
    }
  }
  if (!format_seen) throw_input("malformed PLY header (no format): " + path.string());

  int ix = -1, iy = -1, iz = -1, itile = -1, iface = -1;
  for (std::size_t i = 0; i < props.size(); ++i) {
    if (props[i].name == "x") ix = static_cast<int>(i);
    if (props[i].name == "y") iy = static_cast<int>(i);
    if (props[i].name == "z") iz = static_cast<int>(i);
    if (props[i].name == "assoc_tile") itile = static_cast<int>(i);
    if (props[i].name == "assoc_face") iface = static_cast<int>(i);
  }
  if (ix < 0 || iy < 0 || iz < 0) throw_input("PLY misses x/y/z properties: " + path.string());

  scene::PointCloud cloud;
  cloud.positions.resize(count);
  const bool with_assoc = itile >= 0 && iface >= 0;
  if (with_assoc) cloud.assoc.assign(count, scene::kNoFace);
  // Integral columns (except assoc) become labels, floating ones features.
  std::vector<int> column_of(props.size(), -1);
  std::vector<bool> is_label(props.size(), false);
  for (std::size_t i = 0; i < props.size(); ++i) {
    const int ii = static_cast<int>(i);
    if (ii == ix || ii == iy || ii == iz || ii == itile || ii == iface) continue;
    if (ply_type_integral(props[i].type)) {
      column_of[i] = static_cast<int>(cloud.labels.size());
      is_label[i] = true;
      cloud.labels.push_back({props[i].name, std::vector<int32_t>(count, scene::kUnlabeled)});
    } else {
      column_of[i] = static_cast<int>(cloud.features.size());
      cloud.features.push_back({props[i].name, std::vector<double>(count, 0.0)});
    }
  }

  std::vector<double> row(props.size());
  for (std::size_t v = 0; v < count; ++v) {
    if (binary) {
      for (std::size_t p = 0; p < props.size(); ++p) {
        row[p] = read_ply_binary_value(is, props[p].type);
      }
    } else {
      if (!std::getline(is, line)) {
        throw_input("PLY vertex count mismatch: " + path.string());
      }
      if (!line.empty() && line.back() == '\r') line.pop_back();
      const auto tok = split_ws(line);
      if (tok.size() != props.size()) {
        throw_input("PLY vertex count mismatch (fields per line): " + path.string());
      }
      for (std::size_t p = 0; p < props.size(); ++p) row[p] = parse_double(tok[p], "PLY data");
    }
    cloud.positions[v] = {row[ix], row[iy], row[iz]};
    if (with_assoc) {
      cloud.assoc[v] = scene::FaceRef{static_cast<int32_t>(row[itile]),
                                      static_cast<int32_t>(row[iface])};
    }
    for (std::size_t p = 0; p < props.size(); ++p) {
      if (column_of[p] < 0) continue;
      if (is_label[p]) {
        cloud.labels[column_of[p]].values[v] = static_cast<int32_t>(row[p]);
      } else {
        cloud.features[column_of[p]].values[v] = row[p];
      }
    }
  }
  return cloud;
}

// ---- OBJ mesh tiles ----------------------------------------------------------

namespace {

fs::path sidecar_path(const fs::path& obj_path) {
  fs::path p = obj_path;
  p += ".facecols";
  return p;
}

void write_face_columns_sidecar(const fs::path& obj_path, const scene::MeshTile& tile) {
  if (tile.face_labels.empty() && tile.face_features.empty()) {
    std::error_code ec;
    fs::remove(sidecar_path(obj_path), ec);
    return;
  }
  std::ofstream os = open_out(sidecar_path(obj_path), false);
  for (const auto& col : tile.face_labels) {
    os << "label " << col.name << "\n";
    for (std::size_t f = 0; f < col.values.size(); ++f) {
      os << f << ' ' << col.values[f] << "\n";
    }
  }
  for (const auto& col : tile.face_features) {
    os << "feature " << col.name << "\n";
    for (std::size_t f = 0; f < col.values.size(); ++f) {
      os << f << ' ' << fmt_double(col.values[f]) << "\n";
    }
  }
}

void read_face_columns_sidecar(const fs::path& obj_path, scene::MeshTile& tile) {
  const fs::path p = sidecar_path(obj_path);
  if (!fs::exists(p)) return;
  std::ifstream is = open_in(p, false);
  std::string line;
  scene::LabelColumn* label_col = nullptr;
  scene::FeatureColumn* feature_col = nullptr;
  while (std::getline(is, line)) {
    const auto tok = split_ws(line);
    if (tok.empty() || tok[0][0] == '#') continue;
    if (tok[0] == "label" && tok.size() == 2) {
      label_col = &tile.ensure_label(tok[1]);
      feature_col = nullptr;
    } else if (tok[0] == "feature" && tok.size() == 2) {
      feature_col = &tile.ensure_feature(tok[1]);
      label_col = nullptr;
    } else if (tok.size() == 2 && (label_col || feature_col)) {
      const long f = parse_int(tok[0], "face column sidecar");
      if (f < 0 || f >= static_cast<long>(tile.face_count())) {
        throw_input("face column sidecar: face index out of range: " + p.string());
      }
      if (label_col) {
        label_col->values[f] = static_cast<int32_t>(parse_int(tok[1], "face column sidecar"));
      } else {
        feature_col->values[f] = parse_double(tok[1], "face column sidecar");
      }
    } else {
      throw_input("malformed face column sidecar line '" + line + "': " + p.string());
    }
  }
}

}  // namespace

void write_mesh_tiles(const fs::path& manifest_path, const scene::TiledMesh& mesh) {
  const fs::path dir = manifest_path.parent_path();
  if (!dir.empty()) fs::create_directories(dir);
  std::ofstream manifest = open_out(manifest_path, false);
  manifest << "version 1\n";
  for (const auto& tile : mesh.tiles) {
    const std::string rel = "tile_" + std::to_string(tile.tile_id) + ".obj";
    const fs::path obj_path = dir / rel;
    std::ofstream os = open_out(obj_path, false);
    for (const auto& v : tile.vertices) {
      os << "v " << fmt_double(v.x) << ' ' << fmt_double(v.y) << ' ' << fmt_double(v.z) << "\n";
    }
    for (const auto& f : tile.faces) {
      os << "f " << f[0] + 1 << ' ' << f[1] + 1 << ' ' << f[2] + 1 << "\n";
    }
    write_face_columns_sidecar(obj_path, tile);
    const geom::Aabb box = geom::aabb_of(tile.vertices);
    manifest << "tile " << tile.tile_id << ' ' << rel;
    for (double c : {box.min.x, box.min.y, box.min.z, box.max.x, box.max.y, box.max.z}) {
      manifest << ' ' << fmt_double(c);
    }
    manifest << "\n";
  }
}

namespace {

scene::MeshTile read_obj_tile(const fs::path& path, int32_t tile_id) {
  std::ifstream is = open_in(path, false);
  scene::MeshTile tile;
  tile.tile_id = tile_id;
  std::string line;
  while (std::getline(is, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto tok = split_ws(line);
    if (tok.empty()) continue;
    if (tok[0] == "v") {
      if (tok.size() < 4) throw_input("malformed OBJ vertex: " + path.string());
      tile.vertices.push_back({parse_double(tok[1], "OBJ"), parse_double(tok[2], "OBJ"),
                               parse_double(tok[3], "OBJ")});
    } else if (tok[0] == "f") {
      if (tok.size() != 4) {
        throw_input("non-triangle face in OBJ (" + std::to_string(tok.size() - 1) +
                    " vertices): " + path.string());
      }
      std::array<int32_t, 3> face{};
      for (int i = 0; i < 3; ++i) {
        std::string ref = tok[i + 1];
        const auto slash = ref.find('/');
        if (slash != std::string::npos) ref = ref.substr(0, slash);
        const long idx = parse_int(ref, "OBJ face");
        if (idx < 1 || idx > static_cast<long>(tile.vertices.size())) {
          throw_input("dangling vertex index " + std::to_string(idx) + " in " + path.string());
        }
        face[i] = static_cast<int32_t>(idx - 1);
      }
      tile.faces.push_back(face);
    }
    // vt/vn/usemtl/mtllib/o/g/s/# are texture or grouping records; ignored.
  }
  if (tile.vertices.empty()) throw_input("OBJ tile has no vertices: " + path.string());
  return tile;
}

}  // namespace

scene::TiledMesh read_mesh_tiles(const fs::path& manifest_path) {
  std::ifstream is = open_in(manifest_path, false);
  const fs::path dir = manifest_path.parent_path();
  scene::TiledMesh mesh;
  std::string line;
  bool version_seen = false;
  while (std::getline(is, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto tok = split_ws(line);
    if (tok.empty() || tok[0][0] == '#') continue;
    if (tok[0] == "version") {
      version_seen = true;
      continue;
    }
    if (tok[0] != "tile" || tok.size() != 9) {
      throw_input("malformed manifest line '" + line + "': " + manifest_path.string());
    }
    const int32_t tile_id = static_cast<int32_t>(parse_int(tok[1], "manifest"));
    if (tile_id < 0) throw_input("manifest tile ids must be non-negative");
    if (mesh.find_tile(tile_id)) {
      throw_input("duplicate tile id " + std::to_string(tile_id) + " in manifest");
    }
    const fs::path obj_path = dir / tok[2];
    if (!fs::exists(obj_path)) {
      throw_input("manifest references missing tile file: " + obj_path.string());
    }
    scene::MeshTile tile = read_obj_tile(obj_path, tile_id);
    read_face_columns_sidecar(obj_path, tile);
    tile.recompute_mbb();
    const geom::Aabb stated{{parse_double(tok[3], "manifest"), parse_double(tok[4], "manifest"),
                             parse_double(tok[5], "manifest")},
                            {parse_double(tok[6], "manifest"), parse_double(tok[7], "manifest"),
                             parse_double(tok[8], "manifest")}};
    const double mismatch = std::max(
        {std::abs(stated.min.x - tile.mbb.min.x), std::abs(stated.min.y - tile.mbb.min.y),
         std::abs(stated.min.z - tile.mbb.min.z), std::abs(stated.max.x - tile.mbb.max.x),
         std::abs(stated.max.y - tile.mbb.max.y), std::abs(stated.max.z - tile.mbb.max.z)});
    if (mismatch > 1e-6) {
      throw_input("manifest bounding box disagrees with tile content (" +
                  std::to_string(mismatch) + " m): " + obj_path.string());
    }
    mesh.tile_paths[tile_id] = obj_path.string();
    mesh.tiles.push_back(std::move(tile));
  }
  if (!version_seen) throw_input("manifest misses version line: " + manifest_path.string());
  std::sort(mesh.tiles.begin(), mesh.tiles.end(),
            [](const scene::MeshTile& a, const scene::MeshTile& b) {
              return a.tile_id < b.tile_id;
            });
  return mesh;
}

// ---- cameras -------------------------------------------------------------------

void write_cameras(const fs::path& path, const std::vector<scene::CameraModel>& cameras) {
  std::ofstream os = open_out(path, false);
  os << "# image_id width height fx fy cx cy k1 k2 r11 r12 r13 r21 r22 r23 r31 r32 r33 Cx Cy Cz\n";
  for (const auto& cam : cameras) {
    os << cam.image_id << ' ' << cam.width << ' ' << cam.height << ' ' << fmt_double(cam.fx)
       << ' ' << fmt_double(cam.fy) << ' ' << fmt_double(cam.cx) << ' ' << fmt_double(cam.cy)
       << ' ' << fmt_double(cam.k1) << ' ' << fmt_double(cam.k2);
    for (double r : cam.rotation) os << ' ' << fmt_double(r);
    os << ' ' << fmt_double(cam.center.x) << ' ' << fmt_double(cam.center.y) << ' '
       << fmt_double(cam.center.z) << "\n";
  }
}

std::vector<scene::CameraModel> read_cameras(const fs::path& path) {
  std::ifstream is = open_in(path, false);
  std::vector<scene::CameraModel> cams;
  std::string line;
  while (std::getline(is, line)) {
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    const auto tok = split_ws(line);
    if (tok.empty()) continue;
    if (tok.size() != 21) {
      throw_input("camera record needs 21 fields, got " + std::to_string(tok.size()) + ": " +
                  path.string());
    }
    scene::CameraModel cam;
    cam.image_id = static_cast<int32_t>(parse_int(tok[0], "cameras"));
    cam.width = static_cast<int32_t>(parse_int(tok[1], "cameras"));
    cam.height = static_cast<int32_t>(parse_int(tok[2], "cameras"));
    cam.fx = parse_double(tok[3], "cameras");
    cam.fy = parse_double(tok[4], "cameras");
    cam.cx = parse_double(tok[5], "cameras");
    cam.cy = parse_double(tok[6], "cameras");
    cam.k1 = parse_double(tok[7], "cameras");
    cam.k2 = parse_double(tok[8], "cameras");
    for (int i = 0; i < 9; ++i) cam.rotation[i] = parse_double(tok[9 + i], "cameras");
    cam.center = {parse_double(tok[18], "cameras"), parse_double(tok[19], "cameras"),
                  parse_double(tok[20], "cameras")};
    if (cam.width <= 0 || cam.height <= 0 || cam.fx <= 0.0 || cam.fy <= 0.0) {
      throw_input("camera " + std::to_string(cam.image_id) + ": invalid intrinsics");
    }
    const double err = cam.orthonormality_error();
    if (err > 1e-6) {
      throw_input("camera " + std::to_string(cam.image_id) +
                  ": rotation not orthonormal (error " + std::to_string(err) + ")");
    }
    for (const auto& existing : cams) {
      if (existing.image_id == cam.image_id) {
        throw_input("duplicate image id " + std::to_string(cam.image_id) + ": " + path.string());
      }
    }
    cams.push_back(cam);
  }
  return cams;
}

// ---- SPXC ----------------------------------------------------------------------

void write_spxc(const fs::path& path, const imgma::SparsePixelCloud& cloud) {
  std::ofstream os = open_out(path, true);
  os.write("SPXC", 4);
  put<uint32_t>(os, 1);
  put<uint32_t>(os, static_cast<uint32_t>(cloud.image_id));
  put<uint32_t>(os, static_cast<uint32_t>(cloud.records.size()));
  put<uint16_t>(os, static_cast<uint16_t>(cloud.labels.size() + cloud.features.size()));
  auto put_name = [&os](const std::string& name, uint8_t code) {
    put<uint16_t>(os, static_cast<uint16_t>(name.size()));
    os.write(name.data(), static_cast<std::streamsize>(name.size()));
    put<uint8_t>(os, code);
  };
  for (const auto& col : cloud.labels) put_name(col.name, 1);
  for (const auto& col : cloud.features) put_name(col.name, 2);
  for (std::size_t r = 0; r < cloud.records.size(); ++r) {
    const auto& rec = cloud.records[r];
    put<uint32_t>(os, rec.row);
    put<uint32_t>(os, rec.col);
    put<float>(os, static_cast<float>(rec.depth));
    put<uint32_t>(os, static_cast<uint32_t>(rec.tile_id));
    put<uint32_t>(os, static_cast<uint32_t>(rec.face_id));
    for (const auto& col : cloud.labels) put<int32_t>(os, col.values[r]);
    for (const auto& col : cloud.features) put<double>(os, col.values[r]);
  }
  if (!os) throw_input("write failed: " + path.string());
}

imgma::SparsePixelCloud read_spxc(const fs::path& path) {
  std::ifstream is = open_in(path, true);
  char magic[4];
  is.read(magic, 4);
  if (!is || std::memcmp(magic, "SPXC", 4) != 0) {
    throw_input("bad SPXC magic: " + path.string());
  }
  const uint32_t version = get<uint32_t>(is, "SPXC version");
  if (version != 1) throw_input("unsupported SPXC version: " + path.string());
  imgma::SparsePixelCloud cloud;
  cloud.image_id = static_cast<int32_t>(get<uint32_t>(is, "SPXC image id"));
  const uint32_t count = get<uint32_t>(is, "SPXC record count");
  const uint16_t attr_count = get<uint16_t>(is, "SPXC attribute count");
  std::vector<uint8_t> attr_types;
  std::vector<bool> attr_is_label;
  for (uint16_t a = 0; a < attr_count; ++a) {
    const uint16_t len = get<uint16_t>(is, "SPXC attribute name length");
    std::string name(len, '\0');
    is.read(name.data(), len);
    if (!is) throw_input("unexpected end of file in SPXC attributes: " + path.string());
    const uint8_t code = get<uint8_t>(is, "SPXC attribute type");
    if (code == 1) {
      cloud.labels.push_back({name, std::vector<int32_t>(count, scene::kUnlabeled)});
      attr_is_label.push_back(true);
    } else if (code == 2) {
      cloud.features.push_back({name, std::vector<double>(count, 0.0)});
      attr_is_label.push_back(false);
    } else {
      throw_input("unknown SPXC attribute type code: " + path.string());
    }
    attr_types.push_back(code);
  }
  cloud.records.resize(count);
  uint64_t prev_key = 0;
  for (uint32_t r = 0; r < count; ++r) {
    auto& rec = cloud.records[r];
    rec.row = get<uint32_t>(is, "SPXC record");
    rec.col = get<uint32_t>(is, "SPXC record");
    rec.depth = get<float>(is, "SPXC record");
    rec.tile_id = static_cast<int32_t>(get<uint32_t>(is, "SPXC record"));
    rec.face_id = static_cast<int32_t>(get<uint32_t>(is, "SPXC record"));
    const uint64_t key = (static_cast<uint64_t>(rec.row) << 32) | rec.col;
    if (r > 0 && key <= prev_key) {
      throw_input("SPXC records not sorted row-major: " + path.string());
    }
    prev_key = key;
    std::size_t il = 0, if_ = 0;
    for (std::size_t a = 0; a < attr_is_label.size(); ++a) {
      if (attr_is_label[a]) {
        cloud.labels[il++].values[r] = get<int32_t>(is, "SPXC attribute value");
      } else {
        cloud.features[if_++].values[r] = get<double>(is, "SPXC attribute value");
      }
    }
  }
  return cloud;
}

// ---- FASC ----------------------------------------------------------------------

void write_face_assoc(const fs::path& path, const scene::TiledMesh& mesh,
                      const pcma::PcmaResult& assoc) {
  std::ofstream os = open_out(path, true);
  os.write("FASC", 4);
  put<uint32_t>(os, 1);
  put<uint32_t>(os, static_cast<uint32_t>(mesh.tiles.size()));
  for (std::size_t t = 0; t < mesh.tiles.size(); ++t) {
    put<uint32_t>(os, static_cast<uint32_t>(mesh.tiles[t].tile_id));
    put<uint32_t>(os, static_cast<uint32_t>(assoc.faces[t].size()));
    for (const auto& fl : assoc.faces[t]) {
      const uint8_t level = fl.level == pcma::kNoLevel ? 255 : static_cast<uint8_t>(fl.level);
      put<uint8_t>(os, level);
      put<uint32_t>(os, static_cast<uint32_t>(fl.points.size()));
      for (uint32_t p : fl.points) put<uint32_t>(os, p);
    }
  }
  if (!os) throw_input("write failed: " + path.string());
}

pcma::PcmaResult read_face_assoc(const fs::path& path, std::size_t point_count) {
  std::ifstream is = open_in(path, true);
  char magic[4];
  is.read(magic, 4);
  if (!is || std::memcmp(magic, "FASC", 4) != 0) {
    throw_input("bad FASC magic: " + path.string());
  }
  const uint32_t version = get<uint32_t>(is, "FASC version");
  if (version != 1) throw_input("unsupported FASC version: " + path.string());
  pcma::PcmaResult result;
  result.point_face.assign(point_count, scene::kNoFace);
  result.point_distance.assign(point_count, std::numeric_limits<double>::quiet_NaN());
  const uint32_t tile_count = get<uint32_t>(is, "FASC tile count");
  result.faces.resize(tile_count);
  for (uint32_t t = 0; t < tile_count; ++t) {
    const int32_t tile_id = static_cast<int32_t>(get<uint32_t>(is, "FASC tile id"));
    const uint32_t face_count = get<uint32_t>(is, "FASC face count");
    result.faces[t].resize(face_count);
    for (uint32_t f = 0; f < face_count; ++f) {
      auto& fl = result.faces[t][f];
      const uint8_t level = get<uint8_t>(is, "FASC level");
      fl.level = level == 255 ? pcma::kNoLevel : level;
      const uint32_t n = get<uint32_t>(is, "FASC point count");
      fl.points.resize(n);
      for (uint32_t i = 0; i < n; ++i) {
        const uint32_t p = get<uint32_t>(is, "FASC point index");
        if (p >= point_count) {
          throw_input("FASC point index out of range: " + path.string());
        }
        fl.points[i] = p;
        result.point_face[p] = scene::FaceRef{tile_id, static_cast<int32_t>(f)};
      }
    }
  }
  return result;
}

// ---- label scheme ----------------------------------------------------------------

void write_label_scheme(const fs::path& path, const scene::LabelScheme& scheme) {
  std::ofstream os = open_out(path, false);
  os << "# id name r g b\n";
  for (const auto& [id, cls] : scheme.classes) {
    os << id << ' ' << cls.name << ' ' << cls.rgb[0] << ' ' << cls.rgb[1] << ' ' << cls.rgb[2]
       << "\n";
  }
}

scene::LabelScheme read_label_scheme(const fs::path& path) {
  std::ifstream is = open_in(path, false);
  scene::LabelScheme scheme;
  std::string line;
  while (std::getline(is, line)) {
    const auto tok = split_ws(line);
    if (tok.empty() || tok[0][0] == '#') continue;
    if (tok.size() != 5) throw_input("malformed label scheme line: " + path.string());
    const int32_t id = static_cast<int32_t>(parse_int(tok[0], "label scheme"));
    if (id < 0) throw_input("label scheme ids must be non-negative: " + path.string());
    if (scheme.classes.count(id)) throw_input("duplicate label scheme id: " + path.string());
    scene::LabelClass cls;
    cls.name = tok[1];
    cls.rgb = {static_cast<int>(parse_int(tok[2], "scheme")),
               static_cast<int>(parse_int(tok[3], "scheme")),
               static_cast<int>(parse_int(tok[4], "scheme"))};
    scheme.classes[id] = cls;
  }
  return scheme;
}

// ---- visibility table -------------------------------------------------------------

void write_visibility(const fs::path& path, const imgma::VisibilityTable& table) {
  std::ofstream os = open_out(path, false);
  os << "# visibility: image -> tiles, tile -> images\n";
  for (const auto& [image, tiles] : table.image_tiles) {
    os << "image " << image << " :";
    for (int32_t t : tiles) os << ' ' << t;
    os << "\n";
  }
  for (const auto& [tile, images] : table.tile_images) {
    os << "tile " << tile << " :";
    for (int32_t i : images) os << ' ' << i;
    os << "\n";
  }
}

// ---- config ------------------------------------------------------------------------

Config Config::defaults() {
  Config cfg;
  cfg.pcma_cfg.schedule.levels = {{0.05, 0.05}, {0.10, 0.10}, {0.15, 0.15}};
  cfg.pcma_cfg.boundary_policy = pcma::BoundaryPolicy::Exclude;
  cfg.pcma_cfg.edge_tolerance = 1e-9;
  cfg.depth_tie_tol = 1e-9;
  cfg.threads = 0;
  cfg.seed = 0;
  return cfg;
}

void Config::apply_preset(const std::string& name) {
  if (name == "h3d") {
    pcma_cfg.schedule.levels = {{0.05, 0.05}, {0.10, 0.10}, {0.15, 0.15}};
  } else if (name == "v3d") {
    pcma_cfg.schedule.levels = {{0.30, 0.30}, {0.60, 0.60}, {1.20, 1.20}};
  } else {
    throw_input("unknown preset '" + name + "' (expected h3d or v3d)");
  }
}

pcma::ThresholdSchedule parse_schedule(const std::string& text) {
  pcma::ThresholdSchedule schedule;
  std::istringstream ss(text);
  std::string level;
  while (std::getline(ss, level, ',')) {
    const auto colon = level.find(':');
    if (colon == std::string::npos) {
      throw_input("unparsable threshold level '" + level + "' (expected minus:plus)");
    }
    schedule.levels.push_back(
        {parse_double(level.substr(0, colon), "pcma.levels"),
         parse_double(level.substr(colon + 1), "pcma.levels")});
  }
  schedule.validate();
  return schedule;
}

void Config::set(const std::string& key, const std::string& value) {
  if (key == "pcma.levels") {
    pcma_cfg.schedule = parse_schedule(value);
  } else if (key == "pcma.boundary_policy") {
    if (value == "exclude") {
      pcma_cfg.boundary_policy = pcma::BoundaryPolicy::Exclude;
    } else if (value == "include") {
      pcma_cfg.boundary_policy = pcma::BoundaryPolicy::Include;
    } else {
      throw_input("unparsable pcma.boundary_policy '" + value + "'");
    }
  } else if (key == "pcma.edge_tolerance") {
    pcma_cfg.edge_tolerance = parse_double(value, key);
    if (pcma_cfg.edge_tolerance < 0.0) throw_input("pcma.edge_tolerance must be >= 0");
  } else if (key == "imgma.depth_tie_tol") {
    depth_tie_tol = parse_double(value, key);
    if (depth_tie_tol < 0.0) throw_input("imgma.depth_tie_tol must be >= 0");
  } else if (key == "threads") {
    threads = static_cast<int>(parse_int(value, key));
    if (threads < 0) throw_input("threads must be >= 0");
  } else if (key == "seed") {
    seed = static_cast<uint64_t>(parse_int(value, key));
  } else {
    throw_input("unknown config key '" + key + "'");
  }
}

std::string Config::echo() const {
  std::ostringstream os;
  os << "pcma.levels=";
  for (std::size_t i = 0; i < pcma_cfg.schedule.levels.size(); ++i) {
    if (i) os << ',';
    os << fmt_double(pcma_cfg.schedule.levels[i].theta_minus) << ':'
       << fmt_double(pcma_cfg.schedule.levels[i].theta_plus);
  }
  os << "\npcma.boundary_policy="
     << (pcma_cfg.boundary_policy == pcma::BoundaryPolicy::Exclude ? "exclude" : "include");
  os << "\npcma.edge_tolerance=" << fmt_double(pcma_cfg.edge_tolerance);
  os << "\nimgma.depth_tie_tol=" << fmt_double(depth_tie_tol);
  os << "\nthreads=" << threads;
  os << "\nseed=" << seed << "\n";
  return os.str();
}

Config read_config(const fs::path& path) {
  Config cfg = Config::defaults();
  if (path.empty() || !fs::exists(path)) return cfg;
  std::ifstream is = open_in(path, false);
  std::string line;
  while (std::getline(is, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::string trimmed = line;
    const auto hash = trimmed.find('#');
    if (hash != std::string::npos) trimmed = trimmed.substr(0, hash);
    if (split_ws(trimmed).empty()) continue;
    const auto eq = trimmed.find('=');
    if (eq == std::string::npos) throw_input("malformed config line '" + line + "'");
    auto strip = [](std::string s) {
      const auto b = s.find_first_not_of(" \t");
      const auto e = s.find_last_not_of(" \t");
      return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    cfg.set(strip(trimmed.substr(0, eq)), strip(trimmed.substr(eq + 1)));
  }
  return cfg;
}

// ---- PPM ------------------------------------------------------------------------------

void write_label_ppm(const fs::path& path, const imgma::SparsePixelCloud& cloud,
                     const std::string& label_attr, int width, int height,
                     const scene::LabelScheme& scheme) {
  const auto* col = cloud.find_label(label_attr);
  if (!col) throw_input("write_label_ppm: no label column '" + label_attr + "'");
  // Reddish marks pixels without a face link, black marks links to unlabeled
  // faces.
  const std::array<int, 3> unassociated{205, 92, 92};
  const std::array<int, 3> black{0, 0, 0};
  std::vector<std::array<int, 3>> img(static_cast<std::size_t>(width) * height, unassociated);
  for (std::size_t r = 0; r < cloud.records.size(); ++r) {
    const auto& rec = cloud.records[r];
    if (rec.row >= static_cast<uint32_t>(height) || rec.col >= static_cast<uint32_t>(width)) {
      continue;
    }
    const int32_t label = col->values[r];
    img[rec.row * static_cast<std::size_t>(width) + rec.col] =
        label >= 0 ? scheme.color_of(label) : black;
  }
  std::ofstream os = open_out(path, false);
  os << "P3\n" << width << ' ' << height << "\n255\n";
  for (int r = 0; r < height; ++r) {
    for (int c = 0; c < width; ++c) {
      const auto& px = img[static_cast<std::size_t>(r) * width + c];
      os << px[0] << ' ' << px[1] << ' ' << px[2] << (c + 1 == width ? "" : " ");
    }
    os << "\n";
  }
}

}  // namespace trifuse::io

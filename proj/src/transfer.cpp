#include "transfer.hpp"

#include <algorithm>
#include <map>
#include <set>

#include "error.hpp"

namespace trifuse::transfer {

int32_t majority_vote(std::span<const int32_t> labels) {
  std::map<int32_t, std::size_t> counts;
  for (int32_t l : labels) {
    if (l >= 0) ++counts[l];
  }
  if (counts.empty()) return scene::kUnlabeled;
  int32_t best = -1;
  std::size_t best_count = 0;
  for (const auto& [label, count] : counts) {  // ascending id: ties keep the lowest
    if (count > best_count) {
      best = label;
      best_count = count;
    }
  }
  return best;
}

double median(std::vector<double> values) {
  if (values.empty()) return 0.0;
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  if (n % 2 == 1) return values[n / 2];
  return 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

std::vector<double> median_aggregate(const std::vector<std::vector<double>>& vectors,
                                     std::size_t dim) {
  std::vector<double> out(dim, 0.0);
  if (vectors.empty()) return out;
  std::vector<double> column;
  column.reserve(vectors.size());
  for (std::size_t d = 0; d < dim; ++d) {
    column.clear();
    for (const auto& v : vectors) {
      if (v.size() != dim) throw_input("median_aggregate: inconsistent vector length");
      column.push_back(v[d]);
    }
    out[d] = median(column);
  }
  return out;
}

Direction parse_direction(const std::string& name) {
  if (name == "mesh-to-pc") return Direction::MeshToPc;
  if (name == "pc-to-mesh") return Direction::PcToMesh;
  if (name == "mesh-to-img") return Direction::MeshToImg;
  if (name == "img-to-mesh") return Direction::ImgToMesh;
  if (name == "pc-to-img") return Direction::PcToImg;
  if (name == "img-to-pc") return Direction::ImgToPc;
  throw_input("unknown transfer direction: " + name);
}

std::string direction_name(Direction d) {
  switch (d) {
    case Direction::MeshToPc: return "mesh-to-pc";
    case Direction::PcToMesh: return "pc-to-mesh";
    case Direction::MeshToImg: return "mesh-to-img";
    case Direction::ImgToMesh: return "img-to-mesh";
    case Direction::PcToImg: return "pc-to-img";
    case Direction::ImgToPc: return "img-to-pc";
  }
  return "?";
}

namespace {

struct TileLookup {
  std::map<int32_t, std::size_t> index;
  explicit TileLookup(const scene::TiledMesh& mesh) {
    for (std::size_t t = 0; t < mesh.tiles.size(); ++t) index[mesh.tiles[t].tile_id] = t;
  }
  std::size_t at(int32_t tile_id) const {
    auto it = index.find(tile_id);
    if (it == index.end()) throw_input("transfer: unknown tile id in association");
    return it->second;
  }
};

// Per-target source buckets; values are doubles for both kinds (labels fit
// exactly). Aggregate and write per spec'd kind.
struct Buckets {
  std::vector<std::vector<double>> values;
  explicit Buckets(std::size_t n) : values(n) {}
};

struct ColumnCounters {
  std::size_t transferred = 0;
  std::size_t aggregations = 0;
  std::size_t unanimous = 0;
};

// Reduces one bucket list into a target column.
template <typename WriteFn>
ColumnCounters reduce_buckets(const Buckets& buckets, Kind kind, WriteFn&& write) {
  ColumnCounters counters;
  for (std::size_t k = 0; k < buckets.values.size(); ++k) {
    const auto& vals = buckets.values[k];
    if (kind == Kind::Label) {
      std::vector<int32_t> labels;
      labels.reserve(vals.size());
      for (double v : vals) labels.push_back(static_cast<int32_t>(v));
      const int32_t vote = majority_vote(labels);
      write(k, static_cast<double>(vote));
      std::size_t valid = 0;
      for (int32_t l : labels) {
        if (l >= 0) ++valid;
      }
      if (vote >= 0) ++counters.transferred;
      if (valid > 1) {
        ++counters.aggregations;
        bool all_same = true;
        int32_t first = -1;
        for (int32_t l : labels) {
          if (l < 0) continue;
          if (first < 0) {
            first = l;
          } else if (l != first) {
            all_same = false;
          }
        }
        if (all_same) ++counters.unanimous;
      }
    } else {
      write(k, median(vals));
      if (!vals.empty()) ++counters.transferred;
      if (vals.size() > 1) {
        ++counters.aggregations;
        bool all_same = true;
        for (double v : vals) {
          if (v != vals.front()) all_same = false;
        }
        if (all_same) ++counters.unanimous;
      }
    }
  }
  return counters;
}

std::vector<double> read_point_column(const scene::PointCloud& cloud, Kind kind,
                                      const std::string& name) {
  std::vector<double> out;
  if (kind == Kind::Label) {
    const auto* col = cloud.find_label(name);
    if (!col) throw_input("transfer: unknown point label column '" + name + "'");
    out.assign(col->values.begin(), col->values.end());
  } else {
    const auto* col = cloud.find_feature(name);
    if (!col) throw_input("transfer: unknown point feature column '" + name + "'");
    out = col->values;
  }
  return out;
}

std::vector<double> read_face_column(const scene::MeshTile& tile, Kind kind,
                                     const std::string& name) {
  std::vector<double> out;
  if (kind == Kind::Label) {
    const auto* col = tile.find_label(name);
    if (!col) {
      throw_input("transfer: tile " + std::to_string(tile.tile_id) +
                  " lacks face label column '" + name + "'");
    }
    out.assign(col->values.begin(), col->values.end());
  } else {
    const auto* col = tile.find_feature(name);
    if (!col) {
      throw_input("transfer: tile " + std::to_string(tile.tile_id) +
                  " lacks face feature column '" + name + "'");
    }
    out = col->values;
  }
  return out;
}

std::vector<double> read_pixel_column(const imgma::SparsePixelCloud& spx, Kind kind,
                                      const std::string& name) {
  std::vector<double> out;
  if (kind == Kind::Label) {
    const auto* col = spx.find_label(name);
    if (!col) {
      throw_input("transfer: image " + std::to_string(spx.image_id) +
                  " lacks pixel label column '" + name + "'");
    }
    out.assign(col->values.begin(), col->values.end());
  } else {
    const auto* col = spx.find_feature(name);
    if (!col) {
      throw_input("transfer: image " + std::to_string(spx.image_id) +
                  " lacks pixel feature column '" + name + "'");
    }
    out = col->values;
  }
  return out;
}

void write_point_column(scene::PointCloud& cloud, Kind kind, const std::string& name,
                        const std::vector<double>& values) {
  if (kind == Kind::Label) {
    auto& col = cloud.ensure_label(name);
    for (std::size_t i = 0; i < values.size(); ++i) {
      col.values[i] = static_cast<int32_t>(values[i]);
    }
  } else {
    cloud.ensure_feature(name).values = values;
  }
}

// Aggregates point values onto faces; returns per-tile face columns.
std::vector<std::vector<double>> aggregate_points_to_faces(const scene::TiledMesh& mesh,
                                                           const pcma::PcmaResult& assoc,
                                                           const std::vector<double>& point_vals,
                                                           Kind kind, ColumnCounters* counters) {
  std::vector<std::vector<double>> face_vals(mesh.tiles.size());
  for (std::size_t t = 0; t < mesh.tiles.size(); ++t) {
    Buckets buckets(mesh.tiles[t].face_count());
    for (std::size_t f = 0; f < mesh.tiles[t].face_count(); ++f) {
      for (uint32_t p : assoc.faces[t][f].points) buckets.values[f].push_back(point_vals[p]);
    }
    face_vals[t].assign(mesh.tiles[t].face_count(),
                        kind == Kind::Label ? scene::kUnlabeled : 0.0);
    const ColumnCounters c = reduce_buckets(buckets, kind, [&](std::size_t f, double v) {
      face_vals[t][f] = v;
    });
    if (counters) {
      counters->transferred += c.transferred;
      counters->aggregations += c.aggregations;
      counters->unanimous += c.unanimous;
    }
  }
  return face_vals;
}

// Aggregates pixel values onto faces across all images.
std::vector<std::vector<double>> aggregate_pixels_to_faces(
    const scene::TiledMesh& mesh, const std::vector<imgma::SparsePixelCloud>& pixel_clouds,
    Kind kind, const std::string& src, const TileLookup& lookup, ColumnCounters* counters) {
  std::vector<Buckets> buckets;
  buckets.reserve(mesh.tiles.size());
  for (const auto& tile : mesh.tiles) buckets.emplace_back(tile.face_count());
  for (const auto& spx : pixel_clouds) {
    const std::vector<double> vals = read_pixel_column(spx, kind, src);
    for (std::size_t r = 0; r < spx.records.size(); ++r) {
      const auto& rec = spx.records[r];
      buckets[lookup.at(rec.tile_id)].values[rec.face_id].push_back(vals[r]);
    }
  }
  std::vector<std::vector<double>> face_vals(mesh.tiles.size());
  for (std::size_t t = 0; t < mesh.tiles.size(); ++t) {
    face_vals[t].assign(mesh.tiles[t].face_count(),
                        kind == Kind::Label ? scene::kUnlabeled : 0.0);
    const ColumnCounters c = reduce_buckets(buckets[t], kind, [&](std::size_t f, double v) {
      face_vals[t][f] = v;
    });
    if (counters) {
      counters->transferred += c.transferred;
      counters->aggregations += c.aggregations;
      counters->unanimous += c.unanimous;
    }
  }
  return face_vals;
}

// Copies per-tile face values to every linked pixel. Labeled kinds map an
// unlabeled face to kLinkedUnlabeled (distinct from "not linked").
ColumnCounters copy_faces_to_pixels(const std::vector<std::vector<double>>& face_vals,
                                    std::vector<imgma::SparsePixelCloud>& pixel_clouds,
                                    Kind kind, const std::string& dst,
                                    const TileLookup& lookup) {
  ColumnCounters counters;
  for (auto& spx : pixel_clouds) {
    if (kind == Kind::Label) {
      auto& col = spx.ensure_label(dst);
      for (std::size_t r = 0; r < spx.records.size(); ++r) {
        const auto& rec = spx.records[r];
        const double v = face_vals[lookup.at(rec.tile_id)][rec.face_id];
        const int32_t label = static_cast<int32_t>(v);
        col.values[r] = label >= 0 ? label : scene::kLinkedUnlabeled;
        if (label >= 0) ++counters.transferred;
      }
    } else {
      auto& col = spx.ensure_feature(dst);
      for (std::size_t r = 0; r < spx.records.size(); ++r) {
        const auto& rec = spx.records[r];
        col.values[r] = face_vals[lookup.at(rec.tile_id)][rec.face_id];
        ++counters.transferred;
      }
    }
  }
  return counters;
}

void write_face_columns(scene::TiledMesh& mesh, Kind kind, const std::string& dst,
                        const std::vector<std::vector<double>>& face_vals) {
  for (std::size_t t = 0; t < mesh.tiles.size(); ++t) {
    if (kind == Kind::Label) {
      auto& col = mesh.tiles[t].ensure_label(dst);
      for (std::size_t f = 0; f < face_vals[t].size(); ++f) {
        col.values[f] = static_cast<int32_t>(face_vals[t][f]);
      }
    } else {
      mesh.tiles[t].ensure_feature(dst).values = face_vals[t];
    }
  }
}

}  // namespace

TransferReport run_transfer(const TransferSpec& spec, SceneRefs refs, AssociationRefs assoc) {
  if (spec.src_attrs.empty() || spec.src_attrs.size() != spec.dst_attrs.size()) {
    throw_input("transfer: source/target attribute lists must match and be non-empty");
  }
  const bool pc_img = spec.direction == Direction::PcToImg || spec.direction == Direction::ImgToPc;
  if (pc_img && !spec.mode) throw_input("transfer: pc<->img directions require a mode");

  TransferReport report;
  bool first_column = true;

  for (std::size_t a = 0; a < spec.src_attrs.size(); ++a) {
    const std::string& src = spec.src_attrs[a];
    const std::string& dst = spec.dst_attrs[a];
    ColumnCounters counters;
    std::size_t targets = 0;

    switch (spec.direction) {
      case Direction::MeshToPc: {
        if (!refs.mesh || !refs.cloud) throw_input("transfer: mesh and cloud required");
        if (!assoc.pcma) throw_input("transfer: point-face association missing");
        const TileLookup lookup(*refs.mesh);
        targets = refs.cloud->size();
        std::vector<std::vector<double>> face_vals(refs.mesh->tiles.size());
        for (std::size_t t = 0; t < refs.mesh->tiles.size(); ++t) {
          face_vals[t] = read_face_column(refs.mesh->tiles[t], spec.kind, src);
        }
        std::vector<double> out(targets, spec.kind == Kind::Label ? scene::kUnlabeled : 0.0);
        for (std::size_t p = 0; p < targets; ++p) {
          const scene::FaceRef ref = assoc.pcma->point_face[p];
          if (!ref.valid()) continue;
          out[p] = face_vals[lookup.at(ref.tile_id)][ref.face_id];
          if (spec.kind != Kind::Label || out[p] >= 0) ++counters.transferred;
        }
        write_point_column(*refs.cloud, spec.kind, dst, out);
        break;
      }
      case Direction::PcToMesh: {
        if (!refs.mesh || !refs.cloud) throw_input("transfer: mesh and cloud required");
        if (!assoc.pcma) throw_input("transfer: point-face association missing");
        targets = refs.mesh->total_faces();
        const std::vector<double> point_vals = read_point_column(*refs.cloud, spec.kind, src);
        const auto face_vals =
            aggregate_points_to_faces(*refs.mesh, *assoc.pcma, point_vals, spec.kind, &counters);
        write_face_columns(*refs.mesh, spec.kind, dst, face_vals);
        break;
      }
      case Direction::MeshToImg: {
        if (!refs.mesh || !refs.pixel_clouds) throw_input("transfer: mesh and images required");
        const TileLookup lookup(*refs.mesh);
        for (const auto& spx : *refs.pixel_clouds) targets += spx.size();
        std::vector<std::vector<double>> face_vals(refs.mesh->tiles.size());
        for (std::size_t t = 0; t < refs.mesh->tiles.size(); ++t) {
          face_vals[t] = read_face_column(refs.mesh->tiles[t], spec.kind, src);
        }
        counters = copy_faces_to_pixels(face_vals, *refs.pixel_clouds, spec.kind, dst, lookup);
        break;
      }
      case Direction::ImgToMesh: {
        if (!refs.mesh || !refs.pixel_clouds) throw_input("transfer: mesh and images required");
        const TileLookup lookup(*refs.mesh);
        targets = refs.mesh->total_faces();
        const auto face_vals = aggregate_pixels_to_faces(*refs.mesh, *refs.pixel_clouds,
                                                         spec.kind, src, lookup, &counters);
        write_face_columns(*refs.mesh, spec.kind, dst, face_vals);
        break;
      }
      case Direction::PcToImg: {
        if (!refs.mesh || !refs.cloud || !refs.pixel_clouds) {
          throw_input("transfer: mesh, cloud and images required");
        }
        for (const auto& spx : *refs.pixel_clouds) targets += spx.size();
        if (*spec.mode == Mode::Implicit) {
          if (!assoc.pcma) throw_input("transfer: point-face association missing");
          const TileLookup lookup(*refs.mesh);
          const std::vector<double> point_vals =
              read_point_column(*refs.cloud, spec.kind, src);
          const auto face_vals = aggregate_points_to_faces(*refs.mesh, *assoc.pcma, point_vals,
                                                           spec.kind, nullptr);
          counters = copy_faces_to_pixels(face_vals, *refs.pixel_clouds, spec.kind, dst, lookup);
          // Aggregation happened on the face level; count it there.
          for (std::size_t t = 0; t < refs.mesh->tiles.size(); ++t) {
            Buckets b(refs.mesh->tiles[t].face_count());
            for (std::size_t f = 0; f < refs.mesh->tiles[t].face_count(); ++f) {
              for (uint32_t p : assoc.pcma->faces[t][f].points) {
                b.values[f].push_back(point_vals[p]);
              }
            }
            const ColumnCounters c = reduce_buckets(b, spec.kind, [](std::size_t, double) {});
            counters.aggregations += c.aggregations;
            counters.unanimous += c.unanimous;
          }
        } else {
          if (!assoc.explicit_links) throw_input("transfer: explicit point-pixel links missing");
          const std::vector<double> point_vals =
              read_point_column(*refs.cloud, spec.kind, src);
          for (auto& spx : *refs.pixel_clouds) {
            const pcimga::ImageLinks* links = nullptr;
            for (const auto& il : assoc.explicit_links->images) {
              if (il.image_id == spx.image_id) {
                links = &il;
                break;
              }
            }
            // Value per pixel: min-depth winner, or aggregate of candidates.
            std::map<std::pair<int32_t, int32_t>, std::vector<double>> pixel_vals;
            if (links) {
              if (spec.explicit_aggregate) {
                for (const auto& l : links->candidates) {
                  pixel_vals[{l.row, l.col}].push_back(point_vals[l.point]);
                }
              } else {
                for (const auto& l : links->retained) {
                  pixel_vals[{l.row, l.col}].push_back(point_vals[l.point]);
                }
              }
            }
            Buckets buckets(spx.size());
            for (std::size_t r = 0; r < spx.records.size(); ++r) {
              const auto it = pixel_vals.find({static_cast<int32_t>(spx.records[r].row),
                                               static_cast<int32_t>(spx.records[r].col)});
              if (it != pixel_vals.end()) buckets.values[r] = it->second;
            }
            if (spec.kind == Kind::Label) {
              auto& col = spx.ensure_label(dst);
              const ColumnCounters c =
                  reduce_buckets(buckets, spec.kind, [&](std::size_t r, double v) {
                    col.values[r] = static_cast<int32_t>(v);
                  });
              counters.transferred += c.transferred;
              counters.aggregations += c.aggregations;
              counters.unanimous += c.unanimous;
            } else {
              auto& col = spx.ensure_feature(dst);
              const ColumnCounters c =
                  reduce_buckets(buckets, spec.kind, [&](std::size_t r, double v) {
                    col.values[r] = v;
                  });
              counters.transferred += c.transferred;
              counters.aggregations += c.aggregations;
              counters.unanimous += c.unanimous;
            }
          }
        }
        break;
      }
      case Direction::ImgToPc: {
        if (!refs.mesh || !refs.cloud || !refs.pixel_clouds) {
          throw_input("transfer: mesh, cloud and images required");
        }
        if (!assoc.pcma) throw_input("transfer: point-face association missing");
        targets = refs.cloud->size();
        const TileLookup lookup(*refs.mesh);
        if (*spec.mode == Mode::Implicit) {
          ColumnCounters face_counters;
          const auto face_vals = aggregate_pixels_to_faces(
              *refs.mesh, *refs.pixel_clouds, spec.kind, src, lookup, &face_counters);
          // Aggregation happens on the face level; transfers count per point.
          counters.aggregations = face_counters.aggregations;
          counters.unanimous = face_counters.unanimous;
          std::vector<double> out(targets, spec.kind == Kind::Label ? scene::kUnlabeled : 0.0);
          for (std::size_t p = 0; p < targets; ++p) {
            const scene::FaceRef ref = assoc.pcma->point_face[p];
            if (!ref.valid()) continue;
            out[p] = face_vals[lookup.at(ref.tile_id)][ref.face_id];
            if (spec.kind != Kind::Label || out[p] >= 0) ++counters.transferred;
          }
          write_point_column(*refs.cloud, spec.kind, dst, out);
        } else {
          if (!assoc.explicit_links) throw_input("transfer: explicit point-pixel links missing");
          Buckets buckets(targets);
          for (const auto& il : assoc.explicit_links->images) {
            const imgma::SparsePixelCloud* spx = nullptr;
            for (const auto& pc : *refs.pixel_clouds) {
              if (pc.image_id == il.image_id) {
                spx = &pc;
                break;
              }
            }
            if (!spx) continue;
            const std::vector<double> vals = read_pixel_column(*spx, spec.kind, src);
            std::map<std::pair<uint32_t, uint32_t>, double> pixel_value;
            for (std::size_t r = 0; r < spx->records.size(); ++r) {
              pixel_value[{spx->records[r].row, spx->records[r].col}] = vals[r];
            }
            for (const auto& l : il.candidates) {
              const auto it = pixel_value.find({static_cast<uint32_t>(l.row),
                                                static_cast<uint32_t>(l.col)});
              if (it != pixel_value.end()) buckets.values[l.point].push_back(it->second);
            }
          }
          std::vector<double> out(targets, spec.kind == Kind::Label ? scene::kUnlabeled : 0.0);
          counters = reduce_buckets(buckets, spec.kind, [&](std::size_t p, double v) {
            out[p] = v;
          });
          write_point_column(*refs.cloud, spec.kind, dst, out);
        }
        break;
      }
    }

    if (first_column) {
      report.targets = targets;
      report.transferred = counters.transferred;
      report.unlabeled = targets - counters.transferred;
      report.aggregations = counters.aggregations;
      report.unanimous = counters.unanimous;
      first_column = false;
    }
  }
  return report;
}

}  // namespace trifuse::transfer

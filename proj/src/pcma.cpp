#include "pcma.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "error.hpp"
#include "parallel.hpp"

namespace trifuse::pcma {

double ThresholdSchedule::theta_max() const {
  double m = 0.0;
  for (const Level& l : levels) m = std::max({m, l.theta_minus, l.theta_plus});
  return m;
}

void ThresholdSchedule::validate() const {
  if (levels.empty()) throw_input("threshold schedule needs at least one level");
  double prev_minus = 0.0;
  double prev_plus = 0.0;
  for (const Level& l : levels) {
    if (!(l.theta_minus >= 0.0) || !(l.theta_plus >= 0.0) || !std::isfinite(l.theta_minus) ||
        !std::isfinite(l.theta_plus)) {
      throw_input("threshold schedule values must be finite and >= 0");
    }
    if (l.theta_minus < prev_minus || l.theta_plus < prev_plus) {
      throw_input("threshold schedule must be non-decreasing per level");
    }
    prev_minus = l.theta_minus;
    prev_plus = l.theta_plus;
  }
}

double association_radius(double t_max, double theta_max) {
  return std::sqrt(t_max * t_max + theta_max * theta_max);
}

std::vector<PointLink> filter_out_of_face(const std::vector<uint32_t>& candidates,
                                          const geom::Vec3& a, const geom::Vec3& b,
                                          const geom::Vec3& c, const geom::Vec3& unit_normal,
                                          const std::vector<geom::Vec3>& positions,
                                          BoundaryPolicy policy, double edge_tolerance) {
  const geom::Plane plane = geom::Plane::from_point_normal(a, unit_normal);
  std::vector<PointLink> kept;
  kept.reserve(candidates.size());
  for (uint32_t idx : candidates) {
    const auto [foot, d] = geom::project_point_to_plane(positions[idx], plane);
    const geom::TriClass cls = geom::classify_point_in_triangle(foot, a, b, c, edge_tolerance);
    if (cls == geom::TriClass::Outside) continue;
    if (cls == geom::TriClass::OnBoundary && policy == BoundaryPolicy::Exclude) continue;
    kept.push_back(PointLink{idx, d});
  }
  return kept;
}

std::pair<std::vector<std::size_t>, int> adaptive_threshold_filter(
    const std::vector<double>& signed_distances, const ThresholdSchedule& schedule) {
  for (std::size_t l = 0; l < schedule.levels.size(); ++l) {
    const auto& level = schedule.levels[l];
    std::vector<std::size_t> kept;
    for (std::size_t i = 0; i < signed_distances.size(); ++i) {
      const double d = signed_distances[i];
      if (d >= -level.theta_minus && d <= level.theta_plus) kept.push_back(i);
    }
    if (!kept.empty()) return {std::move(kept), static_cast<int>(l) + 1};
  }
  return {{}, kNoLevel};
}

FaceLinks associate_face(const scene::MeshTile& tile, int32_t face_id,
                         const scene::FaceDerived& derived, const index::PointKdTree& idx,
                         const scene::PointCloud& cloud, const PcmaConfig& cfg,
                         std::vector<PointLink>* links_out) {
  FaceLinks result;
  if (derived.degenerate) return result;

  // Inflate the query ball by the boundary band plus an ulp so rounding in
  // the radius never drops a candidate the filters would keep.
  const double radius =
      association_radius(derived.t_max + cfg.edge_tolerance, cfg.schedule.theta_max());
  const std::vector<uint32_t> candidates =
      idx.ball_query(derived.cog, radius * (1.0 + 1e-12) + 1e-12);

  const auto& tri = tile.faces[face_id];
  const std::vector<PointLink> in_face = filter_out_of_face(
      candidates, tile.vertices[tri[0]], tile.vertices[tri[1]], tile.vertices[tri[2]],
      derived.unit_normal, cloud.positions, cfg.boundary_policy, cfg.edge_tolerance);

  std::vector<double> distances(in_face.size());
  for (std::size_t i = 0; i < in_face.size(); ++i) distances[i] = in_face[i].signed_distance;
  auto [kept, level] = adaptive_threshold_filter(distances, cfg.schedule);

  result.level = level;
  result.points.reserve(kept.size());
  for (std::size_t i : kept) {
    result.points.push_back(in_face[i].point);
    if (links_out) links_out->push_back(in_face[i]);
  }
  return result;
}

std::size_t PcmaResult::associated_points() const {
  std::size_t n = 0;
  for (const auto& ref : point_face) {
    if (ref.valid()) ++n;
  }
  return n;
}

PcmaResult pcma_run(const scene::TiledMesh& mesh,
                    const std::vector<std::vector<scene::FaceDerived>>& derived,
                    const scene::PointCloud& cloud, const PcmaConfig& cfg, int threads) {
  if (cloud.positions.empty()) throw_input("pcma_run: empty cloud");
  std::size_t valid_faces = 0;
  for (const auto& per_tile : derived) {
    for (const auto& d : per_tile) {
      if (!d.degenerate) ++valid_faces;
    }
  }
  if (valid_faces == 0) throw_input("pcma_run: mesh has no valid faces");
  cfg.schedule.validate();

  const index::PointKdTree idx(cloud.positions, index::PointKdTree::kDefaultLeafSize, threads);

  // Flatten (tile, face) so the parallel loop balances regardless of tiling.
  struct FaceKey {
    uint32_t tile_index;
    int32_t face_id;
  };
  std::vector<FaceKey> keys;
  keys.reserve(mesh.total_faces());
  for (uint32_t t = 0; t < mesh.tiles.size(); ++t) {
    for (int32_t f = 0; f < static_cast<int32_t>(mesh.tiles[t].face_count()); ++f) {
      keys.push_back(FaceKey{t, f});
    }
  }

  struct FaceOut {
    int level = kNoLevel;
    std::vector<PointLink> links;
  };
  std::vector<FaceOut> outs(keys.size());
  parallel_for(keys.size(), threads, [&](std::size_t i) {
    const FaceKey key = keys[i];
    std::vector<PointLink> links;
    const FaceLinks fl = associate_face(mesh.tiles[key.tile_index], key.face_id,
                                        derived[key.tile_index][key.face_id], idx, cloud, cfg,
                                        &links);
    outs[i].level = fl.level;
    outs[i].links = std::move(links);
  });

  PcmaResult result;
  result.faces.resize(mesh.tiles.size());
  for (uint32_t t = 0; t < mesh.tiles.size(); ++t) {
    result.faces[t].resize(mesh.tiles[t].face_count());
  }
  for (uint32_t t = 0; t < mesh.tiles.size(); ++t) {
    for (std::size_t f = 0; f < derived[t].size(); ++f) {
      if (derived[t][f].degenerate) ++result.degenerate_faces;
    }
  }

  // Resolve points claimed by several faces: smallest |signed distance|,
  // then lowest (tile_id, face_id). Lexicographic min, so the reduction is
  // schedule independent.
  struct Claim {
    double abs_distance = std::numeric_limits<double>::infinity();
    scene::FaceRef face = scene::kNoFace;
    double signed_distance = 0.0;
    int claims = 0;
  };
  std::vector<Claim> winners(cloud.size());
  for (std::size_t i = 0; i < keys.size(); ++i) {
    const FaceKey key = keys[i];
    const scene::FaceRef ref{mesh.tiles[key.tile_index].tile_id, key.face_id};
    for (const PointLink& link : outs[i].links) {
      Claim& w = winners[link.point];
      ++w.claims;
      const double ad = std::abs(link.signed_distance);
      const bool better = ad < w.abs_distance ||
                          (ad == w.abs_distance && ref < w.face);
      if (better) {
        w.abs_distance = ad;
        w.face = ref;
        w.signed_distance = link.signed_distance;
      }
    }
  }

  result.point_face.assign(cloud.size(), scene::kNoFace);
  result.point_distance.assign(cloud.size(), std::numeric_limits<double>::quiet_NaN());
  for (std::size_t p = 0; p < winners.size(); ++p) {
    if (winners[p].face.valid()) {
      result.point_face[p] = winners[p].face;
      result.point_distance[p] = winners[p].signed_distance;
      if (winners[p].claims > 1) ++result.contested_points;
    }
  }

  // Rebuild per-face lists from the resolved backlinks; levels stay as the
  // per-face filter determined them.
  for (std::size_t i = 0; i < keys.size(); ++i) {
    const FaceKey key = keys[i];
    result.faces[key.tile_index][key.face_id].level = outs[i].level;
  }
  std::map<int32_t, uint32_t> tile_index;
  for (uint32_t t = 0; t < mesh.tiles.size(); ++t) tile_index[mesh.tiles[t].tile_id] = t;
  for (std::size_t p = 0; p < result.point_face.size(); ++p) {
    const scene::FaceRef ref = result.point_face[p];
    if (!ref.valid()) continue;
    result.faces[tile_index.at(ref.tile_id)][ref.face_id].points.push_back(
        static_cast<uint32_t>(p));
  }
  return result;
}

}  // namespace trifuse::pcma

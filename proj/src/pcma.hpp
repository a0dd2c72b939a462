#pragma once

#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "geom.hpp"
#include "index.hpp"
#include "scene.hpp"

namespace trifuse::pcma {

constexpr int kNoLevel = -1;

// Ordered filter levels; absolute values grow with the level. theta_minus
// limits against the face normal, theta_plus along it.
struct ThresholdSchedule {
  struct Level {
    double theta_minus = 0.0;
    double theta_plus = 0.0;
  };
  std::vector<Level> levels;

  std::size_t level_count() const { return levels.size(); }
  double theta_max() const;
  void validate() const;  // throws on empty/negative/decreasing schedules
};

enum class BoundaryPolicy { Exclude, Include };

struct PcmaConfig {
  ThresholdSchedule schedule;
  BoundaryPolicy boundary_policy = BoundaryPolicy::Exclude;
  double edge_tolerance = 1e-9;  // m
};

// One candidate surviving the per-face filters.
struct PointLink {
  uint32_t point = 0;
  double signed_distance = 0.0;
};

struct FaceLinks {
  int level = kNoLevel;              // 1-based level that linked points
  std::vector<uint32_t> points;      // ascending, after multi-claim resolution
};

struct PcmaResult {
  // faces[tile_index][face_id]; tile order follows TiledMesh::tiles.
  std::vector<std::vector<FaceLinks>> faces;
  std::vector<scene::FaceRef> point_face;      // -1/-1 when unassociated
  std::vector<double> point_distance;          // signed distance to the owning face
  std::size_t degenerate_faces = 0;
  std::size_t contested_points = 0;            // points claimed by >1 face

  std::size_t associated_points() const;
};

// Ball radius guaranteeing the threshold band covers the whole face.
double association_radius(double t_max, double theta_max);

// Keeps candidates whose orthogonal projections land inside the face;
// boundary projections only under BoundaryPolicy::Include.
std::vector<PointLink> filter_out_of_face(const std::vector<uint32_t>& candidates,
                                          const geom::Vec3& a, const geom::Vec3& b,
                                          const geom::Vec3& c, const geom::Vec3& unit_normal,
                                          const std::vector<geom::Vec3>& positions,
                                          BoundaryPolicy policy, double edge_tolerance);

// First level whose band holds at least one distance wins; early stopping.
std::pair<std::vector<std::size_t>, int> adaptive_threshold_filter(
    const std::vector<double>& signed_distances, const ThresholdSchedule& schedule);

// Ball query + out-of-face filter + adaptive thresholding for one face.
FaceLinks associate_face(const scene::MeshTile& tile, int32_t face_id,
                         const scene::FaceDerived& derived, const index::PointKdTree& idx,
                         const scene::PointCloud& cloud, const PcmaConfig& cfg,
                         std::vector<PointLink>* links_out = nullptr);

// Whole-scene association; fills per-point backlinks, resolves multi-face
// claims to the smallest |signed distance| (ties: lowest tile then face id).
PcmaResult pcma_run(const scene::TiledMesh& mesh,
                    const std::vector<std::vector<scene::FaceDerived>>& derived,
                    const scene::PointCloud& cloud, const PcmaConfig& cfg, int threads = 1);

}  // namespace trifuse::pcma

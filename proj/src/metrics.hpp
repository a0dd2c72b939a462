#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "pcma.hpp"
#include "scene.hpp"

namespace trifuse::metrics {

struct ConsistencyReport {
  std::size_t points_checked = 0;     // associated points carrying a GT label
  std::size_t points_consistent = 0;  // back-transferred label equals GT
  double consistency_rate = 0.0;
  std::size_t associated_faces = 0;
  std::size_t mixed_faces = 0;        // faces linked to points of >1 class
  double mixed_face_rate = 0.0;
  // confusion[gt][back-transferred], keyed by label id
  std::map<int32_t, std::map<int32_t, std::size_t>> confusion;
  double weighted_average_precision = 0.0;
  std::vector<uint32_t> inconsistent_points;  // ascending
};

struct AssociationRates {
  double face_rate = 0.0;   // faces with >= 1 point / all faces
  double area_rate = 0.0;   // associated face area / total area
  double point_rate = 0.0;  // associated points / all points
  std::size_t total_faces = 0;
  std::size_t associated_faces = 0;
  std::size_t total_points = 0;
  std::size_t associated_points = 0;
  std::map<int32_t, std::size_t> non_associated_by_class;  // GT label -> count
};

// Forward pass: majority vote of GT point labels onto faces. Backward pass:
// copy the face vote to associated points; compare against GT.
ConsistencyReport forward_backward_check(const scene::PointCloud& cloud,
                                         const std::string& gt_label,
                                         const scene::TiledMesh& mesh,
                                         const pcma::PcmaResult& assoc);

AssociationRates association_rates(const scene::TiledMesh& mesh,
                                   const std::vector<std::vector<scene::FaceDerived>>& derived,
                                   const scene::PointCloud& cloud,
                                   const std::string& gt_label,
                                   const pcma::PcmaResult& assoc);

// Per-class precision (columns are predictions), weighted by GT support
// (row sums); classes with an empty prediction column drop out together with
// their weight. Throws when every column is empty.
double weighted_average_precision(
    const std::map<int32_t, std::map<int32_t, std::size_t>>& confusion);

std::string format_consistency_report(const ConsistencyReport& report);
std::string format_association_rates(const AssociationRates& rates);

}  // namespace trifuse::metrics

#include "metrics.hpp"

#include <algorithm>
#include <set>
#include <sstream>

#include "error.hpp"
#include "transfer.hpp"

namespace trifuse::metrics {

ConsistencyReport forward_backward_check(const scene::PointCloud& cloud,
                                         const std::string& gt_label,
                                         const scene::TiledMesh& mesh,
                                         const pcma::PcmaResult& assoc) {
  const auto* gt = cloud.find_label(gt_label);
  if (!gt) throw_input("forward_backward_check: no ground-truth label column '" + gt_label + "'");

  ConsistencyReport report;

  // Forward: per-face majority vote over the GT labels of linked points.
  // Backward: the vote copied to each linked point.
  std::vector<std::vector<int32_t>> face_vote(mesh.tiles.size());
  for (std::size_t t = 0; t < mesh.tiles.size(); ++t) {
    face_vote[t].assign(mesh.tiles[t].face_count(), scene::kUnlabeled);
    for (std::size_t f = 0; f < mesh.tiles[t].face_count(); ++f) {
      const auto& points = assoc.faces[t][f].points;
      if (points.empty()) continue;
      ++report.associated_faces;
      std::vector<int32_t> labels;
      labels.reserve(points.size());
      std::set<int32_t> distinct;
      for (uint32_t p : points) {
        labels.push_back(gt->values[p]);
        if (gt->values[p] >= 0) distinct.insert(gt->values[p]);
      }
      face_vote[t][f] = transfer::majority_vote(labels);
      if (distinct.size() > 1) ++report.mixed_faces;

      for (uint32_t p : points) {
        const int32_t truth = gt->values[p];
        if (truth < 0) continue;  // unlabeled GT points cannot be checked
        ++report.points_checked;
        const int32_t back = face_vote[t][f];
        ++report.confusion[truth][back];
        if (back == truth) {
          ++report.points_consistent;
        } else {
          report.inconsistent_points.push_back(p);
        }
      }
    }
  }
  std::sort(report.inconsistent_points.begin(), report.inconsistent_points.end());
  report.consistency_rate =
      report.points_checked == 0
          ? 0.0
          : static_cast<double>(report.points_consistent) / report.points_checked;
  report.mixed_face_rate =
      report.associated_faces == 0
          ? 0.0
          : static_cast<double>(report.mixed_faces) / report.associated_faces;
  report.weighted_average_precision = weighted_average_precision(report.confusion);
  return report;
}

AssociationRates association_rates(const scene::TiledMesh& mesh,
                                   const std::vector<std::vector<scene::FaceDerived>>& derived,
                                   const scene::PointCloud& cloud,
                                   const std::string& gt_label,
                                   const pcma::PcmaResult& assoc) {
  AssociationRates rates;
  double total_area = 0.0;
  double associated_area = 0.0;
  for (std::size_t t = 0; t < mesh.tiles.size(); ++t) {
    for (std::size_t f = 0; f < mesh.tiles[t].face_count(); ++f) {
      ++rates.total_faces;
      total_area += derived[t][f].area;
      if (!assoc.faces[t][f].points.empty()) {
        ++rates.associated_faces;
        associated_area += derived[t][f].area;
      }
    }
  }
  rates.total_points = cloud.size();
  const auto* gt = cloud.find_label(gt_label);
  for (std::size_t p = 0; p < cloud.size(); ++p) {
    if (assoc.point_face[p].valid()) {
      ++rates.associated_points;
    } else {
      const int32_t label = gt ? gt->values[p] : scene::kUnlabeled;
      ++rates.non_associated_by_class[label];
    }
  }
  rates.face_rate = rates.total_faces == 0
                        ? 0.0
                        : static_cast<double>(rates.associated_faces) / rates.total_faces;
  rates.area_rate = total_area == 0.0 ? 0.0 : associated_area / total_area;
  rates.point_rate = rates.total_points == 0
                         ? 0.0
                         : static_cast<double>(rates.associated_points) / rates.total_points;
  return rates;
}

double weighted_average_precision(
    const std::map<int32_t, std::map<int32_t, std::size_t>>& confusion) {
  if (confusion.empty()) throw_input("weighted_average_precision: empty confusion matrix");

  std::set<int32_t> classes;
  std::map<int32_t, std::size_t> col_sum;
  std::map<int32_t, std::size_t> diag;
  std::map<int32_t, std::size_t> row_sum;
  for (const auto& [truth, row] : confusion) {
    classes.insert(truth);
    for (const auto& [pred, count] : row) {
      if (pred >= 0) classes.insert(pred);
      col_sum[pred] += count;
      row_sum[truth] += count;
      if (pred == truth) diag[truth] += count;
    }
  }

  double weighted = 0.0;
  double weight_total = 0.0;
  bool any = false;
  for (int32_t k : classes) {
    const std::size_t support = row_sum.count(k) ? row_sum[k] : 0;
    const std::size_t predicted = col_sum.count(k) ? col_sum[k] : 0;
    if (predicted == 0) continue;  // empty prediction column: class and weight drop out
    const double precision = static_cast<double>(diag.count(k) ? diag[k] : 0) / predicted;
    weighted += static_cast<double>(support) * precision;
    weight_total += static_cast<double>(support);
    any = true;
  }
  if (!any || weight_total == 0.0) {
    throw_input("weighted_average_precision: no class has predictions");
  }
  return weighted / weight_total;
}

std::string format_consistency_report(const ConsistencyReport& report) {
  std::ostringstream os;
  os << "# label consistency check (forward: majority vote, backward: copy)\n";
  os << "# weighted average precision uses ground-truth support weights\n";
  os << "points_checked " << report.points_checked << "\n";
  os << "points_consistent " << report.points_consistent << "\n";
  os << "consistency_rate " << report.consistency_rate << "\n";
  os << "associated_faces " << report.associated_faces << "\n";
  os << "mixed_faces " << report.mixed_faces << "\n";
  os << "mixed_face_rate " << report.mixed_face_rate << "\n";
  os << "weighted_average_precision " << report.weighted_average_precision << "\n";
  os << "confusion_rows " << report.confusion.size() << "\n";
  for (const auto& [truth, row] : report.confusion) {
    os << "confusion " << truth << " :";
    for (const auto& [pred, count] : row) os << " " << pred << "=" << count;
    os << "\n";
  }
  os << "inconsistent_points " << report.inconsistent_points.size() << " :";
  for (uint32_t p : report.inconsistent_points) os << " " << p;
  os << "\n";
  return os.str();
}

std::string format_association_rates(const AssociationRates& rates) {
  std::ostringstream os;
  os << "# association rates\n";
  os << "face_rate " << rates.face_rate << " (" << rates.associated_faces << "/"
     << rates.total_faces << ")\n";
  os << "area_rate " << rates.area_rate << "\n";
  os << "point_rate " << rates.point_rate << " (" << rates.associated_points << "/"
     << rates.total_points << ")\n";
  os << "non_associated_by_class";
  for (const auto& [label, count] : rates.non_associated_by_class) {
    os << " " << label << "=" << count;
  }
  os << "\n";
  return os.str();
}

}  // namespace trifuse::metrics

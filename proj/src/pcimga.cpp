#include "pcimga.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "parallel.hpp"

namespace trifuse::pcimga {

PointVisibility visible_points(const pcma::PcmaResult& assoc,
                               const std::vector<imgma::SparsePixelCloud>& pixel_clouds) {
  PointVisibility out;
  for (const auto& cloud : pixel_clouds) {
    std::set<scene::FaceRef> faces_seen;
    for (const auto& rec : cloud.records) {
      faces_seen.insert(scene::FaceRef{rec.tile_id, rec.face_id});
    }
    std::vector<uint32_t>& vis = out.visible[cloud.image_id];
    for (std::size_t p = 0; p < assoc.point_face.size(); ++p) {
      const scene::FaceRef ref = assoc.point_face[p];
      if (ref.valid() && faces_seen.count(ref)) vis.push_back(static_cast<uint32_t>(p));
    }
  }
  return out;
}

PointPixelLinks pcimga_explicit(const scene::PointCloud& cloud,
                                const std::vector<scene::CameraModel>& cameras,
                                const PointVisibility& visibility,
                                const pcma::PcmaResult& assoc,
                                const std::vector<imgma::SparsePixelCloud>& pixel_clouds,
                                int threads) {
  PointPixelLinks out;
  out.images.resize(cameras.size());

  parallel_for(cameras.size(), threads, [&](std::size_t c) {
    const scene::CameraModel& cam = cameras[c];
    ImageLinks& links = out.images[c];
    links.image_id = cam.image_id;

    const auto vis_it = visibility.visible.find(cam.image_id);
    if (vis_it == visibility.visible.end()) return;

    for (uint32_t p : vis_it->second) {
      const auto proj = cam.project(cloud.positions[p]);
      if (!proj) {
        ++links.behind_camera;
        continue;
      }
      const int32_t row = static_cast<int32_t>(std::floor(proj->row));
      const int32_t col = static_cast<int32_t>(std::floor(proj->col));
      if (row < 0 || row >= cam.height || col < 0 || col >= cam.width) {
        ++links.out_of_bounds;
        continue;
      }
      links.candidates.push_back(PointPixelLink{p, row, col, proj->depth});
    }

    // Min-depth reduction per pixel; sort makes it order independent.
    std::vector<PointPixelLink> sorted = links.candidates;
    std::sort(sorted.begin(), sorted.end(), [](const PointPixelLink& a, const PointPixelLink& b) {
      if (a.row != b.row) return a.row < b.row;
      if (a.col != b.col) return a.col < b.col;
      if (a.depth != b.depth) return a.depth < b.depth;
      return a.point < b.point;
    });
    std::size_t i = 0;
    while (i < sorted.size()) {
      std::size_t j = i;
      while (j < sorted.size() && sorted[j].row == sorted[i].row &&
             sorted[j].col == sorted[i].col) {
        ++j;
      }
      links.retained.push_back(sorted[i]);
      i = j;
    }

    // Diagnostic: retained links whose pixel got fused to a different face
    // than the point's own.
    const imgma::SparsePixelCloud* spx = nullptr;
    for (const auto& pc : pixel_clouds) {
      if (pc.image_id == cam.image_id) {
        spx = &pc;
        break;
      }
    }
    if (spx) {
      std::map<std::pair<uint32_t, uint32_t>, scene::FaceRef> pixel_face;
      for (const auto& rec : spx->records) {
        pixel_face[{rec.row, rec.col}] = scene::FaceRef{rec.tile_id, rec.face_id};
      }
      for (const auto& link : links.retained) {
        const auto it = pixel_face.find({static_cast<uint32_t>(link.row),
                                         static_cast<uint32_t>(link.col)});
        if (it == pixel_face.end() || !(it->second == assoc.point_face[link.point])) {
          ++links.face_mismatch;
        }
      }
    }
  });
  return out;
}

}  // namespace trifuse::pcimga

#pragma once

#include <cstdint>
#include <map>
#include <vector>

#include "imgma.hpp"
#include "pcma.hpp"
#include "scene.hpp"

namespace trifuse::pcimga {

// Per image, the points whose associated face shows up in that image's
// sparse pixel cloud.
struct PointVisibility {
  std::map<int32_t, std::vector<uint32_t>> visible;  // image_id -> ascending point indices
};

PointVisibility visible_points(const pcma::PcmaResult& assoc,
                               const std::vector<imgma::SparsePixelCloud>& pixel_clouds);

struct PointPixelLink {
  uint32_t point = 0;
  int32_t row = 0;
  int32_t col = 0;
  double depth = 0.0;
};

struct ImageLinks {
  int32_t image_id = 0;
  std::vector<PointPixelLink> candidates;  // every visible in-bounds projection
  std::vector<PointPixelLink> retained;    // min-depth winner per pixel, row-major
  std::size_t behind_camera = 0;
  std::size_t out_of_bounds = 0;
  // Links whose point face and pixel face disagree ("apparently visible").
  std::size_t face_mismatch = 0;
};

struct PointPixelLinks {
  std::vector<ImageLinks> images;  // camera order
};

// Collinearity projection of visible points; per pixel the minimum-depth
// point is retained (ties: lowest point index).
PointPixelLinks pcimga_explicit(const scene::PointCloud& cloud,
                                const std::vector<scene::CameraModel>& cameras,
                                const PointVisibility& visibility,
                                const pcma::PcmaResult& assoc,
                                const std::vector<imgma::SparsePixelCloud>& pixel_clouds,
                                int threads = 1);

}  // namespace trifuse::pcimga

#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "imgma.hpp"
#include "pcimga.hpp"
#include "pcma.hpp"
#include "scene.hpp"

namespace trifuse::transfer {

enum class Direction { MeshToPc, PcToMesh, MeshToImg, ImgToMesh, PcToImg, ImgToPc };
enum class Kind { Label, Feature };
enum class Mode { Implicit, Explicit };

struct TransferSpec {
  Direction direction = Direction::MeshToPc;
  Kind kind = Kind::Label;
  std::optional<Mode> mode;             // required for Pc<->Img directions
  std::vector<std::string> src_attrs;   // >= 1; features may be multi-column
  std::vector<std::string> dst_attrs;   // same arity as src_attrs
  bool explicit_aggregate = false;      // explicit Pc->Img: aggregate instead of min-depth
};

struct TransferReport {
  std::size_t targets = 0;      // entities in the target modality
  std::size_t transferred = 0;  // targets that received a value
  std::size_t unlabeled = 0;    // targets left at the sentinel / zero vector
  std::size_t aggregations = 0; // targets aggregated from > 1 source value
  std::size_t unanimous = 0;    // aggregations where all sources agreed
  double unanimity_rate() const {
    return aggregations == 0 ? 1.0 : static_cast<double>(unanimous) / aggregations;
  }
};

// Most frequent label after dropping unlabeled sentinels; ties resolve to the
// lowest id. Empty input yields the unlabeled sentinel.
int32_t majority_vote(std::span<const int32_t> labels);

// Component-wise median; even counts average the middle pair. Empty input
// yields the zero vector.
std::vector<double> median_aggregate(const std::vector<std::vector<double>>& vectors,
                                     std::size_t dim);
double median(std::vector<double> values);  // scalar helper; empty -> 0.0

struct SceneRefs {
  scene::TiledMesh* mesh = nullptr;
  scene::PointCloud* cloud = nullptr;
  std::vector<imgma::SparsePixelCloud>* pixel_clouds = nullptr;
};

struct AssociationRefs {
  const pcma::PcmaResult* pcma = nullptr;
  const pcimga::PointPixelLinks* explicit_links = nullptr;
};

// Executes one transfer; writes target attribute columns in place.
// Throws on missing associations or unknown source attributes.
TransferReport run_transfer(const TransferSpec& spec, SceneRefs refs, AssociationRefs assoc);

Direction parse_direction(const std::string& name);
std::string direction_name(Direction d);

}  // namespace trifuse::transfer

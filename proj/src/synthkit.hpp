#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "pcma.hpp"
#include "scene.hpp"

namespace trifuse::synthkit {

enum class Template { Plane, Cube, RoofTwoPlane, Town };

Template parse_template(const std::string& name);
std::string template_name(Template t);

struct SceneSpec {
  Template scene_template = Template::Plane;
  double extent = 10.0;        // m
  double density = 50.0;       // points per m^2
  double noise_sigma = 0.0;    // m, offset along the face normal
  geom::Vec3 shift{0.0, 0.0, 0.0};  // rigid shift applied to the cloud
  uint64_t seed = 0;
  int subdiv = 0;              // Plane only: grid cells per side (0 = 1)
  bool with_cameras = true;
};

struct DeadZoneCase {
  uint32_t point_index = 0;
  std::string case_id;  // A1, A2, B1, B2, C1, C2, S* (on-surface supports)
  enum class Expected { Associated, NotAssociated, PolicyDependent } expected =
      Expected::NotAssociated;
};

struct SyntheticScene {
  scene::TiledMesh mesh;
  scene::PointCloud cloud;  // labels: "label" (GT class), "gt_tile", "gt_face"
  std::vector<scene::CameraModel> cameras;
  scene::LabelScheme scheme;
  std::vector<scene::FaceRef> gt_face;      // generator's point -> face map
  std::vector<DeadZoneCase> dead_zone_cases;  // RoofTwoPlane only
};

// Deterministic generator: identical specs yield identical scenes.
SyntheticScene generate(const SceneSpec& spec);

// Constructed points exercising the non-association taxonomy on the two-plane
// roof; offsets are placed relative to the given schedule. Points and cases
// are appended to the scene.
void append_dead_zone_points(SyntheticScene& scene, const SceneSpec& spec,
                             const pcma::ThresholdSchedule& schedule);

// Deterministic uniform/normal sampling on top of mt19937_64 (the standard
// fixes its sequence, distributions are hand-rolled to stay portable).
class Rng {
 public:
  explicit Rng(uint64_t seed) : gen_(seed) {}
  double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }
  double uniform(double a, double b) { return a + (b - a) * uniform(); }
  double normal(double sigma);

 private:
  std::mt19937_64 gen_;
};

// Camera helpers shared with tests.
scene::CameraModel make_nadir_camera(int32_t image_id, const geom::Vec3& position, int width,
                                     int height, double focal);
scene::CameraModel make_lookat_camera(int32_t image_id, const geom::Vec3& position,
                                      const geom::Vec3& target, int width, int height,
                                      double focal);

}  // namespace trifuse::synthkit

#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "mask.hpp"
#include "tensor_io.hpp"

namespace m2n2 {

enum class ShapeKind { Disk, Rectangle, Blob };

struct SceneObject {
  ShapeKind shape = ShapeKind::Disk;
  double cx = 0.0, cy = 0.0;
  double rx = 10.0, ry = 10.0;  // radius (disk uses rx) or half extents
  double distance = 5.0;        // camera distance; smaller is closer
  std::array<float, 3> color{0.8f, 0.2f, 0.2f};
  int group = 1;                // semantic group; 0 is the background
};

struct SceneSpec {
  Dims dims{128, 128};
  Dims coarse{16, 16};
  std::vector<SceneObject> objects;
  std::array<float, 3> background{0.5f, 0.5f, 0.5f};
  double background_distance = 12.0;
  double noise = 1.0;
  double feature_temperature = 0.5;
  std::uint64_t seed = 0;
  std::string tag = "generic";
};

struct SyntheticScene {
  ImageBundle bundle;
  std::vector<Segmentation> ground_truth;  // one per object, visible pixels only
  std::vector<int> coarse_groups;          // majority group per coarse cell
};

SyntheticScene generate_scene(const SceneSpec& spec);

// Two same-colour, same-group disks that overlap at different depths.
SceneSpec overlap_same_class_spec(std::uint64_t seed, Dims dims = {128, 128}, Dims coarse = {16, 16});
// 1-4 mixed objects (disks, rectangles, blobs) across 1-3 groups.
SceneSpec mixed_scene_spec(std::uint64_t seed, Dims dims = {128, 128}, Dims coarse = {16, 16});

// Writes `count` scenes as bundle directories named scene_000.. under dir.
void write_suite(const std::filesystem::path& dir, const std::string& kind, int count, std::uint64_t seed,
                 Dims dims = {128, 128}, Dims coarse = {16, 16});

}  // namespace m2n2

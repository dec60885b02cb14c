/* Copyright 2026 The voxpan Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#ifndef VOXPAN_SCENE_H_
#define VOXPAN_SCENE_H_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "voxpan/geometry.h"
#include "voxpan/grid.h"
#include "voxpan/refine.h"
#include "voxpan/sparsify.h"
#include "voxpan/supervision.h"

namespace voxpan {

// Class taxonomy. Labels 1..num_classes are split into things and stuff;
// 0 is empty.
struct Taxonomy {
  int num_classes = 16;
  std::vector<int> thing_classes;
  std::vector<int> stuff_classes;

  // 10 thing classes (1..10) and 6 stuff classes (11..16).
  static Taxonomy nuscenes_like();
  void validate() const;
  bool is_thing(int cls) const;
};

enum class Profile { kTiny, kPaper };

Profile parse_profile(std::string_view name);
std::string_view profile_name(Profile profile);

// Coarse query grid, fine output grid, and the upsampling stages between
// them. kPaper: 50 x 50 x 16 -> 200 x 200 x 32 over [-51.2, 51.2]^2 x [-5, 3].
// kTiny: 20 x 20 x 8 -> 40 x 40 x 16 over [-20, 20]^2 x [-4, 4].
struct ProfileGrids {
  VoxelGridSpec coarse;
  VoxelGridSpec fine;
  std::vector<UpsampleStage> stages;
};

ProfileGrids profile_grids(Profile profile);

struct SceneConfig {
  Profile profile = Profile::kTiny;
  int num_boxes = 3;
  int frames = 4;                 // including the current frame
  double frame_interval = 0.5;    // seconds
  double ego_speed = 4.0;         // m/s along the ego heading
  double ego_yaw_rate = 0.1;      // rad/s
  int points_per_box = 400;
  double stuff_points_per_cell = 2.0;  // per fine BEV cell
  int num_cameras = 6;
  int image_width = 1600;
  int image_height = 900;
  Taxonomy taxonomy = Taxonomy::nuscenes_like();

  void validate() const;
};

// Frames are ordered oldest first; the last one is the current frame. Points
// and boxes of frame t are expressed in that frame's ego coordinates, and
// ego_poses[t] maps them into the shared world frame. Ground truth lives on
// the profile's fine grid in the current ego frame.
struct SyntheticScene {
  std::uint64_t seed = 0;
  SceneConfig config;
  std::vector<Pose> ego_poses;
  std::vector<LabeledPointCloud> clouds;
  std::vector<std::vector<Box3D>> boxes;
  std::vector<CameraModel> cameras;
  SemanticGrid gt_semantic;
  InstanceGrid gt_instance;

  std::size_t current() const { return clouds.size() - 1; }
};

SyntheticScene gen_scene(std::uint64_t seed, const SceneConfig& config);

// voxelize_majority, then refine_semantics and assign_instances with every
// box at its own score. gen_scene builds ground truth this way with score 1.
std::pair<SemanticGrid, InstanceGrid> build_panoptic_labels(
    const LabeledPointCloud& cloud, const VoxelGridSpec& spec,
    std::span<const Box3D> boxes, const Taxonomy& taxonomy,
    double tau = kDefaultRefineTau);

// scene.json, frame_<t>.ppts, boxes_<t>.jsonl, gt_semantic.pvox and
// gt_instance.pvox inside dir.
void write_scene(const SyntheticScene& scene, const std::filesystem::path& dir);
SyntheticScene read_scene(const std::filesystem::path& dir);

// Taxonomy JSON: {"num_classes", "thing_classes", "stuff_classes"}.
nlohmann::json taxonomy_to_json(const Taxonomy& taxonomy);
Taxonomy taxonomy_from_json(const nlohmann::json& j);
nlohmann::json config_to_json(const SceneConfig& config);
SceneConfig config_from_json(const nlohmann::json& j);

enum class PipelineMode {
  kOracle,   // predictions are the current frame's own panoptic labels
  kStandIn,  // one-hot coarse volumes -> align + fuse -> upsample -> argmax
};

PipelineMode parse_mode(std::string_view name);
std::string_view mode_name(PipelineMode mode);

struct PipelineOptions {
  PipelineMode mode = PipelineMode::kOracle;
  std::optional<std::size_t> drop_box;  // current-frame box left out of refine
  bool temporal = true;                 // align and fuse history frames
  bool sparse = false;                  // sparse cascade instead of dense
  std::vector<double> keep_ratios{0.2, 0.5, 0.5};
  bool camera_mask = false;             // evaluate camera-visible voxels only
  double tau = kDefaultRefineTau;
};

struct StageTiming {
  std::string stage;
  double seconds = 0.0;
};

struct PipelineReport {
  Profile profile = Profile::kTiny;
  PipelineMode mode = PipelineMode::kOracle;
  std::uint64_t seed = 0;
  double miou = 0.0;
  std::vector<std::pair<int, double>> class_iou;
  std::uint64_t evaluated_cells = 0;
  double pq = 0.0;
  double sq = 0.0;
  double rq = 0.0;
  double pq_things = 0.0;
  double pq_stuff = 0.0;
  double pq_dagger = 0.0;
  std::uint32_t predicted_instances = 0;
  std::optional<double> sparsity;
  std::vector<std::size_t> kept;
  std::vector<StageTiming> timings;

  // Timings are wall-clock and left out when include_timings is false, which
  // makes the output a deterministic function of scene and options.
  nlohmann::json to_json(bool include_timings = true) const;
};

PipelineReport run_pipeline(const SyntheticScene& scene,
                            const PipelineOptions& options);

}  // namespace voxpan

#endif  // VOXPAN_SCENE_H_

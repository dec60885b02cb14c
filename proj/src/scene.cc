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

#include "voxpan/scene.h"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numbers>
#include <random>

#include "voxpan/error.h"
#include "voxpan/io.h"
#include "voxpan/metrics.h"
#include "voxpan/temporal.h"

namespace voxpan {
namespace {

// mt19937_64 output is fixed by the standard; the distributions are not, so
// the uniform mapping is done by hand to keep scenes portable.
class SceneRng {
 public:
  explicit SceneRng(std::uint64_t seed) : engine_(seed) {}

  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  std::size_t index(std::size_t n) {
    return std::min(n - 1, static_cast<std::size_t>(uniform() * n));
  }

 private:
  std::mt19937_64 engine_;
};

// Same closed test as voxels_in_box.
bool center_in_box(const Vec3& center, const Box3D& box) {
  const double c = std::cos(box.yaw);
  const double s = std::sin(box.yaw);
  const Vec3 half = box.size / 2.0;
  const Vec3 d = center - box.center;
  const double lx = c * d[0] + s * d[1];
  const double ly = -s * d[0] + c * d[1];
  return std::abs(lx) <= half[0] && std::abs(ly) <= half[1] &&
         std::abs(d[2]) <= half[2];
}

double relative_yaw(const Pose& pose) {
  const Eigen::Matrix3d r = pose.rotation();
  return std::atan2(r(1, 0), r(0, 0));
}

std::array<float, 3> to_float3(const Vec3& p) {
  return {static_cast<float>(p[0]), static_cast<float>(p[1]),
          static_cast<float>(p[2])};
}

// Uniform point on the surface of a box shrunk by `shrink`, in world frame.
Vec3 sample_box_surface(SceneRng& rng, const Box3D& box, double shrink) {
  const Vec3 e = box.size * shrink;
  const double areas[3] = {e[1] * e[2], e[0] * e[2], e[0] * e[1]};
  const double total = 2.0 * (areas[0] + areas[1] + areas[2]);
  double pick = rng.uniform() * total;
  int axis = 2;
  for (int a = 0; a < 3; ++a) {
    if (pick < 2.0 * areas[a]) {
      axis = a;
      break;
    }
    pick -= 2.0 * areas[a];
  }
  Vec3 local;
  for (int a = 0; a < 3; ++a) local[a] = rng.uniform(-0.5, 0.5) * e[a];
  local[axis] = (rng.uniform() < 0.5 ? -0.5 : 0.5) * e[axis];
  const double c = std::cos(box.yaw);
  const double s = std::sin(box.yaw);
  return box.center +
         Vec3(c * local[0] - s * local[1], s * local[0] + c * local[1], local[2]);
}

int ground_layer(const VoxelGridSpec& fine) { return fine.z() / 4; }

nlohmann::json ids_json(const std::vector<int>& v) { return v; }

}  // namespace

Taxonomy Taxonomy::nuscenes_like() {
  Taxonomy t;
  t.num_classes = 16;
  for (int c = 1; c <= 10; ++c) t.thing_classes.push_back(c);
  for (int c = 11; c <= 16; ++c) t.stuff_classes.push_back(c);
  return t;
}

void Taxonomy::validate() const {
  require(num_classes >= 1, ErrorCode::kInvalidArgument,
          "taxonomy needs at least one class");
  require(num_classes < 65535, ErrorCode::kOutOfRange,
          "class count exceeds the 16-bit label range");
  std::vector<int> seen(num_classes + 1, 0);
  for (const auto* list : {&thing_classes, &stuff_classes}) {
    for (int c : *list) {
      require(c >= 1 && c <= num_classes, ErrorCode::kOutOfRange,
              "taxonomy class outside 1..num_classes");
      require(seen[c] == 0, ErrorCode::kInvalidArgument,
              "taxonomy class listed twice");
      seen[c] = 1;
    }
  }
}

bool Taxonomy::is_thing(int cls) const {
  return std::find(thing_classes.begin(), thing_classes.end(), cls) !=
         thing_classes.end();
}

Profile parse_profile(std::string_view name) {
  if (name == "tiny") return Profile::kTiny;
  if (name == "paper") return Profile::kPaper;
  fail(ErrorCode::kInvalidArgument,
       "unknown profile '" + std::string(name) + "' (expected tiny or paper)");
}

std::string_view profile_name(Profile profile) {
  return profile == Profile::kTiny ? "tiny" : "paper";
}

ProfileGrids profile_grids(Profile profile) {
  if (profile == Profile::kPaper) {
    const Vec3 origin(-51.2, -51.2, -5.0);
    VoxelGridSpec coarse({50, 50, 16}, origin, Vec3(2.048, 2.048, 0.5));
    std::vector<UpsampleStage> stages{{{2, 2, 2}}, {{2, 2, 1}}, {{1, 1, 1}}};
    return {coarse, refine_spec(coarse, {4, 4, 2}), stages};
  }
  const Vec3 origin(-20.0, -20.0, -4.0);
  VoxelGridSpec coarse({20, 20, 8}, origin, Vec3(2.0, 2.0, 1.0));
  std::vector<UpsampleStage> stages{{{2, 2, 1}}, {{1, 1, 2}}, {{1, 1, 1}}};
  return {coarse, refine_spec(coarse, {2, 2, 2}), stages};
}

void SceneConfig::validate() const {
  taxonomy.validate();
  require(!taxonomy.stuff_classes.empty(), ErrorCode::kInvalidArgument,
          "scene generation needs at least one stuff class");
  require(num_boxes >= 0, ErrorCode::kInvalidArgument, "num_boxes must be >= 0");
  require(num_boxes == 0 || !taxonomy.thing_classes.empty(),
          ErrorCode::kInvalidArgument, "boxes need at least one thing class");
  require(frames >= 1, ErrorCode::kInvalidArgument, "frames must be >= 1");
  require(frame_interval > 0.0 && std::isfinite(frame_interval),
          ErrorCode::kInvalidArgument, "frame_interval must be positive");
  require(std::isfinite(ego_speed) && std::isfinite(ego_yaw_rate),
          ErrorCode::kInvalidArgument, "ego motion must be finite");
  require(points_per_box >= 1, ErrorCode::kInvalidArgument,
          "points_per_box must be >= 1");
  require(stuff_points_per_cell >= 0.0 && stuff_points_per_cell <= 64.0,
          ErrorCode::kOutOfRange, "stuff_points_per_cell must lie in [0, 64]");
  require(num_cameras >= 0 && image_width >= 1 && image_height >= 1,
          ErrorCode::kInvalidArgument, "invalid camera ring");
}

std::pair<SemanticGrid, InstanceGrid> build_panoptic_labels(
    const LabeledPointCloud& cloud, const VoxelGridSpec& spec,
    std::span<const Box3D> boxes, const Taxonomy& taxonomy, double tau) {
  SemanticGrid sem =
      refine_semantics(voxelize_majority(cloud, spec), boxes, tau);
  InstanceGrid inst = assign_instances(sem, boxes, taxonomy.thing_classes, tau);
  return {std::move(sem), std::move(inst)};
}

SyntheticScene gen_scene(std::uint64_t seed, const SceneConfig& config) {
  config.validate();
  SceneRng rng(seed);
  const ProfileGrids grids = profile_grids(config.profile);
  const VoxelGridSpec& fine = grids.fine;
  const Vec3 cell = fine.cell_size();
  const Vec3 lo = fine.origin();
  const Vec3 hi = fine.extent_max();
  const double ground_z = fine.cell_lower(2, ground_layer(fine)) + 0.5 * cell[2];

  // Ego trajectory: constant heading speed and yaw rate, current frame last.
  const int last = config.frames - 1;
  const double yaw0 = rng.uniform(-std::numbers::pi, std::numbers::pi);
  const Vec3 p0(rng.uniform(-100.0, 100.0), rng.uniform(-100.0, 100.0), 0.0);
  std::vector<Pose> poses;
  for (int f = 0; f < config.frames; ++f) {
    const double t = (f - last) * config.frame_interval;
    const Vec3 pos =
        p0 + config.ego_speed * t * Vec3(std::cos(yaw0), std::sin(yaw0), 0.0);
    poses.emplace_back(Pose::from_yaw(yaw0 + config.ego_yaw_rate * t, pos).matrix(),
                       "ego_" + std::to_string(f), "world");
  }

  // Disjoint boxes in the current frame, standing on the ground layer.
  std::vector<Box3D> boxes;
  const double min_xy = 2.2 * std::max(cell[0], cell[1]);
  for (int b = 0; b < config.num_boxes; ++b) {
    bool placed = false;
    for (int attempt = 0; attempt < 1000 && !placed; ++attempt) {
      Box3D box;
      box.size = Vec3(std::max(rng.uniform(3.5, 5.0), min_xy),
                      std::max(rng.uniform(1.8, 2.2), min_xy),
                      std::max(rng.uniform(1.5, 2.0), 2.2 * cell[2]));
      box.yaw = rng.uniform(-std::numbers::pi, std::numbers::pi);
      box.cls = config.taxonomy.thing_classes[rng.index(
          config.taxonomy.thing_classes.size())];
      box.score = 1.0;
      const double radius = 0.5 * std::hypot(box.size[0], box.size[1]);
      const double margin = radius + 3.0 * std::max(cell[0], cell[1]);
      if (hi[0] - lo[0] <= 2 * margin || hi[1] - lo[1] <= 2 * margin) break;
      box.center = Vec3(rng.uniform(lo[0] + margin, hi[0] - margin),
                        rng.uniform(lo[1] + margin, hi[1] - margin),
                        ground_z + cell[2] + box.size[2] / 2.0);
      placed = std::all_of(boxes.begin(), boxes.end(), [&](const Box3D& o) {
        const double r = 0.5 * std::hypot(o.size[0], o.size[1]);
        return (box.center - o.center).head<2>().norm() >
               radius + r + 2.0 * std::max(cell[0], cell[1]);
      });
      if (placed) boxes.push_back(box);
    }
    require(placed, ErrorCode::kInvalidArgument,
            "cannot place " + std::to_string(config.num_boxes) +
                " disjoint boxes in the grid");
  }

  // Current-frame points: box surfaces, then stuff on the ground and along
  // two walls. Stuff points whose voxel center is inside a box are dropped.
  std::vector<std::pair<Vec3, LabeledPoint>> world_points;
  std::vector<Vec3> current_points;
  std::vector<LabeledPoint> labeled;
  for (std::size_t b = 0; b < boxes.size(); ++b) {
    for (int n = 0; n < config.points_per_box; ++n) {
      current_points.push_back(sample_box_surface(rng, boxes[b], 0.98));
      labeled.push_back({{}, static_cast<std::uint16_t>(boxes[b].cls),
                         static_cast<std::uint32_t>(b + 1)});
    }
  }
  const auto& stuff = config.taxonomy.stuff_classes;
  auto stuff_class = [&](std::size_t n) {
    return static_cast<std::uint16_t>(stuff[n % stuff.size()]);
  };
  auto add_stuff = [&](const Vec3& p, std::uint16_t label) {
    if (auto idx = world_to_index(fine, p)) {
      const Vec3 c = index_to_center(fine, *idx);
      for (const Box3D& box : boxes) {
        if (center_in_box(c, box)) return;
      }
    }
    current_points.push_back(p);
    labeled.push_back({{}, label, 0});
  };
  const auto ground_count = static_cast<std::size_t>(
      config.stuff_points_per_cell * fine.h() * fine.w());
  const double road_half_width = 0.35 * (hi[1] - lo[1]) / 2.0;
  for (std::size_t n = 0; n < ground_count; ++n) {
    const Vec3 p(rng.uniform(lo[0], hi[0]), rng.uniform(lo[1], hi[1]),
                 ground_z + rng.uniform(-0.25, 0.25) * cell[2]);
    const double center_y = (lo[1] + hi[1]) / 2.0;
    add_stuff(p, stuff_class(std::abs(p[1] - center_y) < road_half_width ? 0 : 1));
  }
  const double wall_top = std::min(ground_z + 3.0, hi[2] - cell[2]);
  const auto wall_count = static_cast<std::size_t>(
      config.stuff_points_per_cell * fine.w() *
      std::max(1.0, (wall_top - ground_z) / cell[2]) / 2.0);
  for (std::size_t n = 0; n < wall_count; ++n) {
    add_stuff(Vec3(hi[0] - 1.5 * cell[0], rng.uniform(lo[1], hi[1]),
                   rng.uniform(ground_z + cell[2], wall_top)),
              stuff_class(2));
    add_stuff(Vec3(rng.uniform(lo[0], hi[0]), hi[1] - 1.5 * cell[1],
                   rng.uniform(ground_z + cell[2], ground_z + 2.0)),
              stuff_class(3));
  }

  // Every frame sees the same static world from its own ego pose.
  const int num_classes = config.taxonomy.num_classes;
  std::vector<LabeledPointCloud> clouds;
  std::vector<std::vector<Box3D>> frame_boxes;
  for (int f = 0; f < config.frames; ++f) {
    const Pose cur_to_f = compose(invert(poses[f]), poses[last]);
    std::vector<LabeledPoint> pts = labeled;
    for (std::size_t n = 0; n < pts.size(); ++n) {
      pts[n].xyz = to_float3(f == last ? current_points[n]
                                       : cur_to_f.apply(current_points[n]));
    }
    clouds.emplace_back(num_classes, std::move(pts));
    std::vector<Box3D> fb = boxes;
    if (f != last) {
      const double dyaw = relative_yaw(cur_to_f);
      for (Box3D& b : fb) {
        b.center = cur_to_f.apply(b.center);
        b.yaw = std::remainder(b.yaw + dyaw, 2.0 * std::numbers::pi);
      }
    }
    frame_boxes.push_back(std::move(fb));
  }

  const double hfov =
      config.num_cameras > 0
          ? std::min(2.0 * std::numbers::pi / config.num_cameras * 1.2,
                     170.0 * std::numbers::pi / 180.0)
          : 1.0;
  std::vector<CameraModel> cams =
      make_camera_ring(config.num_cameras, Vec3(0.0, 0.0, ground_z + 1.8), hfov,
                       config.image_width, config.image_height);

  auto [sem, inst] = build_panoptic_labels(clouds[last], fine, frame_boxes[last],
                                           config.taxonomy, kDefaultRefineTau);
  return SyntheticScene{seed,
                        config,
                        std::move(poses),
                        std::move(clouds),
                        std::move(frame_boxes),
                        std::move(cams),
                        std::move(sem),
                        std::move(inst)};
}

nlohmann::json taxonomy_to_json(const Taxonomy& t) {
  return {{"num_classes", t.num_classes},
          {"thing_classes", ids_json(t.thing_classes)},
          {"stuff_classes", ids_json(t.stuff_classes)}};
}

Taxonomy taxonomy_from_json(const nlohmann::json& j) {
  try {
    Taxonomy t;
    t.num_classes = j.at("num_classes").get<int>();
    t.thing_classes = j.at("thing_classes").get<std::vector<int>>();
    t.stuff_classes = j.at("stuff_classes").get<std::vector<int>>();
    t.validate();
    return t;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::kFormat, std::string("malformed class taxonomy: ") + e.what());
  }
}

nlohmann::json config_to_json(const SceneConfig& c) {
  return {{"profile", profile_name(c.profile)},
          {"num_boxes", c.num_boxes},
          {"frames", c.frames},
          {"frame_interval", c.frame_interval},
          {"ego_speed", c.ego_speed},
          {"ego_yaw_rate", c.ego_yaw_rate},
          {"points_per_box", c.points_per_box},
          {"stuff_points_per_cell", c.stuff_points_per_cell},
          {"num_cameras", c.num_cameras},
          {"image_size", {c.image_width, c.image_height}},
          {"taxonomy", taxonomy_to_json(c.taxonomy)}};
}

SceneConfig config_from_json(const nlohmann::json& j) {
  try {
    SceneConfig c;
    c.profile = parse_profile(j.at("profile").get<std::string>());
    c.num_boxes = j.at("num_boxes").get<int>();
    c.frames = j.at("frames").get<int>();
    c.frame_interval = j.at("frame_interval").get<double>();
    c.ego_speed = j.at("ego_speed").get<double>();
    c.ego_yaw_rate = j.at("ego_yaw_rate").get<double>();
    c.points_per_box = j.at("points_per_box").get<int>();
    c.stuff_points_per_cell = j.at("stuff_points_per_cell").get<double>();
    c.num_cameras = j.at("num_cameras").get<int>();
    c.image_width = j.at("image_size").at(0).get<int>();
    c.image_height = j.at("image_size").at(1).get<int>();
    c.taxonomy = taxonomy_from_json(j.at("taxonomy"));
    c.validate();
    return c;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::kFormat, std::string("malformed scene config: ") + e.what());
  }
}

void write_scene(const SyntheticScene& scene, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  require(!ec, ErrorCode::kIo, "cannot create " + dir.string());
  nlohmann::json poses = nlohmann::json::array();
  for (const Pose& p : scene.ego_poses) poses.push_back(io::to_json(p));
  nlohmann::json cams = nlohmann::json::array();
  for (const CameraModel& c : scene.cameras) cams.push_back(io::to_json(c));
  const nlohmann::json meta = {{"format", "voxpan-scene"},
                               {"version", 1},
                               {"seed", scene.seed},
                               {"config", config_to_json(scene.config)},
                               {"ego_poses", poses},
                               {"cameras", cams},
                               {"gt_spec", io::to_json(scene.gt_semantic.spec())}};
  io::write_text(dir / "scene.json", meta.dump(2) + "\n");
  for (std::size_t f = 0; f < scene.clouds.size(); ++f) {
    io::write_file(dir / ("frame_" + std::to_string(f) + ".ppts"),
                   io::encode_ppts(scene.clouds[f]));
    io::write_text(dir / ("boxes_" + std::to_string(f) + ".jsonl"),
                   io::encode_boxes_jsonl(scene.boxes[f]));
  }
  io::write_file(dir / "gt_semantic.pvox", io::encode_pvox(scene.gt_semantic));
  io::write_file(dir / "gt_instance.pvox", io::encode_pvox(scene.gt_instance));
}

SyntheticScene read_scene(const std::filesystem::path& dir) {
  nlohmann::json meta;
  try {
    meta = nlohmann::json::parse(io::read_text(dir / "scene.json"));
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::kFormat, std::string("malformed scene.json: ") + e.what());
  }
  require(meta.value("format", "") == "voxpan-scene" && meta.value("version", 0) == 1,
          ErrorCode::kFormat, "scene.json is not a version 1 voxpan scene");
  SceneConfig config = config_from_json(meta.at("config"));
  std::vector<Pose> poses;
  for (const auto& p : meta.at("ego_poses")) poses.push_back(io::pose_from_json(p));
  std::vector<CameraModel> cams;
  for (const auto& c : meta.at("cameras")) cams.push_back(io::camera_from_json(c));
  require(static_cast<int>(poses.size()) == config.frames, ErrorCode::kFormat,
          "pose count does not match the frame count");
  std::vector<LabeledPointCloud> clouds;
  std::vector<std::vector<Box3D>> boxes;
  for (int f = 0; f < config.frames; ++f) {
    clouds.push_back(io::decode_ppts(
        io::read_file(dir / ("frame_" + std::to_string(f) + ".ppts")),
        config.taxonomy.num_classes));
    boxes.push_back(io::decode_boxes_jsonl(
        io::read_text(dir / ("boxes_" + std::to_string(f) + ".jsonl"))));
  }
  SemanticGrid sem = io::decode_semantic(io::read_file(dir / "gt_semantic.pvox"));
  InstanceGrid inst = io::decode_instance(io::read_file(dir / "gt_instance.pvox"));
  require(sem.spec() == inst.spec() &&
              sem.spec() == profile_grids(config.profile).fine,
          ErrorCode::kFormat, "ground-truth grids do not match the profile");
  require(sem.num_classes() == config.taxonomy.num_classes, ErrorCode::kFormat,
          "ground-truth class count does not match the taxonomy");
  return SyntheticScene{meta.at("seed").get<std::uint64_t>(),
                        std::move(config),
                        std::move(poses),
                        std::move(clouds),
                        std::move(boxes),
                        std::move(cams),
                        std::move(sem),
                        std::move(inst)};
}

PipelineMode parse_mode(std::string_view name) {
  if (name == "oracle") return PipelineMode::kOracle;
  if (name == "stand-in") return PipelineMode::kStandIn;
  fail(ErrorCode::kInvalidArgument,
       "unknown mode '" + std::string(name) + "' (expected oracle or stand-in)");
}

std::string_view mode_name(PipelineMode mode) {
  return mode == PipelineMode::kOracle ? "oracle" : "stand-in";
}

namespace {

DenseVolume one_hot(const SemanticGrid& grid) {
  const int channels = grid.num_classes() + 1;
  std::vector<float> data(grid.spec().cell_count() * channels, 0.0f);
  const auto labels = grid.labels();
  for (std::size_t n = 0; n < labels.size(); ++n) {
    if (labels[n] < channels) data[n * channels + labels[n]] = 1.0f;
  }
  return DenseVolume(grid.spec(), channels, std::move(data));
}

// Highest channel wins; ties go to the lower class.
std::uint16_t argmax(std::span<const float> f) {
  return static_cast<std::uint16_t>(std::max_element(f.begin(), f.end()) -
                                    f.begin());
}

class StageClock {
 public:
  explicit StageClock(std::vector<StageTiming>& out) : out_(out) {}
  void mark(std::string stage) {
    const auto now = std::chrono::steady_clock::now();
    out_.push_back({std::move(stage),
                    std::chrono::duration<double>(now - last_).count()});
    last_ = now;
  }

 private:
  std::vector<StageTiming>& out_;
  std::chrono::steady_clock::time_point last_ = std::chrono::steady_clock::now();
};

}  // namespace

PipelineReport run_pipeline(const SyntheticScene& scene,
                            const PipelineOptions& options) {
  const Taxonomy& tax = scene.config.taxonomy;
  const ProfileGrids grids = profile_grids(scene.config.profile);
  require(scene.gt_semantic.spec() == grids.fine, ErrorCode::kShapeMismatch,
          "scene ground truth does not live on the profile's fine grid");
  require(!scene.clouds.empty() && scene.clouds.size() == scene.ego_poses.size() &&
              scene.clouds.size() == scene.boxes.size(),
          ErrorCode::kInvalidArgument, "scene frames are incomplete");
  const std::size_t cur = scene.current();
  std::vector<Box3D> boxes = scene.boxes[cur];
  if (options.drop_box) {
    require(*options.drop_box < boxes.size(), ErrorCode::kOutOfRange,
            "drop_box index exceeds the box count");
    boxes.erase(boxes.begin() + static_cast<std::ptrdiff_t>(*options.drop_box));
  }

  PipelineReport report;
  report.profile = scene.config.profile;
  report.mode = options.mode;
  report.seed = scene.seed;
  StageClock clock(report.timings);

  // Coarse features for the stand-in flow and for the sparse cascade.
  std::optional<DenseVolume> fused;
  if (options.mode == PipelineMode::kStandIn || options.sparse) {
    DenseVolume current = one_hot(voxelize_majority(scene.clouds[cur], grids.coarse));
    clock.mark("voxelize_coarse");
    if (options.temporal && cur > 0) {
      std::vector<DenseVolume> history;
      for (std::size_t f = 0; f < cur; ++f) {
        const Pose cur_to_hist =
            compose(invert(scene.ego_poses[f]), scene.ego_poses[cur]);
        history.push_back(align_volume(
            one_hot(voxelize_majority(scene.clouds[f], grids.coarse)), cur_to_hist));
      }
      const int frames = static_cast<int>(cur) + 1;
      fused = linear_fuse(fuse_concat(current, history),
                          averaging_mix(frames, current.channels()));
      clock.mark("align_fuse");
    } else {
      fused = std::move(current);
    }
  }

  SemanticGrid pred(grids.fine, tax.num_classes);
  if (options.mode == PipelineMode::kOracle) {
    pred = voxelize_majority(scene.clouds[cur], grids.fine);
    clock.mark("voxelize");
  }
  if (options.sparse) {
    require(options.keep_ratios.size() == grids.stages.size(),
            ErrorCode::kInvalidArgument,
            "keep_ratios needs one ratio per upsampling stage");
    SparseCascade cascade = sparse_coarse_to_fine(
        *fused, grids.stages, options.keep_ratios,
        [](const Index3&, std::span<const float> f) {
          return 1.0 - static_cast<double>(f[0]);
        });
    report.sparsity = cascade.sparsity;
    report.kept = cascade.kept;
    if (options.mode == PipelineMode::kStandIn) {
      std::vector<std::uint16_t> labels(grids.fine.cell_count(), 0);
      for (std::size_t n = 0; n < cascade.volume.size(); ++n) {
        labels[grids.fine.linear(cascade.volume.coords()[n])] =
            argmax(cascade.volume.features(n));
      }
      pred = SemanticGrid(grids.fine, tax.num_classes, std::move(labels));
    }
    clock.mark("sparse_coarse_to_fine");
  } else if (options.mode == PipelineMode::kStandIn) {
    DenseVolume fine = coarse_to_fine(*fused, grids.stages);
    std::vector<std::uint16_t> labels(grids.fine.cell_count());
    for (std::size_t n = 0; n < labels.size(); ++n) {
      labels[n] = argmax(fine.at(grids.fine.unravel(n)));
    }
    pred = SemanticGrid(grids.fine, tax.num_classes, std::move(labels));
    clock.mark("coarse_to_fine");
  }

  pred = refine_semantics(pred, boxes, options.tau);
  clock.mark("refine_semantics");
  const InstanceGrid pred_inst =
      assign_instances(pred, boxes, tax.thing_classes, options.tau);
  report.predicted_instances = pred_inst.max_id();
  clock.mark("assign_instances");

  std::optional<BinaryMask> visible;
  SemanticGrid gt = scene.gt_semantic;
  if (options.camera_mask) {
    visible = camera_visibility_mask(grids.fine, scene.cameras);
    gt = apply_visibility_mask(gt, *visible);
  }
  std::vector<int> all_classes;
  for (int c = 1; c <= tax.num_classes; ++c) all_classes.push_back(c);
  const MiouReport mr = miou(pred, gt, visible ? &*visible : nullptr, all_classes);
  report.miou = mr.mean;
  report.evaluated_cells = mr.evaluated_cells;
  for (const ClassIoU& c : mr.per_class) report.class_iou.emplace_back(c.cls, c.iou);
  const PanopticGrids p{pred, pred_inst};
  const PanopticGrids g{gt, scene.gt_instance};
  const PQStats pq = panoptic_quality(p, g, tax.thing_classes, tax.stuff_classes);
  report.pq = pq.pq;
  report.sq = pq.sq;
  report.rq = pq.rq;
  report.pq_things = pq.pq_things;
  report.pq_stuff = pq.pq_stuff;
  report.pq_dagger =
      panoptic_quality_dagger(p, g, tax.thing_classes, tax.stuff_classes).pq;
  clock.mark("metrics");
  return report;
}

nlohmann::json PipelineReport::to_json(bool include_timings) const {
  nlohmann::json per_class = nlohmann::json::array();
  for (const auto& [cls, iou] : class_iou) {
    per_class.push_back({{"class", cls}, {"iou", iou}});
  }
  nlohmann::json j = {
      {"schema_version", 1},
      {"profile", profile_name(profile)},
      {"mode", mode_name(mode)},
      {"seed", seed},
      {"miou", miou},
      {"class_iou", per_class},
      {"evaluated_cells", evaluated_cells},
      {"pq", pq},
      {"sq", sq},
      {"rq", rq},
      {"pq_things", pq_things},
      {"pq_stuff", pq_stuff},
      {"pq_dagger", pq_dagger},
      {"predicted_instances", predicted_instances},
      {"sparsity", sparsity ? nlohmann::json(*sparsity) : nlohmann::json(nullptr)},
      {"kept", kept},
  };
  if (include_timings) {
    nlohmann::json t = nlohmann::json::array();
    for (const StageTiming& s : timings) {
      t.push_back({{"stage", s.stage}, {"seconds", s.seconds}});
    }
    j["timings"] = t;
  }
  return j;
}

}  // namespace voxpan

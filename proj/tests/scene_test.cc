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

#include <chrono>
#include <filesystem>
#include <set>

#include <gtest/gtest.h>

#include "scene_oracles.h"
#include "test_util.h"
#include "voxpan/io.h"
#include "voxpan/scene.h"

namespace voxpan {
namespace {

namespace fs = std::filesystem;

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("voxpan_scene_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

TEST(Taxonomy, NuscenesLikeSplit) {
  const Taxonomy t = Taxonomy::nuscenes_like();
  EXPECT_EQ(t.num_classes, 16);
  EXPECT_EQ(t.thing_classes.size(), 10u);
  EXPECT_EQ(t.stuff_classes.size(), 6u);
  EXPECT_TRUE(t.is_thing(1));
  EXPECT_FALSE(t.is_thing(11));
}

TEST(Profiles, ShapesMatchTheCascade) {
  const ProfileGrids paper = profile_grids(Profile::kPaper);
  EXPECT_EQ(paper.coarse.dims(), (std::array<int, 3>{50, 50, 16}));
  EXPECT_EQ(paper.fine.dims(), (std::array<int, 3>{200, 200, 32}));
  EXPECT_NEAR(paper.fine.extent_max()[0], 51.2, 1e-9);
  const ProfileGrids tiny = profile_grids(Profile::kTiny);
  EXPECT_EQ(tiny.coarse.dims(), (std::array<int, 3>{20, 20, 8}));
  EXPECT_EQ(tiny.fine.dims(), (std::array<int, 3>{40, 40, 16}));
  EXPECT_EQ(parse_profile("paper"), Profile::kPaper);
  EXPECT_VOXPAN_ERROR(parse_profile("huge"), ErrorCode::kInvalidArgument);
}

TEST(GenScene, SameSeedByteIdenticalFiles) {
  const SceneConfig cfg;
  const fs::path a = scratch("a"), b = scratch("b");
  write_scene(gen_scene(42, cfg), a);
  write_scene(gen_scene(42, cfg), b);
  const auto fa = testing::directory_bytes(a), fb = testing::directory_bytes(b);
  EXPECT_FALSE(fa.empty());
  EXPECT_EQ(fa, fb);
  write_scene(gen_scene(43, cfg), b);
  EXPECT_NE(testing::directory_bytes(b), fa);
  fs::remove_all(a);
  fs::remove_all(b);
}

TEST(GenScene, WriteReadWriteIsByteIdentical) {
  const SyntheticScene s = gen_scene(5, SceneConfig{});
  const fs::path a = scratch("rw_a"), b = scratch("rw_b");
  write_scene(s, a);
  const SyntheticScene back = read_scene(a);
  write_scene(back, b);
  EXPECT_EQ(testing::directory_bytes(a), testing::directory_bytes(b));
  EXPECT_EQ(back.gt_semantic, s.gt_semantic);
  EXPECT_EQ(back.clouds, s.clouds);
  fs::remove_all(a);
  fs::remove_all(b);
}

TEST(GenScene, ThreeBoxesGiveThreeInstances) {
  for (std::uint64_t seed : {1, 2, 3, 4}) {
    const SyntheticScene s = gen_scene(seed, SceneConfig{});
    std::set<std::uint32_t> ids(s.gt_instance.ids().begin(), s.gt_instance.ids().end());
    ids.erase(0);
    EXPECT_EQ(ids.size(), 3u);
    EXPECT_EQ(s.gt_instance.max_id(), 3u);
  }
}

TEST(GenScene, ZeroBoxesAllZeroIds) {
  SceneConfig cfg;
  cfg.num_boxes = 0;
  const SyntheticScene s = gen_scene(9, cfg);
  EXPECT_EQ(s.gt_instance.max_id(), 0u);
  for (std::uint32_t id : s.gt_instance.ids()) EXPECT_EQ(id, 0u);
}

TEST(GenScene, FramesPosesCamerasAndBoxContents) {
  const SyntheticScene s = gen_scene(10, SceneConfig{});
  EXPECT_EQ(s.ego_poses.size(), 4u);
  EXPECT_EQ(s.clouds.size(), 4u);
  EXPECT_EQ(s.cameras.size(), 6u);
  // Box points lie inside their box in every frame.
  for (std::size_t f = 0; f < s.clouds.size(); ++f) {
    for (const LabeledPoint& p : s.clouds[f].points()) {
      if (p.instance == 0) continue;
      ASSERT_LE(p.instance, s.boxes[f].size());
      const Box3D& b = s.boxes[f][p.instance - 1];
      EXPECT_EQ(p.label, b.cls);
      const Vec3 d = to_vec3(p.xyz) - b.center;
      const double lx = std::cos(b.yaw) * d[0] + std::sin(b.yaw) * d[1];
      const double ly = -std::sin(b.yaw) * d[0] + std::cos(b.yaw) * d[1];
      EXPECT_LE(std::abs(lx), b.size[0] / 2 + 1e-4);
      EXPECT_LE(std::abs(ly), b.size[1] / 2 + 1e-4);
      EXPECT_LE(std::abs(d[2]), b.size[2] / 2 + 1e-4);
    }
  }
}

TEST(GenScene, RejectsImpossibleConfig) {
  SceneConfig cfg;
  cfg.taxonomy.num_classes = 0;
  EXPECT_VOXPAN_ERROR(gen_scene(1, cfg), ErrorCode::kInvalidArgument);
  SceneConfig crowded;
  crowded.num_boxes = 500;
  EXPECT_VOXPAN_ERROR(gen_scene(1, crowded), ErrorCode::kInvalidArgument);
}

TEST(RunPipeline, OracleIsPerfect) {
  const auto t0 = std::chrono::steady_clock::now();
  const SyntheticScene s = gen_scene(7, SceneConfig{});
  const PipelineReport r = run_pipeline(s, PipelineOptions{});
  EXPECT_EQ(r.miou, 1.0);
  EXPECT_EQ(r.pq, 1.0);
  EXPECT_EQ(r.pq_dagger, 1.0);
  EXPECT_EQ(r.predicted_instances, 3u);
  EXPECT_LT(std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count(), 10.0);
}

TEST(RunPipeline, DroppedBoxCostsExactlyOneFalseNegative) {
  for (std::uint64_t seed : {7, 8, 9}) {
    const SyntheticScene s = gen_scene(seed, SceneConfig{});
    for (std::size_t drop = 0; drop < 3; ++drop) {
      PipelineOptions o;
      o.drop_box = drop;
      const PipelineReport r = run_pipeline(s, o);
      EXPECT_NEAR(r.pq, testing::expected_pq_with_dropped_box(s, drop), 1e-12);
      EXPECT_EQ(r.predicted_instances, 2u);
    }
  }
}

TEST(RunPipeline, SparseModeReportsFivePercent) {
  const SyntheticScene s = gen_scene(7, SceneConfig{});
  PipelineOptions o;
  o.sparse = true;
  const PipelineReport r = run_pipeline(s, o);
  ASSERT_TRUE(r.sparsity.has_value());
  EXPECT_EQ(*r.sparsity, 0.05);
  EXPECT_EQ(r.kept.back(), profile_grids(Profile::kTiny).fine.cell_count() / 20);
  EXPECT_EQ(r.pq, 1.0);
}

TEST(RunPipeline, StandInRunsAndIsDeterministic) {
  const SyntheticScene s = gen_scene(11, SceneConfig{});
  for (bool sparse : {false, true}) {
    PipelineOptions o;
    o.mode = PipelineMode::kStandIn;
    o.sparse = sparse;
    o.camera_mask = true;
    const PipelineReport a = run_pipeline(s, o);
    const PipelineReport b = run_pipeline(gen_scene(11, SceneConfig{}), o);
    EXPECT_EQ(a.to_json(false).dump(), b.to_json(false).dump());
    EXPECT_GE(a.miou, 0.0);
    EXPECT_LE(a.miou, 1.0);
    EXPECT_GT(a.evaluated_cells, 0u);
  }
}

TEST(RunPipeline, ReportSchema) {
  const PipelineReport r = run_pipeline(gen_scene(3, SceneConfig{}), PipelineOptions{});
  const nlohmann::json j = r.to_json();
  EXPECT_EQ(j["schema_version"], 1);
  EXPECT_EQ(j["profile"], "tiny");
  EXPECT_EQ(j["mode"], "oracle");
  EXPECT_TRUE(j["sparsity"].is_null());
  EXPECT_TRUE(j.contains("timings"));
  EXPECT_FALSE(r.to_json(false).contains("timings"));
}

TEST(RunPipeline, RejectsBadDropIndex) {
  PipelineOptions o;
  o.drop_box = 5;
  EXPECT_VOXPAN_ERROR(run_pipeline(gen_scene(3, SceneConfig{}), o), ErrorCode::kOutOfRange);
}

}  // namespace
}  // namespace voxpan

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

#include <algorithm>
#include <random>

#include <gtest/gtest.h>

#include "oracles.h"
#include "test_util.h"
#include "voxpan/metrics.h"

namespace voxpan {
namespace {

using testing::Rng;

const std::vector<int> kThings{1, 2};
const std::vector<int> kStuff{3, 4};

SemanticGrid sem1d(int classes, std::vector<std::uint16_t> labels) {
  const int n = static_cast<int>(labels.size());
  return SemanticGrid(testing::unit_spec(n, 1, 1), classes, std::move(labels));
}

InstanceGrid inst1d(std::vector<std::uint32_t> ids) {
  const int n = static_cast<int>(ids.size());
  return InstanceGrid(testing::unit_spec(n, 1, 1), std::move(ids));
}

TEST(Miou, PerfectPrediction) {
  const SemanticGrid g = sem1d(4, {1, 2, 0, 4, 4});
  const std::vector<int> classes{1, 2, 3, 4};
  const MiouReport r = miou(g, g, nullptr, classes);
  EXPECT_EQ(r.mean, 1.0);
  EXPECT_EQ(r.per_class.size(), 3u);  // class 3 absent from both
}

TEST(Miou, DisjointPredictionIsZero) {
  const std::vector<int> classes{1, 2};
  const MiouReport r = miou(sem1d(2, {1, 1}), sem1d(2, {2, 2}), nullptr, classes);
  EXPECT_EQ(r.mean, 0.0);
}

TEST(Miou, FourCellHandCase) {
  const std::vector<int> classes{1, 2};
  const MiouReport r = miou(sem1d(2, {1, 2, 2, 2}), sem1d(2, {1, 1, 2, 2}), nullptr, classes);
  ASSERT_EQ(r.per_class.size(), 2u);
  EXPECT_NEAR(r.per_class[0].iou, 0.5, 1e-12);
  EXPECT_NEAR(r.per_class[1].iou, 2.0 / 3.0, 1e-12);
  EXPECT_NEAR(r.mean, (0.5 + 2.0 / 3.0) / 2.0, 1e-12);
  EXPECT_NEAR(r.mean, 0.5833, 1e-4);
}

TEST(Miou, MaskAndIgnoreExcludeCells) {
  const std::vector<int> classes{1, 2};
  const SemanticGrid gt = sem1d(2, {1, 1, 2, 3});
  const SemanticGrid pred = sem1d(2, {1, 2, 2, 1});
  const BinaryMask mask(gt.spec(), std::vector<std::uint8_t>{1, 0, 1, 1});
  const MiouReport r = miou(pred, gt, &mask, classes);
  EXPECT_EQ(r.evaluated_cells, 2u);
  EXPECT_EQ(r.mean, 1.0);
}

TEST(Miou, Errors) {
  const std::vector<int> classes{1};
  EXPECT_VOXPAN_ERROR(miou(sem1d(2, {1}), sem1d(2, {1, 1}), nullptr, classes),
                      ErrorCode::kShapeMismatch);
  EXPECT_VOXPAN_ERROR(miou(sem1d(2, {1}), sem1d(2, {3}), nullptr, classes),
                      ErrorCode::kInvalidArgument);
}

TEST(Miou, InvariantUnderCellPermutation) {
  Rng rng(3);
  std::vector<std::uint16_t> g(60), p(60);
  for (std::size_t n = 0; n < 60; ++n) {
    g[n] = static_cast<std::uint16_t>(rng.integer(0, 5));
    p[n] = static_cast<std::uint16_t>(rng.integer(0, 5));
  }
  const std::vector<int> classes{0, 1, 2, 3, 4, 5};
  const double base = miou(sem1d(5, p), sem1d(5, g), nullptr, classes).mean;
  std::vector<std::size_t> perm(60);
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), rng.engine());
  std::vector<std::uint16_t> g2(60), p2(60);
  for (std::size_t n = 0; n < 60; ++n) {
    g2[n] = g[perm[n]];
    p2[n] = p[perm[n]];
  }
  EXPECT_DOUBLE_EQ(miou(sem1d(5, p2), sem1d(5, g2), nullptr, classes).mean, base);
}

TEST(PanopticQuality, PerfectPrediction) {
  const SemanticGrid s = sem1d(4, {1, 1, 2, 3, 4, 0});
  const InstanceGrid i = inst1d({1, 1, 2, 0, 0, 0});
  const PQStats st = panoptic_quality({s, i}, {s, i}, kThings, kStuff);
  EXPECT_EQ(st.pq, 1.0);
  EXPECT_EQ(st.classes.size(), 4u);
}

TEST(PanopticQuality, LonePredictionIsFalsePositive) {
  const SemanticGrid gs = sem1d(4, {0, 0});
  const SemanticGrid ps = sem1d(4, {1, 0});
  const InstanceGrid gi = inst1d({0, 0}), pi = inst1d({1, 0});
  const PQStats st = panoptic_quality({ps, pi}, {gs, gi}, kThings, kStuff);
  ASSERT_EQ(st.classes.size(), 1u);
  EXPECT_EQ(st.classes[0].fp, 1u);
  EXPECT_EQ(st.pq, 0.0);
}

TEST(PanopticQuality, OneMatchAtPointEightPlusOneMiss) {
  // gt instance 1 spans 5 cells, prediction covers 4 of them (IoU 0.8);
  // gt instance 2 has no prediction.
  const SemanticGrid gs = sem1d(4, {1, 1, 1, 1, 1, 1, 1});
  const InstanceGrid gi = inst1d({1, 1, 1, 1, 1, 2, 2});
  const SemanticGrid ps = sem1d(4, {1, 1, 1, 1, 0, 0, 0});
  const InstanceGrid pi = inst1d({1, 1, 1, 1, 0, 0, 0});
  const PQStats st = panoptic_quality({ps, pi}, {gs, gi}, kThings, kStuff);
  ASSERT_EQ(st.classes.size(), 1u);
  const ClassPQ& c = st.classes[0];
  EXPECT_EQ(c.tp, 1u);
  EXPECT_EQ(c.fn, 1u);
  EXPECT_EQ(c.fp, 0u);
  EXPECT_NEAR(c.pq, 0.8 / 1.5, 1e-9);
  EXPECT_NEAR(st.pq, 0.8 / 1.5, 1e-9);
}

TEST(PanopticQuality, IgnoredGtCellsExcluded) {
  const SemanticGrid gs = sem1d(4, {1, 5});
  const InstanceGrid gi = inst1d({1, 0});
  const SemanticGrid ps = sem1d(4, {1, 1});
  const InstanceGrid pi = inst1d({1, 1});
  EXPECT_EQ(panoptic_quality({ps, pi}, {gs, gi}, kThings, kStuff).pq, 1.0);
}

TEST(PanopticQualityDagger, StuffScoredByIoU) {
  // Stuff class 3: gt 5 cells, pred covers 2 of them; IoU 0.4.
  const SemanticGrid gs = sem1d(4, {3, 3, 3, 3, 3});
  const SemanticGrid ps = sem1d(4, {3, 3, 0, 0, 0});
  const InstanceGrid zero = inst1d({0, 0, 0, 0, 0});
  const PQStats pq = panoptic_quality({ps, zero}, {gs, zero}, kThings, kStuff);
  const PQStats pqd = panoptic_quality_dagger({ps, zero}, {gs, zero}, kThings, kStuff);
  EXPECT_EQ(pq.pq, 0.0);
  EXPECT_NEAR(pqd.pq, 0.4, 1e-12);
}

TEST(PanopticQualityDagger, ThingsOnlyEqualsPq) {
  Rng rng(4);
  const std::vector<int> things{1, 2, 3, 4};
  for (int t = 0; t < 50; ++t) {
    const VoxelGridSpec spec = testing::unit_spec(4, 4, 2);
    const auto g = testing::random_panoptic(rng, spec, 4, things, 4);
    const auto p = testing::random_panoptic(rng, spec, 4, things, 4);
    EXPECT_EQ(panoptic_quality({p.sem, p.inst}, {g.sem, g.inst}, things, {}),
              panoptic_quality_dagger({p.sem, p.inst}, {g.sem, g.inst}, things, {}));
  }
}

TEST(PanopticQualityDagger, PerfectPrediction) {
  const SemanticGrid s = sem1d(4, {1, 3, 4, 0});
  const InstanceGrid i = inst1d({1, 0, 0, 0});
  EXPECT_EQ(panoptic_quality_dagger({s, i}, {s, i}, kThings, kStuff).pq, 1.0);
}

TEST(BruteForceOracle, EmptyAndSingleSegment) {
  const SemanticGrid empty = sem1d(4, {0, 0});
  const InstanceGrid zero = inst1d({0, 0});
  EXPECT_EQ(brute_force_pq_oracle({empty, zero}, {empty, zero}, kThings, kStuff), PQStats{});
  const SemanticGrid one = sem1d(4, {1, 1});
  const InstanceGrid id = inst1d({1, 1});
  const PQStats st = brute_force_pq_oracle({one, id}, {one, id}, kThings, kStuff);
  ASSERT_EQ(st.classes.size(), 1u);
  EXPECT_EQ(st.classes[0].tp, 1u);
  EXPECT_EQ(st.classes[0].iou_sum, 1.0);
}

TEST(BruteForceOracle, AgreesWithFastPathAndIdentities) {
  Rng rng(5);
  for (int t = 0; t < 300; ++t) {
    const VoxelGridSpec spec = testing::unit_spec(rng.integer(1, 5), rng.integer(1, 5), rng.integer(1, 2));
    const auto g = testing::random_panoptic(rng, spec, 4, kThings, rng.integer(0, 6));
    const auto p = testing::random_panoptic(rng, spec, 4, kThings, rng.integer(0, 6));
    const PQStats fast = panoptic_quality({p.sem, p.inst}, {g.sem, g.inst}, kThings, kStuff);
    ASSERT_EQ(fast, brute_force_pq_oracle({p.sem, p.inst}, {g.sem, g.inst}, kThings, kStuff));
    for (const ClassPQ& c : fast.classes) {
      if (c.tp > 0) EXPECT_NEAR(c.pq, c.sq * c.rq, 1e-12);
      for (double v : {c.pq, c.sq, c.rq}) {
        EXPECT_GE(v, 0.0);
        EXPECT_LE(v, 1.0);
      }
      EXPECT_LE(c.iou_sum, static_cast<double>(c.tp));
    }
  }
}

TEST(PanopticQuality, RejectsOverlappingSplit) {
  const SemanticGrid s = sem1d(4, {1});
  const InstanceGrid i = inst1d({1});
  const std::vector<int> things{1, 3};
  EXPECT_VOXPAN_ERROR(panoptic_quality({s, i}, {s, i}, things, kStuff),
                      ErrorCode::kInvalidArgument);
}

}  // namespace
}  // namespace voxpan

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
#include <cmath>
#include <numeric>

#include <gtest/gtest.h>

#include "test_util.h"
#include "voxpan/grad_suite.h"
#include "voxpan/losses.h"
#include "voxpan/sampling.h"

namespace voxpan {
namespace {

using testing::Rng;

Eigen::MatrixXd random_logits(Rng& rng, int n, int c) {
  Eigen::MatrixXd z(n, c);
  for (Eigen::Index i = 0; i < z.size(); ++i) z(i) = rng.uniform(-2.0, 2.0);
  return z;
}

std::vector<int> random_targets(Rng& rng, int n, int c) {
  std::vector<int> t(n);
  for (int& v : t) v = rng.integer(0, c - 1);
  return t;
}

Eigen::MatrixXd rows(std::initializer_list<std::initializer_list<double>> r) {
  Eigen::MatrixXd m(r.size(), r.begin()->size());
  int i = 0;
  for (const auto& row : r) {
    int j = 0;
    for (double v : row) m(i, j++) = v;
    ++i;
  }
  return m;
}

TEST(FocalLoss, SingleItemHandValue) {
  const std::vector<int> t{0};
  const LossWithGrad l = focal_loss(rows({{0.5, 0.5}}), t, {0.25, 2.0}, -1);
  EXPECT_NEAR(l.value, 0.25 * 0.25 * std::log(2.0), 1e-12);
  EXPECT_NEAR(l.value, 0.043322, 1e-6);
}

TEST(FocalLoss, ReducesToCrossEntropy) {
  Rng rng(1);
  const Eigen::MatrixXd p = softmax_rows(random_logits(rng, 5, 4));
  const std::vector<int> t{0, 3, 2, 1, 1};
  double ce = 0.0;
  for (int i = 0; i < 5; ++i) ce -= std::log(p(i, t[i]));
  EXPECT_NEAR(focal_loss(p, t, {1.0, 0.0}, -1).value, ce / 5.0, 1e-12);
}

TEST(FocalLoss, PerfectPredictionIsZero) {
  const std::vector<int> t{1, 0};
  const LossWithGrad l = focal_loss(rows({{0, 1}, {1, 0}}), t, {}, -1);
  EXPECT_EQ(l.value, 0.0);
  EXPECT_TRUE(l.grad.allFinite());
}

TEST(FocalLoss, IgnoredItemsSkipped) {
  const std::vector<int> t{0, 9};
  const LossWithGrad a = focal_loss(rows({{0.3, 0.7}, {0.9, 0.1}}), t, {}, 9);
  const std::vector<int> t1{0};
  EXPECT_NEAR(a.value, focal_loss(rows({{0.3, 0.7}}), t1, {}, 9).value, 1e-15);
  EXPECT_EQ(a.grad.row(1).norm(), 0.0);
}

TEST(FocalLoss, Errors) {
  const std::vector<int> ignored{5};
  EXPECT_VOXPAN_ERROR(focal_loss(rows({{0.5, 0.5}}), ignored, {}, 5),
                      ErrorCode::kInvalidArgument);
  const std::vector<int> t{0};
  EXPECT_VOXPAN_ERROR(focal_loss(rows({{0.5, 0.6}}), t, {}, -1), ErrorCode::kInvalidArgument);
  const std::vector<int> two{0, 1};
  EXPECT_VOXPAN_ERROR(focal_loss(rows({{0.5, 0.5}}), two, {}, -1), ErrorCode::kShapeMismatch);
}

TEST(FocalLoss, GradientMatchesFiniteDifferences) {
  EXPECT_LT(focal_grad_suite(21, 100).max_rel_error, 1e-4);
}

TEST(LovaszLoss, PerfectPredictionIsZero) {
  const std::vector<int> t{0, 1, 2, 1};
  EXPECT_EQ(lovasz_softmax_loss(rows({{1, 0, 0}, {0, 1, 0}, {0, 0, 1}, {0, 1, 0}}), t, {}, -1)
                .value,
            0.0);
}

TEST(LovaszLoss, BinarySingleItem) {
  for (double p : {0.1, 0.5, 0.83}) {
    const std::vector<int> t{0};
    EXPECT_NEAR(lovasz_softmax_loss(rows({{p, 1 - p}}), t, {}, -1).value, 1 - p, 1e-15);
  }
}

TEST(LovaszLoss, EligibilityRestrictsItems) {
  const std::vector<int> t{0, 1};
  const std::vector<std::uint8_t> only_first{1, 0};
  const auto full = rows({{0.7, 0.3}, {0.2, 0.8}});
  const std::vector<int> t1{0};
  EXPECT_NEAR(lovasz_softmax_loss(full, t, only_first, -1).value,
              lovasz_softmax_loss(rows({{0.7, 0.3}}), t1, {}, -1).value, 1e-15);
  const std::vector<std::uint8_t> none{0, 0};
  EXPECT_VOXPAN_ERROR(lovasz_softmax_loss(full, t, none, -1), ErrorCode::kInvalidArgument);
}

TEST(LovaszLoss, PermutationInvariant) {
  Rng rng(2);
  const Eigen::MatrixXd p = softmax_rows(random_logits(rng, 7, 3));
  const std::vector<int> t = random_targets(rng, 7, 3);
  std::vector<int> perm(7);
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), rng.engine());
  Eigen::MatrixXd pp(7, 3);
  std::vector<int> tp(7);
  for (int i = 0; i < 7; ++i) {
    pp.row(i) = p.row(perm[i]);
    tp[i] = t[perm[i]];
  }
  EXPECT_NEAR(lovasz_softmax_loss(p, t, {}, 3).value, lovasz_softmax_loss(pp, tp, {}, 3).value,
              1e-12);
}

TEST(LovaszLoss, BoundedByOne) {
  Rng rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    const Eigen::MatrixXd p = softmax_rows(random_logits(rng, 6, 4));
    const double v = lovasz_softmax_loss(p, random_targets(rng, 6, 4), {}, 4).value;
    EXPECT_GE(v, 0.0);
    EXPECT_LE(v, 1.0);
  }
}

TEST(LovaszLoss, GradientMatchesFiniteDifferences) {
  EXPECT_LT(lovasz_grad_suite(22, 100).max_rel_error, 1e-4);
}

TEST(ThingMaskLoss, SingleVoxel) {
  const VoxelGridSpec spec = testing::unit_spec(1, 1, 1);
  const GridLoss fg = thing_mask_loss(DenseVolume(spec, 1, {0.5f}), BinaryMask(spec, true),
                                      {0.25, 2.0});
  EXPECT_NEAR(fg.value, 0.25 * 0.25 * std::log(2.0), 1e-12);
  const GridLoss bg = thing_mask_loss(DenseVolume(spec, 1, {0.5f}), BinaryMask(spec, false),
                                      {0.25, 2.0});
  EXPECT_NEAR(bg.value, 0.75 * 0.25 * std::log(2.0), 1e-12);
}

TEST(ThingMaskLoss, Errors) {
  const VoxelGridSpec spec = testing::unit_spec(1, 1, 1);
  EXPECT_VOXPAN_ERROR(thing_mask_loss(DenseVolume(spec, 1, {1.5f}), BinaryMask(spec), {}),
                      ErrorCode::kOutOfRange);
  EXPECT_VOXPAN_ERROR(thing_mask_loss(DenseVolume(spec, 2), BinaryMask(spec), {}),
                      ErrorCode::kShapeMismatch);
  EXPECT_VOXPAN_ERROR(
      thing_mask_loss(DenseVolume(spec, 1), BinaryMask(testing::unit_spec(1, 1, 2)), {}),
      ErrorCode::kShapeMismatch);
}

TEST(ThingMaskLoss, GradientMatchesFiniteDifferences) {
  EXPECT_LT(thing_mask_grad_suite(23, 100).max_rel_error, 1e-4);
}

TEST(L1BoxLoss, HandValue) {
  EXPECT_NEAR(l1_box_loss(rows({{1.0}}), rows({{3.0}})).value, 2.0, 1e-15);
  EXPECT_NEAR(l1_box_loss(rows({{1, -1}}), rows({{0, 1}})).value, 1.5, 1e-15);
}

TEST(L1BoxLoss, GradientMatchesFiniteDifferences) {
  EXPECT_LT(l1_grad_suite(24, 100).max_rel_error, 1e-4);
}

TEST(LossWeights, Defaults) {
  const LossWeights w;
  EXPECT_EQ(w.focal, 10.0);
  EXPECT_EQ(w.lovasz, 10.0);
  EXPECT_EQ(w.thing, 5.0);
  EXPECT_EQ(w.cls, 2.0);
  EXPECT_EQ(w.reg, 0.25);
}

TEST(TotalLoss, UnitPartsGiveWeightSum) {
  const LossParts ones{1, 1, 1, 1, 1};
  EXPECT_DOUBLE_EQ(total_loss(ones, LossWeights{}), 27.25);
  EXPECT_DOUBLE_EQ(segmentation_loss(ones, LossWeights{}), 25.0);
  EXPECT_DOUBLE_EQ(detection_loss(ones, LossWeights{}), 2.25);
}

TEST(TotalLoss, LinearInParts) {
  const LossParts a{0.3, 0.1, 0.7, 0.2, 1.1}, b{0.5, 0.9, 0.2, 0.4, 0.3};
  const LossParts s{0.8, 1.0, 0.9, 0.6, 1.4};
  EXPECT_NEAR(total_loss(s, {}), total_loss(a, {}) + total_loss(b, {}), 1e-12);
}

TEST(TotalLoss, RejectsNegativeWeights) {
  LossWeights w;
  w.thing = -1.0;
  EXPECT_VOXPAN_ERROR(total_loss({}, w), ErrorCode::kInvalidArgument);
  w.thing = std::nan("");
  EXPECT_VOXPAN_ERROR(total_loss({}, w), ErrorCode::kInvalidArgument);
}

TEST(ThingMaskLoss, DoubleEntryPointMatchesVolume) {
  const VoxelGridSpec spec = testing::unit_spec(2, 1, 1);
  const std::vector<std::uint8_t> bits{1, 0};
  const GridLoss a = thing_mask_loss(DenseVolume(spec, 1, {0.25f, 0.75f}), BinaryMask(spec, bits));
  const std::vector<double> p{0.25, 0.75};
  const GridLoss b = thing_mask_loss(p, bits);
  EXPECT_EQ(a.value, b.value);
  EXPECT_EQ(a.grad, b.grad);
}

TEST(GradientSuite, AllSuitesRun) {
  const auto results = run_gradient_suite(5, 10);
  ASSERT_EQ(results.size(), 6u);
  for (const GradSuiteResult& r : results) {
    EXPECT_EQ(r.instances, 10) << r.name;
    EXPECT_LT(r.max_rel_error, 1e-4) << r.name;
  }
}

TEST(PairwiseSum, MatchesSerialSumOnIntegers) {
  std::vector<double> v(1000);
  std::iota(v.begin(), v.end(), 1.0);
  EXPECT_EQ(pairwise_sum(v), 500500.0);
}

}  // namespace
}  // namespace voxpan

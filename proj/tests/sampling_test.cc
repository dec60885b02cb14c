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

#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "test_util.h"
#include "voxpan/sampling.h"

namespace voxpan {
namespace {

using testing::Rng;
using testing::unit_spec;

ImageFeatureMap random_map(Rng& rng, int h, int w, int d) {
  std::vector<float> data(static_cast<std::size_t>(h) * w * d);
  for (float& v : data) v = static_cast<float>(rng.uniform(-1, 1));
  return ImageFeatureMap(h, w, d, data);
}

ImageFeatureMap constant_map(int h, int w, int d, float c) {
  return ImageFeatureMap(h, w, d,
                         std::vector<float>(static_cast<std::size_t>(h) * w * d, c));
}

// Coordinate that keeps at least `margin` from every interpolation kink.
double smooth_coord(Rng& rng, double lo, double hi, double margin = 1e-3) {
  double x;
  do {
    x = rng.uniform(lo, hi);
  } while (near_interpolation_kink(x, margin));
  return x;
}

TEST(ImageFeatureMap, RejectsBadData) {
  EXPECT_VOXPAN_ERROR(ImageFeatureMap(2, 2, 1, {1, 2, 3}),
                      ErrorCode::kShapeMismatch);
  EXPECT_VOXPAN_ERROR(ImageFeatureMap(1, 1, 1, {NAN}),
                      ErrorCode::kInvalidArgument);
}

TEST(ImageFeatureMap, VolumeRoundTrip) {
  Rng rng(1);
  const ImageFeatureMap map = random_map(rng, 3, 5, 2);
  const ImageFeatureMap back = ImageFeatureMap::from_volume(map.to_volume());
  EXPECT_EQ(back.height(), 3);
  EXPECT_EQ(back.width(), 5);
  EXPECT_TRUE(std::equal(back.data().begin(), back.data().end(),
                         map.data().begin(), map.data().end()));
}

TEST(BilinearSample, ConstantMap) {
  Rng rng(2);
  const ImageFeatureMap map = constant_map(4, 6, 3, 2.5f);
  for (int t = 0; t < 50; ++t) {
    const auto v = bilinear_sample(map, rng.uniform(-3, 9), rng.uniform(-3, 7));
    for (int d = 0; d < 3; ++d) EXPECT_NEAR(v[d], 2.5, 1e-12);
  }
}

TEST(BilinearSample, MidwayBetweenCenters) {
  const ImageFeatureMap map(1, 2, 1, {0.0f, 1.0f});
  EXPECT_DOUBLE_EQ(bilinear_sample(map, 1.0, 0.5)[0], 0.5);
}

TEST(BilinearSample, ExactAtTexelCenters) {
  Rng rng(3);
  const ImageFeatureMap map = random_map(rng, 4, 5, 2);
  for (int r = 0; r < 4; ++r) {
    for (int c = 0; c < 5; ++c) {
      const auto v = bilinear_sample(map, c + 0.5, r + 0.5);
      for (int d = 0; d < 2; ++d) EXPECT_EQ(v[d], map.texel(r, c)[d]);
    }
  }
}

TEST(BilinearSample, ClampsOutsideCenters) {
  const ImageFeatureMap map(1, 2, 1, {3.0f, 7.0f});
  EXPECT_DOUBLE_EQ(bilinear_sample(map, -10.0, 0.5)[0], 3.0);
  EXPECT_DOUBLE_EQ(bilinear_sample(map, 10.0, 5.0)[0], 7.0);
}

TEST(BilinearSample, ConvexCombinationInRange) {
  Rng rng(4);
  const ImageFeatureMap map = random_map(rng, 6, 7, 1);
  for (int t = 0; t < 200; ++t) {
    const double u = rng.uniform(0.5, 6.5), v = rng.uniform(0.5, 5.5);
    const int c0 = static_cast<int>(std::floor(u - 0.5));
    const int r0 = static_cast<int>(std::floor(v - 0.5));
    double lo = 1e9, hi = -1e9;
    for (int r = r0; r <= std::min(r0 + 1, 5); ++r) {
      for (int c = c0; c <= std::min(c0 + 1, 6); ++c) {
        lo = std::min<double>(lo, map.texel(r, c)[0]);
        hi = std::max<double>(hi, map.texel(r, c)[0]);
      }
    }
    const double s = bilinear_sample(map, u, v)[0];
    EXPECT_GE(s, lo - 1e-12);
    EXPECT_LE(s, hi + 1e-12);
  }
}

TEST(TrilinearSample, ConstantVolume) {
  const VoxelGridSpec spec = unit_spec(3, 4, 5);
  const DenseVolume vol(spec, 2, std::vector<float>(spec.cell_count() * 2, -1.25f));
  Rng rng(5);
  for (int t = 0; t < 50; ++t) {
    const Vec3 p(rng.uniform(0.5, 2.5), rng.uniform(0.5, 3.5), rng.uniform(0.5, 4.5));
    EXPECT_NEAR(trilinear_sample(vol, p)[1], -1.25, 1e-12);
    const Vec3 q(rng.uniform(-5, 8), rng.uniform(-5, 8), rng.uniform(-5, 8));
    EXPECT_NEAR(trilinear_sample(vol, q, OutOfRange::kClamp)[0], -1.25, 1e-12);
  }
}

TEST(TrilinearSample, RampMidpoint) {
  const VoxelGridSpec spec = unit_spec(4, 1, 1);
  const DenseVolume vol(spec, 1, {0.0f, 1.0f, 2.0f, 3.0f});
  EXPECT_DOUBLE_EQ(trilinear_sample(vol, Vec3(2.0, 0.5, 0.5))[0], 1.5);
  EXPECT_DOUBLE_EQ(trilinear_sample(vol, Vec3(1.5, 0.5, 0.5))[0], 1.0);
}

TEST(TrilinearSample, FarOutsideZeros) {
  Rng rng(6);
  const DenseVolume vol = testing::random_volume(rng, unit_spec(3, 3, 3), 2);
  EXPECT_EQ(trilinear_sample(vol, Vec3(100, 0, 0)), Eigen::VectorXd::Zero(2));
  EXPECT_EQ(trilinear_sample(vol, Vec3(-1e30, 1, 1)), Eigen::VectorXd::Zero(2));
}

TEST(TrilinearSample, LinearInFeatures) {
  Rng rng(7);
  const VoxelGridSpec spec = unit_spec(4, 3, 5);
  const DenseVolume a = testing::random_volume(rng, spec, 2);
  const DenseVolume b = testing::random_volume(rng, spec, 2);
  std::vector<float> mix(a.data().size());
  for (std::size_t n = 0; n < mix.size(); ++n) {
    mix[n] = 0.5f * a.data()[n] - 2.0f * b.data()[n];
  }
  const DenseVolume m(spec, 2, mix);
  for (int t = 0; t < 100; ++t) {
    const Vec3 p(rng.uniform(-1, 5), rng.uniform(-1, 4), rng.uniform(-1, 6));
    const Eigen::VectorXd expect =
        0.5 * trilinear_sample(a, p) - 2.0 * trilinear_sample(b, p);
    EXPECT_LE((trilinear_sample(m, p) - expect).cwiseAbs().maxCoeff(), 1e-5);
  }
}

TEST(DeformableAggregate, SingleSampleEqualsPlainSample) {
  Rng rng(8);
  const ImageFeatureMap map = random_map(rng, 5, 5, 3);
  DeformableSampleSpec spec{2, {{{1.7, 2.2, 0.0}, 1.0}}};
  EXPECT_EQ(deformable_aggregate(3, spec, map), bilinear_sample(map, 1.7, 2.2));
}

TEST(DeformableAggregate, ZeroWeights) {
  Rng rng(9);
  const DenseVolume vol = testing::random_volume(rng, unit_spec(3, 3, 3), 2);
  DeformableSampleSpec spec{3, {{{1, 1, 1}, 0.0}, {{2, 2, 2}, 0.0}}};
  EXPECT_EQ(deformable_aggregate(2, spec, vol), Eigen::VectorXd::Zero(2));
}

TEST(DeformableAggregate, PartitionOfUnity) {
  const ImageFeatureMap map = constant_map(4, 4, 1, 3.0f);
  DeformableSampleSpec spec{2, {{{0.3, 1.1, 0}, 0.3}, {{2.9, 3.3, 0}, 0.7}}};
  EXPECT_NEAR(deformable_aggregate(1, spec, map)[0], 3.0, 1e-12);
}

TEST(DeformableAggregate, DimensionMismatchThrows) {
  const ImageFeatureMap map = constant_map(4, 4, 2, 1.0f);
  DeformableSampleSpec spec3{3, {{{1, 1, 1}, 1.0}}};
  EXPECT_VOXPAN_ERROR(deformable_aggregate(2, spec3, map),
                      ErrorCode::kShapeMismatch);
  DeformableSampleSpec spec2{2, {{{1, 1, 0}, 1.0}}};
  EXPECT_VOXPAN_ERROR(deformable_aggregate(3, spec2, map),
                      ErrorCode::kShapeMismatch);
  const DenseVolume vol(unit_spec(2, 2, 2), 2);
  EXPECT_VOXPAN_ERROR(deformable_aggregate(2, spec2, vol),
                      ErrorCode::kShapeMismatch);
}

TEST(DeformableAggregate, WeightGradientIsSampledVectors) {
  Rng rng(10);
  const DenseVolume vol = testing::random_volume(rng, unit_spec(4, 4, 4), 3);
  DeformableSampleSpec spec{3, {}};
  for (int s = 0; s < 4; ++s) {
    spec.samples.push_back(
        {{rng.uniform(0, 4), rng.uniform(0, 4), rng.uniform(0, 4)},
         rng.uniform(-1, 1)});
  }
  const AggregateGrad g = deformable_aggregate_grad(spec, vol);
  for (int s = 0; s < 4; ++s) {
    const auto& l = spec.samples[s].location;
    EXPECT_EQ(g.d_weights.col(s), trilinear_sample(vol, Vec3(l[0], l[1], l[2])));
  }
  EXPECT_LE((g.value - deformable_aggregate(3, spec, vol)).cwiseAbs().maxCoeff(),
            1e-12);
}

TEST(GradCheck, BilinearAgainstFiniteDifferences) {
  Rng rng(11);
  for (int t = 0; t < 50; ++t) {
    const ImageFeatureMap map = random_map(rng, 6, 8, 2);
    const double u = smooth_coord(rng, 0.5, 7.5);
    const double v = smooth_coord(rng, 0.5, 5.5);
    const SampleWithGrad g = bilinear_sample_grad(map, u, v);
    for (int d = 0; d < 2; ++d) {
      const double x[2] = {u, v};
      const double analytic[2] = {g.jacobian(d, 0), g.jacobian(d, 1)};
      const auto r = grad_check(
          [&](std::span<const double> p) {
            return bilinear_sample(map, p[0], p[1])[d];
          },
          x, analytic);
      EXPECT_LT(r.max_rel_error, 1e-4);
    }
  }
}

TEST(GradCheck, TrilinearAgainstFiniteDifferences) {
  Rng rng(12);
  for (OutOfRange policy : {OutOfRange::kZeros, OutOfRange::kClamp}) {
    for (int t = 0; t < 50; ++t) {
      const DenseVolume vol = testing::random_volume(rng, unit_spec(4, 5, 3), 2);
      const Vec3 p(smooth_coord(rng, -0.4, 4.4), smooth_coord(rng, 0.5, 4.5),
                   smooth_coord(rng, 0.6, 2.4));
      const SampleWithGrad g = trilinear_sample_grad(vol, p, policy);
      for (int d = 0; d < 2; ++d) {
        const double analytic[3] = {g.jacobian(d, 0), g.jacobian(d, 1),
                                    g.jacobian(d, 2)};
        const auto r = grad_check(
            [&](std::span<const double> q) {
              return trilinear_sample(vol, Vec3(q[0], q[1], q[2]), policy)[d];
            },
            std::span<const double>(p.data(), 3), analytic);
        EXPECT_LT(r.max_rel_error, 1e-4);
      }
    }
  }
}

TEST(GradCheck, DeformableLocations) {
  Rng rng(13);
  const ImageFeatureMap map = random_map(rng, 7, 7, 2);
  for (int t = 0; t < 20; ++t) {
    DeformableSampleSpec spec{2, {}};
    for (int s = 0; s < 3; ++s) {
      spec.samples.push_back(
          {{smooth_coord(rng, 0.5, 6.5), smooth_coord(rng, 0.5, 6.5), 0.0},
           rng.uniform(-1, 1)});
    }
    const AggregateGrad g = deformable_aggregate_grad(spec, map);
    for (int s = 0; s < 3; ++s) {
      for (int d = 0; d < 2; ++d) {
        const double x[2] = {spec.samples[s].location[0],
                             spec.samples[s].location[1]};
        const double analytic[2] = {g.d_locations[s](d, 0),
                                    g.d_locations[s](d, 1)};
        const auto r = grad_check(
            [&](std::span<const double> p) {
              DeformableSampleSpec moved = spec;
              moved.samples[s].location = {p[0], p[1], 0.0};
              return deformable_aggregate(2, moved, map)[d];
            },
            x, analytic);
        EXPECT_LT(r.max_rel_error, 1e-4);
      }
    }
  }
}

TEST(NearInterpolationKink, DetectsCenters) {
  EXPECT_TRUE(near_interpolation_kink(2.5, 1e-3));
  EXPECT_TRUE(near_interpolation_kink(2.5004, 1e-3));
  EXPECT_FALSE(near_interpolation_kink(2.0, 1e-3));
}

TEST(RelativeError, FloorAppliesNearZero) {
  EXPECT_DOUBLE_EQ(relative_error(2.0, 1.0), 0.5);
  EXPECT_DOUBLE_EQ(relative_error(1e-9, 0.0), 1e-5);
}

// Camera at the origin looking along +x, 100 x 100 image, focal 50.
CameraModel forward_camera(double yaw, int index) {
  return make_pinhole_camera(Vec3::Zero(), yaw, 50.0, 100, 100, index);
}

TEST(VcaAggregate, OneCameraOneVisiblePoint) {
  Rng rng(14);
  const VoxelGridSpec spec({1, 1, 1}, Vec3(9.5, -0.5, -0.5), Vec3::Ones());
  const Vec3 off(0.5, 0.3, 0.6);
  const ReferencePointSet refs = gen_vca_reference_points(spec, {&off, 1});
  const std::vector<CameraModel> cams{forward_camera(0.0, 0)};
  const std::vector<ImageFeatureMap> feats{random_map(rng, 50, 50, 2)};
  Eigen::MatrixXd w(1, 1);
  w << 1.0;
  auto px = project_point(cams[0], refs.of({0, 0, 0})[0]);
  ASSERT_TRUE(px);
  const auto expect = bilinear_sample(feats[0], px->u * 0.5, px->v * 0.5);
  EXPECT_EQ(vca_aggregate({0, 0, 0}, refs, cams, feats, w), expect);
}

TEST(VcaAggregate, NoVisibleViewIsZero) {
  const VoxelGridSpec spec({1, 1, 1}, Vec3(-10.5, -0.5, -0.5), Vec3::Ones());
  const Vec3 off(0.5, 0.5, 0.5);
  const ReferencePointSet refs = gen_vca_reference_points(spec, {&off, 1});
  const std::vector<CameraModel> cams{forward_camera(0.0, 0)};
  const std::vector<ImageFeatureMap> feats{constant_map(10, 10, 3, 4.0f)};
  EXPECT_EQ(vca_aggregate({0, 0, 0}, refs, cams, feats, Eigen::MatrixXd::Ones(1, 1)),
            Eigen::VectorXd::Zero(3));
}

TEST(VcaAggregate, TwoViewsConstantMapsNormalize) {
  // Two cameras 20 degrees apart both see a point straight between them.
  const double half = 10.0 * std::numbers::pi / 180.0;
  const std::vector<CameraModel> cams{forward_camera(-half, 0),
                                      forward_camera(half, 1)};
  const std::vector<ImageFeatureMap> feats{constant_map(20, 20, 1, 3.0f),
                                           constant_map(20, 20, 1, 3.0f)};
  const VoxelGridSpec spec({1, 1, 1}, Vec3(9.5, -0.5, -0.5), Vec3::Ones());
  const Vec3 off(0.5, 0.5, 0.5);
  const ReferencePointSet refs = gen_vca_reference_points(spec, {&off, 1});
  ASSERT_EQ(visible_views(cams, refs.of({0, 0, 0})[0]).size(), 2u);
  const auto v = vca_aggregate({0, 0, 0}, refs, cams, feats,
                               Eigen::MatrixXd::Ones(2, 1));
  EXPECT_NEAR(v[0], 3.0, 1e-12);
}

TEST(VcaAggregate, ViewCountIgnoresWeightSplit) {
  Rng rng(15);
  const std::vector<CameraModel> cams = make_camera_ring(
      6, Vec3::Zero(), 80.0 * std::numbers::pi / 180.0, 160, 90);
  std::vector<ImageFeatureMap> feats;
  for (int n = 0; n < 6; ++n) feats.push_back(constant_map(9, 16, 2, -0.75f));
  const VoxelGridSpec spec({6, 6, 2}, Vec3(-15, -15, -1), Vec3(5, 5, 1));
  std::vector<Vec3> offs;
  for (int m = 0; m < 4; ++m) offs.emplace_back(rng.uniform(), rng.uniform(), rng.uniform());
  const ReferencePointSet refs = gen_vca_reference_points(spec, offs);
  for (std::size_t n = 0; n < spec.cell_count(); ++n) {
    const Index3 q = spec.unravel(n);
    // Per view, the weights of the visible points sum to 1.
    Eigen::MatrixXd w = Eigen::MatrixXd::Zero(6, 4);
    bool any = false;
    for (int v = 0; v < 6; ++v) {
      std::vector<int> vis;
      for (int m = 0; m < 4; ++m) {
        if (project_point(cams[v], refs.of(q)[m])) vis.push_back(m);
      }
      for (int m : vis) w(v, m) = 1.0 / vis.size();
      any = any || !vis.empty();
    }
    const auto out = vca_aggregate(q, refs, cams, feats, w);
    EXPECT_NEAR(out[0], any ? -0.75 : 0.0, 1e-12);
  }
}

TEST(VcaAggregate, ShapeChecks) {
  const VoxelGridSpec spec = unit_spec(1, 1, 1);
  const Vec3 off(0.5, 0.5, 0.5);
  const ReferencePointSet refs = gen_vca_reference_points(spec, {&off, 1});
  const std::vector<CameraModel> cams{forward_camera(0.0, 0)};
  const std::vector<ImageFeatureMap> feats{constant_map(2, 2, 1, 1.0f)};
  EXPECT_VOXPAN_ERROR(
      vca_aggregate({0, 0, 0}, refs, cams, feats, Eigen::MatrixXd::Ones(2, 1)),
      ErrorCode::kShapeMismatch);
  EXPECT_VOXPAN_ERROR(
      vca_aggregate({0, 0, 0}, refs, cams, {}, Eigen::MatrixXd::Ones(1, 1)),
      ErrorCode::kShapeMismatch);
}

TEST(VsaAggregate, ZeroOffsetsReturnWeightedCenterFeature) {
  Rng rng(16);
  const VoxelGridSpec spec({4, 4, 3}, Vec3(-2, -2, 0), Vec3(1, 1, 0.5));
  const DenseVolume vol = testing::random_volume(rng, spec, 2);
  const std::vector<Eigen::Vector2d> offs{{0, 0}, {0, 0}};
  const ReferencePointSet refs = gen_vsa_reference_points(spec, offs);
  const double w[2] = {0.25, 0.5};
  const auto out = vsa_aggregate({1, 2, 1}, refs, vol, w);
  for (int d = 0; d < 2; ++d) {
    EXPECT_NEAR(out[d], 0.75 * vol.at({1, 2, 1}, d), 1e-7);
  }
}

TEST(VsaAggregate, PlanarShiftReadsNeighbor) {
  Rng rng(17);
  const VoxelGridSpec spec = unit_spec(4, 4, 2);
  const DenseVolume vol = testing::random_volume(rng, spec, 1);
  const std::vector<Eigen::Vector2d> offs{{1, -1}};
  const ReferencePointSet refs = gen_vsa_reference_points(spec, offs);
  const double w[1] = {1.0};
  EXPECT_NEAR(vsa_aggregate({1, 2, 1}, refs, vol, w)[0], vol.at({2, 1, 1}, 0),
              1e-12);
  // Leaving the grid reads zeros.
  EXPECT_EQ(vsa_aggregate({3, 2, 0}, refs, vol, w)[0], 0.0);
}

}  // namespace
}  // namespace voxpan

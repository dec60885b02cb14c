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

#ifndef VOXPAN_SAMPLING_H_
#define VOXPAN_SAMPLING_H_

#include <array>
#include <functional>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "voxpan/detail/interp.h"
#include "voxpan/geometry.h"
#include "voxpan/grid.h"

namespace voxpan {

// Per-view image features, row-major (row, col, d).
class ImageFeatureMap {
 public:
  ImageFeatureMap(int height, int width, int channels);
  ImageFeatureMap(int height, int width, int channels, std::vector<float> data);

  int height() const { return height_; }
  int width() const { return width_; }
  int channels() const { return channels_; }
  std::span<const float> data() const { return data_; }
  const float* texel(int row, int col) const {
    return &data_[(static_cast<std::size_t>(row) * width_ + col) * channels_];
  }

  // Z = 1 volume view used for file round trips.
  DenseVolume to_volume() const;
  static ImageFeatureMap from_volume(const DenseVolume& vol);

 private:
  int height_;
  int width_;
  int channels_;
  std::vector<float> data_;
};

// Value of a sampling kernel together with its derivative with respect to
// the sampling coordinates: jacobian is D x (2 or 3).
struct SampleWithGrad {
  Eigen::VectorXd value;
  Eigen::MatrixXd jacobian;
};

// Bilinear sample at continuous pixel coordinates (texel centers at n + 0.5).
// Coordinates outside the center range clamp to it.
Eigen::VectorXd bilinear_sample(const ImageFeatureMap& map, double u, double v);
SampleWithGrad bilinear_sample_grad(const ImageFeatureMap& map, double u,
                                    double v);

// Trilinear sample at a continuous index point (cell centers at idx + 0.5).
Eigen::VectorXd trilinear_sample(const DenseVolume& vol, const Vec3& p,
                                 OutOfRange policy = OutOfRange::kZeros);
SampleWithGrad trilinear_sample_grad(const DenseVolume& vol, const Vec3& p,
                                     OutOfRange policy = OutOfRange::kZeros);

struct DeformableSample {
  std::array<double, 3> location{};  // (u, v, unused) or (x, y, z)
  double weight = 0.0;
};

struct DeformableSampleSpec {
  int dims = 2;
  std::vector<DeformableSample> samples;
};

// Sum over samples of weight * sample(source, location). Throws
// kShapeMismatch when the location dimensionality does not fit the source or
// query_dim differs from the source channel count.
Eigen::VectorXd deformable_aggregate(int query_dim,
                                     const DeformableSampleSpec& samples,
                                     const ImageFeatureMap& source);
Eigen::VectorXd deformable_aggregate(int query_dim,
                                     const DeformableSampleSpec& samples,
                                     const DenseVolume& source);

struct AggregateGrad {
  Eigen::VectorXd value;
  Eigen::MatrixXd d_weights;                 // D x S: column s is sample s
  std::vector<Eigen::MatrixXd> d_locations;  // per sample, D x dims
};
AggregateGrad deformable_aggregate_grad(const DeformableSampleSpec& samples,
                                        const ImageFeatureMap& source);
AggregateGrad deformable_aggregate_grad(const DeformableSampleSpec& samples,
                                        const DenseVolume& source);

// Voxel cross-attention for one query: each reference point of the query is
// projected into every camera, invisible (view, point) pairs are skipped, and
// the weighted samples are summed and divided by the number of views that see
// at least one of the query's points. Zero when no view sees any point.
// weights is views x points_per_voxel. Image pixels map to feature-map
// coordinates by the ratio of the map size to the image size.
Eigen::VectorXd vca_aggregate(const Index3& query, const ReferencePointSet& refs,
                              std::span<const CameraModel> cams,
                              std::span<const ImageFeatureMap> feats,
                              const Eigen::MatrixXd& weights);

// Voxel self-attention for one query: weighted trilinear samples of the query
// volume at the query's planar reference points (zeros outside the grid).
Eigen::VectorXd vsa_aggregate(const Index3& query, const ReferencePointSet& refs,
                              const DenseVolume& queries,
                              std::span<const double> weights);

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::size_t coords_checked = 0;
};

// Relative error floored so that near-zero derivatives are compared in
// absolute terms.
double relative_error(double analytic, double numeric, double floor = 1e-4);

// Central finite differences of f at x against the analytic gradient.
GradCheckResult grad_check(
    const std::function<double(std::span<const double>)>& f,
    std::span<const double> x, std::span<const double> analytic,
    double h = 1e-5);

// True when a continuous coordinate lies within margin of an interpolation
// kink, i.e. of a cell/texel center where the stencil switches.
bool near_interpolation_kink(double coord, double margin);

}  // namespace voxpan

#endif  // VOXPAN_SAMPLING_H_

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

#include "voxpan/sampling.h"

#include <algorithm>
#include <cmath>

#include "voxpan/error.h"

namespace voxpan {
namespace {

using detail::AxisStencil;
using detail::make_stencil;

double tap_derivative(const AxisStencil& s, int tap) {
  return tap == 0 ? -s.dweight : s.dweight;
}

SampleWithGrad bilinear_impl(const ImageFeatureMap& map, double u, double v,
                             bool with_grad) {
  const int d_count = map.channels();
  const AxisStencil sx = make_stencil(u, map.width(), OutOfRange::kClamp);
  const AxisStencil sy = make_stencil(v, map.height(), OutOfRange::kClamp);
  SampleWithGrad out{Eigen::VectorXd::Zero(d_count),
                     with_grad ? Eigen::MatrixXd::Zero(d_count, 2)
                               : Eigen::MatrixXd()};
  for (int b = 0; b < 2; ++b) {
    for (int a = 0; a < 2; ++a) {
      const float* f = map.texel(sy.index[b], sx.index[a]);
      const double w = sx.weight[a] * sy.weight[b];
      const double wu = tap_derivative(sx, a) * sy.weight[b];
      const double wv = sx.weight[a] * tap_derivative(sy, b);
      for (int d = 0; d < d_count; ++d) {
        if (w != 0.0) out.value[d] += w * f[d];
        if (with_grad) {
          out.jacobian(d, 0) += wu * f[d];
          out.jacobian(d, 1) += wv * f[d];
        }
      }
    }
  }
  return out;
}

SampleWithGrad trilinear_grad_impl(const DenseVolume& vol, const Vec3& p,
                                   OutOfRange policy) {
  const auto& dims = vol.spec().dims();
  const int d_count = vol.channels();
  AxisStencil s[3];
  for (int a = 0; a < 3; ++a) s[a] = make_stencil(p[a], dims[a], policy);
  SampleWithGrad out{Eigen::VectorXd::Zero(d_count),
                     Eigen::MatrixXd::Zero(d_count, 3)};
  for (int a = 0; a < 2; ++a) {
    if (!s[0].valid[a]) continue;
    for (int b = 0; b < 2; ++b) {
      if (!s[1].valid[b]) continue;
      for (int c = 0; c < 2; ++c) {
        if (!s[2].valid[c]) continue;
        auto f = vol.at({s[0].index[a], s[1].index[b], s[2].index[c]});
        const double wx = s[0].weight[a], wy = s[1].weight[b],
                     wz = s[2].weight[c];
        const double w = wx * wy * wz;
        const double gx = tap_derivative(s[0], a) * wy * wz;
        const double gy = wx * tap_derivative(s[1], b) * wz;
        const double gz = wx * wy * tap_derivative(s[2], c);
        for (int d = 0; d < d_count; ++d) {
          out.value[d] += w * f[d];
          out.jacobian(d, 0) += gx * f[d];
          out.jacobian(d, 1) += gy * f[d];
          out.jacobian(d, 2) += gz * f[d];
        }
      }
    }
  }
  return out;
}

}  // namespace

ImageFeatureMap::ImageFeatureMap(int height, int width, int channels)
    : ImageFeatureMap(height, width, channels,
                      std::vector<float>(static_cast<std::size_t>(height) *
                                         width * channels)) {}

ImageFeatureMap::ImageFeatureMap(int height, int width, int channels,
                                 std::vector<float> data)
    : height_(height), width_(width), channels_(channels), data_(std::move(data)) {
  require(height >= 1 && width >= 1 && channels >= 1,
          ErrorCode::kInvalidArgument, "feature map dims must be >= 1");
  require(data_.size() == static_cast<std::size_t>(height) * width * channels,
          ErrorCode::kShapeMismatch, "feature map data length mismatch");
  require(std::all_of(data_.begin(), data_.end(),
                      [](float x) { return std::isfinite(x); }),
          ErrorCode::kInvalidArgument, "feature map values must be finite");
}

// Rows map to the H axis and columns to W, so the volume layout (i, j, 0, d)
// coincides with (row, col, d).
DenseVolume ImageFeatureMap::to_volume() const {
  VoxelGridSpec spec({height_, width_, 1}, Vec3::Zero(), Vec3::Ones());
  return DenseVolume(spec, channels_, data_);
}

ImageFeatureMap ImageFeatureMap::from_volume(const DenseVolume& vol) {
  require(vol.spec().z() == 1, ErrorCode::kShapeMismatch,
          "feature map volumes must have Z = 1");
  return ImageFeatureMap(vol.spec().h(), vol.spec().w(), vol.channels(),
                         std::vector<float>(vol.data().begin(), vol.data().end()));
}

Eigen::VectorXd bilinear_sample(const ImageFeatureMap& map, double u,
                                double v) {
  return bilinear_impl(map, u, v, false).value;
}

SampleWithGrad bilinear_sample_grad(const ImageFeatureMap& map, double u,
                                    double v) {
  return bilinear_impl(map, u, v, true);
}

Eigen::VectorXd trilinear_sample(const DenseVolume& vol, const Vec3& p,
                                 OutOfRange policy) {
  Eigen::VectorXd out(vol.channels());
  const double q[3] = {p[0], p[1], p[2]};
  const auto& spec = vol.spec();
  detail::trilinear_accumulate(
      spec.dims(), vol.channels(), q, policy,
      [&](int i, int j, int k) { return vol.at({i, j, k}).data(); },
      out.data());
  return out;
}

SampleWithGrad trilinear_sample_grad(const DenseVolume& vol, const Vec3& p,
                                     OutOfRange policy) {
  return trilinear_grad_impl(vol, p, policy);
}

namespace {

void check_aggregate_shape(int query_dim, int dims, int want_dims,
                           int channels) {
  require(dims == want_dims, ErrorCode::kShapeMismatch,
          "sample location dimensionality does not match the source");
  require(query_dim == channels, ErrorCode::kShapeMismatch,
          "query dimension does not match source channels");
}

}  // namespace

Eigen::VectorXd deformable_aggregate(int query_dim,
                                     const DeformableSampleSpec& samples,
                                     const ImageFeatureMap& source) {
  check_aggregate_shape(query_dim, samples.dims, 2, source.channels());
  Eigen::VectorXd out = Eigen::VectorXd::Zero(query_dim);
  for (const DeformableSample& s : samples.samples) {
    out += s.weight * bilinear_sample(source, s.location[0], s.location[1]);
  }
  return out;
}

Eigen::VectorXd deformable_aggregate(int query_dim,
                                     const DeformableSampleSpec& samples,
                                     const DenseVolume& source) {
  check_aggregate_shape(query_dim, samples.dims, 3, source.channels());
  Eigen::VectorXd out = Eigen::VectorXd::Zero(query_dim);
  for (const DeformableSample& s : samples.samples) {
    out += s.weight *
           trilinear_sample(source, {s.location[0], s.location[1], s.location[2]});
  }
  return out;
}

AggregateGrad deformable_aggregate_grad(const DeformableSampleSpec& samples,
                                        const ImageFeatureMap& source) {
  check_aggregate_shape(source.channels(), samples.dims, 2, source.channels());
  const auto count = static_cast<Eigen::Index>(samples.samples.size());
  AggregateGrad g{Eigen::VectorXd::Zero(source.channels()),
                  Eigen::MatrixXd(source.channels(), count),
                  {}};
  for (Eigen::Index s = 0; s < count; ++s) {
    const DeformableSample& ds = samples.samples[s];
    SampleWithGrad sg =
        bilinear_sample_grad(source, ds.location[0], ds.location[1]);
    g.value += ds.weight * sg.value;
    g.d_weights.col(s) = sg.value;
    g.d_locations.push_back(ds.weight * sg.jacobian);
  }
  return g;
}

AggregateGrad deformable_aggregate_grad(const DeformableSampleSpec& samples,
                                        const DenseVolume& source) {
  check_aggregate_shape(source.channels(), samples.dims, 3, source.channels());
  const auto count = static_cast<Eigen::Index>(samples.samples.size());
  AggregateGrad g{Eigen::VectorXd::Zero(source.channels()),
                  Eigen::MatrixXd(source.channels(), count),
                  {}};
  for (Eigen::Index s = 0; s < count; ++s) {
    const DeformableSample& ds = samples.samples[s];
    SampleWithGrad sg = trilinear_sample_grad(
        source, {ds.location[0], ds.location[1], ds.location[2]});
    g.value += ds.weight * sg.value;
    g.d_weights.col(s) = sg.value;
    g.d_locations.push_back(ds.weight * sg.jacobian);
  }
  return g;
}

Eigen::VectorXd vca_aggregate(const Index3& query, const ReferencePointSet& refs,
                              std::span<const CameraModel> cams,
                              std::span<const ImageFeatureMap> feats,
                              const Eigen::MatrixXd& weights) {
  require(cams.size() == feats.size(), ErrorCode::kShapeMismatch,
          "one feature map per camera is required");
  require(weights.rows() == static_cast<Eigen::Index>(cams.size()) &&
              weights.cols() == refs.per_voxel(),
          ErrorCode::kShapeMismatch, "weights must be views x points");
  require(refs.spec().contains(query), ErrorCode::kOutOfRange,
          "query index out of bounds");
  const int d_count = feats.empty() ? 0 : feats[0].channels();
  for (const ImageFeatureMap& f : feats) {
    require(f.channels() == d_count, ErrorCode::kShapeMismatch,
            "all feature maps must share a channel count");
  }
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(d_count);
  int views_hit = 0;
  auto points = refs.of(query);
  for (std::size_t n = 0; n < cams.size(); ++n) {
    const CameraModel& cam = cams[n];
    const ImageFeatureMap& map = feats[n];
    const double sx = static_cast<double>(map.width()) / cam.width();
    const double sy = static_cast<double>(map.height()) / cam.height();
    DeformableSampleSpec spec{2, {}};
    for (std::size_t m = 0; m < points.size(); ++m) {
      auto proj = project_point(cam, points[m]);
      if (!proj) continue;
      spec.samples.push_back(
          {{proj->u * sx, proj->v * sy, 0.0}, weights(n, m)});
    }
    if (spec.samples.empty()) continue;
    ++views_hit;
    sum += deformable_aggregate(d_count, spec, map);
  }
  if (views_hit == 0) return Eigen::VectorXd::Zero(d_count);
  return sum / views_hit;
}

Eigen::VectorXd vsa_aggregate(const Index3& query, const ReferencePointSet& refs,
                              const DenseVolume& queries,
                              std::span<const double> weights) {
  require(refs.spec() == queries.spec(), ErrorCode::kShapeMismatch,
          "reference points and query volume use different grids");
  require(weights.size() == static_cast<std::size_t>(refs.per_voxel()),
          ErrorCode::kShapeMismatch, "one weight per reference point required");
  require(refs.spec().contains(query), ErrorCode::kOutOfRange,
          "query index out of bounds");
  auto points = refs.of(query);
  DeformableSampleSpec spec{3, {}};
  for (std::size_t m = 0; m < points.size(); ++m) {
    const Vec3 c = refs.spec().to_continuous(points[m]);
    spec.samples.push_back({{c[0], c[1], c[2]}, weights[m]});
  }
  return deformable_aggregate(queries.channels(), spec, queries);
}

double relative_error(double analytic, double numeric, double floor) {
  const double scale = std::max({std::abs(analytic), std::abs(numeric), floor});
  return std::abs(analytic - numeric) / scale;
}

GradCheckResult grad_check(
    const std::function<double(std::span<const double>)>& f,
    std::span<const double> x, std::span<const double> analytic, double h) {
  require(x.size() == analytic.size(), ErrorCode::kShapeMismatch,
          "gradient length must match the input");
  std::vector<double> probe(x.begin(), x.end());
  GradCheckResult result;
  for (std::size_t n = 0; n < x.size(); ++n) {
    probe[n] = x[n] + h;
    const double up = f(probe);
    probe[n] = x[n] - h;
    const double down = f(probe);
    probe[n] = x[n];
    const double numeric = (up - down) / (2.0 * h);
    result.max_rel_error =
        std::max(result.max_rel_error, relative_error(analytic[n], numeric));
    ++result.coords_checked;
  }
  return result;
}

bool near_interpolation_kink(double coord, double margin) {
  const double t = coord - 0.5;
  const double frac = t - std::floor(t);
  return frac < margin || frac > 1.0 - margin;
}

}  // namespace voxpan

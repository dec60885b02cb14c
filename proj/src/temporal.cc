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

#include "voxpan/temporal.h"

#include "voxpan/error.h"
#include "voxpan/sampling.h"

namespace voxpan {

DenseVolume align_volume(const DenseVolume& history,
                         const Pose& t_cur_to_hist) {
  const VoxelGridSpec& spec = history.spec();
  const int d_count = history.channels();
  std::vector<float> out(spec.cell_count() * d_count);
  std::vector<double> acc(d_count);
  for (std::size_t c = 0; c < spec.cell_count(); ++c) {
    const Vec3 g = index_to_center(spec, spec.unravel(c));
    const Vec3 q = spec.to_continuous(t_cur_to_hist.apply(g));
    const double p[3] = {q[0], q[1], q[2]};
    detail::trilinear_accumulate(
        spec.dims(), d_count, p, OutOfRange::kZeros,
        [&](int i, int j, int k) { return history.at({i, j, k}).data(); },
        acc.data());
    for (int d = 0; d < d_count; ++d) {
      out[c * d_count + d] = static_cast<float>(acc[d]);
    }
  }
  return DenseVolume(spec, d_count, std::move(out));
}

DenseVolume fuse_concat(const DenseVolume& current,
                        std::span<const DenseVolume> aligned_history) {
  const int d_count = current.channels();
  for (const DenseVolume& h : aligned_history) {
    require(h.spec() == current.spec(), ErrorCode::kShapeMismatch,
            "history volume grid differs from the current grid");
    require(h.channels() == d_count, ErrorCode::kShapeMismatch,
            "history volume channel count differs from the current one");
  }
  const int frames = static_cast<int>(aligned_history.size()) + 1;
  const int out_d = frames * d_count;
  const std::size_t cells = current.spec().cell_count();
  std::vector<float> out(cells * out_d);
  for (std::size_t c = 0; c < cells; ++c) {
    float* dst = &out[c * out_d];
    for (int f = 0; f < frames; ++f) {
      const DenseVolume& src =
          f + 1 < frames ? aligned_history[f] : current;
      auto s = src.data().subspan(c * d_count, d_count);
      std::copy(s.begin(), s.end(), dst + f * d_count);
    }
  }
  return DenseVolume(current.spec(), out_d, std::move(out));
}

DenseVolume linear_fuse(const DenseVolume& concatenated,
                        const Eigen::MatrixXd& mix) {
  require(mix.rows() == concatenated.channels() && mix.cols() >= 1,
          ErrorCode::kShapeMismatch,
          "mix matrix rows must equal the concatenated channel count");
  const int in_d = concatenated.channels();
  const int out_d = static_cast<int>(mix.cols());
  const std::size_t cells = concatenated.spec().cell_count();
  std::vector<float> out(cells * out_d);
  Eigen::VectorXd x(in_d);
  for (std::size_t c = 0; c < cells; ++c) {
    auto s = concatenated.data().subspan(c * in_d, in_d);
    for (int d = 0; d < in_d; ++d) x[d] = s[d];
    const Eigen::VectorXd y = mix.transpose() * x;
    for (int d = 0; d < out_d; ++d) out[c * out_d + d] = static_cast<float>(y[d]);
  }
  return DenseVolume(concatenated.spec(), out_d, std::move(out));
}

Eigen::MatrixXd averaging_mix(int frames, int channels) {
  require(frames >= 1 && channels >= 1, ErrorCode::kInvalidArgument,
          "frames and channels must be >= 1");
  Eigen::MatrixXd mix = Eigen::MatrixXd::Zero(frames * channels, channels);
  for (int f = 0; f < frames; ++f) {
    mix.block(f * channels, 0, channels, channels) =
        Eigen::MatrixXd::Identity(channels, channels) / frames;
  }
  return mix;
}

}  // namespace voxpan

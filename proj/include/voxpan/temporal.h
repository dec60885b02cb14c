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

#ifndef VOXPAN_TEMPORAL_H_
#define VOXPAN_TEMPORAL_H_

#include <span>

#include <Eigen/Core>

#include "voxpan/geometry.h"
#include "voxpan/grid.h"

namespace voxpan {

// Resamples a history volume into the current frame. For every current voxel
// center g the history is read at t_cur_to_hist * g with trilinear
// interpolation; space the history grid does not cover reads as zero.
DenseVolume align_volume(const DenseVolume& history, const Pose& t_cur_to_hist);

// Channel concatenation [oldest, ..., newest, current].
DenseVolume fuse_concat(const DenseVolume& current,
                        std::span<const DenseVolume> aligned_history);

// Per-voxel product out = mix^T * in, mix being in_channels x out_channels.
DenseVolume linear_fuse(const DenseVolume& concatenated,
                        const Eigen::MatrixXd& mix);

// Mix matrix that averages the k + 1 stacked D-channel slices.
Eigen::MatrixXd averaging_mix(int frames, int channels);

}  // namespace voxpan

#endif  // VOXPAN_TEMPORAL_H_

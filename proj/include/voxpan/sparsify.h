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

#ifndef VOXPAN_SPARSIFY_H_
#define VOXPAN_SPARSIFY_H_

#include <array>
#include <cstddef>
#include <functional>
#include <span>
#include <variant>
#include <vector>

#include <Eigen/Core>

#include "voxpan/grid.h"

namespace voxpan {

// Child features are the parent's features.
struct CopyParent {};

// Child features are trilinear samples of the parent grid at the child
// center, clamped at the grid border. Absent sparse parents read as zero.
struct TrilinearUpsample {};

// Stride-equals-kernel transposed convolution: child c of a parent gets
// weights[c] * parent_features. Children are ordered (ci, cj, ck)
// lexicographically; every matrix is out_channels x in_channels.
struct ChildLinearMap {
  std::array<int, 3> factors{1, 1, 1};
  std::vector<Eigen::MatrixXd> weights;
};

using UpsampleMap = std::variant<CopyParent, TrilinearUpsample, ChildLinearMap>;

struct UpsampleStage {
  std::array<int, 3> factors{1, 1, 1};
  UpsampleMap map = TrilinearUpsample{};
};

// ceil(ratio * candidates), with products that are integers up to rounding
// noise (0.2 * 12800) snapped to that integer first.
std::size_t keep_count(double keep_ratio, std::size_t candidates);

// Keeps the keep_count(ratio, candidates) highest-scoring cells; equal scores
// prefer the lower coordinate. scores is a one-channel volume on the same
// grid. Throws kOutOfRange for ratios outside (0, 1].
SparseVolume prune_topk(const DenseVolume& vol, const DenseVolume& scores,
                        double keep_ratio);
SparseVolume prune_topk(const SparseVolume& sv, const DenseVolume& scores,
                        double keep_ratio);

// Every kept cell emits all of its children on the refined grid.
SparseVolume sparse_upsample(const SparseVolume& sv,
                             const std::array<int, 3>& factors,
                             const UpsampleMap& map = CopyParent{});

DenseVolume dense_upsample(const DenseVolume& vol,
                           const std::array<int, 3>& factors,
                           const UpsampleMap& map = TrilinearUpsample{});

// Chained dense upsampling.
DenseVolume coarse_to_fine(const DenseVolume& vol,
                           std::span<const UpsampleStage> stages);

using ScoreFn =
    std::function<double(const Index3&, std::span<const float> features)>;

struct SparseCascade {
  SparseVolume volume;
  std::vector<std::size_t> kept;  // after the initial prune, then per stage
  double sparsity = 0.0;          // kept / fine-grid cells
};

// Initial prune of the coarse volume, then upsample -> prune for every stage.
// The scorer is evaluated on each candidate's current features.
SparseCascade sparse_coarse_to_fine(const DenseVolume& vol,
                                    std::span<const UpsampleStage> stages,
                                    std::span<const double> keep_ratios,
                                    const ScoreFn& scorer,
                                    double initial_ratio = 1.0);

// Same cascade with supplied one-channel score grids, one per stage on that
// stage's output grid. initial_scores is only read when initial_ratio < 1.
SparseCascade sparse_coarse_to_fine(const DenseVolume& vol,
                                    std::span<const UpsampleStage> stages,
                                    std::span<const double> keep_ratios,
                                    std::span<const DenseVolume> stage_scores,
                                    double initial_ratio = 1.0,
                                    const DenseVolume* initial_scores = nullptr);

// Feature L2 norm; the default occupancy proxy when no scorer is supplied.
double feature_norm_score(const Index3& idx, std::span<const float> features);

}  // namespace voxpan

#endif  // VOXPAN_SPARSIFY_H_

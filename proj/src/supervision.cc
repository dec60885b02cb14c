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

#include "voxpan/supervision.h"

#include <algorithm>
#include <cmath>

#include "voxpan/error.h"

namespace voxpan {

LabeledPointCloud::LabeledPointCloud(int num_classes,
                                     std::vector<LabeledPoint> points)
    : num_classes_(num_classes), points_(std::move(points)) {
  require(num_classes >= 1 && num_classes < 0xFFFF, ErrorCode::kInvalidArgument,
          "num_classes must be in [1, 65534]");
  for (const LabeledPoint& p : points_) {
    require(p.label >= 1 && p.label <= num_classes, ErrorCode::kOutOfRange,
            "point label outside 1..C");
    require(std::isfinite(p.xyz[0]) && std::isfinite(p.xyz[1]) &&
                std::isfinite(p.xyz[2]),
            ErrorCode::kInvalidArgument, "point coordinates must be finite");
  }
}

SemanticGrid voxelize_majority(const LabeledPointCloud& pc,
                               const VoxelGridSpec& spec) {
  // (voxel, label) keys sorted so that each voxel's label runs are adjacent;
  // the result is independent of the input order.
  std::vector<std::pair<std::size_t, std::uint16_t>> keys;
  keys.reserve(pc.size());
  for (const LabeledPoint& p : pc.points()) {
    if (auto idx = world_to_index(spec, to_vec3(p.xyz))) {
      keys.emplace_back(spec.linear(*idx), p.label);
    }
  }
  std::sort(keys.begin(), keys.end());
  std::vector<std::uint16_t> labels(spec.cell_count(), 0);
  std::size_t n = 0;
  while (n < keys.size()) {
    const std::size_t voxel = keys[n].first;
    std::size_t best_count = 0;
    std::uint16_t best_label = 0;
    while (n < keys.size() && keys[n].first == voxel) {
      const std::uint16_t label = keys[n].second;
      std::size_t run = 0;
      while (n < keys.size() && keys[n].first == voxel &&
             keys[n].second == label) {
        ++run;
        ++n;
      }
      // Labels arrive ascending, so strict > keeps the smaller one on ties.
      if (run > best_count) {
        best_count = run;
        best_label = label;
      }
    }
    labels[voxel] = best_label;
  }
  return SemanticGrid(spec, pc.num_classes(), std::move(labels));
}

BinaryMask make_thing_mask(const SemanticGrid& grid,
                           std::span<const int> thing_classes) {
  std::vector<std::uint8_t> is_thing(grid.num_classes() + 2, 0);
  for (int c : thing_classes) {
    if (c >= 0 && c < static_cast<int>(is_thing.size())) is_thing[c] = 1;
  }
  std::vector<std::uint8_t> bits(grid.labels().size());
  for (std::size_t n = 0; n < bits.size(); ++n) {
    bits[n] = is_thing[grid.labels()[n]];
  }
  return BinaryMask(grid.spec(), std::move(bits));
}

SemanticGrid apply_visibility_mask(const SemanticGrid& grid,
                                   const BinaryMask& visible) {
  require(grid.spec() == visible.spec(), ErrorCode::kShapeMismatch,
          "grid and visibility mask specs differ");
  std::vector<std::uint16_t> labels(grid.labels().begin(), grid.labels().end());
  for (std::size_t n = 0; n < labels.size(); ++n) {
    if (visible.bits()[n] == 0) labels[n] = grid.ignore_label();
  }
  return SemanticGrid(grid.spec(), grid.num_classes(), std::move(labels));
}

VoxelGridSpec supervision_grid_spec() {
  return VoxelGridSpec({400, 400, 64}, {-51.2, -51.2, -5.0},
                       {0.256, 0.256, 0.125});
}

}  // namespace voxpan

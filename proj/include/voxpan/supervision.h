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

#ifndef VOXPAN_SUPERVISION_H_
#define VOXPAN_SUPERVISION_H_

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "voxpan/grid.h"

namespace voxpan {

struct LabeledPoint {
  std::array<float, 3> xyz{};
  std::uint16_t label = 0;     // 1..C
  std::uint32_t instance = 0;  // 0 when the point has no instance

  friend bool operator==(const LabeledPoint&, const LabeledPoint&) = default;
};

class LabeledPointCloud {
 public:
  LabeledPointCloud(int num_classes, std::vector<LabeledPoint> points);

  int num_classes() const { return num_classes_; }
  std::span<const LabeledPoint> points() const { return points_; }
  std::size_t size() const { return points_.size(); }

  friend bool operator==(const LabeledPointCloud&,
                         const LabeledPointCloud&) = default;

 private:
  int num_classes_;
  std::vector<LabeledPoint> points_;
};

inline Vec3 to_vec3(const std::array<float, 3>& p) {
  return {static_cast<double>(p[0]), static_cast<double>(p[1]),
          static_cast<double>(p[2])};
}

// Per voxel, the class with the most points; ties go to the smaller class
// index and voxels without points stay 0. Points outside the grid are
// ignored.
SemanticGrid voxelize_majority(const LabeledPointCloud& pc,
                               const VoxelGridSpec& spec);

BinaryMask make_thing_mask(const SemanticGrid& grid,
                           std::span<const int> thing_classes);

// Invisible voxels get the ignore label num_classes + 1.
SemanticGrid apply_visibility_mask(const SemanticGrid& grid,
                                   const BinaryMask& visible);

// Supervision grid over the nuScenes range: 400 x 400 x 64 cells of
// (0.256, 0.256, 0.125) m.
VoxelGridSpec supervision_grid_spec();

}  // namespace voxpan

#endif  // VOXPAN_SUPERVISION_H_

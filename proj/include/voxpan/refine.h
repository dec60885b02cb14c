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

#ifndef VOXPAN_REFINE_H_
#define VOXPAN_REFINE_H_

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "voxpan/grid.h"

namespace voxpan {

// Detection box: center and size in meters, yaw about +z in radians.
struct Box3D {
  Vec3 center = Vec3::Zero();
  Vec3 size = Vec3::Ones();  // (l, w, h) along the box x, y, z
  double yaw = 0.0;
  int cls = 0;
  double score = 0.0;

  void validate() const;
};

inline constexpr double kDefaultRefineTau = 0.8;
inline constexpr double kDefaultOverlapThreshold = 0.5;

// Voxels whose centers fall inside the box (closed), in lexicographic order.
std::vector<Index3> voxels_in_box(const VoxelGridSpec& spec, const Box3D& box);

// Box indices with score > tau, by descending score; equal scores keep input
// order.
std::vector<std::size_t> confident_box_order(std::span<const Box3D> boxes,
                                             double tau);

// Interior voxels of confident boxes take the box class. A voxel claimed by a
// higher-scoring box is not overwritten by later boxes.
SemanticGrid refine_semantics(const SemanticGrid& grid,
                              std::span<const Box3D> boxes,
                              double tau = kDefaultRefineTau);

// Sequential instance ids over confident boxes in score order. A box's
// candidates are its interior voxels labeled with a thing class; it is skipped
// when more than overlap_threshold of them already belong to an earlier
// instance, and otherwise its unassigned candidates get the next id. Stuff,
// empty, and unclaimed thing voxels keep id 0.
InstanceGrid assign_instances(const SemanticGrid& grid,
                              std::span<const Box3D> boxes,
                              std::span<const int> thing_classes,
                              double tau = kDefaultRefineTau,
                              double overlap_threshold = kDefaultOverlapThreshold);

struct PointLabel {
  std::uint16_t cls = 0;
  std::uint32_t instance = 0;

  friend bool operator==(const PointLabel&, const PointLabel&) = default;
};

// Label and instance of the voxel containing each point; (0, 0) outside.
std::vector<PointLabel> export_point_labels(const SemanticGrid& grid,
                                            const InstanceGrid& inst,
                                            std::span<const Vec3> points);

}  // namespace voxpan

#endif  // VOXPAN_REFINE_H_

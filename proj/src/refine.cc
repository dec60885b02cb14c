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

#include "voxpan/refine.h"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "voxpan/error.h"

namespace voxpan {

void Box3D::validate() const {
  require(center.allFinite() && std::isfinite(yaw), ErrorCode::kInvalidArgument,
          "box center and yaw must be finite");
  require(size.allFinite() && (size.array() > 0.0).all(),
          ErrorCode::kInvalidArgument, "box size must be positive");
  require(score >= 0.0 && score <= 1.0, ErrorCode::kOutOfRange,
          "box score must lie in [0, 1]");
  require(cls >= 0, ErrorCode::kOutOfRange, "box class must be >= 0");
}

std::vector<Index3> voxels_in_box(const VoxelGridSpec& spec, const Box3D& box) {
  box.validate();
  const double c = std::cos(box.yaw);
  const double s = std::sin(box.yaw);
  const Vec3 half = box.size / 2.0;
  // World-space bounding box of the rotated footprint narrows the scan.
  const double ex = std::abs(c) * half[0] + std::abs(s) * half[1];
  const double ey = std::abs(s) * half[0] + std::abs(c) * half[1];
  const Vec3 lo = spec.to_continuous(box.center - Vec3(ex, ey, half[2]));
  const Vec3 hi = spec.to_continuous(box.center + Vec3(ex, ey, half[2]));
  int lo_i[3], hi_i[3];
  for (int a = 0; a < 3; ++a) {
    const double l = std::floor(lo[a] - 1.0);
    const double h = std::ceil(hi[a] + 1.0);
    lo_i[a] = static_cast<int>(std::clamp(l, 0.0, double(spec.dims()[a])));
    hi_i[a] = static_cast<int>(std::clamp(h, 0.0, double(spec.dims()[a])));
  }
  std::vector<Index3> out;
  for (int i = lo_i[0]; i < hi_i[0]; ++i) {
    for (int j = lo_i[1]; j < hi_i[1]; ++j) {
      for (int k = lo_i[2]; k < hi_i[2]; ++k) {
        const Vec3 d = index_to_center(spec, {i, j, k}) - box.center;
        const double lx = c * d[0] + s * d[1];
        const double ly = -s * d[0] + c * d[1];
        if (std::abs(lx) <= half[0] && std::abs(ly) <= half[1] &&
            std::abs(d[2]) <= half[2]) {
          out.push_back({i, j, k});
        }
      }
    }
  }
  return out;
}

std::vector<std::size_t> confident_box_order(std::span<const Box3D> boxes,
                                             double tau) {
  require(tau >= 0.0 && tau <= 1.0, ErrorCode::kOutOfRange,
          "tau must lie in [0, 1]");
  std::vector<std::size_t> order;
  for (std::size_t n = 0; n < boxes.size(); ++n) {
    boxes[n].validate();
    if (boxes[n].score > tau) order.push_back(n);
  }
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return boxes[a].score > boxes[b].score;
  });
  return order;
}

SemanticGrid refine_semantics(const SemanticGrid& grid,
                              std::span<const Box3D> boxes, double tau) {
  const VoxelGridSpec& spec = grid.spec();
  std::vector<std::uint16_t> labels(grid.labels().begin(), grid.labels().end());
  std::vector<std::uint8_t> claimed(labels.size(), 0);
  for (std::size_t b : confident_box_order(boxes, tau)) {
    require(boxes[b].cls <= grid.num_classes(), ErrorCode::kOutOfRange,
            "box class exceeds the grid's class count");
    const auto cls = static_cast<std::uint16_t>(boxes[b].cls);
    for (const Index3& v : voxels_in_box(spec, boxes[b])) {
      const std::size_t n = spec.linear(v);
      if (claimed[n]) continue;
      claimed[n] = 1;
      labels[n] = cls;
    }
  }
  return SemanticGrid(spec, grid.num_classes(), std::move(labels));
}

InstanceGrid assign_instances(const SemanticGrid& grid,
                              std::span<const Box3D> boxes,
                              std::span<const int> thing_classes, double tau,
                              double overlap_threshold) {
  require(overlap_threshold >= 0.0 && overlap_threshold <= 1.0,
          ErrorCode::kOutOfRange, "overlap threshold must lie in [0, 1]");
  const VoxelGridSpec& spec = grid.spec();
  std::vector<std::uint8_t> is_thing(grid.num_classes() + 2, 0);
  for (int c : thing_classes) {
    if (c >= 0 && c < static_cast<int>(is_thing.size())) is_thing[c] = 1;
  }
  std::vector<std::uint32_t> ids(spec.cell_count(), 0);
  std::uint32_t next_id = 1;
  for (std::size_t b : confident_box_order(boxes, tau)) {
    std::vector<std::size_t> candidates;
    for (const Index3& v : voxels_in_box(spec, boxes[b])) {
      const std::size_t n = spec.linear(v);
      if (is_thing[grid.labels()[n]]) candidates.push_back(n);
    }
    if (candidates.empty()) continue;
    const auto taken = static_cast<std::size_t>(
        std::count_if(candidates.begin(), candidates.end(),
                      [&](std::size_t n) { return ids[n] != 0; }));
    const double overlap =
        static_cast<double>(taken) / static_cast<double>(candidates.size());
    if (overlap > overlap_threshold || taken == candidates.size()) continue;
    for (std::size_t n : candidates) {
      if (ids[n] == 0) ids[n] = next_id;
    }
    ++next_id;
  }
  return InstanceGrid(spec, std::move(ids));
}

std::vector<PointLabel> export_point_labels(const SemanticGrid& grid,
                                            const InstanceGrid& inst,
                                            std::span<const Vec3> points) {
  require(grid.spec() == inst.spec(), ErrorCode::kShapeMismatch,
          "semantic and instance grids use different specs");
  std::vector<PointLabel> out;
  out.reserve(points.size());
  for (const Vec3& p : points) {
    if (auto idx = world_to_index(grid.spec(), p)) {
      out.push_back({grid.at(*idx), inst.at(*idx)});
    } else {
      out.push_back({0, 0});
    }
  }
  return out;
}

}  // namespace voxpan

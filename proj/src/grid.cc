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

#include "voxpan/grid.h"

#include <algorithm>
#include <cmath>
#include <string>

#include "voxpan/error.h"

namespace voxpan {

VoxelGridSpec::VoxelGridSpec(std::array<int, 3> dims, const Vec3& origin,
                             const Vec3& cell_size)
    : dims_(dims), origin_(origin), cell_size_(cell_size) {
  for (int a = 0; a < 3; ++a) {
    require(dims_[a] >= 1, ErrorCode::kInvalidArgument,
            "grid dims must be >= 1");
    require(std::isfinite(origin_[a]), ErrorCode::kInvalidArgument,
            "grid origin must be finite");
    require(std::isfinite(cell_size_[a]) && cell_size_[a] > 0.0,
            ErrorCode::kInvalidArgument, "cell sizes must be > 0");
  }
}

Vec3 VoxelGridSpec::extent_max() const {
  return {cell_lower(0, dims_[0]), cell_lower(1, dims_[1]),
          cell_lower(2, dims_[2])};
}

Index3 VoxelGridSpec::unravel(std::size_t linear) const {
  Index3 idx;
  idx.k = static_cast<int>(linear % dims_[2]);
  linear /= dims_[2];
  idx.j = static_cast<int>(linear % dims_[1]);
  idx.i = static_cast<int>(linear / dims_[1]);
  return idx;
}

std::optional<Index3> world_to_index(const VoxelGridSpec& spec, const Vec3& p) {
  std::array<int, 3> out{};
  for (int a = 0; a < 3; ++a) {
    const int n = spec.dims()[a];
    if (!(p[a] >= spec.cell_lower(a, 0)) || !(p[a] < spec.cell_lower(a, n))) {
      return std::nullopt;
    }
    double f = std::floor((p[a] - spec.origin()[a]) / spec.cell_size()[a]);
    int idx = static_cast<int>(std::clamp(f, 0.0, static_cast<double>(n - 1)));
    // The division can land one cell off near a boundary; settle against the
    // lower-corner expression.
    while (idx > 0 && p[a] < spec.cell_lower(a, idx)) --idx;
    while (idx < n - 1 && p[a] >= spec.cell_lower(a, idx + 1)) ++idx;
    out[a] = idx;
  }
  return Index3{out[0], out[1], out[2]};
}

Vec3 index_to_center(const VoxelGridSpec& spec, const Index3& idx) {
  require(spec.contains(idx), ErrorCode::kOutOfRange,
          "voxel index out of bounds");
  return {spec.origin()[0] + (idx.i + 0.5) * spec.cell_size()[0],
          spec.origin()[1] + (idx.j + 0.5) * spec.cell_size()[1],
          spec.origin()[2] + (idx.k + 0.5) * spec.cell_size()[2]};
}

VoxelGridSpec refine_spec(const VoxelGridSpec& spec,
                          const std::array<int, 3>& factors) {
  std::array<int, 3> dims{};
  Vec3 cell;
  for (int a = 0; a < 3; ++a) {
    require(factors[a] >= 1, ErrorCode::kInvalidArgument,
            "upsampling factors must be positive");
    dims[a] = spec.dims()[a] * factors[a];
    cell[a] = spec.cell_size()[a] / factors[a];
  }
  return VoxelGridSpec(dims, spec.origin(), cell);
}

DenseVolume::DenseVolume(const VoxelGridSpec& spec, int channels)
    : spec_(spec), channels_(channels) {
  require(channels >= 1, ErrorCode::kInvalidArgument, "channels must be >= 1");
  data_.assign(spec.cell_count() * channels, 0.0f);
}

DenseVolume::DenseVolume(const VoxelGridSpec& spec, int channels,
                         std::vector<float> data)
    : spec_(spec), channels_(channels), data_(std::move(data)) {
  require(channels >= 1, ErrorCode::kInvalidArgument, "channels must be >= 1");
  require(data_.size() == spec.cell_count() * channels,
          ErrorCode::kShapeMismatch,
          "dense volume data length must be H*W*Z*D");
  require(std::all_of(data_.begin(), data_.end(),
                      [](float v) { return std::isfinite(v); }),
          ErrorCode::kInvalidArgument, "dense volume values must be finite");
}

SparseVolume::SparseVolume(const VoxelGridSpec& spec, int channels)
    : spec_(spec), channels_(channels) {
  require(channels >= 1, ErrorCode::kInvalidArgument, "channels must be >= 1");
}

SparseVolume::SparseVolume(const VoxelGridSpec& spec, int channels,
                           std::vector<Index3> coords,
                           std::vector<float> features)
    : spec_(spec),
      channels_(channels),
      coords_(std::move(coords)),
      features_(std::move(features)) {
  require(channels >= 1, ErrorCode::kInvalidArgument, "channels must be >= 1");
  require(features_.size() == coords_.size() * channels,
          ErrorCode::kShapeMismatch, "sparse features must be N*D values");
  require(coords_.size() <= spec.cell_count(), ErrorCode::kInvalidArgument,
          "more sparse entries than grid cells");
  for (std::size_t n = 0; n < coords_.size(); ++n) {
    require(spec.contains(coords_[n]), ErrorCode::kOutOfRange,
            "sparse coordinate out of bounds");
    require(n == 0 || coords_[n - 1] < coords_[n], ErrorCode::kInvalidArgument,
            "sparse coordinates must be unique and sorted");
  }
  require(std::all_of(features_.begin(), features_.end(),
                      [](float v) { return std::isfinite(v); }),
          ErrorCode::kInvalidArgument, "sparse features must be finite");
}

std::optional<std::size_t> SparseVolume::find(const Index3& idx) const {
  auto it = std::lower_bound(coords_.begin(), coords_.end(), idx);
  if (it == coords_.end() || *it != idx) return std::nullopt;
  return static_cast<std::size_t>(it - coords_.begin());
}

SemanticGrid::SemanticGrid(const VoxelGridSpec& spec, int num_classes)
    : SemanticGrid(spec, num_classes,
                   std::vector<std::uint16_t>(spec.cell_count(), 0)) {}

SemanticGrid::SemanticGrid(const VoxelGridSpec& spec, int num_classes,
                           std::vector<std::uint16_t> labels)
    : spec_(spec), num_classes_(num_classes), labels_(std::move(labels)) {
  require(num_classes >= 1 && num_classes < 0xFFFF, ErrorCode::kInvalidArgument,
          "num_classes must be in [1, 65534]");
  require(labels_.size() == spec.cell_count(), ErrorCode::kShapeMismatch,
          "semantic grid length must be H*W*Z");
  const std::uint16_t max_label = ignore_label();
  require(std::all_of(labels_.begin(), labels_.end(),
                      [&](std::uint16_t l) { return l <= max_label; }),
          ErrorCode::kOutOfRange, "semantic label exceeds num_classes + 1");
}

InstanceGrid::InstanceGrid(const VoxelGridSpec& spec)
    : spec_(spec), ids_(spec.cell_count(), 0) {}

InstanceGrid::InstanceGrid(const VoxelGridSpec& spec,
                           std::vector<std::uint32_t> ids)
    : spec_(spec), ids_(std::move(ids)) {
  require(ids_.size() == spec.cell_count(), ErrorCode::kShapeMismatch,
          "instance grid length must be H*W*Z");
  for (std::uint32_t id : ids_) max_id_ = std::max(max_id_, id);
  require(max_id_ <= ids_.size(), ErrorCode::kInvalidArgument,
          "instance ids are not contiguous");
  std::vector<std::uint8_t> seen(max_id_ + 1, 0);
  for (std::uint32_t id : ids_) seen[id] = 1;
  for (std::uint32_t id = 1; id <= max_id_; ++id) {
    if (seen[id] == 0) {
      fail(ErrorCode::kInvalidArgument,
           "instance ids are not contiguous: missing id " + std::to_string(id));
    }
  }
}

BinaryMask::BinaryMask(const VoxelGridSpec& spec, bool value)
    : spec_(spec), bits_(spec.cell_count(), value ? 1 : 0) {}

BinaryMask::BinaryMask(const VoxelGridSpec& spec, std::vector<std::uint8_t> bits)
    : spec_(spec), bits_(std::move(bits)) {
  require(bits_.size() == spec.cell_count(), ErrorCode::kShapeMismatch,
          "mask length must be H*W*Z");
  for (auto& b : bits_) {
    require(b <= 1, ErrorCode::kInvalidArgument, "mask bits must be 0 or 1");
  }
}

std::size_t BinaryMask::popcount() const {
  return static_cast<std::size_t>(std::count(bits_.begin(), bits_.end(), 1));
}

DenseVolume apply_mask_and_pool_bev(const DenseVolume& vol,
                                    const BinaryMask& mask) {
  require(vol.spec() == mask.spec(), ErrorCode::kShapeMismatch,
          "volume and mask specs differ");
  const VoxelGridSpec& s = vol.spec();
  const int d_count = vol.channels();
  VoxelGridSpec plane_spec({s.h(), s.w(), 1}, s.origin(),
                           {s.cell_size()[0], s.cell_size()[1],
                            s.cell_size()[2] * s.z()});
  std::vector<float> out(static_cast<std::size_t>(s.h()) * s.w() * d_count);
  std::vector<double> acc(d_count);
  for (int i = 0; i < s.h(); ++i) {
    for (int j = 0; j < s.w(); ++j) {
      std::fill(acc.begin(), acc.end(), 0.0);
      for (int k = 0; k < s.z(); ++k) {
        if (!mask.at({i, j, k})) continue;
        auto f = vol.at({i, j, k});
        for (int d = 0; d < d_count; ++d) acc[d] += f[d];
      }
      float* dst = &out[(static_cast<std::size_t>(i) * s.w() + j) * d_count];
      for (int d = 0; d < d_count; ++d) {
        dst[d] = static_cast<float>(acc[d] / s.z());
      }
    }
  }
  return DenseVolume(plane_spec, d_count, std::move(out));
}

DenseVolume densify(const SparseVolume& sv) {
  const int d_count = sv.channels();
  std::vector<float> data(sv.spec().cell_count() * d_count, 0.0f);
  for (std::size_t n = 0; n < sv.size(); ++n) {
    auto f = sv.features(n);
    std::copy(f.begin(), f.end(),
              data.begin() + sv.spec().linear(sv.coords()[n]) * d_count);
  }
  return DenseVolume(sv.spec(), d_count, std::move(data));
}

SparseVolume sparsify_nonzero(const DenseVolume& vol) {
  const int d_count = vol.channels();
  std::vector<Index3> coords;
  std::vector<float> features;
  for (std::size_t c = 0; c < vol.spec().cell_count(); ++c) {
    auto f = vol.data().subspan(c * d_count, d_count);
    if (std::any_of(f.begin(), f.end(), [](float v) { return v != 0.0f; })) {
      coords.push_back(vol.spec().unravel(c));
      features.insert(features.end(), f.begin(), f.end());
    }
  }
  return SparseVolume(vol.spec(), d_count, std::move(coords),
                      std::move(features));
}

}  // namespace voxpan

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

#ifndef VOXPAN_GRID_H_
#define VOXPAN_GRID_H_

#include <array>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Core>

namespace voxpan {

using Vec3 = Eigen::Vector3d;

// Integer voxel coordinate; i runs along H (x), j along W (y), k along Z (z).
struct Index3 {
  int i = 0;
  int j = 0;
  int k = 0;

  friend auto operator<=>(const Index3&, const Index3&) = default;
};

// Axis-aligned voxel lattice. Cells are half-open boxes
// [origin + idx * cell, origin + (idx + 1) * cell), so the maximum boundary
// belongs to no cell.
class VoxelGridSpec {
 public:
  VoxelGridSpec(std::array<int, 3> dims, const Vec3& origin,
                const Vec3& cell_size);

  const std::array<int, 3>& dims() const { return dims_; }
  int h() const { return dims_[0]; }
  int w() const { return dims_[1]; }
  int z() const { return dims_[2]; }
  std::size_t cell_count() const {
    return static_cast<std::size_t>(dims_[0]) * dims_[1] * dims_[2];
  }
  const Vec3& origin() const { return origin_; }
  const Vec3& cell_size() const { return cell_size_; }
  Vec3 extent_max() const;

  bool contains(const Index3& idx) const {
    return idx.i >= 0 && idx.j >= 0 && idx.k >= 0 && idx.i < dims_[0] &&
           idx.j < dims_[1] && idx.k < dims_[2];
  }
  std::size_t linear(const Index3& idx) const {
    return (static_cast<std::size_t>(idx.i) * dims_[1] + idx.j) * dims_[2] +
           idx.k;
  }
  Index3 unravel(std::size_t linear) const;

  // Lower corner of a cell along one axis; the canonical boundary expression
  // that world_to_index is consistent with.
  double cell_lower(int axis, int idx) const {
    return origin_[axis] + idx * cell_size_[axis];
  }

  // Maps a world point to continuous index coordinates, where the center of
  // cell idx sits at idx + 0.5.
  Vec3 to_continuous(const Vec3& p) const {
    return ((p - origin_).array() / cell_size_.array()).matrix();
  }

  friend bool operator==(const VoxelGridSpec&, const VoxelGridSpec&) = default;

 private:
  std::array<int, 3> dims_;
  Vec3 origin_;
  Vec3 cell_size_;
};

std::optional<Index3> world_to_index(const VoxelGridSpec& spec, const Vec3& p);

// Throws kOutOfRange for indices outside the grid.
Vec3 index_to_center(const VoxelGridSpec& spec, const Index3& idx);

// Spec whose dims are multiplied and cells divided by the given factors;
// covers the same world extent.
VoxelGridSpec refine_spec(const VoxelGridSpec& spec,
                          const std::array<int, 3>& factors);

// D-channel feature volume, row-major in (i, j, k, d). Values are stored as
// 32-bit floats to match the on-disk format; kernels compute in double.
class DenseVolume {
 public:
  DenseVolume(const VoxelGridSpec& spec, int channels);
  DenseVolume(const VoxelGridSpec& spec, int channels, std::vector<float> data);

  const VoxelGridSpec& spec() const { return spec_; }
  int channels() const { return channels_; }
  std::span<const float> data() const { return data_; }

  std::span<const float> at(const Index3& idx) const {
    return std::span<const float>(data_).subspan(spec_.linear(idx) * channels_,
                                                 channels_);
  }
  float at(const Index3& idx, int d) const {
    return data_[spec_.linear(idx) * channels_ + d];
  }

  friend bool operator==(const DenseVolume&, const DenseVolume&) = default;

 private:
  VoxelGridSpec spec_;
  int channels_;
  std::vector<float> data_;
};

// Coordinate-list volume. Coordinates are unique and sorted lexicographically;
// construction rejects anything else.
class SparseVolume {
 public:
  SparseVolume(const VoxelGridSpec& spec, int channels);
  SparseVolume(const VoxelGridSpec& spec, int channels,
               std::vector<Index3> coords, std::vector<float> features);

  const VoxelGridSpec& spec() const { return spec_; }
  int channels() const { return channels_; }
  std::size_t size() const { return coords_.size(); }
  const std::vector<Index3>& coords() const { return coords_; }
  std::span<const float> features() const { return features_; }
  std::span<const float> features(std::size_t n) const {
    return std::span<const float>(features_).subspan(n * channels_, channels_);
  }

  // Entry position for a coordinate, or nullopt when absent.
  std::optional<std::size_t> find(const Index3& idx) const;

  friend bool operator==(const SparseVolume&, const SparseVolume&) = default;

 private:
  VoxelGridSpec spec_;
  int channels_;
  std::vector<Index3> coords_;
  std::vector<float> features_;
};

// Per-voxel class labels in {0..C}; 0 is empty. The value C + 1 is reserved as
// the ignore marker written by visibility masking.
class SemanticGrid {
 public:
  SemanticGrid(const VoxelGridSpec& spec, int num_classes);
  SemanticGrid(const VoxelGridSpec& spec, int num_classes,
               std::vector<std::uint16_t> labels);

  const VoxelGridSpec& spec() const { return spec_; }
  int num_classes() const { return num_classes_; }
  std::uint16_t ignore_label() const {
    return static_cast<std::uint16_t>(num_classes_ + 1);
  }
  std::span<const std::uint16_t> labels() const { return labels_; }
  std::uint16_t at(const Index3& idx) const { return labels_[spec_.linear(idx)]; }

  friend bool operator==(const SemanticGrid&, const SemanticGrid&) = default;

 private:
  VoxelGridSpec spec_;
  int num_classes_;
  std::vector<std::uint16_t> labels_;
};

// Per-voxel instance ids. 0 marks stuff or empty; the nonzero ids in use are
// exactly {1..P}.
class InstanceGrid {
 public:
  explicit InstanceGrid(const VoxelGridSpec& spec);
  InstanceGrid(const VoxelGridSpec& spec, std::vector<std::uint32_t> ids);

  const VoxelGridSpec& spec() const { return spec_; }
  std::span<const std::uint32_t> ids() const { return ids_; }
  std::uint32_t at(const Index3& idx) const { return ids_[spec_.linear(idx)]; }
  std::uint32_t max_id() const { return max_id_; }

  friend bool operator==(const InstanceGrid&, const InstanceGrid&) = default;

 private:
  VoxelGridSpec spec_;
  std::vector<std::uint32_t> ids_;
  std::uint32_t max_id_ = 0;
};

class BinaryMask {
 public:
  explicit BinaryMask(const VoxelGridSpec& spec, bool value = false);
  BinaryMask(const VoxelGridSpec& spec, std::vector<std::uint8_t> bits);

  const VoxelGridSpec& spec() const { return spec_; }
  std::span<const std::uint8_t> bits() const { return bits_; }
  bool at(const Index3& idx) const { return bits_[spec_.linear(idx)] != 0; }
  std::size_t popcount() const;

  friend bool operator==(const BinaryMask&, const BinaryMask&) = default;

 private:
  VoxelGridSpec spec_;
  std::vector<std::uint8_t> bits_;
};

// Height-averaged BEV plane of mask * vol. The divisor is Z, so masked-out
// cells count as zeros. The result is an (H, W, 1) volume whose single cell
// spans the full height.
DenseVolume apply_mask_and_pool_bev(const DenseVolume& vol,
                                    const BinaryMask& mask);

DenseVolume densify(const SparseVolume& sv);
SparseVolume sparsify_nonzero(const DenseVolume& vol);

}  // namespace voxpan

#endif  // VOXPAN_GRID_H_

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

#ifndef VOXPAN_GEOMETRY_H_
#define VOXPAN_GEOMETRY_H_

#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "voxpan/grid.h"

namespace voxpan {

using Mat4 = Eigen::Matrix4d;
using Mat34 = Eigen::Matrix<double, 3, 4>;

// Rigid transform taking points expressed in src_frame into dst_frame.
class Pose {
 public:
  static constexpr double kRigidTolerance = 1e-9;

  // Rejects matrices whose rotation block is not orthonormal with det +1 or
  // whose last row is not (0, 0, 0, 1), both to kRigidTolerance.
  explicit Pose(const Mat4& matrix, std::string src_frame = "",
                std::string dst_frame = "");

  static Pose identity();
  static Pose from_translation(const Vec3& t);
  // Rotation about +z by yaw radians, then translation.
  static Pose from_yaw(double yaw, const Vec3& t = Vec3::Zero());

  const Mat4& matrix() const { return matrix_; }
  Eigen::Matrix3d rotation() const { return matrix_.topLeftCorner<3, 3>(); }
  Vec3 translation() const { return matrix_.topRightCorner<3, 1>(); }
  const std::string& src_frame() const { return src_frame_; }
  const std::string& dst_frame() const { return dst_frame_; }

  Vec3 apply(const Vec3& p) const {
    return matrix_.topLeftCorner<3, 3>() * p + matrix_.topRightCorner<3, 1>();
  }

 private:
  struct Unchecked {};
  Pose(Unchecked, const Mat4& matrix, std::string src, std::string dst);

  friend Pose compose(const Pose& a, const Pose& b);
  friend Pose invert(const Pose& a);

  Mat4 matrix_;
  std::string src_frame_;
  std::string dst_frame_;
};

// a after b: maps b.src -> a.dst.
Pose compose(const Pose& a, const Pose& b);
Pose invert(const Pose& a);
std::vector<Vec3> transform_points(const Pose& a, std::span<const Vec3> pts);

class CameraModel {
 public:
  CameraModel(const Mat34& projection, int width, int height, int view_index);

  const Mat34& projection() const { return projection_; }
  int width() const { return width_; }
  int height() const { return height_; }
  int view_index() const { return view_index_; }

 private:
  Mat34 projection_;
  int width_;
  int height_;
  int view_index_;
};

// Level pinhole camera at `position` looking along yaw, image +v pointing
// down (-z ego). Focal length in pixels; principal point at the image center.
CameraModel make_pinhole_camera(const Vec3& position, double yaw,
                                double focal_px, int width, int height,
                                int view_index);

// Ring of n cameras spaced evenly in yaw, view 0 looking along +x.
std::vector<CameraModel> make_camera_ring(int n, const Vec3& mount,
                                          double horizontal_fov_rad, int width,
                                          int height);

struct PixelProjection {
  double u = 0.0;
  double v = 0.0;
  double depth = 0.0;
};

inline constexpr double kDepthEpsilon = 1e-6;

// Empty when the point is at or behind the camera (depth <= kDepthEpsilon)
// or lands outside [0, width) x [0, height).
std::optional<PixelProjection> project_point(const CameraModel& cam,
                                             const Vec3& p);

// View indices of every camera that sees p, in ascending order.
std::vector<int> visible_views(std::span<const CameraModel> cams, const Vec3& p);

// Sampling points attached to every voxel of a grid, voxel-major:
// point(v, m) lives at v * per_voxel + m where v is the linear voxel index.
class ReferencePointSet {
 public:
  ReferencePointSet(const VoxelGridSpec& spec, int per_voxel,
                    std::vector<Vec3> points);

  const VoxelGridSpec& spec() const { return spec_; }
  int per_voxel() const { return per_voxel_; }
  std::span<const Vec3> points() const { return points_; }
  std::span<const Vec3> of(const Index3& idx) const {
    return std::span<const Vec3>(points_).subspan(
        spec_.linear(idx) * per_voxel_, per_voxel_);
  }

 private:
  VoxelGridSpec spec_;
  int per_voxel_;
  std::vector<Vec3> points_;
};

// Cross-attention points: origin + (idx + offset_m) * cell for every voxel.
// Offsets must lie in [0, 1)^3 so every point stays in its source cell.
ReferencePointSet gen_vca_reference_points(const VoxelGridSpec& spec,
                                           std::span<const Vec3> offsets);

// Self-attention points on the BEV plane through each voxel center: x and y
// move by (dx, dy) cells, the height is the voxel center height exactly.
ReferencePointSet gen_vsa_reference_points(
    const VoxelGridSpec& spec, std::span<const Eigen::Vector2d> planar_offsets);

// Visibility of every voxel center in at least one camera.
BinaryMask camera_visibility_mask(const VoxelGridSpec& spec,
                                  std::span<const CameraModel> cams);

}  // namespace voxpan

#endif  // VOXPAN_GEOMETRY_H_

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

#include "voxpan/geometry.h"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <Eigen/Geometry>

#include "voxpan/error.h"

namespace voxpan {

Pose::Pose(const Mat4& matrix, std::string src_frame, std::string dst_frame)
    : matrix_(matrix),
      src_frame_(std::move(src_frame)),
      dst_frame_(std::move(dst_frame)) {
  require(matrix_.allFinite(), ErrorCode::kInvalidArgument,
          "pose matrix must be finite");
  const Eigen::Matrix3d r = matrix_.topLeftCorner<3, 3>();
  const double ortho_err =
      (r.transpose() * r - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff();
  require(ortho_err <= kRigidTolerance, ErrorCode::kInvalidArgument,
          "pose rotation is not orthonormal");
  require(std::abs(r.determinant() - 1.0) <= kRigidTolerance,
          ErrorCode::kInvalidArgument, "pose rotation must have det +1");
  const Eigen::RowVector4d last = matrix_.row(3);
  require((last - Eigen::RowVector4d(0, 0, 0, 1)).cwiseAbs().maxCoeff() <=
              kRigidTolerance,
          ErrorCode::kInvalidArgument, "pose last row must be (0, 0, 0, 1)");
}

Pose::Pose(Unchecked, const Mat4& matrix, std::string src, std::string dst)
    : matrix_(matrix), src_frame_(std::move(src)), dst_frame_(std::move(dst)) {}

Pose Pose::identity() { return Pose(Mat4::Identity()); }

Pose Pose::from_translation(const Vec3& t) {
  Mat4 m = Mat4::Identity();
  m.topRightCorner<3, 1>() = t;
  return Pose(m);
}

Pose Pose::from_yaw(double yaw, const Vec3& t) {
  Mat4 m = Mat4::Identity();
  m.topLeftCorner<3, 3>() =
      Eigen::AngleAxisd(yaw, Vec3::UnitZ()).toRotationMatrix();
  m.topRightCorner<3, 1>() = t;
  return Pose(m);
}

Pose compose(const Pose& a, const Pose& b) {
  Mat4 m = a.matrix_ * b.matrix_;
  m.row(3) << 0, 0, 0, 1;
  return Pose(Pose::Unchecked{}, m, b.src_frame_, a.dst_frame_);
}

Pose invert(const Pose& a) {
  Mat4 m = Mat4::Identity();
  const Eigen::Matrix3d rt = a.matrix_.topLeftCorner<3, 3>().transpose();
  m.topLeftCorner<3, 3>() = rt;
  m.topRightCorner<3, 1>() = -rt * a.matrix_.topRightCorner<3, 1>();
  return Pose(Pose::Unchecked{}, m, a.dst_frame_, a.src_frame_);
}

std::vector<Vec3> transform_points(const Pose& a, std::span<const Vec3> pts) {
  std::vector<Vec3> out;
  out.reserve(pts.size());
  for (const Vec3& p : pts) out.push_back(a.apply(p));
  return out;
}

CameraModel::CameraModel(const Mat34& projection, int width, int height,
                         int view_index)
    : projection_(projection),
      width_(width),
      height_(height),
      view_index_(view_index) {
  require(projection_.allFinite(), ErrorCode::kInvalidArgument,
          "projection matrix must be finite");
  require(width > 0 && height > 0, ErrorCode::kInvalidArgument,
          "image size must be positive");
}

CameraModel make_pinhole_camera(const Vec3& position, double yaw,
                                double focal_px, int width, int height,
                                int view_index) {
  // Camera axes in ego frame: x right, y down, z forward.
  const Vec3 forward(std::cos(yaw), std::sin(yaw), 0.0);
  const Vec3 down(0.0, 0.0, -1.0);
  const Vec3 right = down.cross(forward);
  Eigen::Matrix3d ego_to_cam;
  ego_to_cam.row(0) = right.transpose();
  ego_to_cam.row(1) = down.transpose();
  ego_to_cam.row(2) = forward.transpose();
  Eigen::Matrix3d k = Eigen::Matrix3d::Identity();
  k(0, 0) = focal_px;
  k(1, 1) = focal_px;
  k(0, 2) = width / 2.0;
  k(1, 2) = height / 2.0;
  Mat34 extrinsic;
  extrinsic.leftCols<3>() = ego_to_cam;
  extrinsic.col(3) = -ego_to_cam * position;
  return CameraModel(k * extrinsic, width, height, view_index);
}

std::vector<CameraModel> make_camera_ring(int n, const Vec3& mount,
                                          double horizontal_fov_rad, int width,
                                          int height) {
  require(n >= 0, ErrorCode::kInvalidArgument, "camera count must be >= 0");
  const double focal = (width / 2.0) / std::tan(horizontal_fov_rad / 2.0);
  std::vector<CameraModel> cams;
  for (int c = 0; c < n; ++c) {
    const double yaw = 2.0 * std::numbers::pi * c / n;
    cams.push_back(make_pinhole_camera(mount, yaw, focal, width, height, c));
  }
  return cams;
}

std::optional<PixelProjection> project_point(const CameraModel& cam,
                                             const Vec3& p) {
  const Eigen::Vector3d h = cam.projection() * p.homogeneous();
  const double depth = h[2];
  if (!(depth > kDepthEpsilon)) return std::nullopt;
  const double u = h[0] / depth;
  const double v = h[1] / depth;
  if (!(u >= 0.0 && u < cam.width() && v >= 0.0 && v < cam.height())) {
    return std::nullopt;
  }
  return PixelProjection{u, v, depth};
}

std::vector<int> visible_views(std::span<const CameraModel> cams,
                               const Vec3& p) {
  std::vector<int> views;
  for (const CameraModel& cam : cams) {
    if (project_point(cam, p)) views.push_back(cam.view_index());
  }
  std::sort(views.begin(), views.end());
  views.erase(std::unique(views.begin(), views.end()), views.end());
  return views;
}

ReferencePointSet::ReferencePointSet(const VoxelGridSpec& spec, int per_voxel,
                                     std::vector<Vec3> points)
    : spec_(spec), per_voxel_(per_voxel), points_(std::move(points)) {
  require(per_voxel >= 1, ErrorCode::kInvalidArgument,
          "reference point count must be >= 1");
  require(points_.size() == spec.cell_count() * per_voxel,
          ErrorCode::kShapeMismatch, "reference point count mismatch");
}

ReferencePointSet gen_vca_reference_points(const VoxelGridSpec& spec,
                                           std::span<const Vec3> offsets) {
  require(!offsets.empty(), ErrorCode::kInvalidArgument,
          "at least one reference offset is required");
  for (const Vec3& o : offsets) {
    for (int a = 0; a < 3; ++a) {
      require(o[a] >= 0.0 && o[a] < 1.0, ErrorCode::kOutOfRange,
              "reference offsets must lie in [0, 1)");
    }
  }
  const Vec3& origin = spec.origin();
  const Vec3& cell = spec.cell_size();
  std::vector<Vec3> pts;
  pts.reserve(spec.cell_count() * offsets.size());
  for (int i = 0; i < spec.h(); ++i) {
    for (int j = 0; j < spec.w(); ++j) {
      for (int k = 0; k < spec.z(); ++k) {
        for (const Vec3& o : offsets) {
          pts.emplace_back(origin[0] + (i + o[0]) * cell[0],
                           origin[1] + (j + o[1]) * cell[1],
                           origin[2] + (k + o[2]) * cell[2]);
        }
      }
    }
  }
  return ReferencePointSet(spec, static_cast<int>(offsets.size()),
                           std::move(pts));
}

ReferencePointSet gen_vsa_reference_points(
    const VoxelGridSpec& spec,
    std::span<const Eigen::Vector2d> planar_offsets) {
  require(!planar_offsets.empty(), ErrorCode::kInvalidArgument,
          "at least one reference offset is required");
  const Vec3& cell = spec.cell_size();
  std::vector<Vec3> pts;
  pts.reserve(spec.cell_count() * planar_offsets.size());
  for (int i = 0; i < spec.h(); ++i) {
    for (int j = 0; j < spec.w(); ++j) {
      for (int k = 0; k < spec.z(); ++k) {
        const Vec3 c = index_to_center(spec, {i, j, k});
        for (const Eigen::Vector2d& o : planar_offsets) {
          pts.emplace_back(c[0] + o[0] * cell[0], c[1] + o[1] * cell[1], c[2]);
        }
      }
    }
  }
  return ReferencePointSet(spec, static_cast<int>(planar_offsets.size()),
                           std::move(pts));
}

BinaryMask camera_visibility_mask(const VoxelGridSpec& spec,
                                  std::span<const CameraModel> cams) {
  std::vector<std::uint8_t> bits(spec.cell_count(), 0);
  for (std::size_t c = 0; c < bits.size(); ++c) {
    const Vec3 p = index_to_center(spec, spec.unravel(c));
    for (const CameraModel& cam : cams) {
      if (project_point(cam, p)) {
        bits[c] = 1;
        break;
      }
    }
  }
  return BinaryMask(spec, std::move(bits));
}

}  // namespace voxpan

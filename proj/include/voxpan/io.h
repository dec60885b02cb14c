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

#ifndef VOXPAN_IO_H_
#define VOXPAN_IO_H_

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "voxpan/geometry.h"
#include "voxpan/grid.h"
#include "voxpan/refine.h"
#include "voxpan/supervision.h"

namespace voxpan::io {

using Bytes = std::vector<std::uint8_t>;

// PVOX layout, all little-endian:
//   "PVOX" | u32 version | u32 kind | u32 H, W, Z, D | f64 origin[3] |
//   f64 cell_size[3] | payload row-major in (i, j, k[, d])
// Semantic payloads carry num_classes in the D slot; instance and mask
// payloads write D = 1.
enum class PvoxKind : std::uint32_t {
  kDense = 0,     // f32 features
  kSemantic = 1,  // u16 labels
  kInstance = 2,  // u32 ids
  kMask = 3,      // u8 bits
};

inline constexpr std::uint32_t kPvoxVersion = 1;
inline constexpr std::uint32_t kPptsVersion = 1;

struct PvoxHeader {
  std::uint32_t version = kPvoxVersion;
  PvoxKind kind = PvoxKind::kDense;
  std::array<std::uint32_t, 4> dims{};
  VoxelGridSpec spec{{1, 1, 1}, Vec3::Zero(), Vec3::Ones()};
};

Bytes encode_pvox(const DenseVolume& vol);
Bytes encode_pvox(const SemanticGrid& grid);
Bytes encode_pvox(const InstanceGrid& grid);
Bytes encode_pvox(const BinaryMask& mask);

PvoxHeader decode_pvox_header(const Bytes& bytes);
DenseVolume decode_dense(const Bytes& bytes);
SemanticGrid decode_semantic(const Bytes& bytes);
InstanceGrid decode_instance(const Bytes& bytes);
BinaryMask decode_mask(const Bytes& bytes);

// PPTS layout, little-endian: "PPTS" | u32 version | u64 count |
// count x (f32 x, y, z | u16 label | u32 instance).
Bytes encode_ppts(const LabeledPointCloud& pc);
// The class count is not stored in the file; labels are validated against it.
LabeledPointCloud decode_ppts(const Bytes& bytes, int num_classes);

Bytes read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, const Bytes& bytes);
void write_text(const std::filesystem::path& path, const std::string& text);
std::string read_text(const std::filesystem::path& path);

nlohmann::json to_json(const VoxelGridSpec& spec);
VoxelGridSpec spec_from_json(const nlohmann::json& j);

// {"projection": [12 numbers row-major], "image_size": [w, h],
//  "view_index": n}
nlohmann::json to_json(const CameraModel& cam);
CameraModel camera_from_json(const nlohmann::json& j);

// {"matrix": [16 numbers row-major], "src_frame": ..., "dst_frame": ...}
nlohmann::json to_json(const Pose& pose);
Pose pose_from_json(const nlohmann::json& j);

// {"center": [x, y, z], "size": [l, w, h], "yaw": r, "class": c,
//  "score": s}
nlohmann::json to_json(const Box3D& box);
Box3D box_from_json(const nlohmann::json& j);

// One compact JSON object per line.
std::string encode_boxes_jsonl(const std::vector<Box3D>& boxes);
std::vector<Box3D> decode_boxes_jsonl(const std::string& text);

}  // namespace voxpan::io

#endif  // VOXPAN_IO_H_

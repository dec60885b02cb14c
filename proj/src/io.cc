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

#include "voxpan/io.h"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include "voxpan/error.h"

namespace voxpan::io {
namespace {

static_assert(std::endian::native == std::endian::little ||
                  std::endian::native == std::endian::big,
              "mixed-endian platforms are not supported");

template <class T>
void put(Bytes& out, T value) {
  std::uint8_t raw[sizeof(T)];
  std::memcpy(raw, &value, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) {
    std::reverse(raw, raw + sizeof(T));
  }
  out.insert(out.end(), raw, raw + sizeof(T));
}

class Reader {
 public:
  explicit Reader(const Bytes& bytes) : bytes_(bytes) {}

  template <class T>
  T get() {
    require(pos_ + sizeof(T) <= bytes_.size(), ErrorCode::kFormat,
            "unexpected end of file");
    std::uint8_t raw[sizeof(T)];
    std::memcpy(raw, bytes_.data() + pos_, sizeof(T));
    if constexpr (std::endian::native == std::endian::big) {
      std::reverse(raw, raw + sizeof(T));
    }
    pos_ += sizeof(T);
    T value;
    std::memcpy(&value, raw, sizeof(T));
    return value;
  }

  void expect_magic(const char (&magic)[5]) {
    require(bytes_.size() >= pos_ + 4 &&
                std::memcmp(bytes_.data() + pos_, magic, 4) == 0,
            ErrorCode::kFormat, std::string("missing ") + magic + " magic");
    pos_ += 4;
  }

  void expect_end() const {
    require(pos_ == bytes_.size(), ErrorCode::kFormat,
            "trailing bytes after payload");
  }

  std::size_t remaining() const { return bytes_.size() - pos_; }

 private:
  const Bytes& bytes_;
  std::size_t pos_ = 0;
};

void put_magic(Bytes& out, const char (&magic)[5]) {
  out.insert(out.end(), magic, magic + 4);
}

void put_header(Bytes& out, PvoxKind kind, const VoxelGridSpec& spec,
                std::uint32_t d) {
  put_magic(out, "PVOX");
  put<std::uint32_t>(out, kPvoxVersion);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(kind));
  for (int a = 0; a < 3; ++a) {
    put<std::uint32_t>(out, static_cast<std::uint32_t>(spec.dims()[a]));
  }
  put<std::uint32_t>(out, d);
  for (int a = 0; a < 3; ++a) put<double>(out, spec.origin()[a]);
  for (int a = 0; a < 3; ++a) put<double>(out, spec.cell_size()[a]);
}

PvoxHeader read_header(Reader& r) {
  r.expect_magic("PVOX");
  PvoxHeader h;
  h.version = r.get<std::uint32_t>();
  require(h.version == kPvoxVersion, ErrorCode::kFormat,
          "unsupported PVOX version");
  const std::uint32_t kind = r.get<std::uint32_t>();
  require(kind <= 3, ErrorCode::kFormat, "unknown PVOX payload kind");
  h.kind = static_cast<PvoxKind>(kind);
  for (auto& d : h.dims) d = r.get<std::uint32_t>();
  Vec3 origin, cell;
  for (int a = 0; a < 3; ++a) origin[a] = r.get<double>();
  for (int a = 0; a < 3; ++a) cell[a] = r.get<double>();
  for (int a = 0; a < 3; ++a) {
    require(h.dims[a] >= 1 && h.dims[a] <= (1u << 20), ErrorCode::kFormat,
            "PVOX dims out of range");
  }
  h.spec = VoxelGridSpec({static_cast<int>(h.dims[0]), static_cast<int>(h.dims[1]),
                          static_cast<int>(h.dims[2])},
                         origin, cell);
  return h;
}

PvoxHeader read_header_of_kind(Reader& r, PvoxKind want) {
  PvoxHeader h = read_header(r);
  require(h.kind == want, ErrorCode::kFormat, "unexpected PVOX payload kind");
  return h;
}

void check_payload(const Reader& r, std::size_t count, std::size_t elem) {
  require(r.remaining() == count * elem, ErrorCode::kFormat,
          "PVOX payload size does not match the header");
}

}  // namespace

Bytes encode_pvox(const DenseVolume& vol) {
  Bytes out;
  put_header(out, PvoxKind::kDense, vol.spec(),
             static_cast<std::uint32_t>(vol.channels()));
  out.reserve(out.size() + vol.data().size() * 4);
  for (float v : vol.data()) put<float>(out, v);
  return out;
}

Bytes encode_pvox(const SemanticGrid& grid) {
  Bytes out;
  put_header(out, PvoxKind::kSemantic, grid.spec(),
             static_cast<std::uint32_t>(grid.num_classes()));
  for (std::uint16_t v : grid.labels()) put<std::uint16_t>(out, v);
  return out;
}

Bytes encode_pvox(const InstanceGrid& grid) {
  Bytes out;
  put_header(out, PvoxKind::kInstance, grid.spec(), 1);
  for (std::uint32_t v : grid.ids()) put<std::uint32_t>(out, v);
  return out;
}

Bytes encode_pvox(const BinaryMask& mask) {
  Bytes out;
  put_header(out, PvoxKind::kMask, mask.spec(), 1);
  out.insert(out.end(), mask.bits().begin(), mask.bits().end());
  return out;
}

PvoxHeader decode_pvox_header(const Bytes& bytes) {
  Reader r(bytes);
  return read_header(r);
}

DenseVolume decode_dense(const Bytes& bytes) {
  Reader r(bytes);
  PvoxHeader h = read_header_of_kind(r, PvoxKind::kDense);
  const std::uint32_t d = h.dims[3];
  require(d >= 1, ErrorCode::kFormat, "dense PVOX needs D >= 1");
  const std::size_t count = h.spec.cell_count() * d;
  check_payload(r, count, sizeof(float));
  std::vector<float> data(count);
  for (float& v : data) v = r.get<float>();
  return DenseVolume(h.spec, static_cast<int>(d), std::move(data));
}

SemanticGrid decode_semantic(const Bytes& bytes) {
  Reader r(bytes);
  PvoxHeader h = read_header_of_kind(r, PvoxKind::kSemantic);
  check_payload(r, h.spec.cell_count(), sizeof(std::uint16_t));
  std::vector<std::uint16_t> labels(h.spec.cell_count());
  for (auto& v : labels) v = r.get<std::uint16_t>();
  return SemanticGrid(h.spec, static_cast<int>(h.dims[3]), std::move(labels));
}

InstanceGrid decode_instance(const Bytes& bytes) {
  Reader r(bytes);
  PvoxHeader h = read_header_of_kind(r, PvoxKind::kInstance);
  check_payload(r, h.spec.cell_count(), sizeof(std::uint32_t));
  std::vector<std::uint32_t> ids(h.spec.cell_count());
  for (auto& v : ids) v = r.get<std::uint32_t>();
  return InstanceGrid(h.spec, std::move(ids));
}

BinaryMask decode_mask(const Bytes& bytes) {
  Reader r(bytes);
  PvoxHeader h = read_header_of_kind(r, PvoxKind::kMask);
  check_payload(r, h.spec.cell_count(), 1);
  std::vector<std::uint8_t> bits(h.spec.cell_count());
  for (auto& v : bits) v = r.get<std::uint8_t>();
  return BinaryMask(h.spec, std::move(bits));
}

Bytes encode_ppts(const LabeledPointCloud& pc) {
  Bytes out;
  put_magic(out, "PPTS");
  put<std::uint32_t>(out, kPptsVersion);
  put<std::uint64_t>(out, pc.size());
  out.reserve(out.size() + pc.size() * 18);
  for (const LabeledPoint& p : pc.points()) {
    for (float c : p.xyz) put<float>(out, c);
    put<std::uint16_t>(out, p.label);
    put<std::uint32_t>(out, p.instance);
  }
  return out;
}

LabeledPointCloud decode_ppts(const Bytes& bytes, int num_classes) {
  Reader r(bytes);
  r.expect_magic("PPTS");
  require(r.get<std::uint32_t>() == kPptsVersion, ErrorCode::kFormat,
          "unsupported PPTS version");
  const auto count = r.get<std::uint64_t>();
  require(count == r.remaining() / 18 && r.remaining() % 18 == 0, ErrorCode::kFormat,
          "PPTS record count does not match the payload");
  std::vector<LabeledPoint> pts(count);
  for (LabeledPoint& p : pts) {
    for (float& c : p.xyz) c = r.get<float>();
    p.label = r.get<std::uint16_t>();
    p.instance = r.get<std::uint32_t>();
  }
  r.expect_end();
  return LabeledPointCloud(num_classes, std::move(pts));
}

Bytes read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), ErrorCode::kIo, "cannot open " + path.string());
  return Bytes(std::istreambuf_iterator<char>(in),
               std::istreambuf_iterator<char>());
}

void write_file(const std::filesystem::path& path, const Bytes& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  require(out.good(), ErrorCode::kIo, "cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  require(out.good(), ErrorCode::kIo, "write failed for " + path.string());
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  write_file(path, Bytes(text.begin(), text.end()));
}

std::string read_text(const std::filesystem::path& path) {
  Bytes b = read_file(path);
  return std::string(b.begin(), b.end());
}

namespace {

template <std::size_t N>
std::array<double, N> numbers(const nlohmann::json& j, const char* key) {
  require(j.contains(key) && j.at(key).is_array() && j.at(key).size() == N,
          ErrorCode::kFormat,
          std::string("expected ") + std::to_string(N) + " numbers in '" + key +
              "'");
  std::array<double, N> out{};
  for (std::size_t n = 0; n < N; ++n) {
    require(j.at(key)[n].is_number(), ErrorCode::kFormat,
            std::string("non-numeric entry in '") + key + "'");
    out[n] = j.at(key)[n].get<double>();
  }
  return out;
}

Vec3 vec3(const nlohmann::json& j, const char* key) {
  auto a = numbers<3>(j, key);
  return {a[0], a[1], a[2]};
}

template <class Fn>
auto parse(const char* what, Fn&& fn) {
  try {
    return fn();
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::kFormat, std::string("malformed ") + what + ": " + e.what());
  }
}

}  // namespace

nlohmann::json to_json(const VoxelGridSpec& spec) {
  return {{"dims", {spec.h(), spec.w(), spec.z()}},
          {"origin", {spec.origin()[0], spec.origin()[1], spec.origin()[2]}},
          {"cell_size",
           {spec.cell_size()[0], spec.cell_size()[1], spec.cell_size()[2]}}};
}

VoxelGridSpec spec_from_json(const nlohmann::json& j) {
  return parse("grid spec", [&] {
    auto d = numbers<3>(j, "dims");
    for (double v : d) {
      require(v >= 1 && v == static_cast<int>(v), ErrorCode::kFormat,
              "grid dims must be positive integers");
    }
    return VoxelGridSpec({static_cast<int>(d[0]), static_cast<int>(d[1]),
                          static_cast<int>(d[2])},
                         vec3(j, "origin"), vec3(j, "cell_size"));
  });
}

nlohmann::json to_json(const CameraModel& cam) {
  nlohmann::json p = nlohmann::json::array();
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 4; ++c) p.push_back(cam.projection()(r, c));
  }
  return {{"projection", p},
          {"image_size", {cam.width(), cam.height()}},
          {"view_index", cam.view_index()}};
}

CameraModel camera_from_json(const nlohmann::json& j) {
  return parse("camera", [&] {
    auto p = numbers<12>(j, "projection");
    auto size = numbers<2>(j, "image_size");
    Mat34 m;
    for (int r = 0; r < 3; ++r) {
      for (int c = 0; c < 4; ++c) m(r, c) = p[r * 4 + c];
    }
    return CameraModel(m, static_cast<int>(size[0]), static_cast<int>(size[1]),
                       j.at("view_index").get<int>());
  });
}

nlohmann::json to_json(const Pose& pose) {
  nlohmann::json m = nlohmann::json::array();
  for (int r = 0; r < 4; ++r) {
    for (int c = 0; c < 4; ++c) m.push_back(pose.matrix()(r, c));
  }
  return {{"matrix", m},
          {"src_frame", pose.src_frame()},
          {"dst_frame", pose.dst_frame()}};
}

Pose pose_from_json(const nlohmann::json& j) {
  return parse("pose", [&] {
    auto v = numbers<16>(j, "matrix");
    Mat4 m;
    for (int r = 0; r < 4; ++r) {
      for (int c = 0; c < 4; ++c) m(r, c) = v[r * 4 + c];
    }
    return Pose(m, j.value("src_frame", ""), j.value("dst_frame", ""));
  });
}

nlohmann::json to_json(const Box3D& box) {
  return {{"center", {box.center[0], box.center[1], box.center[2]}},
          {"size", {box.size[0], box.size[1], box.size[2]}},
          {"yaw", box.yaw},
          {"class", box.cls},
          {"score", box.score}};
}

Box3D box_from_json(const nlohmann::json& j) {
  return parse("box", [&] {
    Box3D b;
    b.center = vec3(j, "center");
    b.size = vec3(j, "size");
    b.yaw = j.at("yaw").get<double>();
    b.cls = j.at("class").get<int>();
    b.score = j.at("score").get<double>();
    b.validate();
    return b;
  });
}

std::string encode_boxes_jsonl(const std::vector<Box3D>& boxes) {
  std::string out;
  for (const Box3D& b : boxes) out += to_json(b).dump() + "\n";
  return out;
}

std::vector<Box3D> decode_boxes_jsonl(const std::string& text) {
  std::vector<Box3D> boxes;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      fail(ErrorCode::kFormat, std::string("malformed box line: ") + e.what());
    }
    boxes.push_back(box_from_json(j));
  }
  return boxes;
}

}  // namespace voxpan::io

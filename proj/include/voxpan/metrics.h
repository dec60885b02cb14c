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

#ifndef VOXPAN_METRICS_H_
#define VOXPAN_METRICS_H_

#include <cstdint>
#include <span>
#include <vector>

#include "voxpan/grid.h"

namespace voxpan {

// (C + 1) x (C + 1) counts, rows = ground truth, columns = prediction.
class ConfusionMatrix {
 public:
  explicit ConfusionMatrix(int num_classes);

  int num_classes() const { return num_classes_; }
  std::uint64_t at(int gt, int pred) const {
    return counts_[static_cast<std::size_t>(gt) * (num_classes_ + 1) + pred];
  }
  void add(int gt, int pred) {
    ++counts_[static_cast<std::size_t>(gt) * (num_classes_ + 1) + pred];
    ++total_;
  }
  std::uint64_t total() const { return total_; }

 private:
  int num_classes_;
  std::vector<std::uint64_t> counts_;
  std::uint64_t total_ = 0;
};

// Cells where either grid holds its ignore label, or the mask is false, are
// not counted.
ConfusionMatrix confusion(const SemanticGrid& pred, const SemanticGrid& gt,
                          const BinaryMask* eval_mask = nullptr);

struct ClassIoU {
  int cls = 0;
  double iou = 0.0;
};

struct MiouReport {
  std::vector<ClassIoU> per_class;  // classes of class_set present in pred or gt
  double mean = 0.0;                // 0 when no class is present
  std::uint64_t evaluated_cells = 0;
};

MiouReport miou(const SemanticGrid& pred, const SemanticGrid& gt,
                const BinaryMask* eval_mask, std::span<const int> class_set);

struct PanopticGrids {
  const SemanticGrid& sem;
  const InstanceGrid& inst;
};

struct ClassPQ {
  int cls = 0;
  bool thing = false;
  double iou_sum = 0.0;
  std::uint64_t tp = 0;
  std::uint64_t fp = 0;
  std::uint64_t fn = 0;
  double pq = 0.0;
  double sq = 0.0;
  double rq = 0.0;

  friend bool operator==(const ClassPQ&, const ClassPQ&) = default;
};

// Per-class entries cover the thing and stuff classes that have at least one
// segment in pred or gt; aggregates average over those entries.
struct PQStats {
  std::vector<ClassPQ> classes;
  double pq = 0.0;
  double sq = 0.0;
  double rq = 0.0;
  double pq_things = 0.0;
  double pq_stuff = 0.0;

  friend bool operator==(const PQStats&, const PQStats&) = default;
};

// Segments: every stuff class forms one segment; thing voxels form one
// segment per (class, instance id > 0). Thing voxels with id 0 and voxels
// labeled ignore belong to no segment; cells whose ground truth is ignore
// are dropped from both sides. A pred and gt segment of the same class match
// when IoU > 0.5.
PQStats panoptic_quality(const PanopticGrids& pred, const PanopticGrids& gt,
                         std::span<const int> thing_classes,
                         std::span<const int> stuff_classes);

// As panoptic_quality, but each stuff class scores the plain IoU of its
// predicted and ground-truth regions (stored in pq) without the matching
// gate.
PQStats panoptic_quality_dagger(const PanopticGrids& pred,
                                const PanopticGrids& gt,
                                std::span<const int> thing_classes,
                                std::span<const int> stuff_classes);

// Exhaustive pairwise segment comparison for small inputs (at most 64
// segments in total). Throws if any segment matches more than once.
PQStats brute_force_pq_oracle(const PanopticGrids& pred,
                              const PanopticGrids& gt,
                              std::span<const int> thing_classes,
                              std::span<const int> stuff_classes);

}  // namespace voxpan

#endif  // VOXPAN_METRICS_H_

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

#include "voxpan/metrics.h"

#include <algorithm>
#include <map>
#include <unordered_map>

#include "voxpan/error.h"

namespace voxpan {
namespace {

enum class Kind : std::uint8_t { kNone, kThing, kStuff };

std::vector<Kind> class_kinds(int num_classes, std::span<const int> things,
                              std::span<const int> stuff) {
  std::vector<Kind> kinds(num_classes + 2, Kind::kNone);
  auto mark = [&](std::span<const int> classes, Kind k) {
    for (int c : classes) {
      require(c >= 0 && c <= num_classes, ErrorCode::kOutOfRange,
              "class id outside 0..C");
      require(kinds[c] == Kind::kNone, ErrorCode::kInvalidArgument,
              "class listed twice in the thing/stuff split");
      kinds[c] = k;
    }
  };
  mark(things, Kind::kThing);
  mark(stuff, Kind::kStuff);
  return kinds;
}

void check_panoptic_inputs(const PanopticGrids& pred, const PanopticGrids& gt) {
  const VoxelGridSpec& s = gt.sem.spec();
  require(pred.sem.spec() == s && pred.inst.spec() == s && gt.inst.spec() == s,
          ErrorCode::kShapeMismatch, "panoptic grids use different specs");
  require(pred.sem.num_classes() == gt.sem.num_classes(),
          ErrorCode::kShapeMismatch, "pred and gt class counts differ");
}

// Segment id of a cell: (class << 32) | instance for things, class << 32 for
// stuff, or -1 when the cell belongs to no segment.
std::int64_t segment_of(const std::vector<Kind>& kinds, std::uint16_t label,
                        std::uint32_t id) {
  if (label >= kinds.size()) return -1;
  switch (kinds[label]) {
    case Kind::kStuff:
      return static_cast<std::int64_t>(label) << 32;
    case Kind::kThing:
      if (id == 0) return -1;
      return (static_cast<std::int64_t>(label) << 32) | id;
    case Kind::kNone:
      break;
  }
  return -1;
}

int class_of(std::int64_t seg) { return static_cast<int>(seg >> 32); }

struct ClassTally {
  std::uint64_t gt_segments = 0;
  std::uint64_t pred_segments = 0;
  std::vector<double> matched_ious;
};

ClassPQ finalize_class(int cls, bool thing, ClassTally& t) {
  ClassPQ c;
  c.cls = cls;
  c.thing = thing;
  std::sort(t.matched_ious.begin(), t.matched_ious.end());
  for (double iou : t.matched_ious) c.iou_sum += iou;
  c.tp = t.matched_ious.size();
  c.fp = t.pred_segments - c.tp;
  c.fn = t.gt_segments - c.tp;
  const double denom = c.tp + 0.5 * c.fp + 0.5 * c.fn;
  c.pq = denom > 0.0 ? c.iou_sum / denom : 0.0;
  c.sq = c.tp > 0 ? c.iou_sum / c.tp : 0.0;
  c.rq = denom > 0.0 ? c.tp / denom : 0.0;
  return c;
}

void aggregate(PQStats& s) {
  if (s.classes.empty()) return;
  double pq = 0, sq = 0, rq = 0, pq_th = 0, pq_st = 0;
  int n_th = 0, n_st = 0;
  for (const ClassPQ& c : s.classes) {
    pq += c.pq;
    sq += c.sq;
    rq += c.rq;
    if (c.thing) {
      pq_th += c.pq;
      ++n_th;
    } else {
      pq_st += c.pq;
      ++n_st;
    }
  }
  const double n = static_cast<double>(s.classes.size());
  s.pq = pq / n;
  s.sq = sq / n;
  s.rq = rq / n;
  s.pq_things = n_th > 0 ? pq_th / n_th : 0.0;
  s.pq_stuff = n_st > 0 ? pq_st / n_st : 0.0;
}

PQStats build_stats(std::map<int, ClassTally>& tallies,
                    const std::vector<Kind>& kinds) {
  PQStats s;
  for (auto& [cls, t] : tallies) {
    if (t.gt_segments == 0 && t.pred_segments == 0) continue;
    s.classes.push_back(finalize_class(cls, kinds[cls] == Kind::kThing, t));
  }
  aggregate(s);
  return s;
}

bool evaluated(const PanopticGrids& gt, std::size_t n) {
  return gt.sem.labels()[n] != gt.sem.ignore_label();
}

}  // namespace

ConfusionMatrix::ConfusionMatrix(int num_classes)
    : num_classes_(num_classes),
      counts_(static_cast<std::size_t>(num_classes + 1) * (num_classes + 1), 0) {}

ConfusionMatrix confusion(const SemanticGrid& pred, const SemanticGrid& gt,
                          const BinaryMask* eval_mask) {
  require(pred.spec() == gt.spec(), ErrorCode::kShapeMismatch,
          "pred and gt grids use different specs");
  require(pred.num_classes() == gt.num_classes(), ErrorCode::kShapeMismatch,
          "pred and gt class counts differ");
  require(eval_mask == nullptr || eval_mask->spec() == gt.spec(),
          ErrorCode::kShapeMismatch, "evaluation mask uses a different spec");
  ConfusionMatrix cm(gt.num_classes());
  const std::uint16_t ignore = gt.ignore_label();
  for (std::size_t n = 0; n < gt.labels().size(); ++n) {
    if (eval_mask != nullptr && eval_mask->bits()[n] == 0) continue;
    const std::uint16_t g = gt.labels()[n];
    const std::uint16_t p = pred.labels()[n];
    if (g == ignore || p == ignore) continue;
    cm.add(g, p);
  }
  return cm;
}

MiouReport miou(const SemanticGrid& pred, const SemanticGrid& gt,
                const BinaryMask* eval_mask, std::span<const int> class_set) {
  const ConfusionMatrix cm = confusion(pred, gt, eval_mask);
  require(cm.total() > 0, ErrorCode::kInvalidArgument,
          "no cells left to evaluate");
  const int k = cm.num_classes();
  MiouReport report;
  report.evaluated_cells = cm.total();
  std::vector<int> classes(class_set.begin(), class_set.end());
  std::sort(classes.begin(), classes.end());
  classes.erase(std::unique(classes.begin(), classes.end()), classes.end());
  double sum = 0.0;
  for (int c : classes) {
    require(c >= 0 && c <= k, ErrorCode::kOutOfRange, "class id outside 0..C");
    const std::uint64_t tp = cm.at(c, c);
    std::uint64_t fp = 0, fn = 0;
    for (int o = 0; o <= k; ++o) {
      if (o == c) continue;
      fp += cm.at(o, c);
      fn += cm.at(c, o);
    }
    const std::uint64_t denom = tp + fp + fn;
    if (denom == 0) continue;
    const double iou = static_cast<double>(tp) / static_cast<double>(denom);
    report.per_class.push_back({c, iou});
    sum += iou;
  }
  if (!report.per_class.empty()) {
    report.mean = sum / static_cast<double>(report.per_class.size());
  }
  return report;
}

PQStats panoptic_quality(const PanopticGrids& pred, const PanopticGrids& gt,
                         std::span<const int> thing_classes,
                         std::span<const int> stuff_classes) {
  check_panoptic_inputs(pred, gt);
  const auto kinds =
      class_kinds(gt.sem.num_classes(), thing_classes, stuff_classes);
  std::unordered_map<std::int64_t, std::uint64_t> gt_area, pred_area;
  struct PairHash {
    std::size_t operator()(const std::pair<std::int64_t, std::int64_t>& p) const {
      return std::hash<std::int64_t>()(p.first * 1000003 ^ p.second);
    }
  };
  std::unordered_map<std::pair<std::int64_t, std::int64_t>, std::uint64_t,
                     PairHash>
      overlap;
  const std::size_t cells = gt.sem.labels().size();
  for (std::size_t n = 0; n < cells; ++n) {
    if (!evaluated(gt, n)) continue;
    const std::int64_t g =
        segment_of(kinds, gt.sem.labels()[n], gt.inst.ids()[n]);
    const std::int64_t p =
        segment_of(kinds, pred.sem.labels()[n], pred.inst.ids()[n]);
    if (g >= 0) ++gt_area[g];
    if (p >= 0) ++pred_area[p];
    if (g >= 0 && p >= 0 && class_of(g) == class_of(p)) ++overlap[{g, p}];
  }
  std::map<int, ClassTally> tallies;
  for (const auto& [g, a] : gt_area) ++tallies[class_of(g)].gt_segments;
  for (const auto& [p, a] : pred_area) ++tallies[class_of(p)].pred_segments;
  // IoU > 0.5 admits at most one partner per segment, so every qualifying
  // pair is a match.
  for (const auto& [key, inter] : overlap) {
    const std::uint64_t uni = gt_area[key.first] + pred_area[key.second] - inter;
    const double iou = static_cast<double>(inter) / static_cast<double>(uni);
    if (iou > 0.5) tallies[class_of(key.first)].matched_ious.push_back(iou);
  }
  return build_stats(tallies, kinds);
}

PQStats panoptic_quality_dagger(const PanopticGrids& pred,
                                const PanopticGrids& gt,
                                std::span<const int> thing_classes,
                                std::span<const int> stuff_classes) {
  PQStats s = panoptic_quality(pred, gt, thing_classes, stuff_classes);
  const auto kinds =
      class_kinds(gt.sem.num_classes(), thing_classes, stuff_classes);
  std::map<int, std::pair<std::uint64_t, std::uint64_t>> inter_union;
  const std::size_t cells = gt.sem.labels().size();
  for (std::size_t n = 0; n < cells; ++n) {
    if (!evaluated(gt, n)) continue;
    const std::uint16_t g = gt.sem.labels()[n];
    const std::uint16_t p = pred.sem.labels()[n];
    const bool g_stuff = g < kinds.size() && kinds[g] == Kind::kStuff;
    const bool p_stuff = p < kinds.size() && kinds[p] == Kind::kStuff;
    if (g_stuff && g == p) {
      ++inter_union[g].first;
      ++inter_union[g].second;
      continue;
    }
    if (g_stuff) ++inter_union[g].second;
    if (p_stuff) ++inter_union[p].second;
  }
  for (ClassPQ& c : s.classes) {
    if (c.thing) continue;
    const auto& [inter, uni] = inter_union[c.cls];
    c.pq = uni > 0 ? static_cast<double>(inter) / static_cast<double>(uni) : 0.0;
  }
  aggregate(s);
  return s;
}

PQStats brute_force_pq_oracle(const PanopticGrids& pred,
                              const PanopticGrids& gt,
                              std::span<const int> thing_classes,
                              std::span<const int> stuff_classes) {
  check_panoptic_inputs(pred, gt);
  const auto kinds =
      class_kinds(gt.sem.num_classes(), thing_classes, stuff_classes);
  struct Segment {
    std::int64_t key;
    std::vector<std::size_t> cells;
  };
  auto collect = [&](const PanopticGrids& g) {
    std::map<std::int64_t, std::vector<std::size_t>> by_key;
    for (std::size_t n = 0; n < g.sem.labels().size(); ++n) {
      if (!evaluated(gt, n)) continue;
      const std::int64_t s = segment_of(kinds, g.sem.labels()[n], g.inst.ids()[n]);
      if (s >= 0) by_key[s].push_back(n);
    }
    std::vector<Segment> segs;
    for (auto& [k, c] : by_key) segs.push_back({k, std::move(c)});
    return segs;
  };
  const std::vector<Segment> gsegs = collect(gt);
  const std::vector<Segment> psegs = collect(pred);
  require(gsegs.size() + psegs.size() <= 64, ErrorCode::kInvalidArgument,
          "brute-force oracle is limited to 64 segments");

  std::map<int, ClassTally> tallies;
  for (const Segment& s : gsegs) ++tallies[class_of(s.key)].gt_segments;
  for (const Segment& s : psegs) ++tallies[class_of(s.key)].pred_segments;
  std::vector<int> gt_matches(gsegs.size(), 0), pred_matches(psegs.size(), 0);
  for (std::size_t a = 0; a < gsegs.size(); ++a) {
    for (std::size_t b = 0; b < psegs.size(); ++b) {
      if (class_of(gsegs[a].key) != class_of(psegs[b].key)) continue;
      std::vector<std::size_t> common;
      std::set_intersection(gsegs[a].cells.begin(), gsegs[a].cells.end(),
                            psegs[b].cells.begin(), psegs[b].cells.end(),
                            std::back_inserter(common));
      const std::size_t inter = common.size();
      const std::size_t uni =
          gsegs[a].cells.size() + psegs[b].cells.size() - inter;
      const double iou = static_cast<double>(inter) / static_cast<double>(uni);
      if (iou > 0.5) {
        ++gt_matches[a];
        ++pred_matches[b];
        tallies[class_of(gsegs[a].key)].matched_ious.push_back(iou);
      }
    }
  }
  for (int m : gt_matches) {
    require(m <= 1, ErrorCode::kInvalidArgument, "gt segment matched twice");
  }
  for (int m : pred_matches) {
    require(m <= 1, ErrorCode::kInvalidArgument, "pred segment matched twice");
  }
  return build_stats(tallies, kinds);
}

}  // namespace voxpan

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

#include "voxpan/sparsify.h"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "voxpan/detail/interp.h"
#include "voxpan/error.h"

namespace voxpan {
namespace {

int child_count(const std::array<int, 3>& f) { return f[0] * f[1] * f[2]; }

int out_channels(const UpsampleMap& map, int in_d) {
  if (const auto* m = std::get_if<ChildLinearMap>(&map)) {
    return static_cast<int>(m->weights.front().rows());
  }
  return in_d;
}

void validate_map(const UpsampleMap& map, const std::array<int, 3>& factors,
                  int in_d) {
  for (int a = 0; a < 3; ++a) {
    require(factors[a] >= 1, ErrorCode::kInvalidArgument,
            "upsampling factors must be positive");
  }
  const auto* m = std::get_if<ChildLinearMap>(&map);
  if (m == nullptr) return;
  require(m->factors == factors, ErrorCode::kShapeMismatch,
          "child map factors differ from the stage factors");
  require(static_cast<int>(m->weights.size()) == child_count(factors),
          ErrorCode::kShapeMismatch, "child map needs one matrix per child");
  const Eigen::Index rows = m->weights.front().rows();
  require(rows >= 1, ErrorCode::kShapeMismatch,
          "child map matrices must have at least one row");
  for (const Eigen::MatrixXd& w : m->weights) {
    require(w.rows() == rows && w.cols() == in_d, ErrorCode::kShapeMismatch,
            "child map matrix shape does not match the input channels");
  }
}

// Features of one child cell. parent points at the owning parent's features;
// fetch resolves arbitrary parent cells for the trilinear map.
template <class Fetch>
void child_features(const UpsampleMap& map, const std::array<int, 3>& f,
                    const std::array<int, 3>& parent_dims, const float* parent,
                    int in_d, const Index3& child, Fetch&& fetch, float* out,
                    std::vector<double>& scratch) {
  if (std::holds_alternative<CopyParent>(map)) {
    std::copy(parent, parent + in_d, out);
    return;
  }
  if (std::holds_alternative<TrilinearUpsample>(map)) {
    const double p[3] = {(child.i + 0.5) / f[0], (child.j + 0.5) / f[1],
                         (child.k + 0.5) / f[2]};
    scratch.resize(in_d);
    detail::trilinear_accumulate(parent_dims, in_d, p, OutOfRange::kClamp,
                                 fetch, scratch.data());
    for (int d = 0; d < in_d; ++d) out[d] = static_cast<float>(scratch[d]);
    return;
  }
  const auto& m = std::get<ChildLinearMap>(map);
  const int c = ((child.i % f[0]) * f[1] + child.j % f[1]) * f[2] + child.k % f[2];
  const Eigen::MatrixXd& w = m.weights[c];
  for (Eigen::Index r = 0; r < w.rows(); ++r) {
    double acc = 0.0;
    for (int d = 0; d < in_d; ++d) acc += w(r, d) * parent[d];
    out[r] = static_cast<float>(acc);
  }
}

void check_ratio(double keep_ratio) {
  require(std::isfinite(keep_ratio) && keep_ratio > 0.0 && keep_ratio <= 1.0,
          ErrorCode::kOutOfRange, "keep ratio must lie in (0, 1]");
}

// Positions of the `keep` best scores in ascending position order. Ties go to
// the lower position, which is the lower coordinate for sorted inputs.
std::vector<std::size_t> top_positions(std::span<const double> scores,
                                       std::size_t keep) {
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  auto better = [&](std::size_t a, std::size_t b) {
    if (scores[a] != scores[b]) return scores[a] > scores[b];
    return a < b;
  };
  if (keep < order.size()) {
    std::nth_element(order.begin(), order.begin() + keep, order.end(), better);
    order.resize(keep);
  }
  std::sort(order.begin(), order.end());
  return order;
}

SparseVolume gather(const VoxelGridSpec& spec, int d_count,
                    std::span<const std::size_t> keep,
                    const std::function<Index3(std::size_t)>& coord_of,
                    const std::function<std::span<const float>(std::size_t)>&
                        features_of) {
  std::vector<Index3> coords;
  std::vector<float> feats;
  coords.reserve(keep.size());
  feats.reserve(keep.size() * d_count);
  for (std::size_t n : keep) {
    coords.push_back(coord_of(n));
    auto f = features_of(n);
    feats.insert(feats.end(), f.begin(), f.end());
  }
  return SparseVolume(spec, d_count, std::move(coords), std::move(feats));
}

void check_scores(const DenseVolume& scores, const VoxelGridSpec& spec) {
  require(scores.spec() == spec, ErrorCode::kShapeMismatch,
          "score grid differs from the volume grid");
  require(scores.channels() == 1, ErrorCode::kShapeMismatch,
          "score grid must have one channel");
}

SparseVolume prune_sparse_with(const SparseVolume& sv,
                               std::span<const double> scores,
                               double keep_ratio) {
  check_ratio(keep_ratio);
  const auto keep = top_positions(scores, keep_count(keep_ratio, sv.size()));
  return gather(
      sv.spec(), sv.channels(), keep,
      [&](std::size_t n) { return sv.coords()[n]; },
      [&](std::size_t n) { return sv.features(n); });
}

SparseVolume prune_dense_with(const DenseVolume& vol,
                              std::span<const double> scores,
                              double keep_ratio) {
  check_ratio(keep_ratio);
  const auto keep =
      top_positions(scores, keep_count(keep_ratio, vol.spec().cell_count()));
  const int d_count = vol.channels();
  return gather(
      vol.spec(), d_count, keep,
      [&](std::size_t n) { return vol.spec().unravel(n); },
      [&](std::size_t n) { return vol.data().subspan(n * d_count, d_count); });
}

std::vector<double> score_dense(const DenseVolume& vol, const ScoreFn& scorer) {
  std::vector<double> s(vol.spec().cell_count());
  const int d_count = vol.channels();
  for (std::size_t n = 0; n < s.size(); ++n) {
    s[n] = scorer(vol.spec().unravel(n),
                  vol.data().subspan(n * d_count, d_count));
  }
  return s;
}

std::vector<double> score_sparse(const SparseVolume& sv, const ScoreFn& scorer) {
  std::vector<double> s(sv.size());
  for (std::size_t n = 0; n < s.size(); ++n) {
    s[n] = scorer(sv.coords()[n], sv.features(n));
  }
  return s;
}

ScoreFn grid_scorer(const DenseVolume& scores) {
  return [&scores](const Index3& idx, std::span<const float>) {
    return static_cast<double>(scores.at(idx, 0));
  };
}

}  // namespace

std::size_t keep_count(double keep_ratio, std::size_t candidates) {
  const double x = keep_ratio * static_cast<double>(candidates);
  const double nearest = std::round(x);
  std::size_t n = std::abs(x - nearest) <= 1e-9 * std::max(1.0, x)
                      ? static_cast<std::size_t>(nearest)
                      : static_cast<std::size_t>(std::ceil(x));
  return std::min(n, candidates);
}

SparseVolume prune_topk(const DenseVolume& vol, const DenseVolume& scores,
                        double keep_ratio) {
  check_scores(scores, vol.spec());
  std::vector<double> s(scores.data().begin(), scores.data().end());
  return prune_dense_with(vol, s, keep_ratio);
}

SparseVolume prune_topk(const SparseVolume& sv, const DenseVolume& scores,
                        double keep_ratio) {
  check_scores(scores, sv.spec());
  return prune_sparse_with(sv, score_sparse(sv, grid_scorer(scores)),
                           keep_ratio);
}

SparseVolume sparse_upsample(const SparseVolume& sv,
                             const std::array<int, 3>& factors,
                             const UpsampleMap& map) {
  validate_map(map, factors, sv.channels());
  const VoxelGridSpec fine = refine_spec(sv.spec(), factors);
  const int in_d = sv.channels();
  const int out_d = out_channels(map, in_d);
  const int per_parent = child_count(factors);

  auto fetch = [&](int i, int j, int k) -> const float* {
    auto n = sv.find({i, j, k});
    return n ? sv.features(*n).data() : nullptr;
  };

  struct Child {
    Index3 idx;
    std::size_t slot;
  };
  std::vector<Child> children;
  children.reserve(sv.size() * per_parent);
  std::vector<float> feats(sv.size() * per_parent * out_d);
  std::vector<double> scratch;
  std::size_t slot = 0;
  for (std::size_t n = 0; n < sv.size(); ++n) {
    const Index3& p = sv.coords()[n];
    const float* parent = sv.features(n).data();
    for (int ci = 0; ci < factors[0]; ++ci) {
      for (int cj = 0; cj < factors[1]; ++cj) {
        for (int ck = 0; ck < factors[2]; ++ck) {
          const Index3 c{p.i * factors[0] + ci, p.j * factors[1] + cj,
                         p.k * factors[2] + ck};
          child_features(map, factors, sv.spec().dims(), parent, in_d, c,
                         fetch, &feats[slot * out_d], scratch);
          children.push_back({c, slot++});
        }
      }
    }
  }
  // Child blocks of neighbouring parents interleave in lexicographic order.
  std::sort(children.begin(), children.end(),
            [](const Child& a, const Child& b) { return a.idx < b.idx; });
  std::vector<Index3> coords;
  std::vector<float> sorted(feats.size());
  coords.reserve(children.size());
  for (std::size_t n = 0; n < children.size(); ++n) {
    coords.push_back(children[n].idx);
    std::copy_n(&feats[children[n].slot * out_d], out_d, &sorted[n * out_d]);
  }
  return SparseVolume(fine, out_d, std::move(coords), std::move(sorted));
}

DenseVolume dense_upsample(const DenseVolume& vol,
                           const std::array<int, 3>& factors,
                           const UpsampleMap& map) {
  validate_map(map, factors, vol.channels());
  const VoxelGridSpec fine = refine_spec(vol.spec(), factors);
  const int in_d = vol.channels();
  const int out_d = out_channels(map, in_d);
  auto fetch = [&](int i, int j, int k) { return vol.at({i, j, k}).data(); };
  std::vector<float> out(fine.cell_count() * out_d);
  std::vector<double> scratch;
  for (std::size_t n = 0; n < fine.cell_count(); ++n) {
    const Index3 c = fine.unravel(n);
    const Index3 p{c.i / factors[0], c.j / factors[1], c.k / factors[2]};
    child_features(map, factors, vol.spec().dims(), vol.at(p).data(), in_d, c,
                   fetch, &out[n * out_d], scratch);
  }
  return DenseVolume(fine, out_d, std::move(out));
}

DenseVolume coarse_to_fine(const DenseVolume& vol,
                           std::span<const UpsampleStage> stages) {
  require(!stages.empty(), ErrorCode::kInvalidArgument,
          "coarse_to_fine needs at least one stage");
  DenseVolume cur = vol;
  for (const UpsampleStage& s : stages) cur = dense_upsample(cur, s.factors, s.map);
  return cur;
}

SparseCascade sparse_coarse_to_fine(const DenseVolume& vol,
                                    std::span<const UpsampleStage> stages,
                                    std::span<const double> keep_ratios,
                                    const ScoreFn& scorer,
                                    double initial_ratio) {
  require(!stages.empty(), ErrorCode::kInvalidArgument,
          "sparse_coarse_to_fine needs at least one stage");
  require(keep_ratios.size() == stages.size(), ErrorCode::kShapeMismatch,
          "one keep ratio per stage is required");
  check_ratio(initial_ratio);
  for (double r : keep_ratios) check_ratio(r);

  SparseCascade out{prune_dense_with(vol, score_dense(vol, scorer), initial_ratio),
                    {},
                    0.0};
  out.kept.push_back(out.volume.size());
  for (std::size_t s = 0; s < stages.size(); ++s) {
    SparseVolume up =
        sparse_upsample(out.volume, stages[s].factors, stages[s].map);
    out.volume = prune_sparse_with(up, score_sparse(up, scorer), keep_ratios[s]);
    out.kept.push_back(out.volume.size());
  }
  out.sparsity = static_cast<double>(out.volume.size()) /
                 static_cast<double>(out.volume.spec().cell_count());
  return out;
}

SparseCascade sparse_coarse_to_fine(const DenseVolume& vol,
                                    std::span<const UpsampleStage> stages,
                                    std::span<const double> keep_ratios,
                                    std::span<const DenseVolume> stage_scores,
                                    double initial_ratio,
                                    const DenseVolume* initial_scores) {
  require(!stages.empty(), ErrorCode::kInvalidArgument,
          "sparse_coarse_to_fine needs at least one stage");
  require(keep_ratios.size() == stages.size() &&
              stage_scores.size() == stages.size(),
          ErrorCode::kShapeMismatch,
          "one keep ratio and one score grid per stage are required");
  check_ratio(initial_ratio);
  for (double r : keep_ratios) check_ratio(r);

  std::vector<double> initial;
  if (initial_scores != nullptr) {
    check_scores(*initial_scores, vol.spec());
    initial.assign(initial_scores->data().begin(), initial_scores->data().end());
  } else {
    require(initial_ratio == 1.0, ErrorCode::kInvalidArgument,
            "an initial score grid is required when initial_ratio < 1");
    initial.assign(vol.spec().cell_count(), 0.0);
  }
  SparseCascade out{prune_dense_with(vol, initial, initial_ratio), {}, 0.0};
  out.kept.push_back(out.volume.size());
  for (std::size_t s = 0; s < stages.size(); ++s) {
    SparseVolume up =
        sparse_upsample(out.volume, stages[s].factors, stages[s].map);
    out.volume = prune_topk(up, stage_scores[s], keep_ratios[s]);
    out.kept.push_back(out.volume.size());
  }
  out.sparsity = static_cast<double>(out.volume.size()) /
                 static_cast<double>(out.volume.spec().cell_count());
  return out;
}

double feature_norm_score(const Index3&, std::span<const float> features) {
  double s = 0.0;
  for (float f : features) s += static_cast<double>(f) * f;
  return std::sqrt(s);
}

}  // namespace voxpan

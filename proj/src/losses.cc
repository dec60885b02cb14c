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

#include "voxpan/losses.h"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "voxpan/error.h"

namespace voxpan {
namespace {

constexpr double kLogEps = 1e-12;

double safe_log(double p) { return std::log(std::max(p, kLogEps)); }

// (1 - q)^gamma and its derivative with respect to q, without 0 * inf at q = 1.
double modulator(double one_minus, double gamma) {
  return gamma == 0.0 ? 1.0 : std::pow(one_minus, gamma);
}
double modulator_slope(double one_minus, double gamma) {
  if (gamma == 0.0 || one_minus == 0.0) return 0.0;
  return gamma * std::pow(one_minus, gamma - 1.0);
}

void check_targets(const Eigen::MatrixXd& probs, std::span<const int> targets,
                   int ignore_label) {
  require(static_cast<Eigen::Index>(targets.size()) == probs.rows(),
          ErrorCode::kShapeMismatch, "one target per item is required");
  for (int t : targets) {
    require(t == ignore_label || (t >= 0 && t < probs.cols()),
            ErrorCode::kOutOfRange, "target class outside the class range");
  }
}

}  // namespace

double pairwise_sum(std::span<const double> values) {
  if (values.size() <= 8) {
    double s = 0.0;
    for (double v : values) s += v;
    return s;
  }
  const std::size_t half = values.size() / 2;
  return pairwise_sum(values.first(half)) + pairwise_sum(values.subspan(half));
}

Eigen::MatrixXd softmax_rows(const Eigen::MatrixXd& logits) {
  Eigen::MatrixXd p(logits.rows(), logits.cols());
  for (Eigen::Index r = 0; r < logits.rows(); ++r) {
    const double m = logits.row(r).maxCoeff();
    p.row(r) = (logits.row(r).array() - m).exp().matrix();
    p.row(r) /= p.row(r).sum();
  }
  return p;
}

LossWithGrad focal_loss(const Eigen::MatrixXd& probs,
                        std::span<const int> targets, FocalParams params,
                        int ignore_label) {
  check_targets(probs, targets, ignore_label);
  for (Eigen::Index r = 0; r < probs.rows(); ++r) {
    require(std::abs(probs.row(r).sum() - 1.0) <= 1e-6,
            ErrorCode::kInvalidArgument, "probability rows must sum to 1");
  }
  std::vector<double> terms;
  for (int t : targets) {
    if (t != ignore_label) terms.push_back(0.0);
  }
  require(!terms.empty(), ErrorCode::kInvalidArgument,
          "focal loss needs at least one non-ignored item");
  const double inv_count = 1.0 / static_cast<double>(terms.size());

  LossWithGrad out{0.0, Eigen::MatrixXd::Zero(probs.rows(), probs.cols())};
  std::size_t n = 0;
  for (Eigen::Index r = 0; r < probs.rows(); ++r) {
    const int t = targets[r];
    if (t == ignore_label) continue;
    const double pt = probs(r, t);
    const double q = 1.0 - pt;
    const double log_pt = safe_log(pt);
    terms[n++] = -params.alpha * modulator(q, params.gamma) * log_pt;
    // dL/dpt, then the softmax Jacobian dpt/dz_j = pt * (delta_tj - p_j).
    const double dl_dpt =
        -params.alpha * (-modulator_slope(q, params.gamma) * log_pt +
                         modulator(q, params.gamma) / std::max(pt, kLogEps));
    for (Eigen::Index j = 0; j < probs.cols(); ++j) {
      const double delta = j == t ? 1.0 : 0.0;
      out.grad(r, j) = dl_dpt * pt * (delta - probs(r, j)) * inv_count;
    }
  }
  out.value = pairwise_sum(terms) * inv_count;
  return out;
}

LossWithGrad lovasz_softmax_loss(const Eigen::MatrixXd& probs,
                                 std::span<const int> targets,
                                 std::span<const std::uint8_t> eligible,
                                 int ignore_label) {
  check_targets(probs, targets, ignore_label);
  require(eligible.empty() ||
              static_cast<Eigen::Index>(eligible.size()) == probs.rows(),
          ErrorCode::kShapeMismatch, "eligibility flags must match the items");
  std::vector<Eigen::Index> items;
  for (Eigen::Index r = 0; r < probs.rows(); ++r) {
    if (targets[r] == ignore_label) continue;
    if (!eligible.empty() && eligible[r] == 0) continue;
    items.push_back(r);
  }
  require(!items.empty(), ErrorCode::kInvalidArgument,
          "Lovasz loss needs at least one eligible item");

  const std::size_t m = items.size();
  LossWithGrad out{0.0, Eigen::MatrixXd::Zero(probs.rows(), probs.cols())};
  std::vector<double> class_losses;
  std::vector<Eigen::Index> present;
  for (Eigen::Index c = 0; c < probs.cols(); ++c) {
    const bool any = std::any_of(items.begin(), items.end(), [&](Eigen::Index r) {
      return targets[r] == c;
    });
    if (any) present.push_back(c);
  }
  const double inv_classes = 1.0 / static_cast<double>(present.size());

  std::vector<double> err(m);
  std::vector<std::uint8_t> fg(m);
  std::vector<std::size_t> order(m);
  std::vector<double> grad(m);
  for (Eigen::Index c : present) {
    double gts = 0.0;
    for (std::size_t n = 0; n < m; ++n) {
      fg[n] = targets[items[n]] == c ? 1 : 0;
      err[n] = std::abs(fg[n] - probs(items[n], c));
      gts += fg[n];
    }
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return err[a] > err[b]; });
    // Gradient of the Jaccard loss extension along the sorted order.
    double cum_fg = 0.0;
    double prev_jac = 0.0;
    std::vector<double> terms(m);
    for (std::size_t r = 0; r < m; ++r) {
      cum_fg += fg[order[r]];
      const double cum_bg = static_cast<double>(r + 1) - cum_fg;
      const double jac = 1.0 - (gts - cum_fg) / (gts + cum_bg);
      grad[r] = jac - prev_jac;
      prev_jac = jac;
      terms[r] = err[order[r]] * grad[r];
    }
    class_losses.push_back(pairwise_sum(terms));
    for (std::size_t r = 0; r < m; ++r) {
      const std::size_t n = order[r];
      const double sign = fg[n] ? -1.0 : 1.0;
      out.grad(items[n], c) = grad[r] * sign * inv_classes;
    }
  }
  out.value = pairwise_sum(class_losses) * inv_classes;
  return out;
}

GridLoss thing_mask_loss(const DenseVolume& scores, const BinaryMask& target,
                         FocalParams params) {
  require(scores.spec() == target.spec(), ErrorCode::kShapeMismatch,
          "score grid and mask specs differ");
  require(scores.channels() == 1, ErrorCode::kShapeMismatch,
          "thing scores must have one channel");
  const std::vector<double> p(scores.data().begin(), scores.data().end());
  return thing_mask_loss(p, target.bits(), params);
}

GridLoss thing_mask_loss(std::span<const double> scores,
                         std::span<const std::uint8_t> target,
                         FocalParams params) {
  require(scores.size() == target.size(), ErrorCode::kShapeMismatch,
          "one target per score is required");
  require(!scores.empty(), ErrorCode::kInvalidArgument,
          "thing-mask loss needs at least one voxel");
  const std::size_t n_cells = scores.size();
  const double inv = 1.0 / static_cast<double>(n_cells);
  std::vector<double> terms(n_cells);
  GridLoss out{0.0, std::vector<double>(n_cells)};
  for (std::size_t n = 0; n < n_cells; ++n) {
    const double p = scores[n];
    require(p >= 0.0 && p <= 1.0, ErrorCode::kOutOfRange,
            "thing scores must lie in [0, 1]");
    if (target[n] != 0) {
      const double q = 1.0 - p;
      const double lp = safe_log(p);
      terms[n] = -params.alpha * modulator(q, params.gamma) * lp;
      out.grad[n] = -params.alpha * (-modulator_slope(q, params.gamma) * lp +
                                     modulator(q, params.gamma) /
                                         std::max(p, kLogEps)) *
                    inv;
    } else {
      const double a = 1.0 - params.alpha;
      const double lq = safe_log(1.0 - p);
      terms[n] = -a * modulator(p, params.gamma) * lq;
      out.grad[n] = -a * (modulator_slope(p, params.gamma) * lq -
                          modulator(p, params.gamma) /
                              std::max(1.0 - p, kLogEps)) *
                    inv;
    }
  }
  out.value = pairwise_sum(terms) * inv;
  return out;
}

LossWithGrad l1_box_loss(const Eigen::MatrixXd& pred,
                         const Eigen::MatrixXd& target) {
  require(pred.rows() == target.rows() && pred.cols() == target.cols(),
          ErrorCode::kShapeMismatch, "box prediction and target shapes differ");
  require(pred.size() > 0, ErrorCode::kInvalidArgument,
          "L1 loss needs at least one value");
  const double inv = 1.0 / static_cast<double>(pred.size());
  LossWithGrad out{0.0, Eigen::MatrixXd::Zero(pred.rows(), pred.cols())};
  std::vector<double> terms;
  terms.reserve(pred.size());
  for (Eigen::Index r = 0; r < pred.rows(); ++r) {
    for (Eigen::Index c = 0; c < pred.cols(); ++c) {
      const double diff = pred(r, c) - target(r, c);
      terms.push_back(std::abs(diff));
      out.grad(r, c) = diff > 0.0 ? inv : (diff < 0.0 ? -inv : 0.0);
    }
  }
  out.value = pairwise_sum(terms) * inv;
  return out;
}

void LossWeights::validate() const {
  for (double w : {focal, lovasz, thing, cls, reg}) {
    require(std::isfinite(w) && w >= 0.0, ErrorCode::kInvalidArgument,
            "loss weights must be finite and non-negative");
  }
}

double segmentation_loss(const LossParts& parts, const LossWeights& w) {
  return w.focal * parts.focal + w.lovasz * parts.lovasz + w.thing * parts.thing;
}

double detection_loss(const LossParts& parts, const LossWeights& w) {
  return w.cls * parts.cls + w.reg * parts.reg;
}

double total_loss(const LossParts& parts, const LossWeights& w) {
  w.validate();
  return detection_loss(parts, w) + segmentation_loss(parts, w);
}

}  // namespace voxpan

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

#ifndef VOXPAN_LOSSES_H_
#define VOXPAN_LOSSES_H_

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "voxpan/grid.h"

namespace voxpan {

struct FocalParams {
  double alpha = 0.25;
  double gamma = 2.0;
};

// Loss value plus gradient laid out like the input it refers to.
struct LossWithGrad {
  double value = 0.0;
  Eigen::MatrixXd grad;
};

// Fixed-order pairwise summation; results do not depend on thread count or
// accumulation strategy elsewhere.
double pairwise_sum(std::span<const double> values);

Eigen::MatrixXd softmax_rows(const Eigen::MatrixXd& logits);

// Multi-class focal loss on softmax probabilities (items x classes), averaged
// over items whose target is not ignore_label. grad is with respect to the
// logits that produced probs. Throws when no item remains or a row does not
// sum to 1 within 1e-6.
LossWithGrad focal_loss(const Eigen::MatrixXd& probs,
                        std::span<const int> targets, FocalParams params = {},
                        int ignore_label = -1);

// Lovasz-Softmax over eligible items (eligible empty = all items), averaged
// over classes that occur among the eligible targets. Errors |fg - p| are
// sorted descending with ties kept in item order. grad is with respect to
// probs.
LossWithGrad lovasz_softmax_loss(const Eigen::MatrixXd& probs,
                                 std::span<const int> targets,
                                 std::span<const std::uint8_t> eligible = {},
                                 int ignore_label = -1);

struct GridLoss {
  double value = 0.0;
  std::vector<double> grad;  // one entry per voxel
};

// Binary focal loss of per-voxel foreground probabilities (one-channel
// volume, values in [0, 1]) against the thing mask, averaged over all voxels.
GridLoss thing_mask_loss(const DenseVolume& scores, const BinaryMask& target,
                         FocalParams params = {});
// Same loss on flat double-precision scores and 0/1 targets.
GridLoss thing_mask_loss(std::span<const double> scores,
                         std::span<const std::uint8_t> target,
                         FocalParams params = {});

// Mean absolute error; the subgradient at equality is 0.
LossWithGrad l1_box_loss(const Eigen::MatrixXd& pred,
                         const Eigen::MatrixXd& target);

struct LossWeights {
  double focal = 10.0;   // lambda1
  double lovasz = 10.0;  // lambda2
  double thing = 5.0;    // lambda3
  double cls = 2.0;      // lambda4
  double reg = 0.25;     // lambda5

  void validate() const;
};

struct LossParts {
  double focal = 0.0;
  double lovasz = 0.0;
  double thing = 0.0;
  double cls = 0.0;
  double reg = 0.0;
};

double segmentation_loss(const LossParts& parts, const LossWeights& w);
double detection_loss(const LossParts& parts, const LossWeights& w);
double total_loss(const LossParts& parts, const LossWeights& w);

}  // namespace voxpan

#endif  // VOXPAN_LOSSES_H_

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

#ifndef VOXPAN_GRAD_SUITE_H_
#define VOXPAN_GRAD_SUITE_H_

#include <cstdint>
#include <string>
#include <vector>

namespace voxpan {

// Finite-difference checks of the analytic gradients over random instances.
// Draws that land within a documented distance of a non-smooth point are
// redrawn: ties between Lovasz errors closer than 1e-3, L1 differences below
// 1e-3, and sampling coordinates within 1e-3 of a texel or voxel center.
struct GradSuiteResult {
  std::string name;
  double max_rel_error = 0.0;
  int instances = 0;
};

GradSuiteResult focal_grad_suite(std::uint64_t seed, int instances);
GradSuiteResult lovasz_grad_suite(std::uint64_t seed, int instances);
GradSuiteResult thing_mask_grad_suite(std::uint64_t seed, int instances);
GradSuiteResult l1_grad_suite(std::uint64_t seed, int instances);
GradSuiteResult bilinear_grad_suite(std::uint64_t seed, int instances);
GradSuiteResult trilinear_grad_suite(std::uint64_t seed, int instances);

// All six suites, seeded seed, seed + 1, ...
std::vector<GradSuiteResult> run_gradient_suite(std::uint64_t seed, int instances);

}  // namespace voxpan

#endif  // VOXPAN_GRAD_SUITE_H_

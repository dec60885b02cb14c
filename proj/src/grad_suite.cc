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

#include "voxpan/grad_suite.h"

#include <algorithm>
#include <cmath>
#include <random>
#include <span>

#include "voxpan/grid.h"
#include "voxpan/losses.h"
#include "voxpan/sampling.h"

namespace voxpan {
namespace {

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}
  double uniform(double lo = 0.0, double hi = 1.0) {
    return std::uniform_real_distribution<double>(lo, hi)(engine_);
  }
  int integer(int lo, int hi) {
    return std::uniform_int_distribution<int>(lo, hi)(engine_);
  }
  bool coin(double p = 0.5) { return uniform() < p; }

 private:
  std::mt19937_64 engine_;
};

VoxelGridSpec unit_grid(int h, int w, int z) {
  return VoxelGridSpec({h, w, z}, Vec3::Zero(), Vec3::Ones());
}

DenseVolume random_volume(Rng& rng, const VoxelGridSpec& spec, int channels,
                          double lo = -1.0, double hi = 1.0) {
  std::vector<float> data(spec.cell_count() * channels);
  for (float& v : data) v = static_cast<float>(rng.uniform(lo, hi));
  return DenseVolume(spec, channels, std::move(data));
}

void absorb(GradSuiteResult& r, const GradCheckResult& g) {
  r.max_rel_error = std::max(r.max_rel_error, g.max_rel_error);
}

Eigen::MatrixXd random_logits(Rng& rng, int n, int c) {
  Eigen::MatrixXd z(n, c);
  for (Eigen::Index i = 0; i < z.size(); ++i) z(i) = rng.uniform(-2.0, 2.0);
  return z;
}

std::vector<int> random_targets(Rng& rng, int n, int c, int ignore) {
  std::vector<int> t(n);
  for (int& v : t) v = rng.coin(0.1) ? ignore : rng.integer(0, c - 1);
  if (std::all_of(t.begin(), t.end(), [&](int v) { return v == ignore; })) t[0] = 0;
  return t;
}

double smooth_coord(Rng& rng, double lo, double hi, double margin = 1e-3) {
  double x;
  do {
    x = rng.uniform(lo, hi);
  } while (near_interpolation_kink(x, margin));
  return x;
}

}  // namespace

GradSuiteResult focal_grad_suite(std::uint64_t seed, int instances) {
  Rng rng(seed);
  GradSuiteResult r{"focal"};
  for (; r.instances < instances; ++r.instances) {
    const int n = rng.integer(1, 6), c = rng.integer(2, 5), ignore = c;
    const FocalParams params{rng.uniform(0.1, 1.0), rng.uniform(0.0, 3.0)};
    const Eigen::MatrixXd z = random_logits(rng, n, c);
    const std::vector<int> t = random_targets(rng, n, c, ignore);
    const LossWithGrad g = focal_loss(softmax_rows(z), t, params, ignore);
    absorb(r, grad_check(
                  [&](std::span<const double> x) {
                    const Eigen::MatrixXd zz =
                        Eigen::Map<const Eigen::MatrixXd>(x.data(), n, c);
                    return focal_loss(softmax_rows(zz), t, params, ignore).value;
                  },
                  std::span<const double>(z.data(), z.size()),
                  std::span<const double>(g.grad.data(), g.grad.size())));
  }
  return r;
}

// Lovasz is piecewise linear in the probabilities; its kinks are ties between
// per-class errors, so draws with any two errors closer than 1e-3 are redrawn.
GradSuiteResult lovasz_grad_suite(std::uint64_t seed, int instances) {
  Rng rng(seed);
  GradSuiteResult r{"lovasz"};
  while (r.instances < instances) {
    const int n = rng.integer(1, 8), c = rng.integer(2, 5), ignore = c;
    const Eigen::MatrixXd p = softmax_rows(random_logits(rng, n, c));
    const std::vector<int> t = random_targets(rng, n, c, ignore);
    bool near_tie = false;
    for (int k = 0; k < c && !near_tie; ++k) {
      std::vector<double> err;
      for (int i = 0; i < n; ++i) {
        if (t[i] != ignore) err.push_back(std::abs((t[i] == k ? 1.0 : 0.0) - p(i, k)));
      }
      std::sort(err.begin(), err.end());
      for (std::size_t i = 1; i < err.size(); ++i) near_tie |= err[i] - err[i - 1] < 1e-3;
    }
    if (near_tie) continue;
    const LossWithGrad g = lovasz_softmax_loss(p, t, {}, ignore);
    absorb(r, grad_check(
                  [&](std::span<const double> x) {
                    const Eigen::MatrixXd pp =
                        Eigen::Map<const Eigen::MatrixXd>(x.data(), n, c);
                    return lovasz_softmax_loss(pp, t, {}, ignore).value;
                  },
                  std::span<const double>(p.data(), p.size()),
                  std::span<const double>(g.grad.data(), g.grad.size())));
    ++r.instances;
  }
  return r;
}

GradSuiteResult thing_mask_grad_suite(std::uint64_t seed, int instances) {
  Rng rng(seed);
  GradSuiteResult r{"thing_mask"};
  while (r.instances < instances) {
    const VoxelGridSpec spec = unit_grid(rng.integer(1, 3), rng.integer(1, 3), rng.integer(1, 2));
    const DenseVolume s = random_volume(rng, spec, 1, 0.02, 0.98);
    std::vector<std::uint8_t> bits(spec.cell_count());
    for (auto& b : bits) b = rng.coin() ? 1 : 0;
    const BinaryMask mask(spec, bits);
    const FocalParams params{rng.uniform(0.1, 0.9), rng.uniform(0.0, 3.0)};
    const GridLoss g = thing_mask_loss(s, mask, params);
    // Finite differences run on the double-precision entry point at the
    // float scores the volume holds.
    const std::vector<double> x(s.data().begin(), s.data().end());
    absorb(r, grad_check(
                  [&](std::span<const double> v) {
                    return thing_mask_loss(v, bits, params).value;
                  },
                  x, g.grad));
    ++r.instances;
  }
  return r;
}

// L1 has a kink at zero difference; draws with |diff| < 1e-3 are redrawn.
GradSuiteResult l1_grad_suite(std::uint64_t seed, int instances) {
  Rng rng(seed);
  GradSuiteResult r{"l1"};
  while (r.instances < instances) {
    const int n = rng.integer(1, 4), k = 7;
    Eigen::MatrixXd pred(n, k), target(n, k);
    for (Eigen::Index i = 0; i < pred.size(); ++i) {
      pred(i) = rng.uniform(-3, 3);
      target(i) = rng.uniform(-3, 3);
    }
    if (((pred - target).array().abs() < 1e-3).any()) continue;
    const LossWithGrad g = l1_box_loss(pred, target);
    absorb(r, grad_check(
                  [&](std::span<const double> x) {
                    return l1_box_loss(Eigen::Map<const Eigen::MatrixXd>(x.data(), n, k),
                                       target)
                        .value;
                  },
                  std::span<const double>(pred.data(), pred.size()),
                  std::span<const double>(g.grad.data(), g.grad.size())));
    ++r.instances;
  }
  return r;
}

GradSuiteResult bilinear_grad_suite(std::uint64_t seed, int instances) {
  Rng rng(seed);
  GradSuiteResult r{"bilinear"};
  for (; r.instances < instances; ++r.instances) {
    const int h = rng.integer(2, 8), w = rng.integer(2, 8), d = rng.integer(1, 3);
    std::vector<float> data(static_cast<std::size_t>(h) * w * d);
    for (float& v : data) v = static_cast<float>(rng.uniform(-1, 1));
    const ImageFeatureMap map(h, w, d, data);
    const double x[2] = {smooth_coord(rng, 0.5, w - 0.5), smooth_coord(rng, 0.5, h - 0.5)};
    const SampleWithGrad g = bilinear_sample_grad(map, x[0], x[1]);
    for (int c = 0; c < d; ++c) {
      const double analytic[2] = {g.jacobian(c, 0), g.jacobian(c, 1)};
      absorb(r, grad_check(
                    [&](std::span<const double> p) { return bilinear_sample(map, p[0], p[1])[c]; },
                    x, analytic));
    }
  }
  return r;
}

GradSuiteResult trilinear_grad_suite(std::uint64_t seed, int instances) {
  Rng rng(seed);
  GradSuiteResult r{"trilinear"};
  for (; r.instances < instances; ++r.instances) {
    const OutOfRange policy = rng.coin() ? OutOfRange::kZeros : OutOfRange::kClamp;
    const VoxelGridSpec spec = unit_grid(rng.integer(2, 5), rng.integer(2, 5), rng.integer(2, 4));
    const DenseVolume vol = random_volume(rng, spec, rng.integer(1, 3));
    const Vec3 p(smooth_coord(rng, 0.5, spec.h() - 0.5), smooth_coord(rng, 0.5, spec.w() - 0.5),
                 smooth_coord(rng, 0.5, spec.z() - 0.5));
    const SampleWithGrad g = trilinear_sample_grad(vol, p, policy);
    for (int c = 0; c < vol.channels(); ++c) {
      const double analytic[3] = {g.jacobian(c, 0), g.jacobian(c, 1), g.jacobian(c, 2)};
      absorb(r, grad_check(
                    [&](std::span<const double> q) {
                      return trilinear_sample(vol, Vec3(q[0], q[1], q[2]), policy)[c];
                    },
                    std::span<const double>(p.data(), 3), analytic));
    }
  }
  return r;
}

std::vector<GradSuiteResult> run_gradient_suite(std::uint64_t seed, int instances) {
  return {focal_grad_suite(seed, instances),
          lovasz_grad_suite(seed + 1, instances),
          thing_mask_grad_suite(seed + 2, instances),
          l1_grad_suite(seed + 3, instances),
          bilinear_grad_suite(seed + 4, instances),
          trilinear_grad_suite(seed + 5, instances)};
}

}  // namespace voxpan

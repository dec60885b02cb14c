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

#ifndef VOXPAN_DETAIL_INTERP_H_
#define VOXPAN_DETAIL_INTERP_H_

#include <algorithm>
#include <array>
#include <cmath>

namespace voxpan {

enum class OutOfRange {
  kZeros,  // lattice points outside the grid read as zero
  kClamp,  // coordinates clamp to the outermost cell centers
};

namespace detail {

// One axis of a linear interpolation stencil in continuous index coordinates
// (centers at n + 0.5). `valid` flags whether each of the two taps lies in the
// grid; `dweight` is d(weight1)/d(coordinate), i.e. -d(weight0)/d(coordinate).
struct AxisStencil {
  int index[2];
  double weight[2];
  bool valid[2];
  double dweight;
};

inline AxisStencil make_stencil(double coord, int n, OutOfRange policy) {
  AxisStencil s{};
  double x = coord - 0.5;
  if (policy == OutOfRange::kClamp) {
    const double hi = static_cast<double>(n - 1);
    s.dweight = (x > 0.0 && x < hi) ? 1.0 : 0.0;
    x = std::clamp(x, 0.0, hi);
    const int x0 = static_cast<int>(std::floor(x));
    const int x1 = std::min(x0 + 1, n - 1);
    const double f = x - x0;
    s.index[0] = x0;
    s.index[1] = x1;
    s.weight[0] = 1.0 - f;
    s.weight[1] = f;
    s.valid[0] = s.valid[1] = true;
    return s;
  }
  const double fl = std::floor(x);
  const double f = x - fl;
  // Far-away coordinates collapse to an all-invalid stencil before the int
  // conversion can overflow.
  if (fl < -2.0 || fl > static_cast<double>(n) + 1.0) {
    s.index[0] = s.index[1] = 0;
    s.weight[0] = 1.0 - f;
    s.weight[1] = f;
    s.valid[0] = s.valid[1] = false;
    s.dweight = 1.0;
    return s;
  }
  const int x0 = static_cast<int>(fl);
  s.index[0] = x0;
  s.index[1] = x0 + 1;
  s.weight[0] = 1.0 - f;
  s.weight[1] = f;
  s.valid[0] = x0 >= 0 && x0 < n;
  s.valid[1] = x0 + 1 >= 0 && x0 + 1 < n;
  s.dweight = 1.0;
  return s;
}

// Accumulates the trilinear sample at continuous index point p into out[0..D).
// fetch(i, j, k) returns a pointer to D floats or nullptr for an absent cell
// (read as zero). Shared by the dense and sparse paths so both produce
// bit-identical results for the same inputs.
template <class Fetch>
void trilinear_accumulate(const std::array<int, 3>& dims, int channels,
                          const double p[3], OutOfRange policy, Fetch&& fetch,
                          double* out) {
  const AxisStencil sx = make_stencil(p[0], dims[0], policy);
  const AxisStencil sy = make_stencil(p[1], dims[1], policy);
  const AxisStencil sz = make_stencil(p[2], dims[2], policy);
  for (int d = 0; d < channels; ++d) out[d] = 0.0;
  for (int a = 0; a < 2; ++a) {
    if (!sx.valid[a]) continue;
    for (int b = 0; b < 2; ++b) {
      if (!sy.valid[b]) continue;
      const double wab = sx.weight[a] * sy.weight[b];
      for (int c = 0; c < 2; ++c) {
        if (!sz.valid[c]) continue;
        const double w = wab * sz.weight[c];
        if (w == 0.0) continue;
        const float* f = fetch(sx.index[a], sy.index[b], sz.index[c]);
        if (f == nullptr) continue;
        for (int d = 0; d < channels; ++d) out[d] += w * f[d];
      }
    }
  }
}

}  // namespace detail
}  // namespace voxpan

#endif  // VOXPAN_DETAIL_INTERP_H_

// Copyright 2026 The Edge2Prompt Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "e2p/common.hpp"
#include "e2p/image.hpp"

namespace e2p::nn {

/// Dense NCHW tensor. Each (n, c) plane is a contiguous row-major H*W block.
template <typename T>
struct Tensor {
  Eigen::Index n = 0, c = 0, h = 0, w = 0;
  Eigen::Array<T, Eigen::Dynamic, 1> data;

  Tensor() = default;
  Tensor(Eigen::Index n_, Eigen::Index c_, Eigen::Index h_, Eigen::Index w_) {
    resize(n_, c_, h_, w_);
  }

  void resize(Eigen::Index n_, Eigen::Index c_, Eigen::Index h_, Eigen::Index w_) {
    n = n_; c = c_; h = h_; w = w_;
    data.resize(n * c * h * w);
  }

  void set_zero() { data.setZero(); }
  Eigen::Index size() const { return data.size(); }
  Eigen::Index plane_size() const { return h * w; }

  T* plane(Eigen::Index in, Eigen::Index ic) {
    return data.data() + ((in * c + ic) * h * w);
  }
  const T* plane(Eigen::Index in, Eigen::Index ic) const {
    return data.data() + ((in * c + ic) * h * w);
  }

  T& at(Eigen::Index in, Eigen::Index ic, Eigen::Index iy, Eigen::Index ix) {
    return data[((in * c + ic) * h + iy) * w + ix];
  }
  T at(Eigen::Index in, Eigen::Index ic, Eigen::Index iy, Eigen::Index ix) const {
    return data[((in * c + ic) * h + iy) * w + ix];
  }

  static Tensor zeros(Eigen::Index n, Eigen::Index c, Eigen::Index h, Eigen::Index w) {
    Tensor t(n, c, h, w);
    t.set_zero();
    return t;
  }

  bool same_shape(const Tensor& o) const {
    return n == o.n && c == o.c && h == o.h && w == o.w;
  }
};

/// Copies a (col-major) image into one tensor plane.
template <typename T>
void plane_from_image(Tensor<T>& t, Eigen::Index in, Eigen::Index ic,
                      const Image<T>& img) {
  E2P_REQUIRE(img.rows() == t.h && img.cols() == t.w,
              "plane_from_image: shape mismatch");
  T* p = t.plane(in, ic);
  for (Eigen::Index y = 0; y < t.h; ++y)
    for (Eigen::Index x = 0; x < t.w; ++x) p[y * t.w + x] = img(y, x);
}

template <typename T>
Image<T> plane_to_image(const Tensor<T>& t, Eigen::Index in, Eigen::Index ic) {
  Image<T> img(t.h, t.w);
  const T* p = t.plane(in, ic);
  for (Eigen::Index y = 0; y < t.h; ++y)
    for (Eigen::Index x = 0; x < t.w; ++x) img(y, x) = p[y * t.w + x];
  return img;
}

/// Channel concatenation [a | b] along C.
template <typename T>
Tensor<T> concat_channels(const Tensor<T>& a, const Tensor<T>& b) {
  E2P_REQUIRE(a.n == b.n && a.h == b.h && a.w == b.w,
              "concat_channels: incompatible shapes");
  Tensor<T> out(a.n, a.c + b.c, a.h, a.w);
  const Eigen::Index ps = a.plane_size();
  for (Eigen::Index in = 0; in < a.n; ++in) {
    for (Eigen::Index ic = 0; ic < a.c; ++ic)
      std::copy(a.plane(in, ic), a.plane(in, ic) + ps, out.plane(in, ic));
    for (Eigen::Index ic = 0; ic < b.c; ++ic)
      std::copy(b.plane(in, ic), b.plane(in, ic) + ps, out.plane(in, a.c + ic));
  }
  return out;
}

/// Splits a channel-concatenated gradient back into its two parts.
template <typename T>
std::pair<Tensor<T>, Tensor<T>> split_channels(const Tensor<T>& g,
                                               Eigen::Index c_first) {
  E2P_REQUIRE(c_first > 0 && c_first < g.c, "split_channels: bad split point");
  Tensor<T> a(g.n, c_first, g.h, g.w);
  Tensor<T> b(g.n, g.c - c_first, g.h, g.w);
  const Eigen::Index ps = g.plane_size();
  for (Eigen::Index in = 0; in < g.n; ++in) {
    for (Eigen::Index ic = 0; ic < c_first; ++ic)
      std::copy(g.plane(in, ic), g.plane(in, ic) + ps, a.plane(in, ic));
    for (Eigen::Index ic = c_first; ic < g.c; ++ic)
      std::copy(g.plane(in, ic), g.plane(in, ic) + ps, b.plane(in, ic - c_first));
  }
  return {std::move(a), std::move(b)};
}

/// Row-major bilinear plane resize, same sampling convention as
/// e2p::resize_bilinear (half-pixel centers, clamped).
template <typename T>
void resize_plane_bilinear(const T* src, Eigen::Index in_h, Eigen::Index in_w,
                           T* dst, Eigen::Index out_h, Eigen::Index out_w) {
  if (in_h == out_h && in_w == out_w) {
    std::copy(src, src + in_h * in_w, dst);
    return;
  }
  const double sy = static_cast<double>(in_h) / static_cast<double>(out_h);
  const double sx = static_cast<double>(in_w) / static_cast<double>(out_w);
  for (Eigen::Index r = 0; r < out_h; ++r) {
    double fy = (static_cast<double>(r) + 0.5) * sy - 0.5;
    fy = std::clamp(fy, 0.0, static_cast<double>(in_h - 1));
    const Eigen::Index y0 = static_cast<Eigen::Index>(std::floor(fy));
    const Eigen::Index y1 = std::min(y0 + 1, in_h - 1);
    const double wy = fy - static_cast<double>(y0);
    for (Eigen::Index cc = 0; cc < out_w; ++cc) {
      double fx = (static_cast<double>(cc) + 0.5) * sx - 0.5;
      fx = std::clamp(fx, 0.0, static_cast<double>(in_w - 1));
      const Eigen::Index x0 = static_cast<Eigen::Index>(std::floor(fx));
      const Eigen::Index x1 = std::min(x0 + 1, in_w - 1);
      const double wx = fx - static_cast<double>(x0);
      dst[r * out_w + cc] = static_cast<T>(
          (1.0 - wy) * ((1.0 - wx) * src[y0 * in_w + x0] + wx * src[y0 * in_w + x1]) +
          wy * ((1.0 - wx) * src[y1 * in_w + x0] + wx * src[y1 * in_w + x1]));
    }
  }
}

/// Adjoint of resize_plane_bilinear; accumulates into gin (caller zeroes).
template <typename T>
void resize_plane_bilinear_adjoint(const T* gout, Eigen::Index out_h,
                                   Eigen::Index out_w, T* gin,
                                   Eigen::Index in_h, Eigen::Index in_w) {
  if (in_h == out_h && in_w == out_w) {
    for (Eigen::Index i = 0; i < in_h * in_w; ++i) gin[i] += gout[i];
    return;
  }
  const double sy = static_cast<double>(in_h) / static_cast<double>(out_h);
  const double sx = static_cast<double>(in_w) / static_cast<double>(out_w);
  for (Eigen::Index r = 0; r < out_h; ++r) {
    double fy = (static_cast<double>(r) + 0.5) * sy - 0.5;
    fy = std::clamp(fy, 0.0, static_cast<double>(in_h - 1));
    const Eigen::Index y0 = static_cast<Eigen::Index>(std::floor(fy));
    const Eigen::Index y1 = std::min(y0 + 1, in_h - 1);
    const double wy = fy - static_cast<double>(y0);
    for (Eigen::Index cc = 0; cc < out_w; ++cc) {
      double fx = (static_cast<double>(cc) + 0.5) * sx - 0.5;
      fx = std::clamp(fx, 0.0, static_cast<double>(in_w - 1));
      const Eigen::Index x0 = static_cast<Eigen::Index>(std::floor(fx));
      const Eigen::Index x1 = std::min(x0 + 1, in_w - 1);
      const double wx = fx - static_cast<double>(x0);
      const T g = gout[r * out_w + cc];
      gin[y0 * in_w + x0] += static_cast<T>((1.0 - wy) * (1.0 - wx)) * g;
      gin[y0 * in_w + x1] += static_cast<T>((1.0 - wy) * wx) * g;
      gin[y1 * in_w + x0] += static_cast<T>(wy * (1.0 - wx)) * g;
      gin[y1 * in_w + x1] += static_cast<T>(wy * wx) * g;
    }
  }
}

/// Resizes every plane of a tensor.
template <typename T>
Tensor<T> resize_tensor_bilinear(const Tensor<T>& x, Eigen::Index out_h,
                                 Eigen::Index out_w) {
  Tensor<T> out(x.n, x.c, out_h, out_w);
  for (Eigen::Index in = 0; in < x.n; ++in)
    for (Eigen::Index ic = 0; ic < x.c; ++ic)
      resize_plane_bilinear(x.plane(in, ic), x.h, x.w, out.plane(in, ic), out_h, out_w);
  return out;
}

template <typename T>
Tensor<T> resize_tensor_bilinear_adjoint(const Tensor<T>& gout, Eigen::Index in_h,
                                         Eigen::Index in_w) {
  Tensor<T> gin = Tensor<T>::zeros(gout.n, gout.c, in_h, in_w);
  for (Eigen::Index in = 0; in < gout.n; ++in)
    for (Eigen::Index ic = 0; ic < gout.c; ++ic)
      resize_plane_bilinear_adjoint(gout.plane(in, ic), gout.h, gout.w,
                                    gin.plane(in, ic), in_h, in_w);
  return gin;
}

/// Reference to one named parameter (or state) buffer of a network.
template <typename T>
struct ParamRef {
  std::string name;
  T* value = nullptr;
  T* grad = nullptr;  // null for non-learnable state (e.g. running stats)
  Eigen::Index size = 0;
  bool learnable = true;
};

}  // namespace e2p::nn

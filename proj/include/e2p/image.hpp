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

#include "e2p/common.hpp"

namespace e2p {

/// Dense 2D raster, indexed (row, col) == (y, x).
template <typename T>
using Image = Eigen::Array<T, Eigen::Dynamic, Eigen::Dynamic>;

using ImageD = Image<double>;

/// Working resolution of the whole 2D pipeline.
inline constexpr Eigen::Index kWorkingSize = 240;

enum class Modality { kCT, kMrT1In, kMrT1Oop, kMrT2Spir, kUnknown };

inline const char* to_string(Modality m) {
  switch (m) {
    case Modality::kCT: return "CT";
    case Modality::kMrT1In: return "MR_T1_IN";
    case Modality::kMrT1Oop: return "MR_T1_OOP";
    case Modality::kMrT2Spir: return "MR_T2_SPIR";
    default: return "UNKNOWN";
  }
}

inline bool is_mr(Modality m) {
  return m == Modality::kMrT1In || m == Modality::kMrT1Oop ||
         m == Modality::kMrT2Spir;
}

enum class Detector { kCanny, kSobel, kLaplacian };

inline const char* to_string(Detector d) {
  switch (d) {
    case Detector::kCanny: return "canny";
    case Detector::kSobel: return "sobel";
    default: return "laplacian";
  }
}

template <typename T>
bool all_finite(const Image<T>& a) {
  return a.isFinite().all();
}

/// Bilinear resampling with half-pixel alignment: output pixel centers are
/// mapped to (i + 0.5) * in/out - 0.5 in source coordinates, clamped to the
/// source domain. Same-size resampling is the exact identity.
template <typename T>
Image<T> resize_bilinear(const Image<T>& src, Eigen::Index out_h,
                         Eigen::Index out_w) {
  E2P_REQUIRE(src.rows() > 0 && src.cols() > 0, "resize_bilinear: empty source");
  E2P_REQUIRE(out_h > 0 && out_w > 0, "resize_bilinear: empty target");
  const Eigen::Index in_h = src.rows(), in_w = src.cols();
  if (in_h == out_h && in_w == out_w) return src;
  Image<T> out(out_h, out_w);
  const double sy = static_cast<double>(in_h) / static_cast<double>(out_h);
  const double sx = static_cast<double>(in_w) / static_cast<double>(out_w);
  for (Eigen::Index r = 0; r < out_h; ++r) {
    double fy = (static_cast<double>(r) + 0.5) * sy - 0.5;
    fy = std::clamp(fy, 0.0, static_cast<double>(in_h - 1));
    const Eigen::Index y0 = static_cast<Eigen::Index>(std::floor(fy));
    const Eigen::Index y1 = std::min(y0 + 1, in_h - 1);
    const double wy = fy - static_cast<double>(y0);
    for (Eigen::Index c = 0; c < out_w; ++c) {
      double fx = (static_cast<double>(c) + 0.5) * sx - 0.5;
      fx = std::clamp(fx, 0.0, static_cast<double>(in_w - 1));
      const Eigen::Index x0 = static_cast<Eigen::Index>(std::floor(fx));
      const Eigen::Index x1 = std::min(x0 + 1, in_w - 1);
      const double wx = fx - static_cast<double>(x0);
      out(r, c) = static_cast<T>((1.0 - wy) * ((1.0 - wx) * src(y0, x0) + wx * src(y0, x1)) +
                                 wy * ((1.0 - wx) * src(y1, x0) + wx * src(y1, x1)));
    }
  }
  return out;
}

/// Adjoint of resize_bilinear: scatters an output-sized gradient back onto an
/// (in_h, in_w) grid with the identical interpolation weights.
template <typename T>
Image<T> resize_bilinear_adjoint(const Image<T>& grad_out, Eigen::Index in_h,
                                 Eigen::Index in_w) {
  const Eigen::Index out_h = grad_out.rows(), out_w = grad_out.cols();
  if (in_h == out_h && in_w == out_w) return grad_out;
  Image<T> grad_in = Image<T>::Zero(in_h, in_w);
  const double sy = static_cast<double>(in_h) / static_cast<double>(out_h);
  const double sx = static_cast<double>(in_w) / static_cast<double>(out_w);
  for (Eigen::Index r = 0; r < out_h; ++r) {
    double fy = (static_cast<double>(r) + 0.5) * sy - 0.5;
    fy = std::clamp(fy, 0.0, static_cast<double>(in_h - 1));
    const Eigen::Index y0 = static_cast<Eigen::Index>(std::floor(fy));
    const Eigen::Index y1 = std::min(y0 + 1, in_h - 1);
    const double wy = fy - static_cast<double>(y0);
    for (Eigen::Index c = 0; c < out_w; ++c) {
      double fx = (static_cast<double>(c) + 0.5) * sx - 0.5;
      fx = std::clamp(fx, 0.0, static_cast<double>(in_w - 1));
      const Eigen::Index x0 = static_cast<Eigen::Index>(std::floor(fx));
      const Eigen::Index x1 = std::min(x0 + 1, in_w - 1);
      const double wx = fx - static_cast<double>(x0);
      const T g = grad_out(r, c);
      grad_in(y0, x0) += static_cast<T>((1.0 - wy) * (1.0 - wx)) * g;
      grad_in(y0, x1) += static_cast<T>((1.0 - wy) * wx) * g;
      grad_in(y1, x0) += static_cast<T>(wy * (1.0 - wx)) * g;
      grad_in(y1, x1) += static_cast<T>(wy * wx) * g;
    }
  }
  return grad_in;
}

/// 90-degree counterclockwise rotation: out(r, c) = in(c, H-1-r).
template <typename T>
Image<T> rot90(const Image<T>& in) {
  Image<T> out(in.cols(), in.rows());
  for (Eigen::Index r = 0; r < out.rows(); ++r)
    for (Eigen::Index c = 0; c < out.cols(); ++c)
      out(r, c) = in(c, in.cols() - 1 - r);
  return out;
}

/// Jaccard index of two binary rasters; both-empty pairs score 1.
template <typename T>
double jaccard(const Image<T>& a, const Image<T>& b) {
  E2P_REQUIRE(a.rows() == b.rows() && a.cols() == b.cols(),
              "jaccard: shape mismatch");
  long inter = 0, uni = 0;
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    const bool pa = a(i) > T(0.5), pb = b(i) > T(0.5);
    inter += (pa && pb) ? 1 : 0;
    uni += (pa || pb) ? 1 : 0;
  }
  return uni == 0 ? 1.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

/// Grayscale slice at working resolution, intensities in [0, 1].
struct GrayImage {
  ImageD pixels;
  Modality modality = Modality::kUnknown;

  static GrayImage create(ImageD px, Modality m) {
    E2P_REQUIRE(px.rows() == kWorkingSize && px.cols() == kWorkingSize,
                "GrayImage: shape must be 240x240");
    E2P_REQUIRE(all_finite(px), "GrayImage: non-finite pixel");
    E2P_REQUIRE(px.minCoeff() >= 0.0 && px.maxCoeff() <= 1.0,
                "GrayImage: pixels must lie in [0,1]");
    return GrayImage{std::move(px), m};
  }
};

/// Binary edge raster produced by the edge detection module.
struct EdgeMap {
  ImageD pixels;  // values exactly 0 or 1
  Detector detector = Detector::kCanny;
  double threshold_used = 0.0;

  static EdgeMap create(ImageD px, Detector d, double threshold) {
    E2P_REQUIRE(((px == 0.0) || (px == 1.0)).all(),
                "EdgeMap: values must be exactly 0 or 1");
    return EdgeMap{std::move(px), d, threshold};
  }
};

/// Unbounded real-valued prompt map emitted by the prompt generator.
struct LogitMap {
  ImageD logits;

  static LogitMap create(ImageD z) {
    E2P_REQUIRE(z.rows() == kWorkingSize && z.cols() == kWorkingSize,
                "LogitMap: shape must be 240x240");
    E2P_REQUIRE(all_finite(z), "LogitMap: non-finite logit");
    return LogitMap{std::move(z)};
  }
};

/// Mask logits at working resolution, as returned by a segmenter backend.
struct MaskLogits {
  ImageD logits;

  static MaskLogits create(ImageD z) {
    E2P_REQUIRE(z.rows() == kWorkingSize && z.cols() == kWorkingSize,
                "MaskLogits: shape must be 240x240");
    E2P_REQUIRE(all_finite(z), "MaskLogits: non-finite logit");
    return MaskLogits{std::move(z)};
  }

  /// Probability threshold at 0.5, i.e. logit >= 0.
  ImageD binarize() const {
    return (logits >= 0.0).cast<double>();
  }
};

}  // namespace e2p

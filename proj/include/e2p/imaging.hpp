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

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "e2p/image.hpp"

namespace e2p {

/// Edge detection knobs, surfaced in the experiment config.
/// sigma is the Gaussian pre-blur; (low, high) are the Canny hysteresis
/// thresholds on max-normalized gradient magnitude. Sobel/Laplacian ignore
/// (low, high) and binarize their response with Otsu's method.
struct EdgeParams {
  Detector detector = Detector::kCanny;
  double sigma = 1.0;
  double low = 0.1;
  double high = 0.2;

  void validate() const {
    if (!(sigma >= 0.0)) throw ConfigError("EdgeParams: sigma must be >= 0");
    if (!(low >= 0.0 && high <= 1.0))
      throw ConfigError("EdgeParams: thresholds must lie in [0,1]");
    if (low > high)
      throw ConfigError("EdgeParams: low threshold exceeds high threshold");
  }
};

/// Histogram equalization. Each pixel maps to its mid-rank quantile in the
/// image's intensity distribution, quantized to 256 uniform output levels.
/// The rank form is invariant under strictly increasing intensity remaps,
/// which is what makes the downstream edge maps modality-agnostic.
/// A constant image is returned unchanged.
template <typename T>
Image<T> equalize_histogram(const Image<T>& img) {
  const Eigen::Index n = img.size();
  E2P_REQUIRE(n > 0, "equalize_histogram: empty image");
  if (img.maxCoeff() == img.minCoeff()) return img;

  std::vector<T> sorted(img.data(), img.data() + n);
  std::sort(sorted.begin(), sorted.end());
  Image<T> out(img.rows(), img.cols());
  for (Eigen::Index i = 0; i < n; ++i) {
    const T v = img(i);
    const auto lo = std::lower_bound(sorted.begin(), sorted.end(), v);
    const auto hi = std::upper_bound(lo, sorted.end(), v);
    const double less = static_cast<double>(lo - sorted.begin());
    const double eq = static_cast<double>(hi - lo);
    const double q = (less + 0.5 * eq) / static_cast<double>(n);
    out(i) = static_cast<T>(std::round(q * 255.0) / 255.0);
  }
  return out;
}

/// Edge-preserving 5x5 bilateral smoothing (spatial and range Gaussians),
/// replicate borders.
template <typename T>
Image<T> bilateral_smooth(const Image<T>& img, double sigma_spatial = 1.5,
                          double sigma_range = 0.1) {
  E2P_REQUIRE(sigma_spatial > 0.0 && sigma_range > 0.0,
              "bilateral_smooth: sigmas must be positive");
  const Eigen::Index h = img.rows(), w = img.cols();
  const int rad = 2;
  double spatial[5][5];
  for (int dy = -rad; dy <= rad; ++dy)
    for (int dx = -rad; dx <= rad; ++dx)
      spatial[dy + rad][dx + rad] =
          std::exp(-(dy * dy + dx * dx) / (2.0 * sigma_spatial * sigma_spatial));
  const double inv2sr2 = 1.0 / (2.0 * sigma_range * sigma_range);

  Image<T> out(h, w);
  for (Eigen::Index r = 0; r < h; ++r) {
    for (Eigen::Index c = 0; c < w; ++c) {
      const double center = static_cast<double>(img(r, c));
      double acc = 0.0, norm = 0.0;
      for (int dy = -rad; dy <= rad; ++dy) {
        const Eigen::Index rr = std::clamp<Eigen::Index>(r + dy, 0, h - 1);
        for (int dx = -rad; dx <= rad; ++dx) {
          const Eigen::Index cc = std::clamp<Eigen::Index>(c + dx, 0, w - 1);
          const double v = static_cast<double>(img(rr, cc));
          const double d = v - center;
          const double wgt = spatial[dy + rad][dx + rad] * std::exp(-d * d * inv2sr2);
          acc += wgt * v;
          norm += wgt;
        }
      }
      out(r, c) = static_cast<T>(acc / norm);
    }
  }
  return out;
}

/// Separable Gaussian blur with replicate borders; sigma == 0 is a no-op.
template <typename T>
Image<T> gaussian_blur(const Image<T>& img, double sigma) {
  E2P_REQUIRE(sigma >= 0.0, "gaussian_blur: sigma must be >= 0");
  if (sigma == 0.0) return img;
  const int rad = std::max(1, static_cast<int>(std::ceil(3.0 * sigma)));
  std::vector<double> k(2 * rad + 1);
  double sum = 0.0;
  for (int i = -rad; i <= rad; ++i) {
    k[i + rad] = std::exp(-0.5 * i * i / (sigma * sigma));
    sum += k[i + rad];
  }
  for (auto& v : k) v /= sum;

  const Eigen::Index h = img.rows(), w = img.cols();
  Image<T> tmp(h, w), out(h, w);
  for (Eigen::Index r = 0; r < h; ++r)
    for (Eigen::Index c = 0; c < w; ++c) {
      double acc = 0.0;
      for (int i = -rad; i <= rad; ++i)
        acc += k[i + rad] * img(r, std::clamp<Eigen::Index>(c + i, 0, w - 1));
      tmp(r, c) = static_cast<T>(acc);
    }
  for (Eigen::Index r = 0; r < h; ++r)
    for (Eigen::Index c = 0; c < w; ++c) {
      double acc = 0.0;
      for (int i = -rad; i <= rad; ++i)
        acc += k[i + rad] * tmp(std::clamp<Eigen::Index>(r + i, 0, h - 1), c);
      out(r, c) = static_cast<T>(acc);
    }
  return out;
}

/// 3x3 Sobel gradients with replicate borders.
template <typename T>
void sobel_gradients(const Image<T>& img, Image<T>& gx, Image<T>& gy) {
  const Eigen::Index h = img.rows(), w = img.cols();
  gx.resize(h, w);
  gy.resize(h, w);
  auto at = [&](Eigen::Index r, Eigen::Index c) -> double {
    return static_cast<double>(img(std::clamp<Eigen::Index>(r, 0, h - 1),
                                   std::clamp<Eigen::Index>(c, 0, w - 1)));
  };
  for (Eigen::Index r = 0; r < h; ++r) {
    for (Eigen::Index c = 0; c < w; ++c) {
      const double tl = at(r - 1, c - 1), tm = at(r - 1, c), tr = at(r - 1, c + 1);
      const double ml = at(r, c - 1), mr = at(r, c + 1);
      const double bl = at(r + 1, c - 1), bm = at(r + 1, c), br = at(r + 1, c + 1);
      gx(r, c) = static_cast<T>((tr + 2.0 * mr + br) - (tl + 2.0 * ml + bl));
      gy(r, c) = static_cast<T>((bl + 2.0 * bm + br) - (tl + 2.0 * tm + tr));
    }
  }
}

/// 3x3 Laplacian response with replicate borders.
template <typename T>
Image<T> laplacian_response(const Image<T>& img) {
  const Eigen::Index h = img.rows(), w = img.cols();
  Image<T> out(h, w);
  auto at = [&](Eigen::Index r, Eigen::Index c) -> double {
    return static_cast<double>(img(std::clamp<Eigen::Index>(r, 0, h - 1),
                                   std::clamp<Eigen::Index>(c, 0, w - 1)));
  };
  for (Eigen::Index r = 0; r < h; ++r)
    for (Eigen::Index c = 0; c < w; ++c)
      out(r, c) = static_cast<T>(at(r - 1, c) + at(r + 1, c) + at(r, c - 1) +
                                 at(r, c + 1) - 4.0 * at(r, c));
  return out;
}

/// Otsu threshold over a 256-bin histogram of values in [0, max]. Returns the
/// threshold in the input's value scale; degenerate inputs return +inf so
/// that thresholding yields an empty map.
template <typename T>
double otsu_threshold(const Image<T>& response) {
  const double vmax = static_cast<double>(response.maxCoeff());
  if (!(vmax > 0.0)) return std::numeric_limits<double>::infinity();
  constexpr int kBins = 256;
  std::vector<double> hist(kBins, 0.0);
  const Eigen::Index n = response.size();
  for (Eigen::Index i = 0; i < n; ++i) {
    int b = static_cast<int>(static_cast<double>(response(i)) / vmax * (kBins - 1));
    hist[std::clamp(b, 0, kBins - 1)] += 1.0;
  }
  double total = static_cast<double>(n);
  double sum_all = 0.0;
  for (int b = 0; b < kBins; ++b) sum_all += b * hist[b];

  double w0 = 0.0, sum0 = 0.0, best = -1.0;
  int best_first = 0, best_last = 0;
  for (int b = 0; b < kBins - 1; ++b) {
    w0 += hist[b];
    if (w0 == 0.0) continue;
    const double w1 = total - w0;
    if (w1 == 0.0) break;
    sum0 += b * hist[b];
    const double m0 = sum0 / w0;
    const double m1 = (sum_all - sum0) / w1;
    const double between = w0 * w1 * (m0 - m1) * (m0 - m1);
    if (between > best) {
      best = between;
      best_first = best_last = b;
    } else if (between == best) {
      best_last = b;
    }
  }
  if (best < 0.0) return std::numeric_limits<double>::infinity();
  // Ties form a plateau on sparse histograms; the midpoint keeps the cut
  // between the modes instead of hugging the lower one.
  const int best_bin = best_first + (best_last - best_first) / 2;
  return (static_cast<double>(best_bin) + 0.5) / (kBins - 1) * vmax;
}

namespace detail {

// Non-maximum suppression over the gradient direction quantized to four
// sectors. Plateaus survive (>= comparison) so ideal step edges keep a
// thin band rather than vanishing. The one-pixel frame is cleared: replicate
// borders make gradients there unreliable.
template <typename T>
Image<T> nonmax_suppress(const Image<T>& mag, const Image<T>& gx,
                         const Image<T>& gy) {
  const Eigen::Index h = mag.rows(), w = mag.cols();
  Image<T> out = Image<T>::Zero(h, w);
  for (Eigen::Index r = 1; r + 1 < h; ++r) {
    for (Eigen::Index c = 1; c + 1 < w; ++c) {
      const double m = mag(r, c);
      if (m <= 0.0) continue;
      const double ax = std::abs(static_cast<double>(gx(r, c)));
      const double ay = std::abs(static_cast<double>(gy(r, c)));
      double n1, n2;
      if (ax >= 2.414213562373095 * ay) {
        n1 = mag(r, c - 1); n2 = mag(r, c + 1);                 // horizontal gradient
      } else if (ay >= 2.414213562373095 * ax) {
        n1 = mag(r - 1, c); n2 = mag(r + 1, c);                 // vertical gradient
      } else if ((gx(r, c) > 0) == (gy(r, c) > 0)) {
        n1 = mag(r - 1, c - 1); n2 = mag(r + 1, c + 1);         // 45 deg
      } else {
        n1 = mag(r - 1, c + 1); n2 = mag(r + 1, c - 1);         // 135 deg
      }
      if (m >= n1 && m >= n2) out(r, c) = static_cast<T>(m);
    }
  }
  return out;
}

// Double threshold + 8-connected hysteresis linking.
template <typename T>
Image<T> hysteresis(const Image<T>& nms, double low, double high) {
  const Eigen::Index h = nms.rows(), w = nms.cols();
  Image<T> out = Image<T>::Zero(h, w);
  std::vector<Eigen::Index> stack;
  for (Eigen::Index r = 0; r < h; ++r)
    for (Eigen::Index c = 0; c < w; ++c)
      if (static_cast<double>(nms(r, c)) >= high && out(r, c) == 0) {
        out(r, c) = 1;
        stack.push_back(r * w + c);
      }
  while (!stack.empty()) {
    const Eigen::Index idx = stack.back();
    stack.pop_back();
    const Eigen::Index r = idx / w, c = idx % w;
    for (int dy = -1; dy <= 1; ++dy)
      for (int dx = -1; dx <= 1; ++dx) {
        const Eigen::Index rr = r + dy, cc = c + dx;
        if (rr < 0 || cc < 0 || rr >= h || cc >= w) continue;
        if (out(rr, cc) == 0 && static_cast<double>(nms(rr, cc)) >= low) {
          out(rr, cc) = 1;
          stack.push_back(rr * w + cc);
        }
      }
  }
  return out;
}

}  // namespace detail

/// Preprocessing stage: histogram equalization followed by edge-preserving
/// smoothing. Output stays in [0, 1] with the input's shape.
inline GrayImage preprocess(const GrayImage& image, double sigma_spatial = 1.5,
                            double sigma_range = 0.1) {
  ImageD eq = equalize_histogram(image.pixels);
  ImageD smooth = bilateral_smooth(eq, sigma_spatial, sigma_range);
  smooth = smooth.cwiseMax(0.0).cwiseMin(1.0);
  return GrayImage::create(std::move(smooth), image.modality);
}

/// Binary edge extraction with the selected detector.
///   Canny:     Gaussian blur -> Sobel magnitude (max-normalized) -> NMS ->
///              hysteresis on (low, high).
///   Sobel:     Gaussian blur -> gradient magnitude -> Otsu binarization.
///   Laplacian: Gaussian blur -> |Laplacian| -> Otsu binarization.
inline EdgeMap detect_edges(const GrayImage& image, const EdgeParams& params) {
  params.validate();
  const ImageD& px = image.pixels;
  const ImageD blurred = gaussian_blur(px, params.sigma);

  if (params.detector == Detector::kCanny) {
    ImageD gx, gy;
    sobel_gradients(blurred, gx, gy);
    ImageD mag = (gx.square() + gy.square()).sqrt();
    const double vmax = mag.maxCoeff();
    if (vmax > 0.0) mag /= vmax;
    const ImageD nms = detail::nonmax_suppress(mag, gx, gy);
    ImageD edges = detail::hysteresis(nms, params.low, params.high);
    return EdgeMap::create(std::move(edges), Detector::kCanny, params.high);
  }

  ImageD response;
  if (params.detector == Detector::kSobel) {
    ImageD gx, gy;
    sobel_gradients(blurred, gx, gy);
    response = (gx.square() + gy.square()).sqrt();
  } else {
    response = laplacian_response(blurred).abs();
  }
  const double t = otsu_threshold(response);
  ImageD edges = (response > t).cast<double>();
  return EdgeMap::create(std::move(edges), params.detector,
                         std::isfinite(t) ? t : 0.0);
}

inline EdgeMap detect_edges(const GrayImage& image, Detector detector,
                            const EdgeParams& params) {
  EdgeParams p = params;
  p.detector = detector;
  return detect_edges(image, p);
}

}  // namespace e2p

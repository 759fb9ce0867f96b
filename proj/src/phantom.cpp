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

#include "e2p/phantom.hpp"

#include <cmath>
#include <numbers>

#include "e2p/common.hpp"
#include "e2p/io.hpp"
#include "e2p/rng.hpp"

namespace e2p {

ImageD disk_image(double cy, double cx, double radius, double inside,
                  double outside) {
  ImageD img(kWorkingSize, kWorkingSize);
  for (Eigen::Index y = 0; y < kWorkingSize; ++y)
    for (Eigen::Index x = 0; x < kWorkingSize; ++x) {
      const double d = std::hypot(static_cast<double>(y) - cy,
                                  static_cast<double>(x) - cx);
      img(y, x) = d <= radius ? inside : outside;
    }
  return img;
}

ImageD ellipse_mask(double cy, double cx, double a, double b) {
  ImageD mask = ImageD::Zero(kWorkingSize, kWorkingSize);
  for (Eigen::Index y = 0; y < kWorkingSize; ++y)
    for (Eigen::Index x = 0; x < kWorkingSize; ++x) {
      const double u = (static_cast<double>(x) - cx) / a;
      const double v = (static_cast<double>(y) - cy) / b;
      if (u * u + v * v <= 1.0) mask(y, x) = 1.0;
    }
  return mask;
}

VolumeRecord make_phantom_volume(const std::string& volume_id, Modality modality,
                                 const PhantomOptions& opts) {
  E2P_REQUIRE(opts.slices >= 1, "phantom: slices must be >= 1");
  E2P_REQUIRE(opts.base_radius > 4.0, "phantom: radius too small");
  Rng rng(opts.seed);
  const double cx0 = 120.0 + rng.uniform(-15.0, 15.0);
  const double cy0 = 120.0 + rng.uniform(-15.0, 15.0);
  const double radius = opts.base_radius + rng.uniform(-opts.radius_jitter,
                                                       opts.radius_jitter);
  const double drift_x = rng.uniform(-2.0, 2.0);
  const double drift_y = rng.uniform(-2.0, 2.0);
  const double distractor_x = rng.uniform(30.0, 70.0);
  const double distractor_y = rng.uniform(160.0, 200.0);
  const bool is_mr_volume = is_mr(modality);

  VolumeRecord record;
  record.volume_id = volume_id;
  record.modality = modality;
  record.slice_spacing = is_mr_volume ? 5.0 : 3.0;
  for (int k = 0; k < opts.slices; ++k) {
    // Organ cross-section grows then shrinks through the stack.
    const double phase = std::numbers::pi * (k + 1) /
                         static_cast<double>(opts.slices + 1);
    const double rk = radius * (0.75 + 0.25 * std::sin(phase));
    const double a = rk * 1.1, b = rk * 0.9;
    const double cx = cx0 + drift_x * k, cy = cy0 + drift_y * k;

    ImageD img(kWorkingSize, kWorkingSize);
    for (Eigen::Index y = 0; y < kWorkingSize; ++y) {
      for (Eigen::Index x = 0; x < kWorkingSize; ++x) {
        const double fx = static_cast<double>(x) / (kWorkingSize - 1);
        const double fy = static_cast<double>(y) / (kWorkingSize - 1);
        double v = is_mr_volume ? 0.45 - 0.18 * fy + 0.05 * fx
                                : 0.2 + 0.22 * fx + 0.05 * fy;
        const double dd = std::hypot(static_cast<double>(y) - distractor_y,
                                     static_cast<double>(x) - distractor_x);
        if (dd < 28.0) v = is_mr_volume ? 0.22 : 0.45;
        const double u = (static_cast<double>(x) - cx) / a;
        const double w = (static_cast<double>(y) - cy) / b;
        if (u * u + w * w <= 1.0)
          v = (is_mr_volume ? 0.78 : 0.72) + 0.08 * u;
        img(y, x) = std::clamp(v + rng.uniform(-opts.noise, opts.noise), 0.0, 1.0);
      }
    }
    record.slices.push_back(GrayImage::create(img, modality));
    record.masks.push_back(ellipse_mask(cy, cx, a, b));
  }
  record.source_affine = AffineTransform::scaling(
      Eigen::Vector3d(1.2, 1.2, record.slice_spacing), Eigen::Vector3d::Zero());
  record.validate();
  return record;
}

std::vector<VolumeRecord> make_phantom_inventory(int n_ct, int n_mr, int slices,
                                                 uint64_t seed) {
  std::vector<VolumeRecord> out;
  char buf[16];
  for (int i = 0; i < n_ct; ++i) {
    std::snprintf(buf, sizeof(buf), "%02d", i + 1);
    PhantomOptions opts;
    opts.slices = slices;
    opts.seed = seed * 1000 + static_cast<uint64_t>(i);
    out.push_back(make_phantom_volume("ct_phantom_" + std::string(buf),
                                      Modality::kCT, opts));
  }
  for (int i = 0; i < n_mr; ++i) {
    std::snprintf(buf, sizeof(buf), "%02d", i + 1);
    PhantomOptions opts;
    opts.slices = slices;
    opts.seed = seed * 1000 + 500 + static_cast<uint64_t>(i);
    out.push_back(make_phantom_volume("mr_phantom_" + std::string(buf),
                                      Modality::kMrT1Oop, opts));
  }
  return out;
}

void write_phantom_dataset(const std::filesystem::path& root, int n_ct, int n_mr,
                           int slices, uint64_t seed) {
  namespace fs = std::filesystem;
  const auto inventory = make_phantom_inventory(n_ct, n_mr, slices, seed);
  for (const auto& rec : inventory) {
    const fs::path dir = root / rec.volume_id;
    fs::create_directories(dir / "images");
    fs::create_directories(dir / "ground");
    const double liver_level = rec.modality == Modality::kCT ? 1.0 : 63.0 / 255.0;
    for (size_t k = 0; k < rec.slices.size(); ++k) {
      char name[16];
      std::snprintf(name, sizeof(name), "%03zu.png", k);
      write_png_gray8(dir / "images" / name, rec.slices[k].pixels);
      write_png_gray8(dir / "ground" / name,
                      ImageD(rec.masks[k] * liver_level));
    }
  }
}

}  // namespace e2p

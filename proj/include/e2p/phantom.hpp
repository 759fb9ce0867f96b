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

#include <filesystem>
#include <string>
#include <vector>

#include "e2p/data.hpp"
#include "e2p/image.hpp"

namespace e2p {

/// Synthetic ellipse-organ volumes with intensity ramps, a distractor
/// structure, and mild noise: the zero-external-data stand-in for CT/MR.
struct PhantomOptions {
  int slices = 4;
  double base_radius = 45.0;   // px, organ semi-axis scale
  double radius_jitter = 8.0;  // per-volume variation, px
  double noise = 0.02;
  uint64_t seed = 1;
};

VolumeRecord make_phantom_volume(const std::string& volume_id, Modality modality,
                                 const PhantomOptions& opts);

/// n_ct + n_mr phantom volumes with ids ct_phantom_NN / mr_phantom_NN.
std::vector<VolumeRecord> make_phantom_inventory(int n_ct, int n_mr, int slices,
                                                 uint64_t seed);

/// Materializes phantoms as a generic on-disk dataset (images/ + ground/
/// PNG stacks) so ingestion and the scan command can be exercised without
/// CHAOS. MR ground masks use liver level 63, CT masks 255.
void write_phantom_dataset(const std::filesystem::path& root, int n_ct, int n_mr,
                           int slices, uint64_t seed);

/// Analytic shapes for detector tests.
ImageD disk_image(double cy, double cx, double radius, double inside,
                  double outside);
ImageD ellipse_mask(double cy, double cx, double a, double b);

}  // namespace e2p

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

#include "e2p/image.hpp"
#include "e2p/volume3d.hpp"

namespace e2p {

struct VolumeRecord {
  std::string volume_id;
  Modality modality = Modality::kUnknown;
  std::vector<GrayImage> slices;  // 240x240, [0,1], per-volume min-max scaled
  std::vector<ImageD> masks;      // binary 240x240, aligned with slices
  AffineTransform source_affine;  // voxel (i,j,k) -> world mm
  double slice_spacing = 1.0;     // mm between slices

  void validate() const;
};

/// True for label values that map to liver. CT ground truth is binary
/// (any nonzero); MR annotations are multi-organ with liver in [55, 70].
bool is_liver_label(double level, Modality modality);

/// Reads one volume directory. CHAOS layouts are resolved per modality
/// (CT/DICOM_anon + Ground; MR/T1DUAL or T2SPIR subtrees); a generic
/// `images/` + `ground/` pair of PNG or DICOM stacks is accepted as well.
VolumeRecord ingest_volume(const std::filesystem::path& dir, Modality modality);

struct ManifestEntry {
  std::string volume_id;
  Modality modality = Modality::kUnknown;
  std::string path;
  int n_slices = 0;
};

/// Walks a dataset root (CT/* and MR/* subtrees, or generic volume dirs) and
/// lists every volume it can ingest. mr_sequence picks the MR subtree.
std::vector<ManifestEntry> scan_dataset(const std::filesystem::path& root,
                                        Modality mr_sequence);

void write_manifest_csv(const std::filesystem::path& path,
                        const std::vector<ManifestEntry>& entries);

/// Full in-memory inventory for an experiment: phantom volumes when
/// data.synthetic is set, otherwise every volume under data.root.
struct DataConfig;
std::vector<VolumeRecord> build_inventory(const DataConfig& data);

/// Filename-aware ordering: digit runs compare numerically (img2 < img10).
bool natural_less(const std::string& a, const std::string& b);

}  // namespace e2p

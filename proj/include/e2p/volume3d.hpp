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

#include <filesystem>
#include <string>
#include <vector>

#include "e2p/image.hpp"

namespace e2p {

/// Homogeneous voxel-index-to-world-mm mapping. Voxel (i, j, k) means
/// (column, row, slice).
struct AffineTransform {
  Eigen::Matrix4d matrix;

  static AffineTransform create(const Eigen::Matrix4d& m);
  static AffineTransform scaling(const Eigen::Vector3d& spacing,
                                 const Eigen::Vector3d& origin);

  Eigen::Vector3d apply(const Eigen::Vector3d& voxel) const;
  Eigen::Vector3d inverse_apply(const Eigen::Vector3d& world) const;

  double spacing_z() const { return matrix.block<3, 1>(0, 2).norm(); }
  double voxel_volume_mm3() const {
    return std::abs(matrix.block<3, 3>(0, 0).determinant());
  }
};

struct VolumeStack {
  std::vector<ImageD> voxels;  // binary slices, index k; each (row=j, col=i)
  AffineTransform affine;
  std::string volume_id;

  Eigen::Index foreground_count() const;
  double world_volume_mm3() const {
    return static_cast<double>(foreground_count()) * affine.voxel_volume_mm3();
  }
};

/// Stacks binary slices in order; no resampling. spacing/origin build a pure
/// scaling + translation affine.
VolumeStack stack(const std::vector<ImageD>& masks, const Eigen::Vector3d& spacing,
                  const Eigen::Vector3d& origin, std::string volume_id);

/// Linear interpolation of the soft mask along z to target_spacing_z, then
/// re-binarization at 0.5. target >= current spacing is a no-op (sets
/// *warned). The world extent along z is preserved within one voxel.
VolumeStack densify(const VolumeStack& volume, double target_spacing_z,
                    bool* warned = nullptr);

/// Volumetric Dice over all voxels; grids and affines must match exactly.
double dice3d(const VolumeStack& pred, const VolumeStack& truth);

/// Writes the stack as a NIfTI-1 file with the affine in the sform rows.
void write_nifti(const std::filesystem::path& path, const VolumeStack& volume);

}  // namespace e2p

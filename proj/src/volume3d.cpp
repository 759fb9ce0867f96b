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

#include "e2p/volume3d.hpp"

#include <cmath>
#include <utility>

#include "e2p/common.hpp"
#include "e2p/io.hpp"

namespace e2p {

AffineTransform AffineTransform::create(const Eigen::Matrix4d& m) {
  E2P_REQUIRE(m.row(3).isApprox(Eigen::RowVector4d(0, 0, 0, 1), 0.0),
              "affine: last row must be (0,0,0,1)");
  E2P_REQUIRE(std::abs(m.block<3, 3>(0, 0).determinant()) > 1e-12,
              "affine: upper-left 3x3 must be invertible");
  return AffineTransform{m};
}

AffineTransform AffineTransform::scaling(const Eigen::Vector3d& spacing,
                                         const Eigen::Vector3d& origin) {
  Eigen::Matrix4d m = Eigen::Matrix4d::Identity();
  m(0, 0) = spacing.x();
  m(1, 1) = spacing.y();
  m(2, 2) = spacing.z();
  m.block<3, 1>(0, 3) = origin;
  return create(m);
}

Eigen::Vector3d AffineTransform::apply(const Eigen::Vector3d& voxel) const {
  return matrix.block<3, 3>(0, 0) * voxel + matrix.block<3, 1>(0, 3);
}

Eigen::Vector3d AffineTransform::inverse_apply(const Eigen::Vector3d& world) const {
  return matrix.block<3, 3>(0, 0)
      .colPivHouseholderQr()
      .solve(world - matrix.block<3, 1>(0, 3));
}

Eigen::Index VolumeStack::foreground_count() const {
  Eigen::Index n = 0;
  for (const auto& s : voxels) n += (s > 0.5).count();
  return n;
}

namespace {

void require_binary(const ImageD& mask) {
  E2P_REQUIRE(((mask == 0.0) || (mask == 1.0)).all(),
              "volume slice must be binary 0/1");
}

}  // namespace

VolumeStack stack(const std::vector<ImageD>& masks, const Eigen::Vector3d& spacing,
                  const Eigen::Vector3d& origin, std::string volume_id) {
  E2P_REQUIRE(!masks.empty(), "stack: at least one slice required");
  const Eigen::Index h = masks.front().rows(), w = masks.front().cols();
  for (const auto& m : masks) {
    E2P_REQUIRE(m.rows() == h && m.cols() == w, "stack: inconsistent slice shapes");
    require_binary(m);
  }
  E2P_REQUIRE(spacing.minCoeff() > 0.0, "stack: spacing must be positive");
  return VolumeStack{masks, AffineTransform::scaling(spacing, origin),
                     std::move(volume_id)};
}

VolumeStack densify(const VolumeStack& volume, double target_spacing_z,
                    bool* warned) {
  if (warned) *warned = false;
  E2P_REQUIRE(!volume.voxels.empty(), "densify: empty volume");
  E2P_REQUIRE(target_spacing_z > 0.0, "densify: target spacing must be positive");
  const double dz = volume.affine.spacing_z();
  if (target_spacing_z >= dz) {
    if (warned) *warned = true;
    return volume;
  }
  const Eigen::Index n = static_cast<Eigen::Index>(volume.voxels.size());
  const Eigen::Index n_new =
      n == 1 ? 1
             : static_cast<Eigen::Index>(
                   std::llround(static_cast<double>(n - 1) * dz /
                                target_spacing_z)) + 1;
  const double scale = target_spacing_z / dz;

  VolumeStack out;
  out.volume_id = volume.volume_id;
  Eigen::Matrix4d m = volume.affine.matrix;
  m.block<3, 1>(0, 2) *= scale;  // direction kept, z step shrunk
  out.affine = AffineTransform::create(m);
  out.voxels.reserve(static_cast<size_t>(n_new));
  for (Eigen::Index k = 0; k < n_new; ++k) {
    const double t =
        std::min(static_cast<double>(k) * scale, static_cast<double>(n - 1));
    const Eigen::Index k0 = static_cast<Eigen::Index>(std::floor(t));
    const Eigen::Index k1 = std::min(k0 + 1, n - 1);
    const double f = t - static_cast<double>(k0);
    ImageD soft = (1.0 - f) * volume.voxels[static_cast<size_t>(k0)] +
                  f * volume.voxels[static_cast<size_t>(k1)];
    out.voxels.push_back((soft >= 0.5).cast<double>());
  }
  return out;
}

double dice3d(const VolumeStack& pred, const VolumeStack& truth) {
  E2P_REQUIRE(pred.voxels.size() == truth.voxels.size(),
              "dice3d: slice count mismatch");
  E2P_REQUIRE(pred.affine.matrix.isApprox(truth.affine.matrix, 1e-9),
              "dice3d: affine mismatch (no implicit resampling)");
  Eigen::Index inter = 0, p = 0, t = 0;
  for (size_t k = 0; k < pred.voxels.size(); ++k) {
    const ImageD& a = pred.voxels[k];
    const ImageD& b = truth.voxels[k];
    E2P_REQUIRE(a.rows() == b.rows() && a.cols() == b.cols(),
                "dice3d: slice shape mismatch");
    inter += ((a > 0.5) && (b > 0.5)).count();
    p += (a > 0.5).count();
    t += (b > 0.5).count();
  }
  if (p + t == 0) return 1.0;
  return 2.0 * static_cast<double>(inter) / static_cast<double>(p + t);
}

void write_nifti(const std::filesystem::path& path, const VolumeStack& volume) {
  write_nifti_mask(path, volume.voxels, volume.affine.matrix);
}

}  // namespace e2p

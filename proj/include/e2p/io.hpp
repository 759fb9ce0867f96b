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
#include <vector>

#include "e2p/image.hpp"

namespace e2p {

/// Reads a PNG as raw integer levels (grayscale conversion averages RGB).
/// Values are the stored sample levels (0..255 or 0..65535), not normalized.
ImageD read_png_levels(const std::filesystem::path& path);

/// Writes an image in [0,1] as an 8-bit grayscale PNG.
void write_png_gray8(const std::filesystem::path& path, const ImageD& image);

/// One uncompressed little-endian DICOM slice. Pixel values already have the
/// rescale slope/intercept applied; MONOCHROME1 slices are negated so larger
/// is always brighter.
struct DicomSlice {
  Eigen::ArrayXXd pixels;  // rows x cols
  double spacing_row = 1.0, spacing_col = 1.0;  // mm
  double slice_thickness = 0.0;                 // mm, 0 when absent
  double spacing_between = 0.0;                 // mm, 0 when absent
  double position_z = 0.0;                      // mm, from ImagePositionPatient
  bool has_position = false;
  int instance_number = 0;
};

/// Minimal reader: implicit/explicit VR little endian, single frame, 8/16-bit
/// grayscale. Compressed transfer syntaxes raise IngestionError naming the
/// file.
DicomSlice read_dicom_slice(const std::filesystem::path& path);

/// Writes a binary mask volume as NIfTI-1 (datatype uint8, sform from the
/// affine rows, x-fastest voxel order). slices[k](y, x) maps to voxel
/// (i=x, j=y, k).
void write_nifti_mask(const std::filesystem::path& path,
                      const std::vector<ImageD>& slices,
                      const Eigen::Matrix4d& affine);

}  // namespace e2p

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

#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <vector>

#include "e2p/common.hpp"
#include "e2p/io.hpp"

namespace e2p {

namespace {

// NIfTI-1 header, 348 bytes, little endian.
#pragma pack(push, 1)
struct Nifti1Header {
  int32_t sizeof_hdr;
  char data_type[10];
  char db_name[18];
  int32_t extents;
  int16_t session_error;
  char regular;
  char dim_info;
  int16_t dim[8];
  float intent_p1, intent_p2, intent_p3;
  int16_t intent_code;
  int16_t datatype;
  int16_t bitpix;
  int16_t slice_start;
  float pixdim[8];
  float vox_offset;
  float scl_slope, scl_inter;
  int16_t slice_end;
  char slice_code;
  char xyzt_units;
  float cal_max, cal_min;
  float slice_duration, toffset;
  int32_t glmax, glmin;
  char descrip[80];
  char aux_file[24];
  int16_t qform_code, sform_code;
  float quatern_b, quatern_c, quatern_d;
  float qoffset_x, qoffset_y, qoffset_z;
  float srow_x[4], srow_y[4], srow_z[4];
  char intent_name[16];
  char magic[4];
};
#pragma pack(pop)
static_assert(sizeof(Nifti1Header) == 348, "NIfTI-1 header must be 348 bytes");

}  // namespace

void write_nifti_mask(const std::filesystem::path& path,
                      const std::vector<ImageD>& slices,
                      const Eigen::Matrix4d& affine) {
  E2P_REQUIRE(!slices.empty(), "write_nifti_mask: no slices");
  const Eigen::Index ny = slices.front().rows();
  const Eigen::Index nx = slices.front().cols();
  for (const auto& s : slices)
    E2P_REQUIRE(s.rows() == ny && s.cols() == nx,
                "write_nifti_mask: inconsistent slice shapes");
  const Eigen::Index nz = static_cast<Eigen::Index>(slices.size());

  Nifti1Header hdr;
  std::memset(&hdr, 0, sizeof(hdr));
  hdr.sizeof_hdr = 348;
  hdr.regular = 'r';
  hdr.dim[0] = 3;
  hdr.dim[1] = static_cast<int16_t>(nx);
  hdr.dim[2] = static_cast<int16_t>(ny);
  hdr.dim[3] = static_cast<int16_t>(nz);
  hdr.dim[4] = 1;
  hdr.datatype = 2;  // uint8
  hdr.bitpix = 8;
  hdr.pixdim[0] = 1.0f;
  hdr.pixdim[1] = static_cast<float>(affine.block<3, 1>(0, 0).norm());
  hdr.pixdim[2] = static_cast<float>(affine.block<3, 1>(0, 1).norm());
  hdr.pixdim[3] = static_cast<float>(affine.block<3, 1>(0, 2).norm());
  hdr.vox_offset = 352.0f;
  hdr.scl_slope = 1.0f;
  hdr.xyzt_units = 2;  // millimetres
  hdr.sform_code = 1;
  for (int j = 0; j < 4; ++j) {
    hdr.srow_x[j] = static_cast<float>(affine(0, j));
    hdr.srow_y[j] = static_cast<float>(affine(1, j));
    hdr.srow_z[j] = static_cast<float>(affine(2, j));
  }
  std::memcpy(hdr.magic, "n+1", 4);

  std::ofstream os(path, std::ios::binary);
  if (!os) throw IngestionError("cannot open NIfTI for writing: " + path.string());
  os.write(reinterpret_cast<const char*>(&hdr), sizeof(hdr));
  const char pad[4] = {0, 0, 0, 0};
  os.write(pad, 4);  // extension flag, none

  // Voxel (i, j, k) = slices[k](j, i); i is fastest.
  std::vector<uint8_t> row(static_cast<size_t>(nx));
  for (Eigen::Index k = 0; k < nz; ++k) {
    const ImageD& s = slices[static_cast<size_t>(k)];
    for (Eigen::Index j = 0; j < ny; ++j) {
      for (Eigen::Index i = 0; i < nx; ++i)
        row[static_cast<size_t>(i)] = s(j, i) > 0.5 ? 1 : 0;
      os.write(reinterpret_cast<const char*>(row.data()),
               static_cast<std::streamsize>(row.size()));
    }
  }
  os.flush();
  if (!os) throw IngestionError("short write to NIfTI: " + path.string());
}

}  // namespace e2p

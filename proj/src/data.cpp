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

#include "e2p/data.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <utility>

#include "e2p/common.hpp"
#include "e2p/config.hpp"
#include "e2p/io.hpp"
#include "e2p/phantom.hpp"

namespace e2p {

void VolumeRecord::validate() const {
  E2P_REQUIRE(!volume_id.empty(), "VolumeRecord: empty volume_id");
  E2P_REQUIRE(slices.size() == masks.size(),
              "VolumeRecord: slice/mask count mismatch");
  E2P_REQUIRE(!slices.empty(), "VolumeRecord: no slices");
  E2P_REQUIRE(slice_spacing > 0.0, "VolumeRecord: bad slice spacing");
  for (const auto& m : masks)
    E2P_REQUIRE(((m == 0.0) || (m == 1.0)).all(), "VolumeRecord: non-binary mask");
}

bool is_liver_label(double level, Modality modality) {
  if (modality == Modality::kCT) return level > 0.0;
  return level >= 55.0 && level <= 70.0;
}

bool natural_less(const std::string& a, const std::string& b) {
  size_t i = 0, j = 0;
  while (i < a.size() && j < b.size()) {
    const bool da = std::isdigit(static_cast<unsigned char>(a[i])) != 0;
    const bool db = std::isdigit(static_cast<unsigned char>(b[j])) != 0;
    if (da && db) {
      size_t ie = i, je = j;
      while (ie < a.size() && std::isdigit(static_cast<unsigned char>(a[ie]))) ++ie;
      while (je < b.size() && std::isdigit(static_cast<unsigned char>(b[je]))) ++je;
      const std::string na = a.substr(i, ie - i), nb = b.substr(j, je - j);
      const size_t za = std::min(na.find_first_not_of('0'), na.size());
      const size_t zb = std::min(nb.find_first_not_of('0'), nb.size());
      const std::string ta = na.substr(za), tb = nb.substr(zb);
      if (ta.size() != tb.size()) return ta.size() < tb.size();
      if (ta != tb) return ta < tb;
      i = ie;
      j = je;
      continue;
    }
    if (a[i] != b[j]) return a[i] < b[j];
    ++i;
    ++j;
  }
  return a.size() < b.size();
}

namespace {

std::vector<std::filesystem::path> list_sorted(const std::filesystem::path& dir,
                                               std::vector<std::string> exts) {
  std::vector<std::filesystem::path> out;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    std::string ext = entry.path().extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(),
                   [](unsigned char ch) { return std::tolower(ch); });
    if (std::find(exts.begin(), exts.end(), ext) != exts.end())
      out.push_back(entry.path());
  }
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
    return natural_less(a.filename().string(), b.filename().string());
  });
  return out;
}

struct VolumeLayout {
  std::filesystem::path images;
  std::filesystem::path ground;
};

VolumeLayout resolve_layout(const std::filesystem::path& dir, Modality modality) {
  namespace fs = std::filesystem;
  const auto exists = [](const fs::path& p) { return fs::is_directory(p); };
  switch (modality) {
    case Modality::kCT:
      if (exists(dir / "DICOM_anon") && exists(dir / "Ground"))
        return {dir / "DICOM_anon", dir / "Ground"};
      break;
    case Modality::kMrT1In:
      if (exists(dir / "T1DUAL/DICOM_anon/InPhase"))
        return {dir / "T1DUAL/DICOM_anon/InPhase", dir / "T1DUAL/Ground"};
      break;
    case Modality::kMrT1Oop:
      if (exists(dir / "T1DUAL/DICOM_anon/OutPhase"))
        return {dir / "T1DUAL/DICOM_anon/OutPhase", dir / "T1DUAL/Ground"};
      break;
    case Modality::kMrT2Spir:
      if (exists(dir / "T2SPIR/DICOM_anon"))
        return {dir / "T2SPIR/DICOM_anon", dir / "T2SPIR/Ground"};
      break;
    default:
      break;
  }
  if (exists(dir / "images") && exists(dir / "ground"))
    return {dir / "images", dir / "ground"};
  throw IngestionError("no recognizable volume layout under " + dir.string() +
                       " for modality " + to_string(modality));
}

struct RawSlice {
  Eigen::ArrayXXd pixels;
  double spacing_row = 1.0, spacing_col = 1.0;
  double z = 0.0;
  bool has_z = false;
  double thickness = 0.0, between = 0.0;
};

RawSlice load_image_file(const std::filesystem::path& path) {
  RawSlice out;
  if (path.extension() == ".png" || path.extension() == ".PNG") {
    out.pixels = read_png_levels(path);
    return out;
  }
  DicomSlice d = read_dicom_slice(path);
  out.pixels = std::move(d.pixels);
  out.spacing_row = d.spacing_row;
  out.spacing_col = d.spacing_col;
  out.z = d.position_z;
  out.has_z = d.has_position;
  out.thickness = d.slice_thickness;
  out.between = d.spacing_between;
  return out;
}

double estimate_slice_spacing(const std::vector<RawSlice>& slices) {
  std::vector<double> zs;
  for (const auto& s : slices)
    if (s.has_z) zs.push_back(s.z);
  if (zs.size() == slices.size() && zs.size() >= 2) {
    std::vector<double> gaps;
    for (size_t i = 1; i < zs.size(); ++i) gaps.push_back(std::abs(zs[i] - zs[i - 1]));
    std::sort(gaps.begin(), gaps.end());
    const double median = gaps[gaps.size() / 2];
    if (median > 0.0) return median;
  }
  for (const auto& s : slices) {
    if (s.between > 0.0) return s.between;
    if (s.thickness > 0.0) return s.thickness;
  }
  return 1.0;
}

}  // namespace

VolumeRecord ingest_volume(const std::filesystem::path& dir, Modality modality) {
  if (!std::filesystem::is_directory(dir))
    throw IngestionError("volume directory not found: " + dir.string());
  const VolumeLayout layout = resolve_layout(dir, modality);

  const auto image_files = list_sorted(layout.images, {".dcm", ".png"});
  const auto mask_files = list_sorted(layout.ground, {".png"});
  if (image_files.empty())
    throw IngestionError("no slice images under " + layout.images.string());
  if (image_files.size() != mask_files.size())
    throw IngestionError("slice/mask count mismatch under " + dir.string() + ": " +
                         std::to_string(image_files.size()) + " images vs " +
                         std::to_string(mask_files.size()) + " masks");

  std::vector<RawSlice> raw;
  raw.reserve(image_files.size());
  for (const auto& f : image_files) raw.push_back(load_image_file(f));

  // Per-volume min-max normalization; a constant volume maps to zeros.
  double lo = raw.front().pixels.minCoeff(), hi = raw.front().pixels.maxCoeff();
  for (const auto& s : raw) {
    lo = std::min(lo, s.pixels.minCoeff());
    hi = std::max(hi, s.pixels.maxCoeff());
  }
  const double range = hi - lo;

  VolumeRecord record;
  record.volume_id = dir.filename().string();
  record.modality = modality;
  for (size_t k = 0; k < raw.size(); ++k) {
    ImageD norm = range > 0.0
                      ? ImageD(((raw[k].pixels - lo) / range).matrix().array())
                      : ImageD(ImageD::Zero(raw[k].pixels.rows(),
                                            raw[k].pixels.cols()));
    ImageD resized = resize_bilinear(norm, kWorkingSize, kWorkingSize)
                         .cwiseMax(0.0)
                         .cwiseMin(1.0);
    record.slices.push_back(GrayImage::create(resized, modality));

    ImageD levels = read_png_levels(mask_files[k]);
    ImageD liver(levels.rows(), levels.cols());
    for (Eigen::Index r = 0; r < levels.rows(); ++r)
      for (Eigen::Index c = 0; c < levels.cols(); ++c)
        liver(r, c) = is_liver_label(levels(r, c), modality) ? 1.0 : 0.0;
    ImageD mask = (resize_bilinear(liver, kWorkingSize, kWorkingSize) >= 0.5)
                      .cast<double>();
    record.masks.push_back(mask);
  }

  record.slice_spacing = estimate_slice_spacing(raw);
  const double native_rows = static_cast<double>(raw.front().pixels.rows());
  const double native_cols = static_cast<double>(raw.front().pixels.cols());
  const double dx = raw.front().spacing_col * native_cols /
                    static_cast<double>(kWorkingSize);
  const double dy = raw.front().spacing_row * native_rows /
                    static_cast<double>(kWorkingSize);
  double z0 = 0.0;
  if (raw.front().has_z) z0 = raw.front().z;
  record.source_affine = AffineTransform::scaling(
      Eigen::Vector3d(dx, dy, record.slice_spacing), Eigen::Vector3d(0, 0, z0));
  record.validate();
  return record;
}

std::vector<ManifestEntry> scan_dataset(const std::filesystem::path& root,
                                        Modality mr_sequence) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(root))
    throw IngestionError("dataset root not found: " + root.string());
  std::vector<ManifestEntry> entries;

  auto try_add = [&entries](const fs::path& dir, Modality m,
                            const std::string& prefix) {
    try {
      VolumeRecord rec = ingest_volume(dir, m);
      std::string id = rec.volume_id.rfind(prefix, 0) == 0 ? rec.volume_id
                                                           : prefix + rec.volume_id;
      entries.push_back({std::move(id), m, dir.string(),
                         static_cast<int>(rec.slices.size())});
    } catch (const IngestionError&) {
      // not a volume of this modality; skip
    }
  };

  auto sorted_subdirs = [](const fs::path& p) {
    std::vector<fs::path> dirs;
    for (const auto& e : fs::directory_iterator(p))
      if (e.is_directory()) dirs.push_back(e.path());
    std::sort(dirs.begin(), dirs.end(), [](const auto& a, const auto& b) {
      return natural_less(a.filename().string(), b.filename().string());
    });
    return dirs;
  };

  if (fs::is_directory(root / "CT"))
    for (const auto& dir : sorted_subdirs(root / "CT"))
      try_add(dir, Modality::kCT, "ct_");
  if (fs::is_directory(root / "MR"))
    for (const auto& dir : sorted_subdirs(root / "MR"))
      try_add(dir, mr_sequence, "mr_");
  if (entries.empty()) {
    // Generic layout: volume dirs directly under the root; the directory
    // name's prefix picks the modality.
    for (const auto& dir : sorted_subdirs(root)) {
      const std::string name = dir.filename().string();
      if (name.rfind("mr", 0) == 0)
        try_add(dir, mr_sequence, "mr_");
      else
        try_add(dir, Modality::kCT, "ct_");
    }
  }
  return entries;
}

void write_manifest_csv(const std::filesystem::path& path,
                        const std::vector<ManifestEntry>& entries) {
  std::ofstream os(path);
  if (!os) throw IngestionError("cannot write manifest: " + path.string());
  os << "volume_id,modality,path,n_slices\n";
  for (const auto& e : entries)
    os << e.volume_id << ',' << to_string(e.modality) << ',' << e.path << ','
       << e.n_slices << '\n';
}

std::vector<VolumeRecord> build_inventory(const DataConfig& data) {
  data.validate();
  if (data.synthetic)
    return make_phantom_inventory(data.synthetic_ct, data.synthetic_mr,
                                  data.synthetic_slices, data.synthetic_seed);
  if (data.root.empty())
    throw ConfigError("data.root is empty and data.synthetic is off");
  std::vector<VolumeRecord> inventory;
  for (const ManifestEntry& entry : scan_dataset(data.root, data.mr_sequence)) {
    VolumeRecord rec = ingest_volume(entry.path, entry.modality);
    rec.volume_id = entry.volume_id;  // keep the manifest's prefixed id
    inventory.push_back(std::move(rec));
  }
  if (inventory.empty())
    throw IngestionError("no volumes found under " + data.root);
  return inventory;
}

}  // namespace e2p

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

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <doctest.h>

#include "e2p/archive.hpp"
#include "e2p/config.hpp"
#include "e2p/data.hpp"
#include "e2p/io.hpp"
#include "e2p/phantom.hpp"

namespace fs = std::filesystem;

namespace {

fs::path temp_dir(const char* tag) {
  fs::path dir = fs::temp_directory_path() / (std::string("e2p_data_") + tag);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& path) {
  std::ifstream is(path);
  REQUIRE(static_cast<bool>(is));
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("natural ordering compares digit runs numerically") {
  CHECK(e2p::natural_less("img2", "img10"));
  CHECK(!e2p::natural_less("img10", "img2"));
  CHECK(e2p::natural_less("a9b", "a10a"));
  CHECK(e2p::natural_less("abc", "abd"));
  CHECK(!e2p::natural_less("abc", "abc"));
  CHECK(e2p::natural_less("slice", "slice1"));
  // All-zero digit runs must not crash and compare as value 0.
  CHECK(e2p::natural_less("000", "1"));
  CHECK(!e2p::natural_less("1", "000"));
  CHECK(e2p::natural_less("0", "00"));  // equal values fall back to length
}

TEST_CASE("liver label rule is modality specific") {
  CHECK(e2p::is_liver_label(255.0, e2p::Modality::kCT));
  CHECK(e2p::is_liver_label(1.0, e2p::Modality::kCT));
  CHECK(!e2p::is_liver_label(0.0, e2p::Modality::kCT));
  CHECK(e2p::is_liver_label(63.0, e2p::Modality::kMrT2Spir));
  CHECK(e2p::is_liver_label(55.0, e2p::Modality::kMrT1In));
  CHECK(e2p::is_liver_label(70.0, e2p::Modality::kMrT1Oop));
  CHECK(!e2p::is_liver_label(54.0, e2p::Modality::kMrT2Spir));
  CHECK(!e2p::is_liver_label(200.0, e2p::Modality::kMrT2Spir));
  CHECK(!e2p::is_liver_label(0.0, e2p::Modality::kMrT2Spir));
}

TEST_CASE("phantom volumes satisfy the record contract") {
  e2p::PhantomOptions opts;
  opts.slices = 3;
  opts.seed = 77;
  e2p::VolumeRecord rec =
      e2p::make_phantom_volume("ct_phantom_00", e2p::Modality::kCT, opts);
  rec.validate();
  REQUIRE(rec.slices.size() == 3);
  REQUIRE(rec.masks.size() == 3);
  for (size_t k = 0; k < rec.slices.size(); ++k) {
    const e2p::ImageD& px = rec.slices[k].pixels;
    CHECK(px.rows() == e2p::kWorkingSize);
    CHECK(px.cols() == e2p::kWorkingSize);
    CHECK(px.minCoeff() >= 0.0);
    CHECK(px.maxCoeff() <= 1.0);
    const e2p::ImageD& m = rec.masks[k];
    CHECK(((m == 0.0) || (m == 1.0)).all());
    CHECK(m.sum() > 0.0);
  }
}

TEST_CASE("phantom inventory ids and modalities are stable") {
  auto inv = e2p::make_phantom_inventory(2, 3, 2, 9);
  REQUIRE(inv.size() == 5);
  CHECK(inv[0].volume_id == "ct_phantom_01");
  CHECK(inv[1].volume_id == "ct_phantom_02");
  CHECK(inv[2].volume_id == "mr_phantom_01");
  CHECK(inv[0].modality == e2p::Modality::kCT);
  CHECK(e2p::is_mr(inv[4].modality));

  // Same seed, same pixels; the inventory is a pure function of its inputs.
  auto again = e2p::make_phantom_inventory(2, 3, 2, 9);
  CHECK((inv[3].slices[1].pixels - again[3].slices[1].pixels).abs().maxCoeff() ==
        0.0);
}

TEST_CASE("written phantom dataset ingests byte-identically") {
  const fs::path dir = temp_dir("roundtrip");
  e2p::write_phantom_dataset(dir, 1, 1, 2, 21);

  const fs::path ct_dir = dir / "ct_phantom_01";
  REQUIRE(fs::exists(ct_dir / "images"));
  REQUIRE(fs::exists(ct_dir / "ground"));

  e2p::VolumeRecord rec = e2p::ingest_volume(ct_dir, e2p::Modality::kCT);
  rec.validate();
  REQUIRE(rec.slices.size() == 2);
  CHECK(rec.slices[0].pixels.minCoeff() >= 0.0);
  CHECK(rec.slices[0].pixels.maxCoeff() <= 1.0);
  for (const e2p::ImageD& m : rec.masks) {
    CHECK(((m == 0.0) || (m == 1.0)).all());
    CHECK(m.sum() > 0.0);
  }

  // A second ingestion of the same bytes is bit-identical.
  e2p::VolumeRecord rec2 = e2p::ingest_volume(ct_dir, e2p::Modality::kCT);
  for (size_t k = 0; k < rec.slices.size(); ++k) {
    CHECK((rec.slices[k].pixels - rec2.slices[k].pixels).abs().maxCoeff() == 0.0);
    CHECK((rec.masks[k] - rec2.masks[k]).abs().maxCoeff() == 0.0);
  }
  fs::remove_all(dir);
}

TEST_CASE("mr ground levels map only the liver band to foreground") {
  const fs::path dir = temp_dir("mr_levels");
  const fs::path vol = dir / "vol";
  fs::create_directories(vol / "images");
  fs::create_directories(vol / "ground");

  e2p::ImageD img(e2p::kWorkingSize, e2p::kWorkingSize);
  img.setConstant(0.5);
  img(10, 10) = 0.0;
  img(20, 20) = 1.0;
  e2p::write_png_gray8(vol / "images" / "000.png", img);

  // Liver painted at level 63, a distractor organ at level 200.
  e2p::ImageD ground = e2p::ImageD::Zero(e2p::kWorkingSize, e2p::kWorkingSize);
  for (Eigen::Index y = 40; y < 90; ++y)
    for (Eigen::Index x = 40; x < 90; ++x) ground(y, x) = 63.0 / 255.0;
  for (Eigen::Index y = 150; y < 200; ++y)
    for (Eigen::Index x = 150; x < 200; ++x) ground(y, x) = 200.0 / 255.0;
  e2p::write_png_gray8(vol / "ground" / "000.png", ground);

  e2p::VolumeRecord rec = e2p::ingest_volume(vol, e2p::Modality::kMrT2Spir);
  REQUIRE(rec.masks.size() == 1);
  const e2p::ImageD& m = rec.masks[0];
  CHECK(m(60, 60) == 1.0);
  CHECK(m(170, 170) == 0.0);
  CHECK(m(5, 5) == 0.0);
  CHECK(m.sum() == doctest::Approx(50.0 * 50.0).epsilon(0.02));
  fs::remove_all(dir);
}

TEST_CASE("slice and mask count mismatch names both counts") {
  const fs::path dir = temp_dir("mismatch");
  const fs::path vol = dir / "vol";
  fs::create_directories(vol / "images");
  fs::create_directories(vol / "ground");
  e2p::ImageD img = e2p::ImageD::Zero(e2p::kWorkingSize, e2p::kWorkingSize);
  e2p::write_png_gray8(vol / "images" / "000.png", img);
  e2p::write_png_gray8(vol / "images" / "001.png", img);
  e2p::write_png_gray8(vol / "ground" / "000.png", img);
  CHECK_THROWS_WITH_AS(e2p::ingest_volume(vol, e2p::Modality::kCT),
                       doctest::Contains("count mismatch"),
                       e2p::IngestionError);
  fs::remove_all(dir);
}

TEST_CASE("missing volume layouts are rejected") {
  const fs::path dir = temp_dir("missing");
  CHECK_THROWS_AS(e2p::ingest_volume(dir / "nope", e2p::Modality::kCT),
                  e2p::IngestionError);
  const fs::path empty = dir / "empty";
  fs::create_directories(empty);
  CHECK_THROWS_AS(e2p::ingest_volume(empty, e2p::Modality::kCT),
                  e2p::IngestionError);
  fs::remove_all(dir);
}

TEST_CASE("constant images normalize to zeros instead of dividing by zero") {
  const fs::path dir = temp_dir("flat");
  const fs::path vol = dir / "vol";
  fs::create_directories(vol / "images");
  fs::create_directories(vol / "ground");
  e2p::ImageD img(e2p::kWorkingSize, e2p::kWorkingSize);
  img.setConstant(0.5);
  e2p::ImageD ground = e2p::ImageD::Zero(e2p::kWorkingSize, e2p::kWorkingSize);
  ground(100, 100) = 1.0;
  e2p::write_png_gray8(vol / "images" / "000.png", img);
  e2p::write_png_gray8(vol / "ground" / "000.png", ground);

  e2p::VolumeRecord rec = e2p::ingest_volume(vol, e2p::Modality::kCT);
  CHECK(rec.slices[0].pixels.abs().maxCoeff() == 0.0);
  fs::remove_all(dir);
}

TEST_CASE("scan_dataset enumerates phantom trees and writes a manifest") {
  const fs::path dir = temp_dir("scan");
  e2p::write_phantom_dataset(dir, 2, 1, 2, 22);

  auto entries = e2p::scan_dataset(dir, e2p::Modality::kMrT2Spir);
  REQUIRE(entries.size() == 3);
  int ct = 0, mr = 0;
  for (const auto& e : entries) {
    CHECK(e.n_slices == 2);
    CHECK(!e.path.empty());
    if (e.modality == e2p::Modality::kCT)
      ++ct;
    else
      ++mr;
  }
  CHECK(ct == 2);
  CHECK(mr == 1);

  const fs::path manifest = dir / "manifest.csv";
  e2p::write_manifest_csv(manifest, entries);
  const std::string text = slurp(manifest);
  CHECK(text.rfind("volume_id,modality,path,n_slices\n", 0) == 0);
  CHECK(text.find("ct_phantom_01") != std::string::npos);
  CHECK(text.find("mr_phantom_01") != std::string::npos);

  CHECK_THROWS_AS(e2p::scan_dataset(dir / "absent", e2p::Modality::kMrT2Spir),
                  e2p::IngestionError);
  fs::remove_all(dir);
}

TEST_CASE("build_inventory routes between synthetic and disk sources") {
  e2p::DataConfig synth;
  synth.synthetic = true;
  synth.synthetic_ct = 2;
  synth.synthetic_mr = 1;
  synth.synthetic_slices = 2;
  synth.synthetic_seed = 5;
  auto inv = e2p::build_inventory(synth);
  REQUIRE(inv.size() == 3);
  CHECK(inv[0].volume_id == "ct_phantom_01");

  e2p::DataConfig empty;
  empty.synthetic = false;
  empty.root = "";
  CHECK_THROWS_AS(e2p::build_inventory(empty), e2p::ConfigError);

  const fs::path dir = temp_dir("inventory");
  e2p::write_phantom_dataset(dir, 1, 1, 2, 6);
  e2p::DataConfig disk;
  disk.synthetic = false;
  disk.root = dir.string();
  auto from_disk = e2p::build_inventory(disk);
  REQUIRE(from_disk.size() == 2);
  for (const auto& rec : from_disk) rec.validate();
  fs::remove_all(dir);
}

TEST_CASE("analytic shapes have the advertised geometry") {
  e2p::ImageD disk = e2p::disk_image(120.0, 120.0, 40.0, 0.9, 0.1);
  CHECK(disk(120, 120) == 0.9);
  CHECK(disk(10, 10) == 0.1);
  double area = 0.0;
  for (Eigen::Index y = 0; y < disk.rows(); ++y)
    for (Eigen::Index x = 0; x < disk.cols(); ++x)
      area += disk(y, x) > 0.5 ? 1.0 : 0.0;
  CHECK(area == doctest::Approx(3.14159265 * 40.0 * 40.0).epsilon(0.02));

  e2p::ImageD ell = e2p::ellipse_mask(120.0, 120.0, 60.0, 30.0);
  CHECK(ell(120, 120) == 1.0);
  // Semi-axis a runs along x, b along y.
  CHECK(ell(120, 175) == 1.0);
  CHECK(ell(175, 120) == 0.0);
}

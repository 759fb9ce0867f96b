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

#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "e2p/common.hpp"
#include "e2p/io.hpp"

namespace e2p {

namespace {

// Just enough DICOM to read uncompressed CHAOS-style series: little-endian
// implicit or explicit VR, single-frame grayscale pixel data.

constexpr const char* kImplicitLE = "1.2.840.10008.1.2";
constexpr const char* kExplicitLE = "1.2.840.10008.1.2.1";

struct Cursor {
  const uint8_t* p = nullptr;
  size_t size = 0;
  size_t pos = 0;
  std::string file;

  bool eof() const { return pos >= size; }
  void need(size_t n, const char* what) const {
    if (pos + n > size)
      throw IngestionError("truncated DICOM (" + std::string(what) + "): " + file);
  }
  uint16_t u16() {
    need(2, "u16");
    uint16_t v;
    std::memcpy(&v, p + pos, 2);
    pos += 2;
    return v;
  }
  uint32_t u32() {
    need(4, "u32");
    uint32_t v;
    std::memcpy(&v, p + pos, 4);
    pos += 4;
    return v;
  }
  std::string str(size_t n) {
    need(n, "string");
    std::string s(reinterpret_cast<const char*>(p + pos), n);
    pos += n;
    while (!s.empty() && (s.back() == '\0' || s.back() == ' ')) s.pop_back();
    return s;
  }
  void skip(size_t n, const char* what) {
    need(n, what);
    pos += n;
  }
};

bool vr_has_long_length(const char vr[2]) {
  auto is = [&](const char* s) { return vr[0] == s[0] && vr[1] == s[1]; };
  return is("OB") || is("OW") || is("OF") || is("SQ") || is("UT") || is("UN");
}

struct ElementHeader {
  uint16_t group = 0, element = 0;
  char vr[3] = {0, 0, 0};
  uint32_t length = 0;
};

ElementHeader read_header(Cursor& c, bool explicit_vr) {
  ElementHeader h;
  h.group = c.u16();
  h.element = c.u16();
  if (h.group == 0xFFFE) {  // item / delimiter markers carry no VR
    h.length = c.u32();
    return h;
  }
  if (explicit_vr) {
    c.need(2, "vr");
    h.vr[0] = static_cast<char>(c.p[c.pos]);
    h.vr[1] = static_cast<char>(c.p[c.pos + 1]);
    c.pos += 2;
    if (vr_has_long_length(h.vr)) {
      c.skip(2, "vr pad");
      h.length = c.u32();
    } else {
      h.length = c.u16();
    }
  } else {
    h.length = c.u32();
  }
  return h;
}

void skip_undefined_sequence(Cursor& c, bool explicit_vr);

void skip_value(Cursor& c, const ElementHeader& h, bool explicit_vr) {
  const bool is_sq = h.vr[0] == 'S' && h.vr[1] == 'Q';
  if (h.length == 0xFFFFFFFFu) {
    skip_undefined_sequence(c, explicit_vr);
  } else if (is_sq) {
    c.skip(h.length, "sequence");
  } else {
    c.skip(h.length, "value");
  }
}

// Walks items until the sequence delimitation item; items of undefined
// length contain nested elements that are skipped recursively.
void skip_undefined_sequence(Cursor& c, bool explicit_vr) {
  while (!c.eof()) {
    ElementHeader item = read_header(c, explicit_vr);
    if (item.group == 0xFFFE && item.element == 0xE0DD) return;  // seq end
    if (item.group == 0xFFFE && item.element == 0xE000) {        // item
      if (item.length != 0xFFFFFFFFu) {
        c.skip(item.length, "item");
      } else {
        while (!c.eof()) {
          ElementHeader inner = read_header(c, explicit_vr);
          if (inner.group == 0xFFFE && inner.element == 0xE00D) break;
          skip_value(c, inner, explicit_vr);
        }
      }
      continue;
    }
    skip_value(c, item, explicit_vr);
  }
  throw IngestionError("unterminated DICOM sequence: " + c.file);
}

double parse_ds(const std::string& s, double fallback) {
  if (s.empty()) return fallback;
  try {
    return std::stod(s);
  } catch (...) {
    return fallback;
  }
}

std::vector<double> parse_ds_list(const std::string& s) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, '\\')) out.push_back(parse_ds(tok, 0.0));
  return out;
}

}  // namespace

DicomSlice read_dicom_slice(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IngestionError("cannot open DICOM: " + path.string());
  std::vector<uint8_t> bytes((std::istreambuf_iterator<char>(is)),
                             std::istreambuf_iterator<char>());

  Cursor c{bytes.data(), bytes.size(), 0, path.string()};
  c.need(132, "preamble");
  if (std::memcmp(bytes.data() + 128, "DICM", 4) != 0)
    throw IngestionError("missing DICM marker: " + path.string());
  c.pos = 132;

  // File meta group is always explicit little endian.
  std::string transfer_syntax = kExplicitLE;
  while (!c.eof()) {
    const size_t mark = c.pos;
    ElementHeader h = read_header(c, true);
    if (h.group != 0x0002) {
      c.pos = mark;
      break;
    }
    if (h.element == 0x0010) {
      transfer_syntax = c.str(h.length);
    } else {
      skip_value(c, h, true);
    }
  }

  bool explicit_vr = true;
  if (transfer_syntax == kImplicitLE) {
    explicit_vr = false;
  } else if (transfer_syntax != kExplicitLE) {
    throw IngestionError("unsupported (compressed?) DICOM transfer syntax '" +
                         transfer_syntax + "' in " + path.string());
  }

  DicomSlice slice;
  uint16_t rows = 0, cols = 0, bits_allocated = 16, pixel_rep = 0;
  double rescale_slope = 1.0, rescale_intercept = 0.0;
  bool monochrome1 = false;
  const uint8_t* pixel_data = nullptr;
  uint32_t pixel_len = 0;

  while (!c.eof()) {
    ElementHeader h = read_header(c, explicit_vr);
    const uint32_t tag = (static_cast<uint32_t>(h.group) << 16) | h.element;
    switch (tag) {
      case 0x00280010: rows = c.u16(); break;
      case 0x00280011: cols = c.u16(); break;
      case 0x00280100: bits_allocated = c.u16(); break;
      case 0x00280103: pixel_rep = c.u16(); break;
      case 0x00280004: monochrome1 = (c.str(h.length) == "MONOCHROME1"); break;
      case 0x00281052: rescale_intercept = parse_ds(c.str(h.length), 0.0); break;
      case 0x00281053: rescale_slope = parse_ds(c.str(h.length), 1.0); break;
      case 0x00280030: {
        const auto v = parse_ds_list(c.str(h.length));
        if (v.size() == 2) {
          slice.spacing_row = v[0];
          slice.spacing_col = v[1];
        }
        break;
      }
      case 0x00180050: slice.slice_thickness = parse_ds(c.str(h.length), 0.0); break;
      case 0x00180088: slice.spacing_between = parse_ds(c.str(h.length), 0.0); break;
      case 0x00200032: {
        const auto v = parse_ds_list(c.str(h.length));
        if (v.size() == 3) {
          slice.position_z = v[2];
          slice.has_position = true;
        }
        break;
      }
      case 0x00200013: {
        const std::string s = c.str(h.length);
        try {
          slice.instance_number = std::stoi(s);
        } catch (...) {
        }
        break;
      }
      case 0x7FE00010:
        if (h.length == 0xFFFFFFFFu)
          throw IngestionError("encapsulated pixel data unsupported: " +
                               path.string());
        c.need(h.length, "pixel data");
        pixel_data = c.p + c.pos;
        pixel_len = h.length;
        c.pos += h.length;
        break;
      default:
        skip_value(c, h, explicit_vr);
        break;
    }
    if (pixel_data != nullptr) break;
  }

  if (rows == 0 || cols == 0)
    throw IngestionError("DICOM missing Rows/Columns: " + path.string());
  if (pixel_data == nullptr)
    throw IngestionError("DICOM missing pixel data: " + path.string());
  if (bits_allocated != 8 && bits_allocated != 16)
    throw IngestionError("unsupported BitsAllocated in " + path.string());
  const size_t expected =
      static_cast<size_t>(rows) * cols * (bits_allocated / 8);
  if (pixel_len < expected)
    throw IngestionError("short pixel data in " + path.string());

  slice.pixels.resize(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (Eigen::Index cc = 0; cc < cols; ++cc) {
      const size_t idx = static_cast<size_t>(r) * cols + static_cast<size_t>(cc);
      double stored = 0.0;
      if (bits_allocated == 8) {
        stored = pixel_rep == 0
                     ? static_cast<double>(pixel_data[idx])
                     : static_cast<double>(static_cast<int8_t>(pixel_data[idx]));
      } else {
        uint16_t raw;
        std::memcpy(&raw, pixel_data + 2 * idx, 2);
        stored = pixel_rep == 0
                     ? static_cast<double>(raw)
                     : static_cast<double>(static_cast<int16_t>(raw));
      }
      slice.pixels(r, cc) = rescale_slope * stored + rescale_intercept;
    }
  }
  if (monochrome1) slice.pixels = -slice.pixels;
  return slice;
}

}  // namespace e2p

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

#include "e2p/archive.hpp"

#include <openssl/evp.h>

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <set>

#include "e2p/common.hpp"

static_assert(std::endian::native == std::endian::little,
              "archive IO assumes a little-endian host");

namespace e2p {

namespace {

constexpr char kMagic[8] = {'E', '2', 'P', 'A', 'R', 'C', 'H', '1'};

void write_bytes(std::ofstream& os, const void* data, size_t len) {
  os.write(static_cast<const char*>(data), static_cast<std::streamsize>(len));
}

}  // namespace

const ArchiveEntry* Archive::find(const std::string& name) const {
  for (const auto& t : tensors)
    if (t.name == name) return &t;
  return nullptr;
}

void save_archive(const std::filesystem::path& path, const Archive& archive) {
  nlohmann::json header;
  header["meta"] = archive.meta;
  header["tensors"] = nlohmann::json::array();
  for (const auto& t : archive.tensors)
    header["tensors"].push_back({{"name", t.name}, {"size", t.data.size()}});
  const std::string js = header.dump();

  std::ofstream os(path, std::ios::binary);
  if (!os) throw IngestionError("cannot open archive for writing: " + path.string());
  write_bytes(os, kMagic, sizeof(kMagic));
  const uint64_t len = js.size();
  write_bytes(os, &len, sizeof(len));
  write_bytes(os, js.data(), js.size());
  for (const auto& t : archive.tensors)
    write_bytes(os, t.data.data(), t.data.size() * sizeof(double));
  os.flush();
  if (!os) throw IngestionError("short write to archive: " + path.string());
}

Archive load_archive(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IngestionError("cannot open archive: " + path.string());
  char magic[8];
  is.read(magic, sizeof(magic));
  if (!is || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
    throw IngestionError("not a tensor archive: " + path.string());
  uint64_t len = 0;
  is.read(reinterpret_cast<char*>(&len), sizeof(len));
  if (!is) throw IngestionError("truncated archive header: " + path.string());
  std::string js(len, '\0');
  is.read(js.data(), static_cast<std::streamsize>(len));
  if (!is) throw IngestionError("truncated archive header: " + path.string());

  nlohmann::json header;
  try {
    header = nlohmann::json::parse(js);
  } catch (const nlohmann::json::exception& e) {
    throw IngestionError("bad archive header in " + path.string() + ": " + e.what());
  }
  Archive archive;
  archive.meta = header.value("meta", nlohmann::json::object());
  for (const auto& item : header.at("tensors")) {
    ArchiveEntry entry;
    entry.name = item.at("name").get<std::string>();
    entry.data.resize(item.at("size").get<size_t>());
    is.read(reinterpret_cast<char*>(entry.data.data()),
            static_cast<std::streamsize>(entry.data.size() * sizeof(double)));
    if (!is) throw IngestionError("truncated archive payload: " + path.string());
    archive.tensors.push_back(std::move(entry));
  }
  return archive;
}

namespace {

std::string digest_hex(EVP_MD_CTX* ctx) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int md_len = 0;
  EVP_DigestFinal_ex(ctx, md, &md_len);
  static const char* hex = "0123456789abcdef";
  std::string out;
  out.reserve(2 * md_len);
  for (unsigned int i = 0; i < md_len; ++i) {
    out.push_back(hex[md[i] >> 4]);
    out.push_back(hex[md[i] & 0xf]);
  }
  return out;
}

}  // namespace

std::string sha256_hex(const void* data, size_t len) {
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr);
  EVP_DigestUpdate(ctx, data, len);
  std::string out = digest_hex(ctx);
  EVP_MD_CTX_free(ctx);
  return out;
}

std::string sha256_file(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IngestionError("cannot open file for hashing: " + path.string());
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr);
  char buf[1 << 16];
  while (is) {
    is.read(buf, sizeof(buf));
    EVP_DigestUpdate(ctx, buf, static_cast<size_t>(is.gcount()));
  }
  std::string out = digest_hex(ctx);
  EVP_MD_CTX_free(ctx);
  return out;
}

std::string checksum_params(const std::vector<nn::ParamRef<double>>& refs) {
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr);
  for (const auto& r : refs)
    EVP_DigestUpdate(ctx, r.value, static_cast<size_t>(r.size) * sizeof(double));
  std::string out = digest_hex(ctx);
  EVP_MD_CTX_free(ctx);
  return out;
}

std::vector<ArchiveEntry> snapshot_params(
    const std::vector<nn::ParamRef<double>>& refs) {
  std::vector<ArchiveEntry> out;
  out.reserve(refs.size());
  for (const auto& r : refs)
    out.push_back({r.name, std::vector<double>(r.value, r.value + r.size)});
  return out;
}

void restore_params(const Archive& archive,
                    const std::vector<nn::ParamRef<double>>& refs) {
  std::set<std::string> consumed;
  for (const auto& r : refs) {
    const ArchiveEntry* entry = archive.find(r.name);
    if (entry == nullptr)
      throw IngestionError("archive is missing tensor '" + r.name + "'");
    if (static_cast<Eigen::Index>(entry->data.size()) != r.size)
      throw IngestionError("archive tensor '" + r.name + "' has size " +
                           std::to_string(entry->data.size()) + ", expected " +
                           std::to_string(r.size));
    std::copy(entry->data.begin(), entry->data.end(), r.value);
    consumed.insert(r.name);
  }
  for (const auto& t : archive.tensors)
    if (consumed.find(t.name) == consumed.end())
      throw IngestionError("archive has unexpected tensor '" + t.name + "'");
}

std::string build_describe() {
#ifdef E2P_GIT_DESCRIBE
  return E2P_GIT_DESCRIBE;
#else
  return "unknown";
#endif
}

}  // namespace e2p

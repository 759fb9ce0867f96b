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
#include <cstdlib>
#include <filesystem>
#include <memory>
#include <string>

#include <doctest.h>

#include "e2p/archive.hpp"
#include "e2p/rng.hpp"
#include "e2p/segmenter.hpp"

namespace fs = std::filesystem;
namespace nn = e2p::nn;

namespace {

fs::path temp_dir(const char* tag) {
  fs::path dir = fs::temp_directory_path() / (std::string("e2p_seg_") + tag);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

e2p::ImageD disk_mask(double cx, double cy, double r) {
  e2p::ImageD m(e2p::kWorkingSize, e2p::kWorkingSize);
  for (Eigen::Index y = 0; y < m.rows(); ++y)
    for (Eigen::Index x = 0; x < m.cols(); ++x) {
      const double dx = static_cast<double>(x) - cx;
      const double dy = static_cast<double>(y) - cy;
      m(y, x) = dx * dx + dy * dy <= r * r ? 1.0 : 0.0;
    }
  return m;
}

double dice_against(const e2p::ImageD& logits, const e2p::ImageD& truth) {
  double inter = 0.0, pred = 0.0, ref = 0.0;
  for (Eigen::Index y = 0; y < truth.rows(); ++y)
    for (Eigen::Index x = 0; x < truth.cols(); ++x) {
      const bool p = logits(y, x) > 0.0;
      const bool t = truth(y, x) > 0.5;
      pred += p ? 1.0 : 0.0;
      ref += t ? 1.0 : 0.0;
      inter += (p && t) ? 1.0 : 0.0;
    }
  return 2.0 * inter / (pred + ref);
}

}  // namespace

TEST_CASE("reference backend reports its contract") {
  e2p::BackendConfig cfg;
  auto backend = e2p::make_backend(cfg);
  CHECK(backend->kind() == e2p::BackendKind::kReference);
  CHECK(backend->variant() == "reference");
  CHECK(backend->input_resolution() == e2p::kWorkingSize);
  CHECK(backend->prompt_resolution() == e2p::kWorkingSize);
  CHECK(backend->output_resolution() == e2p::kWorkingSize);

  auto refs = backend->params();
  REQUIRE(!refs.empty());
  for (const auto& r : refs) CHECK(!r.learnable);
}

TEST_CASE("reference backend is deterministic across instances") {
  e2p::BackendConfig cfg;
  auto a = e2p::make_backend(cfg);
  auto b = e2p::make_backend(cfg);
  CHECK(a->checksum() == b->checksum());

  e2p::Rng rng(404);
  nn::Tensor<double> image(1, 3, e2p::kWorkingSize, e2p::kWorkingSize);
  nn::Tensor<double> prompt(1, 1, e2p::kWorkingSize, e2p::kWorkingSize);
  for (Eigen::Index i = 0; i < image.data.size(); ++i)
    image.data[i] = rng.uniform(0.0, 1.0);
  for (Eigen::Index i = 0; i < prompt.data.size(); ++i)
    prompt.data[i] = rng.uniform(-2.0, 2.0);

  nn::Tensor<double> ya = a->forward(image, prompt, false);
  nn::Tensor<double> yb = b->forward(image, prompt, false);
  REQUIRE(ya.data.size() == yb.data.size());
  CHECK((ya.data - yb.data).abs().maxCoeff() == 0.0);
}

TEST_CASE("reference backend stays frozen through forward and backward") {
  e2p::BackendConfig cfg;
  auto backend = e2p::make_backend(cfg);
  const std::string before = backend->checksum();

  e2p::Rng rng(405);
  nn::Tensor<double> gray(2, 1, e2p::kWorkingSize, e2p::kWorkingSize);
  nn::Tensor<double> prompt(2, 1, e2p::kWorkingSize, e2p::kWorkingSize);
  for (Eigen::Index i = 0; i < gray.data.size(); ++i)
    gray.data[i] = rng.uniform(0.0, 1.0);
  for (Eigen::Index i = 0; i < prompt.data.size(); ++i)
    prompt.data[i] = rng.uniform(-3.0, 3.0);

  e2p::SegmentAdapter adapter(*backend);
  nn::Tensor<double> out = adapter.forward(gray, prompt, true);
  CHECK(out.n == 2);
  CHECK(out.c == 1);
  CHECK(out.h == e2p::kWorkingSize);
  CHECK(out.w == e2p::kWorkingSize);

  nn::Tensor<double> g_out(2, 1, e2p::kWorkingSize, e2p::kWorkingSize);
  for (Eigen::Index i = 0; i < g_out.data.size(); ++i)
    g_out.data[i] = rng.uniform(-1.0, 1.0);
  nn::Tensor<double> g_prompt = adapter.backward(g_out);
  CHECK(g_prompt.same_shape(prompt));
  CHECK(g_prompt.data.isFinite().all());

  CHECK(backend->checksum() == before);
}

TEST_CASE("strong prompts dominate the reference mask") {
  e2p::BackendConfig cfg;
  auto backend = e2p::make_backend(cfg);

  const e2p::ImageD truth = disk_mask(120.0, 120.0, 55.0);
  e2p::ImageD gray_px = 0.25 + 0.5 * truth.array();
  e2p::GrayImage gray = e2p::GrayImage::create(gray_px, e2p::Modality::kCT);
  e2p::ImageD prompt_px = -10.0 + 20.0 * truth.array();
  e2p::LogitMap prompt = e2p::LogitMap::create(prompt_px);

  e2p::MaskLogits out = e2p::segment(gray, prompt, *backend);
  CHECK(dice_against(out.logits, truth) >= 0.8);
}

TEST_CASE("adapter gradient matches finite differences on prompt pixels") {
  e2p::BackendConfig cfg;
  auto backend = e2p::make_backend(cfg);
  e2p::SegmentAdapter adapter(*backend);

  e2p::Rng rng(406);
  nn::Tensor<double> gray(1, 1, e2p::kWorkingSize, e2p::kWorkingSize);
  nn::Tensor<double> prompt(1, 1, e2p::kWorkingSize, e2p::kWorkingSize);
  nn::Tensor<double> weight(1, 1, e2p::kWorkingSize, e2p::kWorkingSize);
  for (Eigen::Index i = 0; i < gray.data.size(); ++i)
    gray.data[i] = rng.uniform(0.0, 1.0);
  for (Eigen::Index i = 0; i < prompt.data.size(); ++i)
    prompt.data[i] = rng.uniform(-2.0, 2.0);
  for (Eigen::Index i = 0; i < weight.data.size(); ++i)
    weight.data[i] = rng.uniform(-1.0, 1.0);

  // L = <w, out>, so dL/dprompt is exactly the adjoint applied to w.
  adapter.forward(gray, prompt, true);
  nn::Tensor<double> g = adapter.backward(weight);

  const double h = 1e-3;
  const Eigen::Index probes[] = {31 * e2p::kWorkingSize + 77,
                                 120 * e2p::kWorkingSize + 120,
                                 203 * e2p::kWorkingSize + 11};
  for (Eigen::Index idx : probes) {
    const double keep = prompt.data[idx];
    prompt.data[idx] = keep + h;
    const double lp = (adapter.forward(gray, prompt, false).data * weight.data).sum();
    prompt.data[idx] = keep - h;
    const double lm = (adapter.forward(gray, prompt, false).data * weight.data).sum();
    prompt.data[idx] = keep;
    const double fd = (lp - lm) / (2.0 * h);
    CHECK(g.data[idx] == doctest::Approx(fd).epsilon(1e-2));
  }
}

TEST_CASE("prepare_prompt is the identity at native prompt resolution") {
  e2p::BackendConfig cfg;
  auto backend = e2p::make_backend(cfg);

  e2p::Rng rng(407);
  e2p::ImageD z(e2p::kWorkingSize, e2p::kWorkingSize);
  for (Eigen::Index i = 0; i < z.size(); ++i)
    z.data()[i] = rng.uniform(-4.0, 4.0);
  e2p::LogitMap logits = e2p::LogitMap::create(z);

  e2p::ImageD prepared = e2p::prepare_prompt(logits, *backend);
  CHECK((prepared - z).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("foundation checkpoint round trips through make_backend") {
  const fs::path dir = temp_dir("foundation");
  const fs::path ckpt = dir / "foundation.e2p";
  e2p::write_foundation_checkpoint(ckpt, 64, 32, 4, 3, 11);

  e2p::BackendConfig cfg;
  cfg.kind = e2p::BackendKind::kFoundation;
  cfg.checkpoint_path = ckpt.string();
  auto backend = e2p::make_backend(cfg);

  CHECK(backend->kind() == e2p::BackendKind::kFoundation);
  CHECK(backend->variant() == "vit_h");
  CHECK(backend->input_resolution() == 64);
  CHECK(backend->prompt_resolution() == 32);
  CHECK(backend->output_resolution() == 16);

  auto refs = backend->params();
  REQUIRE(!refs.empty());
  for (const auto& r : refs) CHECK(!r.learnable);

  auto again = e2p::make_backend(cfg);
  CHECK(backend->checksum() == again->checksum());

  e2p::Rng rng(408);
  nn::Tensor<double> image(2, 3, 64, 64);
  nn::Tensor<double> prompt(2, 1, 32, 32);
  for (Eigen::Index i = 0; i < image.data.size(); ++i)
    image.data[i] = rng.uniform(0.0, 1.0);
  for (Eigen::Index i = 0; i < prompt.data.size(); ++i)
    prompt.data[i] = rng.uniform(-2.0, 2.0);
  nn::Tensor<double> out = backend->forward(image, prompt, true);
  CHECK(out.n == 2);
  CHECK(out.c == 1);
  CHECK(out.h == 16);
  CHECK(out.w == 16);

  nn::Tensor<double> g_out(2, 1, 16, 16);
  g_out.data.setConstant(0.25);
  nn::Tensor<double> g_prompt = backend->backward_prompt(g_out);
  CHECK(g_prompt.n == 2);
  CHECK(g_prompt.c == 1);
  CHECK(g_prompt.h == 32);
  CHECK(g_prompt.w == 32);
  CHECK(g_prompt.data.isFinite().all());
  CHECK(backend->checksum() == again->checksum());

  fs::remove_all(dir);
}

TEST_CASE("foundation gradient matches finite differences through routing") {
  const fs::path dir = temp_dir("foundation_fd");
  const fs::path ckpt = dir / "foundation.e2p";
  e2p::write_foundation_checkpoint(ckpt, 32, 16, 2, 3, 12);

  e2p::BackendConfig cfg;
  cfg.kind = e2p::BackendKind::kFoundation;
  cfg.checkpoint_path = ckpt.string();
  auto backend = e2p::make_backend(cfg);

  e2p::Rng rng(409);
  nn::Tensor<double> image(1, 3, 32, 32);
  nn::Tensor<double> prompt(1, 1, 16, 16);
  nn::Tensor<double> weight(1, 1, 8, 8);
  for (Eigen::Index i = 0; i < image.data.size(); ++i)
    image.data[i] = rng.uniform(0.0, 1.0);
  for (Eigen::Index i = 0; i < prompt.data.size(); ++i)
    prompt.data[i] = rng.uniform(-1.0, 1.0);
  for (Eigen::Index i = 0; i < weight.data.size(); ++i)
    weight.data[i] = rng.uniform(-1.0, 1.0);

  backend->forward(image, prompt, true);
  nn::Tensor<double> g = backend->backward_prompt(weight);

  const double h = 1e-3;
  const Eigen::Index probes[] = {3, 5 * 16 + 9, 15 * 16 + 2};
  for (Eigen::Index idx : probes) {
    const double keep = prompt.data[idx];
    prompt.data[idx] = keep + h;
    const double lp = (backend->forward(image, prompt, false).data * weight.data).sum();
    prompt.data[idx] = keep - h;
    const double lm = (backend->forward(image, prompt, false).data * weight.data).sum();
    prompt.data[idx] = keep;
    const double fd = (lp - lm) / (2.0 * h);
    if (std::abs(fd) > 1e-8 || std::abs(g.data[idx]) > 1e-8)
      CHECK(g.data[idx] == doctest::Approx(fd).epsilon(2e-2));
  }
  fs::remove_all(dir);
}

TEST_CASE("missing foundation checkpoint raises a startup error") {
  e2p::BackendConfig cfg;
  cfg.kind = e2p::BackendKind::kFoundation;
  cfg.checkpoint_path = "/nonexistent/backend.e2p";
  CHECK_THROWS_WITH_AS(e2p::make_backend(cfg),
                       doctest::Contains("/nonexistent/backend.e2p"),
                       e2p::StartupError);
}

TEST_CASE("foundation checkpoint path honors the environment override") {
  const fs::path dir = temp_dir("foundation_env");
  const fs::path ckpt = dir / "override.e2p";
  e2p::write_foundation_checkpoint(ckpt, 32, 16, 2, 1, 13);

  ::setenv("E2P_BACKEND_CHECKPOINT", ckpt.string().c_str(), 1);
  e2p::BackendConfig cfg;
  cfg.kind = e2p::BackendKind::kFoundation;
  cfg.checkpoint_path = "/nonexistent/ignored.e2p";
  std::unique_ptr<e2p::SegmenterBackend> backend;
  try {
    backend = e2p::make_backend(cfg);
  } catch (...) {
    ::unsetenv("E2P_BACKEND_CHECKPOINT");
    throw;
  }
  ::unsetenv("E2P_BACKEND_CHECKPOINT");

  CHECK(backend->kind() == e2p::BackendKind::kFoundation);
  CHECK(backend->input_resolution() == 32);
  fs::remove_all(dir);
}

TEST_CASE("an unrelated archive is rejected as a backend") {
  const fs::path dir = temp_dir("bad_archive");
  const fs::path ckpt = dir / "other.e2p";
  e2p::Archive archive;
  archive.meta = {{"kind", "e2p_checkpoint"}};
  e2p::save_archive(ckpt, archive);

  e2p::BackendConfig cfg;
  cfg.kind = e2p::BackendKind::kFoundation;
  cfg.checkpoint_path = ckpt.string();
  CHECK_THROWS_WITH_AS(e2p::make_backend(cfg),
                       doctest::Contains("is not a foundation backend archive"),
                       e2p::StartupError);
  fs::remove_all(dir);
}

TEST_CASE("backend kind names round trip") {
  CHECK(e2p::to_string(e2p::BackendKind::kReference) == "REFERENCE");
  CHECK(e2p::to_string(e2p::BackendKind::kFoundation) == "FOUNDATION");
  CHECK(e2p::backend_kind_from_string("REFERENCE") == e2p::BackendKind::kReference);
  CHECK(e2p::backend_kind_from_string("FOUNDATION") == e2p::BackendKind::kFoundation);
  CHECK_THROWS_AS(e2p::backend_kind_from_string("SAM"), e2p::ConfigError);
}

TEST_CASE("backend config rejects non-cpu devices") {
  e2p::BackendConfig cfg;
  cfg.device = "cuda";
  CHECK_THROWS_AS(cfg.validate(), e2p::ConfigError);
}

TEST_CASE("adapter rejects mismatched prompt shapes") {
  e2p::BackendConfig cfg;
  auto backend = e2p::make_backend(cfg);
  e2p::SegmentAdapter adapter(*backend);
  nn::Tensor<double> gray = nn::Tensor<double>::zeros(1, 1, e2p::kWorkingSize,
                                                      e2p::kWorkingSize);
  nn::Tensor<double> prompt = nn::Tensor<double>::zeros(1, 1, 120, 120);
  CHECK_THROWS_AS(adapter.forward(gray, prompt, false), e2p::ContractViolation);
}

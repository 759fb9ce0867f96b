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

#include "e2p/segmenter.hpp"

#include <cstdlib>
#include <utility>

#include "e2p/archive.hpp"
#include "e2p/common.hpp"
#include "e2p/nn/layers.hpp"
#include "e2p/rng.hpp"

namespace e2p {

namespace {

constexpr uint64_t kReferenceBackendSeed = 7;
// The reference trunk adds image-conditioned detail on top of an identity
// prompt skip; the small scale keeps strong prompts decisive after threshold.
constexpr double kReferenceTrunkScale = 0.1;

void mark_frozen(std::vector<nn::ParamRef<double>>& refs) {
  for (auto& r : refs) r.learnable = false;
}

}  // namespace

std::string to_string(BackendKind kind) {
  return kind == BackendKind::kReference ? "REFERENCE" : "FOUNDATION";
}

BackendKind backend_kind_from_string(const std::string& s) {
  if (s == "REFERENCE") return BackendKind::kReference;
  if (s == "FOUNDATION") return BackendKind::kFoundation;
  throw ConfigError("unknown backend kind '" + s +
                    "' (expected REFERENCE or FOUNDATION)");
}

void BackendConfig::validate() const {
  if (device != "cpu")
    throw ConfigError("backend.device '" + device + "' unsupported (cpu only)");
}

std::string SegmenterBackend::checksum() { return checksum_params(params()); }

namespace {

/// Fixed-seed 4-layer convolutional encoder-decoder on 4 input channels
/// (3 image + 1 prompt) with an additive prompt skip into the output logits.
class ReferenceBackend final : public SegmenterBackend {
 public:
  ReferenceBackend()
      : c1_(4, 8, 3, 1, 1), c2_(8, 16, 3, 2, 1), c3_(16, 8, 3, 1, 1),
        c4_(8, 1, 3, 1, 1) {
    Rng rng(kReferenceBackendSeed);
    c1_.init(rng);
    c2_.init(rng);
    c3_.init(rng);
    c4_.init(rng);
  }

  BackendKind kind() const override { return BackendKind::kReference; }
  std::string variant() const override { return "reference"; }
  Eigen::Index input_resolution() const override { return kWorkingSize; }
  Eigen::Index prompt_resolution() const override { return kWorkingSize; }
  Eigen::Index output_resolution() const override { return kWorkingSize; }

  nn::Tensor<double> forward(const nn::Tensor<double>& image,
                             const nn::Tensor<double>& prompt,
                             bool cache) override {
    E2P_REQUIRE(image.c == 3 && image.h == kWorkingSize && image.w == kWorkingSize,
                "reference backend: image must be (N,3,240,240)");
    E2P_REQUIRE(prompt.c == 1 && prompt.h == kWorkingSize &&
                    prompt.w == kWorkingSize && prompt.n == image.n,
                "reference backend: prompt must be (N,1,240,240)");
    E2P_REQUIRE(prompt.data.isFinite().all(),
                "reference backend: non-finite prompt");
    nn::Tensor<double> x = nn::concat_channels(image, prompt);
    nn::Tensor<double> a1 = r1_.forward(c1_.forward(x, cache), cache);
    nn::Tensor<double> a2 = r2_.forward(c2_.forward(a1, cache), cache);
    mid_h_ = a2.h;
    mid_w_ = a2.w;
    nn::Tensor<double> u = nn::resize_tensor_bilinear(a2, kWorkingSize, kWorkingSize);
    nn::Tensor<double> a3 = r3_.forward(c3_.forward(u, cache), cache);
    nn::Tensor<double> t = c4_.forward(a3, cache);
    nn::Tensor<double> out(t.n, 1, t.h, t.w);
    out.data = prompt.data + kReferenceTrunkScale * t.data;
    return out;
  }

  nn::Tensor<double> backward_prompt(const nn::Tensor<double>& g) override {
    nn::Tensor<double> gt(g.n, 1, g.h, g.w);
    gt.data = kReferenceTrunkScale * g.data;
    nn::Tensor<double> gu = c3_.backward(r3_.backward(c4_.backward(gt, false)), false);
    nn::Tensor<double> ga2 = nn::resize_tensor_bilinear_adjoint(gu, mid_h_, mid_w_);
    nn::Tensor<double> gx =
        c1_.backward(r1_.backward(c2_.backward(r2_.backward(ga2), false)), false);
    auto [gimg, gprompt] = nn::split_channels(gx, 3);
    gprompt.data += g.data;  // additive skip
    return std::move(gprompt);
  }

  std::vector<nn::ParamRef<double>> params() override {
    std::vector<nn::ParamRef<double>> refs;
    c1_.collect_params("c1", refs);
    c2_.collect_params("c2", refs);
    c3_.collect_params("c3", refs);
    c4_.collect_params("c4", refs);
    mark_frozen(refs);
    return refs;
  }

 private:
  nn::Conv2d<double> c1_, c2_, c3_, c4_;
  nn::Relu<double> r1_, r2_, r3_;
  Eigen::Index mid_h_ = 0, mid_w_ = 0;
};

/// Promptable foundation-style backend restored from a tensor archive. The
/// dense prompt enters the mask pathway; the decoder emits several candidate
/// masks plus quality scores and the adapter keeps the highest-quality one.
class FoundationBackend final : public SegmenterBackend {
 public:
  FoundationBackend(Eigen::Index input_res, Eigen::Index prompt_res,
                    Eigen::Index base_channels, Eigen::Index masks,
                    std::string variant)
      : input_res_(input_res), prompt_res_(prompt_res), c_(base_channels),
        masks_(masks), variant_(std::move(variant)),
        e1_(3, c_, 3, 2, 1), e2_(c_, 2 * c_, 3, 2, 1),
        p1_(1, 2 * c_, 3, 1, 1), p2_(2 * c_, 2 * c_, 3, 1, 1),
        t1_(2 * c_, 2 * c_, 3, 1, 1), mask_head_(2 * c_, masks_, 3, 1, 1) {
    if (input_res_ < 8 || input_res_ % 4 != 0)
      throw StartupError("foundation backend: input_resolution must be a multiple of 4");
    if (prompt_res_ < 4 || masks_ < 1 || c_ < 1)
      throw StartupError("foundation backend: bad architecture metadata");
    quality_w_.setZero(masks_, 2 * c_);
    quality_b_.setZero(masks_);
  }

  void init_random(uint64_t seed) {
    Rng rng(seed);
    e1_.init(rng);
    e2_.init(rng);
    p1_.init(rng);
    p2_.init(rng);
    t1_.init(rng);
    mask_head_.init(rng);
    for (Eigen::Index i = 0; i < quality_w_.size(); ++i)
      quality_w_.data()[i] = rng.uniform(-0.5, 0.5);
    for (Eigen::Index i = 0; i < quality_b_.size(); ++i)
      quality_b_[i] = rng.uniform(-0.1, 0.1);
  }

  BackendKind kind() const override { return BackendKind::kFoundation; }
  std::string variant() const override { return variant_; }
  Eigen::Index input_resolution() const override { return input_res_; }
  Eigen::Index prompt_resolution() const override { return prompt_res_; }
  Eigen::Index output_resolution() const override { return input_res_ / 4; }

  nn::Tensor<double> forward(const nn::Tensor<double>& image,
                             const nn::Tensor<double>& prompt,
                             bool cache) override {
    E2P_REQUIRE(image.c == 3 && image.h == input_res_ && image.w == input_res_,
                "foundation backend: image shape mismatch");
    E2P_REQUIRE(prompt.c == 1 && prompt.h == prompt_res_ &&
                    prompt.w == prompt_res_ && prompt.n == image.n,
                "foundation backend: prompt shape mismatch");
    E2P_REQUIRE(prompt.data.isFinite().all(),
                "foundation backend: non-finite prompt");
    const Eigen::Index g = output_resolution();
    nn::Tensor<double> ib =
        re2_.forward(e2_.forward(re1_.forward(e1_.forward(image, cache), cache), cache), cache);
    nn::Tensor<double> pg = nn::resize_tensor_bilinear(prompt, g, g);
    if (cache) pg_cache_ = pg;
    nn::Tensor<double> pb = p2_.forward(rp_.forward(p1_.forward(pg, cache), cache), cache);
    nn::Tensor<double> fused(ib.n, ib.c, ib.h, ib.w);
    fused.data = ib.data + pb.data;
    nn::Tensor<double> trunk =
        rt_.forward(t1_.forward(rf_.forward(fused, cache), cache), cache);
    nn::Tensor<double> m = mask_head_.forward(trunk, cache);
    for (Eigen::Index in = 0; in < m.n; ++in)
      for (Eigen::Index mc = 0; mc < masks_; ++mc)
        for (Eigen::Index s = 0; s < g * g; ++s)
          m.plane(in, mc)[s] += pg.plane(in, 0)[s];

    // Quality scores from globally pooled trunk features; keep the best mask.
    selected_.assign(static_cast<size_t>(m.n), 0);
    nn::Tensor<double> out(m.n, 1, g, g);
    for (Eigen::Index in = 0; in < m.n; ++in) {
      Eigen::VectorXd gap(2 * c_);
      for (Eigen::Index ic = 0; ic < 2 * c_; ++ic) {
        const double* p = trunk.plane(in, ic);
        double acc = 0.0;
        for (Eigen::Index s = 0; s < g * g; ++s) acc += p[s];
        gap[ic] = acc / static_cast<double>(g * g);
      }
      const Eigen::VectorXd q = quality_w_ * gap + quality_b_;
      Eigen::Index best = 0;
      q.maxCoeff(&best);
      selected_[static_cast<size_t>(in)] = best;
      std::copy(m.plane(in, best), m.plane(in, best) + g * g, out.plane(in, 0));
    }
    return out;
  }

  nn::Tensor<double> backward_prompt(const nn::Tensor<double>& g_out) override {
    E2P_REQUIRE(!selected_.empty() && g_out.n == static_cast<Eigen::Index>(selected_.size()),
                "foundation backend: backward before cached forward");
    const Eigen::Index g = output_resolution();
    // Quality selection is routing, not a differentiable path.
    nn::Tensor<double> gm = nn::Tensor<double>::zeros(g_out.n, masks_, g, g);
    nn::Tensor<double> gpg = nn::Tensor<double>::zeros(g_out.n, 1, g, g);
    for (Eigen::Index in = 0; in < g_out.n; ++in) {
      const Eigen::Index sel = selected_[static_cast<size_t>(in)];
      std::copy(g_out.plane(in, 0), g_out.plane(in, 0) + g * g, gm.plane(in, sel));
      for (Eigen::Index s = 0; s < g * g; ++s)
        gpg.plane(in, 0)[s] += g_out.plane(in, 0)[s];  // prompt skip
    }
    nn::Tensor<double> gtrunk = mask_head_.backward(gm, false);
    nn::Tensor<double> gfused =
        rf_.backward(t1_.backward(rt_.backward(gtrunk), false));
    nn::Tensor<double> gprompt_branch =
        p1_.backward(rp_.backward(p2_.backward(gfused, false)), false);
    gpg.data += gprompt_branch.data;
    return nn::resize_tensor_bilinear_adjoint(gpg, prompt_res_, prompt_res_);
  }

  std::vector<nn::ParamRef<double>> params() override {
    std::vector<nn::ParamRef<double>> refs;
    e1_.collect_params("e1", refs);
    e2_.collect_params("e2", refs);
    p1_.collect_params("p1", refs);
    p2_.collect_params("p2", refs);
    t1_.collect_params("t1", refs);
    mask_head_.collect_params("mask_head", refs);
    refs.push_back({"quality.weight", quality_w_.data(), nullptr,
                    quality_w_.size(), false});
    refs.push_back({"quality.bias", quality_b_.data(), nullptr,
                    quality_b_.size(), false});
    mark_frozen(refs);
    return refs;
  }

  nlohmann::json meta() const {
    return {{"kind", "foundation_backend"},
            {"input_resolution", input_res_},
            {"prompt_resolution", prompt_res_},
            {"base_channels", c_},
            {"masks", masks_},
            {"variant", variant_}};
  }

 private:
  Eigen::Index input_res_, prompt_res_, c_, masks_;
  std::string variant_;
  nn::Conv2d<double> e1_, e2_, p1_, p2_, t1_, mask_head_;
  nn::Relu<double> re1_, re2_, rp_, rf_, rt_;
  Eigen::MatrixXd quality_w_;
  Eigen::VectorXd quality_b_;
  nn::Tensor<double> pg_cache_;
  std::vector<Eigen::Index> selected_;
};

std::filesystem::path resolve_checkpoint_path(const BackendConfig& cfg) {
  if (const char* env = std::getenv("E2P_BACKEND_CHECKPOINT"); env && *env)
    return env;
  return cfg.checkpoint_path;
}

std::unique_ptr<FoundationBackend> load_foundation(const BackendConfig& cfg) {
  const std::filesystem::path path = resolve_checkpoint_path(cfg);
  if (path.empty() || !std::filesystem::exists(path))
    throw StartupError(
        "foundation backend checkpoint not found at '" + path.string() +
        "'; set backend.checkpoint_path or E2P_BACKEND_CHECKPOINT");
  Archive archive = load_archive(path);
  const auto& meta = archive.meta;
  if (meta.value("kind", "") != "foundation_backend")
    throw StartupError("'" + path.string() + "' is not a foundation backend archive");
  auto backend = std::make_unique<FoundationBackend>(
      meta.at("input_resolution").get<Eigen::Index>(),
      meta.at("prompt_resolution").get<Eigen::Index>(),
      meta.at("base_channels").get<Eigen::Index>(),
      meta.at("masks").get<Eigen::Index>(),
      meta.value("variant", cfg.variant));
  restore_params(archive, backend->params());
  return backend;
}

}  // namespace

std::unique_ptr<SegmenterBackend> make_backend(const BackendConfig& cfg) {
  cfg.validate();
  if (cfg.kind == BackendKind::kReference)
    return std::make_unique<ReferenceBackend>();
  return load_foundation(cfg);
}

ImageD prepare_prompt(const LogitMap& logits, const SegmenterBackend& backend) {
  const Eigen::Index p = backend.prompt_resolution();
  return resize_bilinear(logits.logits, p, p);
}

nn::Tensor<double> SegmentAdapter::forward(const nn::Tensor<double>& gray,
                                           const nn::Tensor<double>& prompt_logits,
                                           bool cache) {
  E2P_REQUIRE(gray.c == 1 && gray.h == kWorkingSize && gray.w == kWorkingSize,
              "segment: gray batch must be (N,1,240,240)");
  E2P_REQUIRE(prompt_logits.same_shape(gray), "segment: prompt batch shape mismatch");
  const Eigen::Index r = backend_.input_resolution();
  const Eigen::Index p = backend_.prompt_resolution();
  nn::Tensor<double> gray_r = nn::resize_tensor_bilinear(gray, r, r);
  nn::Tensor<double> image(gray.n, 3, r, r);
  for (Eigen::Index in = 0; in < gray.n; ++in)
    for (Eigen::Index ic = 0; ic < 3; ++ic)
      std::copy(gray_r.plane(in, 0), gray_r.plane(in, 0) + r * r,
                image.plane(in, ic));
  nn::Tensor<double> prompt = nn::resize_tensor_bilinear(prompt_logits, p, p);
  nn::Tensor<double> out_g = backend_.forward(image, prompt, cache);
  cached_n_ = gray.n;
  return nn::resize_tensor_bilinear(out_g, kWorkingSize, kWorkingSize);
}

nn::Tensor<double> SegmentAdapter::backward(const nn::Tensor<double>& g_out) {
  E2P_REQUIRE(g_out.n == cached_n_, "segment: backward batch mismatch");
  const Eigen::Index g = backend_.output_resolution();
  nn::Tensor<double> gg = nn::resize_tensor_bilinear_adjoint(g_out, g, g);
  nn::Tensor<double> gp = backend_.backward_prompt(gg);
  return nn::resize_tensor_bilinear_adjoint(gp, kWorkingSize, kWorkingSize);
}

MaskLogits segment(const GrayImage& image, const LogitMap& prompt,
                   SegmenterBackend& backend) {
  SegmentAdapter adapter(backend);
  nn::Tensor<double> gray(1, 1, kWorkingSize, kWorkingSize);
  nn::plane_from_image(gray, 0, 0, image.pixels);
  nn::Tensor<double> pr(1, 1, kWorkingSize, kWorkingSize);
  nn::plane_from_image(pr, 0, 0, prompt.logits);
  nn::Tensor<double> out = adapter.forward(gray, pr, false);
  return MaskLogits::create(nn::plane_to_image(out, 0, 0));
}

void write_foundation_checkpoint(const std::filesystem::path& path,
                                 Eigen::Index input_resolution,
                                 Eigen::Index prompt_resolution,
                                 Eigen::Index base_channels, Eigen::Index masks,
                                 uint64_t seed) {
  FoundationBackend backend(input_resolution, prompt_resolution, base_channels,
                            masks, "vit_h");
  backend.init_random(seed);
  Archive archive;
  archive.meta = backend.meta();
  archive.meta["seed"] = seed;
  archive.meta["created_by"] = build_describe();
  archive.tensors = snapshot_params(backend.params());
  save_archive(path, archive);
}

}  // namespace e2p

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

#include <string>
#include <utility>
#include <vector>

#include "e2p/common.hpp"
#include "e2p/image.hpp"
#include "e2p/nn/layers.hpp"
#include "e2p/nn/tensor.hpp"
#include "e2p/rng.hpp"

namespace e2p::nn {

struct PromptNetConfig {
  int depth = 4;           // encoder stages
  int base_channels = 64;  // channels after the first stage, doubled per stage

  static PromptNetConfig tiny() { return PromptNetConfig{2, 8}; }

  void validate() const {
    if (depth < 1 || depth > 6)
      throw ConfigError("prompt_net.depth must be in [1, 6]");
    if (base_channels < 1 || base_channels > 1024)
      throw ConfigError("prompt_net.base_channels must be in [1, 1024]");
  }
};

/// Learnable parameter count implied by a config (conv weights and biases,
/// batch-norm scales and shifts; running statistics are state, not params).
inline Eigen::Index param_count(const PromptNetConfig& cfg) {
  auto dc = [](Eigen::Index cin, Eigen::Index cout) {
    const Eigen::Index unit_a = 9 * cin * cout + cout + 2 * cout;
    const Eigen::Index unit_b = 9 * cout * cout + cout + 2 * cout;
    return unit_a + unit_b;
  };
  Eigen::Index total = 0;
  Eigen::Index cin = 1;
  for (int i = 0; i < cfg.depth; ++i) {
    const Eigen::Index ci = static_cast<Eigen::Index>(cfg.base_channels) << i;
    total += dc(cin, ci);
    cin = ci;
  }
  total += dc(cin, 2 * cin);  // bottleneck
  for (int i = cfg.depth - 1; i >= 0; --i) {
    const Eigen::Index ci = static_cast<Eigen::Index>(cfg.base_channels) << i;
    total += 9 * (2 * ci) * ci + ci + 2 * ci;  // upsample conv + bn
    total += dc(2 * ci, ci);
  }
  total += static_cast<Eigen::Index>(cfg.base_channels) + 1;  // 1x1 head
  return total;
}

/// U-Net that maps a 1-channel edge map to a 1-channel logit map at the same
/// resolution. The decoder upsamples bilinearly to the skip's spatial size and
/// then applies a regular 3x3 convolution; no transposed convolutions.
template <typename T>
class PromptNet {
 public:
  PromptNet(const PromptNetConfig& cfg, uint64_t seed) : cfg_(cfg) {
    cfg_.validate();
    Eigen::Index cin = 1;
    for (int i = 0; i < cfg_.depth; ++i) {
      const Eigen::Index ci = channels(i);
      enc_.emplace_back(cin, ci);
      pool_.emplace_back();
      cin = ci;
    }
    bottleneck_ = DoubleConv<T>(cin, 2 * cin);
    up_.resize(static_cast<size_t>(cfg_.depth));
    dec_.resize(static_cast<size_t>(cfg_.depth));
    for (int i = 0; i < cfg_.depth; ++i) {
      const Eigen::Index ci = channels(i);
      up_[static_cast<size_t>(i)] = ConvBnRelu<T>(2 * ci, ci, 3, 1);
      dec_[static_cast<size_t>(i)] = DoubleConv<T>(2 * ci, ci);
    }
    head_ = Conv2d<T>(channels(0), 1, 1, 1, 0);
    up_in_h_.assign(static_cast<size_t>(cfg_.depth), 0);
    up_in_w_.assign(static_cast<size_t>(cfg_.depth), 0);

    Rng rng(seed);
    for (auto& e : enc_) e.init(rng);
    bottleneck_.init(rng);
    for (int i = cfg_.depth - 1; i >= 0; --i) {
      up_[static_cast<size_t>(i)].init(rng);
      dec_[static_cast<size_t>(i)].init(rng);
    }
    head_.init(rng);
    head_.bias().setZero();
  }

  const PromptNetConfig& config() const { return cfg_; }

  Tensor<T> forward(const Tensor<T>& x, bool train) {
    E2P_REQUIRE(x.c == 1, "PromptNet: expects a single input channel");
    std::vector<Tensor<T>> skips(static_cast<size_t>(cfg_.depth));
    Tensor<T> t = x;
    for (int i = 0; i < cfg_.depth; ++i) {
      skips[static_cast<size_t>(i)] = enc_[static_cast<size_t>(i)].forward(t, train);
      t = pool_[static_cast<size_t>(i)].forward(skips[static_cast<size_t>(i)], train);
    }
    t = bottleneck_.forward(t, train);
    for (int i = cfg_.depth - 1; i >= 0; --i) {
      auto& skip = skips[static_cast<size_t>(i)];
      up_in_h_[static_cast<size_t>(i)] = t.h;
      up_in_w_[static_cast<size_t>(i)] = t.w;
      Tensor<T> u = resize_tensor_bilinear(t, skip.h, skip.w);
      u = up_[static_cast<size_t>(i)].forward(u, train);
      t = dec_[static_cast<size_t>(i)].forward(concat_channels(skip, u), train);
    }
    return head_.forward(t, train);
  }

  /// Gradient of the loss w.r.t. the input; parameter grads accumulate.
  Tensor<T> backward(const Tensor<T>& gy) {
    Tensor<T> g = head_.backward(gy);
    std::vector<Tensor<T>> gskip(static_cast<size_t>(cfg_.depth));
    for (int i = 0; i < cfg_.depth; ++i) {
      g = dec_[static_cast<size_t>(i)].backward(g);
      auto [gs, gu] = split_channels(g, channels(i));
      gskip[static_cast<size_t>(i)] = std::move(gs);
      Tensor<T> gr = up_[static_cast<size_t>(i)].backward(gu);
      g = resize_tensor_bilinear_adjoint(gr, up_in_h_[static_cast<size_t>(i)],
                                         up_in_w_[static_cast<size_t>(i)]);
    }
    g = bottleneck_.backward(g);
    for (int i = cfg_.depth - 1; i >= 0; --i) {
      Tensor<T> gp = pool_[static_cast<size_t>(i)].backward(g);
      gp.data += gskip[static_cast<size_t>(i)].data;
      g = enc_[static_cast<size_t>(i)].backward(gp);
    }
    return g;
  }

  /// Eval-mode single-image inference.
  LogitMap infer(const EdgeMap& edge) {
    Tensor<T> x(1, 1, edge.pixels.rows(), edge.pixels.cols());
    plane_from_image(x, 0, 0, Image<T>(edge.pixels.template cast<T>()));
    Tensor<T> y = forward(x, false);
    Image<T> out = plane_to_image(y, 0, 0);
    return LogitMap::create(out.template cast<double>());
  }

  std::vector<ParamRef<T>> params() {
    std::vector<ParamRef<T>> out;
    for (int i = 0; i < cfg_.depth; ++i)
      enc_[static_cast<size_t>(i)].collect_params("enc" + std::to_string(i), out);
    bottleneck_.collect_params("bottleneck", out);
    for (int i = cfg_.depth - 1; i >= 0; --i) {
      up_[static_cast<size_t>(i)].collect_params("up" + std::to_string(i), out);
      dec_[static_cast<size_t>(i)].collect_params("dec" + std::to_string(i), out);
    }
    head_.collect_params("head", out);
    return out;
  }

  Eigen::Index learnable_param_count() {
    Eigen::Index total = 0;
    for (const auto& p : params())
      if (p.learnable) total += p.size;
    return total;
  }

 private:
  Eigen::Index channels(int stage) const {
    return static_cast<Eigen::Index>(cfg_.base_channels) << stage;
  }

  PromptNetConfig cfg_;
  std::vector<DoubleConv<T>> enc_;
  std::vector<MaxPool2d<T>> pool_;
  DoubleConv<T> bottleneck_;
  std::vector<ConvBnRelu<T>> up_;
  std::vector<DoubleConv<T>> dec_;
  Conv2d<T> head_;
  std::vector<Eigen::Index> up_in_h_, up_in_w_;
};

}  // namespace e2p::nn

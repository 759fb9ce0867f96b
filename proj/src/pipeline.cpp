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

#include "e2p/pipeline.hpp"

#include "e2p/common.hpp"

namespace e2p {

Pipeline::Pipeline(const ExperimentConfig& cfg) : cfg_(cfg), edge_(cfg.edm) {
  cfg_.validate();
  prompt_net_ = std::make_unique<nn::PromptNet<double>>(cfg_.prompt_net,
                                                        cfg_.train.seed);
  if (uses_backend(cfg_.train.pipeline)) {
    backend_ = make_backend(cfg_.backend);
    adapter_ = std::make_unique<SegmentAdapter>(*backend_);
  }
}

nn::Tensor<double> Pipeline::input_tensor(
    const std::vector<const GrayImage*>& batch) {
  E2P_REQUIRE(!batch.empty(), "pipeline: empty batch");
  nn::Tensor<double> x(static_cast<Eigen::Index>(batch.size()), 1, kWorkingSize,
                       kWorkingSize);
  for (size_t i = 0; i < batch.size(); ++i) {
    if (uses_edges(cfg_.train.pipeline)) {
      const EdgeMap edge = edge_.run(*batch[i]);
      nn::plane_from_image(x, static_cast<Eigen::Index>(i), 0, edge.pixels);
    } else {
      nn::plane_from_image(x, static_cast<Eigen::Index>(i), 0,
                           batch[i]->pixels);
    }
  }
  return x;
}

nn::Tensor<double> Pipeline::gray_tensor(
    const std::vector<const GrayImage*>& batch) {
  nn::Tensor<double> g(static_cast<Eigen::Index>(batch.size()), 1, kWorkingSize,
                       kWorkingSize);
  for (size_t i = 0; i < batch.size(); ++i)
    nn::plane_from_image(g, static_cast<Eigen::Index>(i), 0, batch[i]->pixels);
  return g;
}

nn::Tensor<double> Pipeline::forward(const std::vector<const GrayImage*>& batch,
                                     bool train) {
  nn::Tensor<double> x = input_tensor(batch);
  last_z_ = prompt_net_->forward(x, train);
  if (!uses_backend(cfg_.train.pipeline)) return last_z_;

  nn::Tensor<double> prompt = last_z_;
  if (cfg_.train.tanh_prompt) {
    prompt.data = last_z_.data.tanh();
    last_squash_ = prompt;
  }
  return adapter_->forward(gray_tensor(batch), prompt, train);
}

void Pipeline::backward(const nn::Tensor<double>& g_out,
                        const nn::Tensor<double>* g_prompt) {
  nn::Tensor<double> gz;
  if (uses_backend(cfg_.train.pipeline)) {
    gz = adapter_->backward(g_out);
    if (cfg_.train.tanh_prompt)
      gz.data *= (1.0 - last_squash_.data.square());
  } else {
    gz = g_out;
  }
  if (g_prompt != nullptr) {
    E2P_REQUIRE(g_prompt->same_shape(gz), "pipeline: aux gradient shape mismatch");
    gz.data += g_prompt->data;
  }
  prompt_net_->backward(gz);
}

MaskLogits Pipeline::infer(const GrayImage& image) {
  std::vector<const GrayImage*> batch{&image};
  nn::Tensor<double> out = forward(batch, false);
  return MaskLogits::create(nn::plane_to_image(out, 0, 0));
}

}  // namespace e2p

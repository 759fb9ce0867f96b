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

#include <memory>
#include <vector>

#include "e2p/config.hpp"
#include "e2p/imaging.hpp"
#include "e2p/nn/prompt_net.hpp"
#include "e2p/segmenter.hpp"

namespace e2p {

/// Preprocess + edge detection with an invocation counter, so wiring tests
/// can prove which pipelines touch the edge stage.
class EdgeModule {
 public:
  explicit EdgeModule(EdgeParams params) : params_(std::move(params)) {}

  EdgeMap run(const GrayImage& image) {
    ++calls_;
    return detect_edges(preprocess(image), params_);
  }

  long long calls() const { return calls_; }
  const EdgeParams& params() const { return params_; }

 private:
  EdgeParams params_;
  long long calls_ = 0;
};

/// One slice-to-mask-logits wiring:
///   EDGE2PROMPT  edges -> prompt net -> frozen segmenter
///   IM_UNET      raw image -> prompt net (its logits are the prediction)
///   EM_UNET      edges -> prompt net (its logits are the prediction)
///   S_UNET       raw image -> prompt net -> frozen segmenter
class Pipeline {
 public:
  explicit Pipeline(const ExperimentConfig& cfg);

  PipelineKind kind() const { return cfg_.train.pipeline; }

  /// Batched training/eval forward: mask logits (N,1,240,240).
  nn::Tensor<double> forward(const std::vector<const GrayImage*>& batch,
                             bool train);

  /// Routes d(loss)/d(output) back to the prompt net's parameter grads.
  /// g_prompt, when given, is an extra gradient on the raw prompt logits
  /// (the auxiliary-loss path).
  void backward(const nn::Tensor<double>& g_out,
                const nn::Tensor<double>* g_prompt = nullptr);

  /// Eval-mode single slice.
  MaskLogits infer(const GrayImage& image);

  /// Raw prompt logits z of the most recent forward (pre-squash).
  const nn::Tensor<double>& last_prompt_logits() const { return last_z_; }

  nn::PromptNet<double>& prompt_net() { return *prompt_net_; }
  SegmenterBackend* backend() { return backend_.get(); }
  EdgeModule& edge_module() { return edge_; }
  const ExperimentConfig& config() const { return cfg_; }

 private:
  nn::Tensor<double> input_tensor(const std::vector<const GrayImage*>& batch);
  nn::Tensor<double> gray_tensor(const std::vector<const GrayImage*>& batch);

  ExperimentConfig cfg_;
  EdgeModule edge_;
  std::unique_ptr<nn::PromptNet<double>> prompt_net_;
  std::unique_ptr<SegmenterBackend> backend_;
  std::unique_ptr<SegmentAdapter> adapter_;
  nn::Tensor<double> last_z_;
  nn::Tensor<double> last_squash_;  // tanh(z) when squashing is enabled
};

}  // namespace e2p

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

#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "e2p/image.hpp"
#include "e2p/nn/tensor.hpp"

namespace e2p {

enum class BackendKind { kReference, kFoundation };

std::string to_string(BackendKind kind);
BackendKind backend_kind_from_string(const std::string& s);

struct BackendConfig {
  BackendKind kind = BackendKind::kReference;
  std::string checkpoint_path;  // FOUNDATION only; E2P_BACKEND_CHECKPOINT overrides
  std::string variant = "vit_h";
  std::string device = "cpu";

  void validate() const;
};

/// Frozen promptable mask predictor. Consumes a 3-channel image at its native
/// input resolution plus a 1-channel dense logit prompt at its native prompt
/// resolution, and emits 1-channel mask logits on its output grid. Gradients
/// propagate to the prompt only; parameters never change after construction.
class SegmenterBackend {
 public:
  virtual ~SegmenterBackend() = default;

  virtual BackendKind kind() const = 0;
  virtual std::string variant() const = 0;
  virtual Eigen::Index input_resolution() const = 0;
  virtual Eigen::Index prompt_resolution() const = 0;
  virtual Eigen::Index output_resolution() const = 0;

  /// image: (N,3,R,R), prompt: (N,1,P,P) -> mask logits (N,1,G,G).
  /// With cache=true the activations needed by backward_prompt are retained.
  virtual nn::Tensor<double> forward(const nn::Tensor<double>& image,
                                     const nn::Tensor<double>& prompt,
                                     bool cache) = 0;

  /// d(loss)/d(prompt) for the most recent cached forward.
  virtual nn::Tensor<double> backward_prompt(const nn::Tensor<double>& g_mask) = 0;

  /// Every parameter buffer, for freezing checksums and serialization.
  virtual std::vector<nn::ParamRef<double>> params() = 0;

  std::string checksum();
};

/// Loads the configured backend. FOUNDATION requires a checkpoint archive; a
/// missing file raises StartupError naming the expected path.
std::unique_ptr<SegmenterBackend> make_backend(const BackendConfig& cfg);

/// Resamples working-resolution logits to the backend's prompt resolution.
/// No value transformation beyond bilinear resampling.
ImageD prepare_prompt(const LogitMap& logits, const SegmenterBackend& backend);

/// Full adapter: replicate gray to 3 channels, resample to the backend input
/// resolution, run the frozen backend on the prepared prompt, resample the
/// output logits back to the 240x240 working grid.
MaskLogits segment(const GrayImage& image, const LogitMap& prompt,
                   SegmenterBackend& backend);

/// Batched train-time adapter. images: (N,1,240,240) gray; prompts:
/// (N,1,240,240) logits; returns mask logits (N,1,240,240).
class SegmentAdapter {
 public:
  explicit SegmentAdapter(SegmenterBackend& backend) : backend_(backend) {}

  nn::Tensor<double> forward(const nn::Tensor<double>& gray,
                             const nn::Tensor<double>& prompt_logits, bool cache);

  /// Gradient w.r.t. the working-resolution prompt logits.
  nn::Tensor<double> backward(const nn::Tensor<double>& g_out);

  SegmenterBackend& backend() { return backend_; }

 private:
  SegmenterBackend& backend_;
  Eigen::Index cached_n_ = 0;
};

/// Writes a randomly initialized foundation-style checkpoint archive. The
/// bundled FOUNDATION adapter defines its own archive schema (documented in
/// the README); this helper exists for tests and demo runs.
void write_foundation_checkpoint(const std::filesystem::path& path,
                                 Eigen::Index input_resolution,
                                 Eigen::Index prompt_resolution,
                                 Eigen::Index base_channels, Eigen::Index masks,
                                 uint64_t seed);

}  // namespace e2p

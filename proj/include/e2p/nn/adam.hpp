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

#include <cmath>
#include <vector>

#include "e2p/common.hpp"
#include "e2p/nn/tensor.hpp"

namespace e2p::nn {

/// Adam over a flat list of learnable parameter buffers.
template <typename T>
class Adam {
 public:
  Adam(std::vector<ParamRef<T>> params, double lr, double beta1 = 0.9,
       double beta2 = 0.999, double eps = 1e-8)
      : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {
    E2P_REQUIRE(lr > 0.0, "Adam: lr must be positive");
    for (auto& p : params) {
      if (!p.learnable) continue;
      E2P_REQUIRE(p.grad != nullptr, "Adam: learnable param without gradient");
      params_.push_back(p);
      m_.emplace_back(std::vector<double>(static_cast<size_t>(p.size), 0.0));
      v_.emplace_back(std::vector<double>(static_cast<size_t>(p.size), 0.0));
    }
  }

  void zero_grad() {
    for (auto& p : params_)
      for (Eigen::Index i = 0; i < p.size; ++i) p.grad[i] = T(0);
  }

  void step() {
    ++t_;
    const double bc1 = 1.0 - std::pow(beta1_, t_);
    const double bc2 = 1.0 - std::pow(beta2_, t_);
    for (size_t k = 0; k < params_.size(); ++k) {
      auto& p = params_[k];
      auto& m = m_[k];
      auto& v = v_[k];
      for (Eigen::Index i = 0; i < p.size; ++i) {
        const double g = static_cast<double>(p.grad[i]);
        m[static_cast<size_t>(i)] = beta1_ * m[static_cast<size_t>(i)] + (1.0 - beta1_) * g;
        v[static_cast<size_t>(i)] = beta2_ * v[static_cast<size_t>(i)] + (1.0 - beta2_) * g * g;
        const double mh = m[static_cast<size_t>(i)] / bc1;
        const double vh = v[static_cast<size_t>(i)] / bc2;
        p.value[i] -= static_cast<T>(lr_ * mh / (std::sqrt(vh) + eps_));
      }
    }
  }

  long long steps_taken() const { return t_; }

 private:
  std::vector<ParamRef<T>> params_;
  std::vector<std::vector<double>> m_, v_;
  double lr_, beta1_, beta2_, eps_;
  long long t_ = 0;
};

}  // namespace e2p::nn

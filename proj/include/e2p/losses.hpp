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

#include <Eigen/Dense>

#include <cmath>

#include "e2p/common.hpp"

namespace e2p {

/// Composite objective weights and focal parameters.
/// Inactive terms are expressed as zero weights; at least one weight must be
/// positive.
struct LossConfig {
  double w_f = 2.0;
  double w_d = 2.0;
  double w_lcd = 3.0;
  double alpha_t = 0.25;  // focal class balance, applied as alpha_t for
                          // positives and (1 - alpha_t) for negatives
  double gamma = 2.0;     // focal focusing exponent
  double dice_eps = 1e-6;
  bool per_image_dice = false;  // one dice term per image instead of one
                                // global term over the whole batch

  void validate() const {
    if (w_f < 0.0 || w_d < 0.0 || w_lcd < 0.0)
      throw ConfigError("LossConfig: weights must be >= 0");
    if (w_f == 0.0 && w_d == 0.0 && w_lcd == 0.0)
      throw ConfigError("LossConfig: all loss weights are zero");
    if (!(alpha_t > 0.0 && alpha_t < 1.0))
      throw ConfigError("LossConfig: alpha_t must lie in (0,1)");
    if (gamma < 0.0) throw ConfigError("LossConfig: gamma must be >= 0");
    if (!(dice_eps > 0.0)) throw ConfigError("LossConfig: dice_eps must be > 0");
  }
};

/// Flattened pixel logits with binary labels.
struct PixelBatch {
  Eigen::ArrayXd logits;
  Eigen::ArrayXd labels;  // each exactly 0 or 1

  static PixelBatch create(Eigen::ArrayXd logits, Eigen::ArrayXd labels) {
    E2P_REQUIRE(logits.size() == labels.size(), "PixelBatch: length mismatch");
    if (logits.size() == 0)
      throw ContractViolation("PixelBatch: empty batch (N >= 1 required)");
    E2P_REQUIRE(((labels == 0.0) || (labels == 1.0)).all(),
                "PixelBatch: labels must be 0 or 1");
    return PixelBatch{std::move(logits), std::move(labels)};
  }

  Eigen::Index size() const { return logits.size(); }
};

/// Per-term values of one composite loss evaluation.
struct LossBreakdown {
  double focal = 0.0;
  double dice = 0.0;
  double log_cosh_dice = 0.0;
  double total = 0.0;
};

namespace detail {

inline Eigen::ArrayXd sigmoid(const Eigen::ArrayXd& z) {
  // Branch on sign for numerical stability at large |z|.
  return (z >= 0.0).select(1.0 / (1.0 + (-z).exp()),
                           z.exp() / (1.0 + z.exp()));
}

inline constexpr double kLogClamp = 1e-12;

}  // namespace detail

/// Mean focal loss: (1/N) sum_v  -alpha_v (1 - p_t)^gamma log(p_t), where
/// p_t is the class-adjusted probability and the log argument is clamped at
/// 1e-12. If grad is non-null it receives d(loss)/d(logits).
inline double focal_loss(const PixelBatch& batch, const LossConfig& cfg,
                         Eigen::ArrayXd* grad = nullptr) {
  cfg.validate();
  const Eigen::Index n = batch.size();
  const Eigen::ArrayXd p = detail::sigmoid(batch.logits);
  const Eigen::ArrayXd sign = 2.0 * batch.labels - 1.0;  // +1 positives, -1 negatives
  const Eigen::ArrayXd p_t = batch.labels * p + (1.0 - batch.labels) * (1.0 - p);
  const Eigen::ArrayXd alpha =
      batch.labels * cfg.alpha_t + (1.0 - batch.labels) * (1.0 - cfg.alpha_t);
  const Eigen::ArrayXd p_tc = p_t.max(detail::kLogClamp);
  const Eigen::ArrayXd one_minus = (1.0 - p_t).max(0.0);
  const Eigen::ArrayXd focus = one_minus.pow(cfg.gamma);
  const Eigen::ArrayXd per_pixel = -alpha * focus * p_tc.log();
  const double loss = per_pixel.mean();

  if (grad != nullptr) {
    // d p_t / d z = sign * p (1 - p). The focusing term contributes
    // gamma (1-p_t)^(gamma-1) log(p_t); at gamma == 0 it vanishes exactly.
    Eigen::ArrayXd dl_dpt =
        -alpha * ((p_t > detail::kLogClamp).cast<double>() * focus / p_tc);
    if (cfg.gamma > 0.0) {
      const Eigen::ArrayXd focus_m1 = one_minus.pow(cfg.gamma - 1.0);
      dl_dpt += alpha * cfg.gamma * focus_m1 * p_tc.log();
    }
    *grad = dl_dpt * sign * p * (1.0 - p) / static_cast<double>(n);
  }
  return loss;
}

/// Soft dice loss 1 - (2 sum(p m) + eps) / (sum(p) + sum(m) + eps) over the
/// batch's flattened pixels (or averaged per image when cfg.per_image_dice
/// is set and image_size divides N). Optional gradient w.r.t. logits.
inline double dice_loss(const PixelBatch& batch, const LossConfig& cfg,
                        Eigen::ArrayXd* grad = nullptr,
                        Eigen::Index image_size = 0) {
  cfg.validate();
  const Eigen::ArrayXd p = detail::sigmoid(batch.logits);
  const Eigen::ArrayXd dp_dz = p * (1.0 - p);
  const Eigen::Index n = batch.size();

  const bool per_image = cfg.per_image_dice && image_size > 0 && n % image_size == 0;
  const Eigen::Index groups = per_image ? n / image_size : 1;
  const Eigen::Index span = per_image ? image_size : n;

  if (grad != nullptr) grad->setZero(n);
  double acc = 0.0;
  for (Eigen::Index g = 0; g < groups; ++g) {
    const auto pg = p.segment(g * span, span);
    const auto mg = batch.labels.segment(g * span, span);
    const double inter = (pg * mg).sum();
    const double denom = pg.sum() + mg.sum() + cfg.dice_eps;
    const double num = 2.0 * inter + cfg.dice_eps;
    acc += 1.0 - num / denom;
    if (grad != nullptr) {
      // d/dp_v [ -num/denom ] = -(2 m_v denom - num) / denom^2
      grad->segment(g * span, span) +=
          (-(2.0 * mg * denom - num) / (denom * denom)) *
          dp_dz.segment(g * span, span) / static_cast<double>(groups);
    }
  }
  return acc / static_cast<double>(groups);
}

/// log(cosh(dice_loss)), the smoothed dice surrogate.
inline double log_cosh_dice_loss(const PixelBatch& batch, const LossConfig& cfg,
                                 Eigen::ArrayXd* grad = nullptr,
                                 Eigen::Index image_size = 0) {
  Eigen::ArrayXd dice_grad;
  const double d = dice_loss(batch, cfg, grad ? &dice_grad : nullptr, image_size);
  if (grad != nullptr) *grad = std::tanh(d) * dice_grad;
  return std::log(std::cosh(d));
}

/// Weighted composite w_F * L_F + w_D * L_D + w_LCD * L_LCD with per-term
/// breakdown. Optional gradient w.r.t. logits.
inline LossBreakdown composite_loss(const PixelBatch& batch,
                                    const LossConfig& cfg,
                                    Eigen::ArrayXd* grad = nullptr,
                                    Eigen::Index image_size = 0) {
  cfg.validate();
  LossBreakdown out;
  Eigen::ArrayXd g_f, g_d, g_lcd;
  out.focal = focal_loss(batch, cfg, grad ? &g_f : nullptr);
  out.dice = dice_loss(batch, cfg, grad ? &g_d : nullptr, image_size);
  // Reuses the dice value; gradient needs the chain through tanh.
  out.log_cosh_dice = std::log(std::cosh(out.dice));
  out.total = cfg.w_f * out.focal + cfg.w_d * out.dice + cfg.w_lcd * out.log_cosh_dice;
  if (grad != nullptr) {
    g_lcd = std::tanh(out.dice) * g_d;
    *grad = cfg.w_f * g_f + cfg.w_d * g_d + cfg.w_lcd * g_lcd;
  }
  return out;
}

}  // namespace e2p

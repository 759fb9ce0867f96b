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

#include <doctest.h>

#include "e2p/losses.hpp"
#include "e2p/rng.hpp"

using namespace e2p;

namespace {

// Straight-line re-derivations, independent of the library code paths.
double sigmoid_ref(double z) { return 1.0 / (1.0 + std::exp(-z)); }

double focal_ref(const Eigen::ArrayXd& z, const Eigen::ArrayXd& y,
                 double alpha, double gamma) {
  double sum = 0.0;
  for (Eigen::Index i = 0; i < z.size(); ++i) {
    const double p = sigmoid_ref(z[i]);
    const double pt = y[i] > 0.5 ? p : 1.0 - p;
    const double at = y[i] > 0.5 ? alpha : 1.0 - alpha;
    sum += -at * std::pow(1.0 - pt, gamma) * std::log(std::max(pt, 1e-12));
  }
  return sum / static_cast<double>(z.size());
}

double dice_ref(const Eigen::ArrayXd& z, const Eigen::ArrayXd& y, double eps) {
  double num = 0.0, den = 0.0;
  for (Eigen::Index i = 0; i < z.size(); ++i) {
    const double p = sigmoid_ref(z[i]);
    num += p * y[i];
    den += p + y[i];
  }
  return 1.0 - (2.0 * num + eps) / (den + eps);
}

double bce_ref(const Eigen::ArrayXd& z, const Eigen::ArrayXd& y) {
  double sum = 0.0;
  for (Eigen::Index i = 0; i < z.size(); ++i) {
    const double p = sigmoid_ref(z[i]);
    sum += -(y[i] * std::log(p) + (1.0 - y[i]) * std::log(1.0 - p));
  }
  return sum / static_cast<double>(z.size());
}

PixelBatch random_batch(Rng& rng, Eigen::Index n, double logit_scale = 4.0) {
  Eigen::ArrayXd z(n), y(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    z[i] = rng.uniform(-logit_scale, logit_scale);
    y[i] = rng.uniform() < 0.5 ? 0.0 : 1.0;
  }
  if ((y == 0.0).all()) y[0] = 1.0;  // keep dice away from the empty corner
  return PixelBatch::create(z, y);
}

double fd_gradient(const PixelBatch& batch, const LossConfig& cfg,
                   Eigen::Index i, double h) {
  PixelBatch plus = batch, minus = batch;
  plus.logits[i] += h;
  minus.logits[i] -= h;
  return (composite_loss(plus, cfg).total - composite_loss(minus, cfg).total) /
         (2.0 * h);
}

}  // namespace

TEST_CASE("focal hand case: two logits at zero") {
  // p = 0.5 everywhere; positive pixel: 0.25 * 0.5^2 * ln 2,
  // negative pixel: 0.75 * 0.5^2 * ln 2; mean = 0.125 * ln 2.
  const auto batch = PixelBatch::create(Eigen::ArrayXd::Zero(2),
                                        (Eigen::ArrayXd(2) << 1, 0).finished());
  LossConfig cfg;
  const double expected = 0.125 * std::log(2.0);
  CHECK(focal_loss(batch, cfg) == doctest::Approx(expected).epsilon(1e-6));
  CHECK(focal_loss(batch, cfg) ==
        doctest::Approx(focal_ref(batch.logits, batch.labels, 0.25, 2.0))
            .epsilon(1e-12));
}

TEST_CASE("focal at gamma 0, alpha 0.5 is half the BCE") {
  Rng rng(7);
  LossConfig cfg;
  cfg.gamma = 0.0;
  cfg.alpha_t = 0.5;
  for (int t = 0; t < 10; ++t) {
    const auto batch = random_batch(rng, 64);
    const double f = focal_loss(batch, cfg);
    CHECK(std::abs(f - 0.5 * bce_ref(batch.logits, batch.labels)) < 1e-9);
  }
}

TEST_CASE("dice hand case: half overlap at saturated probabilities") {
  // p ~ (1,1,0,0), m = (1,0,1,0): soft dice loss 0.5.
  const auto batch = PixelBatch::create(
      (Eigen::ArrayXd(4) << 40, 40, -40, -40).finished(),
      (Eigen::ArrayXd(4) << 1, 0, 1, 0).finished());
  LossConfig cfg;
  CHECK(dice_loss(batch, cfg) == doctest::Approx(0.5).epsilon(1e-6));
}

TEST_CASE("log-cosh-dice equals log(cosh(dice)) on the same batch") {
  Rng rng(9);
  LossConfig cfg;
  for (int t = 0; t < 10; ++t) {
    const auto batch = random_batch(rng, 33);
    const double d = dice_loss(batch, cfg);
    const double lcd = log_cosh_dice_loss(batch, cfg);
    CHECK(std::abs(lcd - std::log(std::cosh(d))) < 1e-12);
  }
  // Hand value: log(cosh(0.5)).
  CHECK(std::log(std::cosh(0.5)) ==
        doctest::Approx(0.12011450695827751).epsilon(1e-12));
}

TEST_CASE("composite is the weighted sum and every term is nonnegative") {
  Rng rng(11);
  LossConfig cfg;
  for (int t = 0; t < 10; ++t) {
    const auto batch = random_batch(rng, 50);
    const LossBreakdown b = composite_loss(batch, cfg);
    CHECK(b.focal >= 0.0);
    CHECK(b.dice >= 0.0);
    CHECK(b.log_cosh_dice >= 0.0);
    CHECK(std::abs(b.total - (cfg.w_f * b.focal + cfg.w_d * b.dice +
                              cfg.w_lcd * b.log_cosh_dice)) < 1e-12);
    CHECK(std::abs(b.focal - focal_ref(batch.logits, batch.labels, cfg.alpha_t,
                                       cfg.gamma)) < 1e-9);
    CHECK(std::abs(b.dice - dice_ref(batch.logits, batch.labels,
                                     cfg.dice_eps)) < 1e-9);
  }
}

TEST_CASE("composite gradient matches central finite differences") {
  Rng rng(13);
  LossConfig cfg;
  for (int t = 0; t < 5; ++t) {
    const auto batch = random_batch(rng, 64);
    Eigen::ArrayXd grad;
    composite_loss(batch, cfg, &grad);
    REQUIRE(grad.size() == 64);
    for (Eigen::Index i = 0; i < 64; i += 7) {
      const double fd = fd_gradient(batch, cfg, i, 1e-5);
      const double scale = std::max({std::abs(fd), std::abs(grad[i]), 1e-8});
      CHECK(std::abs(grad[i] - fd) / scale < 1e-4);
    }
  }
}

TEST_CASE("gamma zero gradient stays exact") {
  Rng rng(17);
  LossConfig cfg;
  cfg.gamma = 0.0;
  const auto batch = random_batch(rng, 32);
  Eigen::ArrayXd grad;
  composite_loss(batch, cfg, &grad);
  for (Eigen::Index i = 0; i < 32; i += 5) {
    const double fd = fd_gradient(batch, cfg, i, 1e-5);
    CHECK(std::abs(grad[i] - fd) < 1e-6);
  }
}

TEST_CASE("per-image dice averages the per-image losses") {
  Rng rng(19);
  LossConfig cfg;
  cfg.per_image_dice = true;
  const Eigen::Index hw = 16;
  const auto a = random_batch(rng, hw), b = random_batch(rng, hw);
  Eigen::ArrayXd z(2 * hw), y(2 * hw);
  z << a.logits, b.logits;
  y << a.labels, b.labels;
  const auto both = PixelBatch::create(z, y);
  const double d = dice_loss(both, cfg, nullptr, hw);
  const double expected = 0.5 * (dice_ref(a.logits, a.labels, cfg.dice_eps) +
                                 dice_ref(b.logits, b.labels, cfg.dice_eps));
  CHECK(d == doctest::Approx(expected).epsilon(1e-9));
}

TEST_CASE("gradient stays finite at saturated logits") {
  const auto batch = PixelBatch::create(
      (Eigen::ArrayXd(4) << 50, -50, 50, -50).finished(),
      (Eigen::ArrayXd(4) << 1, 1, 0, 0).finished());
  LossConfig cfg;
  Eigen::ArrayXd grad;
  const LossBreakdown b = composite_loss(batch, cfg, &grad);
  CHECK(std::isfinite(b.total));
  CHECK(grad.isFinite().all());
}

TEST_CASE("batch and config validation") {
  CHECK_THROWS_AS(PixelBatch::create(Eigen::ArrayXd(), Eigen::ArrayXd()),
                  ContractViolation);
  CHECK_THROWS_AS(PixelBatch::create(Eigen::ArrayXd::Zero(2),
                                     Eigen::ArrayXd::Constant(2, 0.5)),
                  ContractViolation);
  LossConfig bad;
  bad.w_f = bad.w_d = bad.w_lcd = 0.0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  LossConfig neg;
  neg.gamma = -1.0;
  CHECK_THROWS_AS(neg.validate(), ConfigError);
}

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
#include <string>
#include <utility>
#include <vector>

#include "e2p/common.hpp"
#include "e2p/nn/tensor.hpp"
#include "e2p/rng.hpp"

namespace e2p::nn {

/// 2D convolution, im2col + GEMM. Weight layout: (out_ch) x (in_ch*k*k),
/// column index r = (ic*k + dy)*k + dx.
template <typename T>
class Conv2d {
 public:
  using MatX = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>;
  using VecX = Eigen::Matrix<T, Eigen::Dynamic, 1>;

  Conv2d() = default;
  Conv2d(Eigen::Index in_ch, Eigen::Index out_ch, Eigen::Index kernel,
         Eigen::Index stride = 1, Eigen::Index pad = 0)
      : in_ch_(in_ch), out_ch_(out_ch), k_(kernel), stride_(stride), pad_(pad) {
    E2P_REQUIRE(in_ch > 0 && out_ch > 0 && kernel > 0 && stride > 0 && pad >= 0,
                "Conv2d: bad dimensions");
    w_.setZero(out_ch_, in_ch_ * k_ * k_);
    b_.setZero(out_ch_);
    gw_.setZero(out_ch_, in_ch_ * k_ * k_);
    gb_.setZero(out_ch_);
  }

  /// Kaiming-uniform fan-in init; bias stays zero.
  void init(Rng& rng) {
    const double bound = std::sqrt(6.0 / static_cast<double>(in_ch_ * k_ * k_));
    for (Eigen::Index i = 0; i < w_.size(); ++i)
      w_.data()[i] = static_cast<T>(rng.uniform(-bound, bound));
    b_.setZero();
  }

  Eigen::Index out_dim(Eigen::Index in) const {
    return (in + 2 * pad_ - k_) / stride_ + 1;
  }

  Tensor<T> forward(const Tensor<T>& x, bool cache) {
    E2P_REQUIRE(x.c == in_ch_, "Conv2d: channel mismatch");
    const Eigen::Index oh = out_dim(x.h), ow = out_dim(x.w);
    E2P_REQUIRE(oh > 0 && ow > 0, "Conv2d: input smaller than kernel");
    if (cache) x_ = x;
    Tensor<T> y(x.n, out_ch_, oh, ow);
    MatX col(in_ch_ * k_ * k_, oh * ow);
    MatX out(out_ch_, oh * ow);
    for (Eigen::Index in = 0; in < x.n; ++in) {
      im2col(x, in, col);
      out.noalias() = w_ * col;
      out.colwise() += b_;
      for (Eigen::Index oc = 0; oc < out_ch_; ++oc) {
        T* p = y.plane(in, oc);
        for (Eigen::Index s = 0; s < oh * ow; ++s) p[s] = out(oc, s);
      }
    }
    return y;
  }

  /// Returns dL/dx; accumulates dL/dW, dL/db unless param_grads is false.
  Tensor<T> backward(const Tensor<T>& gy, bool param_grads = true) {
    E2P_REQUIRE(x_.n == gy.n && gy.c == out_ch_, "Conv2d: backward before forward");
    const Eigen::Index oh = gy.h, ow = gy.w;
    Tensor<T> gx = Tensor<T>::zeros(x_.n, in_ch_, x_.h, x_.w);
    MatX col(in_ch_ * k_ * k_, oh * ow);
    MatX gout(out_ch_, oh * ow);
    MatX gcol(in_ch_ * k_ * k_, oh * ow);
    for (Eigen::Index in = 0; in < x_.n; ++in) {
      for (Eigen::Index oc = 0; oc < out_ch_; ++oc) {
        const T* p = gy.plane(in, oc);
        for (Eigen::Index s = 0; s < oh * ow; ++s) gout(oc, s) = p[s];
      }
      if (param_grads) {
        im2col(x_, in, col);
        gw_.noalias() += gout * col.transpose();
        gb_ += gout.rowwise().sum();
      }
      gcol.noalias() = w_.transpose() * gout;
      col2im(gcol, in, gx);
    }
    return gx;
  }

  void collect_params(const std::string& prefix, std::vector<ParamRef<T>>& out) {
    out.push_back({prefix + ".weight", w_.data(), gw_.data(), w_.size(), true});
    out.push_back({prefix + ".bias", b_.data(), gb_.data(), b_.size(), true});
  }

  Eigen::Index param_count() const { return w_.size() + b_.size(); }

  MatX& weight() { return w_; }
  VecX& bias() { return b_; }

 private:
  void im2col(const Tensor<T>& x, Eigen::Index in, MatX& col) const {
    const Eigen::Index oh = out_dim(x.h), ow = out_dim(x.w);
    for (Eigen::Index ic = 0; ic < in_ch_; ++ic) {
      const T* plane = x.plane(in, ic);
      for (Eigen::Index dy = 0; dy < k_; ++dy) {
        for (Eigen::Index dx = 0; dx < k_; ++dx) {
          const Eigen::Index r = (ic * k_ + dy) * k_ + dx;
          for (Eigen::Index oy = 0; oy < oh; ++oy) {
            const Eigen::Index sy = oy * stride_ - pad_ + dy;
            for (Eigen::Index ox = 0; ox < ow; ++ox) {
              const Eigen::Index sx = ox * stride_ - pad_ + dx;
              const bool inside = sy >= 0 && sy < x.h && sx >= 0 && sx < x.w;
              col(r, oy * ow + ox) = inside ? plane[sy * x.w + sx] : T(0);
            }
          }
        }
      }
    }
  }

  void col2im(const MatX& gcol, Eigen::Index in, Tensor<T>& gx) const {
    const Eigen::Index oh = out_dim(gx.h), ow = out_dim(gx.w);
    for (Eigen::Index ic = 0; ic < in_ch_; ++ic) {
      T* plane = gx.plane(in, ic);
      for (Eigen::Index dy = 0; dy < k_; ++dy) {
        for (Eigen::Index dx = 0; dx < k_; ++dx) {
          const Eigen::Index r = (ic * k_ + dy) * k_ + dx;
          for (Eigen::Index oy = 0; oy < oh; ++oy) {
            const Eigen::Index sy = oy * stride_ - pad_ + dy;
            if (sy < 0 || sy >= gx.h) continue;
            for (Eigen::Index ox = 0; ox < ow; ++ox) {
              const Eigen::Index sx = ox * stride_ - pad_ + dx;
              if (sx < 0 || sx >= gx.w) continue;
              plane[sy * gx.w + sx] += gcol(r, oy * ow + ox);
            }
          }
        }
      }
    }
  }

  Eigen::Index in_ch_ = 0, out_ch_ = 0, k_ = 0, stride_ = 1, pad_ = 0;
  MatX w_;
  VecX b_;
  MatX gw_;
  VecX gb_;
  Tensor<T> x_;
};

/// Per-channel batch normalization with running statistics.
/// Train mode normalizes with biased batch variance; eval uses running stats.
template <typename T>
class BatchNorm2d {
 public:
  using VecX = Eigen::Array<T, Eigen::Dynamic, 1>;

  BatchNorm2d() = default;
  explicit BatchNorm2d(Eigen::Index channels, double momentum = 0.1,
                       double eps = 1e-5)
      : c_(channels), momentum_(momentum), eps_(eps) {
    gamma_ = VecX::Ones(c_);
    beta_ = VecX::Zero(c_);
    ggamma_ = VecX::Zero(c_);
    gbeta_ = VecX::Zero(c_);
    run_mean_ = VecX::Zero(c_);
    run_var_ = VecX::Ones(c_);
  }

  Tensor<T> forward(const Tensor<T>& x, bool train) {
    E2P_REQUIRE(x.c == c_, "BatchNorm2d: channel mismatch");
    Tensor<T> y(x.n, x.c, x.h, x.w);
    const Eigen::Index m = x.n * x.h * x.w;
    if (train) {
      xhat_.resize(x.n, x.c, x.h, x.w);
      invstd_.resize(c_);
      mean_.resize(c_);
      for (Eigen::Index ic = 0; ic < c_; ++ic) {
        double sum = 0.0, sq = 0.0;
        for (Eigen::Index in = 0; in < x.n; ++in) {
          const T* p = x.plane(in, ic);
          for (Eigen::Index s = 0; s < x.h * x.w; ++s) {
            sum += p[s];
            sq += static_cast<double>(p[s]) * p[s];
          }
        }
        const double mean = sum / static_cast<double>(m);
        const double var = sq / static_cast<double>(m) - mean * mean;
        const double inv = 1.0 / std::sqrt(var + eps_);
        mean_[ic] = static_cast<T>(mean);
        invstd_[ic] = static_cast<T>(inv);
        run_mean_[ic] = static_cast<T>((1.0 - momentum_) * run_mean_[ic] +
                                       momentum_ * mean);
        run_var_[ic] = static_cast<T>((1.0 - momentum_) * run_var_[ic] +
                                      momentum_ * var);
        for (Eigen::Index in = 0; in < x.n; ++in) {
          const T* p = x.plane(in, ic);
          T* ph = xhat_.plane(in, ic);
          T* py = y.plane(in, ic);
          for (Eigen::Index s = 0; s < x.h * x.w; ++s) {
            ph[s] = static_cast<T>((p[s] - mean) * inv);
            py[s] = gamma_[ic] * ph[s] + beta_[ic];
          }
        }
      }
    } else {
      for (Eigen::Index ic = 0; ic < c_; ++ic) {
        const double inv = 1.0 / std::sqrt(static_cast<double>(run_var_[ic]) + eps_);
        for (Eigen::Index in = 0; in < x.n; ++in) {
          const T* p = x.plane(in, ic);
          T* py = y.plane(in, ic);
          for (Eigen::Index s = 0; s < x.h * x.w; ++s)
            py[s] = static_cast<T>(gamma_[ic] * (p[s] - run_mean_[ic]) * inv +
                                   beta_[ic]);
        }
      }
    }
    return y;
  }

  Tensor<T> backward(const Tensor<T>& gy) {
    E2P_REQUIRE(xhat_.c == c_ && xhat_.same_shape(gy),
                "BatchNorm2d: backward before train-mode forward");
    const Eigen::Index m = gy.n * gy.h * gy.w;
    Tensor<T> gx(gy.n, gy.c, gy.h, gy.w);
    for (Eigen::Index ic = 0; ic < c_; ++ic) {
      double sum_g = 0.0, sum_gx = 0.0;
      for (Eigen::Index in = 0; in < gy.n; ++in) {
        const T* pg = gy.plane(in, ic);
        const T* ph = xhat_.plane(in, ic);
        for (Eigen::Index s = 0; s < gy.h * gy.w; ++s) {
          sum_g += pg[s];
          sum_gx += static_cast<double>(pg[s]) * ph[s];
        }
      }
      ggamma_[ic] += static_cast<T>(sum_gx);
      gbeta_[ic] += static_cast<T>(sum_g);
      const double gm = sum_g / static_cast<double>(m);
      const double gxm = sum_gx / static_cast<double>(m);
      const double scale = static_cast<double>(gamma_[ic]) * invstd_[ic];
      for (Eigen::Index in = 0; in < gy.n; ++in) {
        const T* pg = gy.plane(in, ic);
        const T* ph = xhat_.plane(in, ic);
        T* px = gx.plane(in, ic);
        for (Eigen::Index s = 0; s < gy.h * gy.w; ++s)
          px[s] = static_cast<T>(scale * (pg[s] - gm - ph[s] * gxm));
      }
    }
    return gx;
  }

  void collect_params(const std::string& prefix, std::vector<ParamRef<T>>& out) {
    out.push_back({prefix + ".gamma", gamma_.data(), ggamma_.data(), c_, true});
    out.push_back({prefix + ".beta", beta_.data(), gbeta_.data(), c_, true});
    out.push_back({prefix + ".running_mean", run_mean_.data(), nullptr, c_, false});
    out.push_back({prefix + ".running_var", run_var_.data(), nullptr, c_, false});
  }

  Eigen::Index param_count() const { return 2 * c_; }

 private:
  Eigen::Index c_ = 0;
  double momentum_ = 0.1, eps_ = 1e-5;
  VecX gamma_, beta_, ggamma_, gbeta_, run_mean_, run_var_;
  VecX mean_, invstd_;
  Tensor<T> xhat_;
};

template <typename T>
class Relu {
 public:
  Tensor<T> forward(const Tensor<T>& x, bool cache) {
    Tensor<T> y(x.n, x.c, x.h, x.w);
    y.data = x.data.max(T(0));
    if (cache) mask_ = (x.data > T(0)).template cast<T>();
    return y;
  }
  Tensor<T> backward(const Tensor<T>& gy) {
    E2P_REQUIRE(mask_.size() == gy.size(), "Relu: backward before forward");
    Tensor<T> gx(gy.n, gy.c, gy.h, gy.w);
    gx.data = gy.data * mask_;
    return gx;
  }

 private:
  Eigen::Array<T, Eigen::Dynamic, 1> mask_;
};

/// 2x2 stride-2 max pooling; odd trailing rows/cols are dropped.
template <typename T>
class MaxPool2d {
 public:
  Tensor<T> forward(const Tensor<T>& x, bool cache) {
    const Eigen::Index oh = x.h / 2, ow = x.w / 2;
    E2P_REQUIRE(oh > 0 && ow > 0, "MaxPool2d: input too small");
    Tensor<T> y(x.n, x.c, oh, ow);
    if (cache) {
      argmax_.assign(static_cast<size_t>(y.size()), 0);
      in_h_ = x.h;
      in_w_ = x.w;
      in_n_ = x.n;
      in_c_ = x.c;
    }
    Eigen::Index flat = 0;
    for (Eigen::Index in = 0; in < x.n; ++in) {
      for (Eigen::Index ic = 0; ic < x.c; ++ic) {
        const T* p = x.plane(in, ic);
        T* py = y.plane(in, ic);
        for (Eigen::Index oy = 0; oy < oh; ++oy) {
          for (Eigen::Index ox = 0; ox < ow; ++ox) {
            Eigen::Index best = (2 * oy) * x.w + 2 * ox;
            T bv = p[best];
            const Eigen::Index cand[3] = {(2 * oy) * x.w + 2 * ox + 1,
                                          (2 * oy + 1) * x.w + 2 * ox,
                                          (2 * oy + 1) * x.w + 2 * ox + 1};
            for (Eigen::Index idx : cand) {
              if (p[idx] > bv) {
                bv = p[idx];
                best = idx;
              }
            }
            py[oy * ow + ox] = bv;
            if (cache) argmax_[static_cast<size_t>(flat)] = best;
            ++flat;
          }
        }
      }
    }
    return y;
  }

  Tensor<T> backward(const Tensor<T>& gy) {
    E2P_REQUIRE(!argmax_.empty() && gy.n == in_n_ && gy.c == in_c_,
                "MaxPool2d: backward before forward");
    Tensor<T> gx = Tensor<T>::zeros(in_n_, in_c_, in_h_, in_w_);
    Eigen::Index flat = 0;
    for (Eigen::Index in = 0; in < gy.n; ++in) {
      for (Eigen::Index ic = 0; ic < gy.c; ++ic) {
        const T* pg = gy.plane(in, ic);
        T* px = gx.plane(in, ic);
        for (Eigen::Index s = 0; s < gy.h * gy.w; ++s) {
          px[argmax_[static_cast<size_t>(flat)]] += pg[s];
          ++flat;
        }
      }
    }
    return gx;
  }

 private:
  std::vector<Eigen::Index> argmax_;
  Eigen::Index in_h_ = 0, in_w_ = 0, in_n_ = 0, in_c_ = 0;
};

/// Conv + BatchNorm + ReLU, the repeated unit of the prompt network.
template <typename T>
struct ConvBnRelu {
  Conv2d<T> conv;
  BatchNorm2d<T> bn;
  Relu<T> relu;

  ConvBnRelu() = default;
  ConvBnRelu(Eigen::Index in_ch, Eigen::Index out_ch, Eigen::Index kernel,
             Eigen::Index pad)
      : conv(in_ch, out_ch, kernel, 1, pad), bn(out_ch) {}

  void init(Rng& rng) { conv.init(rng); }

  Tensor<T> forward(const Tensor<T>& x, bool train) {
    return relu.forward(bn.forward(conv.forward(x, train), train), train);
  }
  Tensor<T> backward(const Tensor<T>& gy) {
    return conv.backward(bn.backward(relu.backward(gy)));
  }
  void collect_params(const std::string& prefix, std::vector<ParamRef<T>>& out) {
    conv.collect_params(prefix + ".conv", out);
    bn.collect_params(prefix + ".bn", out);
  }
  Eigen::Index param_count() const {
    return conv.param_count() + bn.param_count();
  }
};

/// Two stacked ConvBnRelu units (3x3, padding 1).
template <typename T>
struct DoubleConv {
  ConvBnRelu<T> a, b;

  DoubleConv() = default;
  DoubleConv(Eigen::Index in_ch, Eigen::Index out_ch)
      : a(in_ch, out_ch, 3, 1), b(out_ch, out_ch, 3, 1) {}

  void init(Rng& rng) {
    a.init(rng);
    b.init(rng);
  }
  Tensor<T> forward(const Tensor<T>& x, bool train) {
    return b.forward(a.forward(x, train), train);
  }
  Tensor<T> backward(const Tensor<T>& gy) { return a.backward(b.backward(gy)); }
  void collect_params(const std::string& prefix, std::vector<ParamRef<T>>& out) {
    a.collect_params(prefix + ".0", out);
    b.collect_params(prefix + ".1", out);
  }
  Eigen::Index param_count() const { return a.param_count() + b.param_count(); }
};

}  // namespace e2p::nn

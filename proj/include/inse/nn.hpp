// Copyright 2026 The InSE-Net Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
//
// Minimal CNN engine with explicit forward/backward passes. Templated on
// the scalar type: float for production models, double for the
// finite-difference gradient checks. All math is single threaded and
// iteration order is fixed, so results are reproducible run to run.

#ifndef INSE_NN_HPP_
#define INSE_NN_HPP_

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <array>
#include <memory>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "inse/errors.hpp"

namespace inse::nn {

// NCHW feature map.
template <typename T>
struct Tensor {
  int n = 0, c = 0, h = 0, w = 0;
  std::vector<T> v;

  Tensor() = default;
  Tensor(int n_, int c_, int h_, int w_)
      : n(n_), c(c_), h(h_), w(w_),
        v(static_cast<std::size_t>(n_) * c_ * h_ * w_, T(0)) {}

  std::size_t size() const { return v.size(); }
  std::size_t plane() const { return static_cast<std::size_t>(h) * w; }

  T& at(int in, int ic, int ih, int iw) {
    return v[((static_cast<std::size_t>(in) * c + ic) * h + ih) * w + iw];
  }
  T at(int in, int ic, int ih, int iw) const {
    return v[((static_cast<std::size_t>(in) * c + ic) * h + ih) * w + iw];
  }
  bool same_shape(const Tensor& o) const {
    return n == o.n && c == o.c && h == o.h && w == o.w;
  }
  std::string shape_str() const {
    return std::to_string(n) + "x" + std::to_string(c) + "x" + std::to_string(h) +
           "x" + std::to_string(w);
  }
};

template <typename T>
struct ParamRef {
  std::string name;
  std::vector<T>* value = nullptr;
  std::vector<T>* grad = nullptr;
};

template <typename T>
struct BufferRef {
  std::string name;
  std::vector<T>* value = nullptr;
};

struct Context {
  bool train = false;
  std::mt19937_64* rng = nullptr;  // consumed by dropout in train mode
};

template <typename T>
using MatrixX = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>;
template <typename T>
using MapMat = Eigen::Map<MatrixX<T>>;
template <typename T>
using MapRowMat =
    Eigen::Map<Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;

template <typename T>
class Layer {
 public:
  virtual ~Layer() = default;
  virtual Tensor<T> forward(const Tensor<T>& x, Context& ctx) = 0;
  virtual Tensor<T> backward(const Tensor<T>& grad) = 0;
  virtual void init(std::mt19937_64&) {}
  virtual void collect(const std::string& prefix, std::vector<ParamRef<T>>& params,
                       std::vector<BufferRef<T>>& buffers) {
    (void)prefix;
    (void)params;
    (void)buffers;
  }
};

template <typename T>
void fan_in_uniform(std::vector<T>& values, int fan_in, std::mt19937_64& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
  std::uniform_real_distribution<double> dist(-bound, bound);
  for (T& v : values) v = static_cast<T>(dist(rng));
}

// 2D convolution, per-sample im2col + GEMM.
template <typename T>
class Conv2d : public Layer<T> {
 public:
  Conv2d(int in_c, int out_c, int kh, int kw, int sh = 1, int sw = 1, int ph = 0,
         int pw = 0)
      : in_c_(in_c), out_c_(out_c), kh_(kh), kw_(kw), sh_(sh), sw_(sw), ph_(ph),
        pw_(pw),
        w_(static_cast<std::size_t>(out_c) * in_c * kh * kw, T(0)),
        wg_(w_.size(), T(0)), b_(out_c, T(0)), bg_(out_c, T(0)) {}

  void init(std::mt19937_64& rng) override {
    const int fan_in = in_c_ * kh_ * kw_;
    fan_in_uniform(w_, fan_in, rng);
    fan_in_uniform(b_, fan_in, rng);
  }

  int out_height(int h) const { return (h + 2 * ph_ - kh_) / sh_ + 1; }
  int out_width(int w) const { return (w + 2 * pw_ - kw_) / sw_ + 1; }

  Tensor<T> forward(const Tensor<T>& x, Context&) override {
    if (x.c != in_c_)
      throw ShapeError("conv: expected " + std::to_string(in_c_) + " channels, got " +
                       std::to_string(x.c));
    if (out_height(x.h) < 1 || out_width(x.w) < 1)
      throw ShapeError("conv: input " + x.shape_str() + " too small for kernel");
    x_ = x;
    const int oh = out_height(x.h), ow = out_width(x.w);
    const std::size_t k = static_cast<std::size_t>(in_c_) * kh_ * kw_;
    const std::size_t m = static_cast<std::size_t>(oh) * ow;

    Tensor<T> y(x.n, out_c_, oh, ow);
    cols_.resize(k * m);
    MapRowMat<T> wm(w_.data(), out_c_, static_cast<Eigen::Index>(k));
    MatrixX<T> out_t(m, out_c_);
    for (int in = 0; in < x.n; ++in) {
      im2col(x, in, oh, ow);
      MapMat<T> cm(cols_.data(), static_cast<Eigen::Index>(k),
                   static_cast<Eigen::Index>(m));
      out_t.noalias() = cm.transpose() * wm.transpose();
      for (int oc = 0; oc < out_c_; ++oc) {
        T* dst = &y.v[(static_cast<std::size_t>(in) * out_c_ + oc) * m];
        const T bias = b_[oc];
        const T* src = out_t.col(oc).data();
        for (std::size_t i = 0; i < m; ++i) dst[i] = src[i] + bias;
      }
    }
    return y;
  }

  Tensor<T> backward(const Tensor<T>& g) override {
    const int oh = out_height(x_.h), ow = out_width(x_.w);
    const std::size_t k = static_cast<std::size_t>(in_c_) * kh_ * kw_;
    const std::size_t m = static_cast<std::size_t>(oh) * ow;

    Tensor<T> dx(x_.n, x_.c, x_.h, x_.w);
    cols_.resize(k * m);
    dcols_.resize(k * m);
    MapRowMat<T> wm(w_.data(), out_c_, static_cast<Eigen::Index>(k));
    MapRowMat<T> wgm(wg_.data(), out_c_, static_cast<Eigen::Index>(k));
    MatrixX<T> gmat(m, out_c_);

    for (int in = 0; in < x_.n; ++in) {
      for (int oc = 0; oc < out_c_; ++oc) {
        const T* src = &g.v[(static_cast<std::size_t>(in) * out_c_ + oc) * m];
        T* dst = gmat.col(oc).data();
        T bsum = T(0);
        for (std::size_t i = 0; i < m; ++i) {
          dst[i] = src[i];
          bsum += src[i];
        }
        bg_[oc] += bsum;
      }
      im2col(x_, in, oh, ow);
      MapMat<T> cm(cols_.data(), static_cast<Eigen::Index>(k),
                   static_cast<Eigen::Index>(m));
      MapMat<T> dcm(dcols_.data(), static_cast<Eigen::Index>(k),
                    static_cast<Eigen::Index>(m));
      wgm.noalias() += gmat.transpose() * cm.transpose();
      dcm.noalias() = wm.transpose() * gmat.transpose();
      col2im(dx, in, oh, ow);
    }
    return dx;
  }

  void collect(const std::string& prefix, std::vector<ParamRef<T>>& params,
               std::vector<BufferRef<T>>& buffers) override {
    (void)buffers;
    params.push_back({prefix + ".weight", &w_, &wg_});
    params.push_back({prefix + ".bias", &b_, &bg_});
  }

 private:
  void im2col(const Tensor<T>& x, int in, int oh, int ow) {
    const std::size_t k = static_cast<std::size_t>(in_c_) * kh_ * kw_;
    T* col = cols_.data();
    for (int oy = 0; oy < oh; ++oy) {
      for (int ox = 0; ox < ow; ++ox) {
        T* dst = col + (static_cast<std::size_t>(oy) * ow + ox) * k;
        std::size_t r = 0;
        for (int ic = 0; ic < in_c_; ++ic) {
          const T* plane =
              &x.v[(static_cast<std::size_t>(in) * in_c_ + ic) * x.plane()];
          for (int ky = 0; ky < kh_; ++ky) {
            const int iy = oy * sh_ - ph_ + ky;
            for (int kx = 0; kx < kw_; ++kx, ++r) {
              const int ix = ox * sw_ - pw_ + kx;
              dst[r] = (iy >= 0 && iy < x.h && ix >= 0 && ix < x.w)
                           ? plane[static_cast<std::size_t>(iy) * x.w + ix]
                           : T(0);
            }
          }
        }
      }
    }
  }

  void col2im(Tensor<T>& dx, int in, int oh, int ow) {
    const std::size_t k = static_cast<std::size_t>(in_c_) * kh_ * kw_;
    const T* col = dcols_.data();
    for (int oy = 0; oy < oh; ++oy) {
      for (int ox = 0; ox < ow; ++ox) {
        const T* src = col + (static_cast<std::size_t>(oy) * ow + ox) * k;
        std::size_t r = 0;
        for (int ic = 0; ic < in_c_; ++ic) {
          T* plane = &dx.v[(static_cast<std::size_t>(in) * in_c_ + ic) * dx.plane()];
          for (int ky = 0; ky < kh_; ++ky) {
            const int iy = oy * sh_ - ph_ + ky;
            for (int kx = 0; kx < kw_; ++kx, ++r) {
              const int ix = ox * sw_ - pw_ + kx;
              if (iy >= 0 && iy < dx.h && ix >= 0 && ix < dx.w)
                plane[static_cast<std::size_t>(iy) * dx.w + ix] += src[r];
            }
          }
        }
      }
    }
  }

  int in_c_, out_c_, kh_, kw_, sh_, sw_, ph_, pw_;
  std::vector<T> w_, wg_, b_, bg_;
  std::vector<T> cols_, dcols_;
  Tensor<T> x_;
};

template <typename T>
class BatchNorm2d : public Layer<T> {
 public:
  explicit BatchNorm2d(int channels, double momentum = 0.1, double eps = 1e-5)
      : c_(channels), momentum_(momentum), eps_(eps), gamma_(channels, T(1)),
        beta_(channels, T(0)), g_gamma_(channels, T(0)), g_beta_(channels, T(0)),
        run_mean_(channels, T(0)), run_var_(channels, T(1)),
        invstd_(channels, T(0)) {}

  Tensor<T> forward(const Tensor<T>& x, Context& ctx) override {
    if (x.c != c_) throw ShapeError("batchnorm: channel mismatch");
    train_cached_ = ctx.train;
    const std::size_t plane = x.plane();
    const std::size_t count = static_cast<std::size_t>(x.n) * plane;
    Tensor<T> y(x.n, x.c, x.h, x.w);
    xhat_ = Tensor<T>(x.n, x.c, x.h, x.w);

    for (int ic = 0; ic < c_; ++ic) {
      T mean, invstd;
      if (ctx.train) {
        double sum = 0.0;
        for (int in = 0; in < x.n; ++in) {
          const T* p = &x.v[(static_cast<std::size_t>(in) * c_ + ic) * plane];
          for (std::size_t i = 0; i < plane; ++i) sum += p[i];
        }
        mean = static_cast<T>(sum / static_cast<double>(count));
        double var = 0.0;
        for (int in = 0; in < x.n; ++in) {
          const T* p = &x.v[(static_cast<std::size_t>(in) * c_ + ic) * plane];
          for (std::size_t i = 0; i < plane; ++i) {
            const double d = static_cast<double>(p[i]) - mean;
            var += d * d;
          }
        }
        var /= static_cast<double>(count);
        invstd = static_cast<T>(1.0 / std::sqrt(var + eps_));
        run_mean_[ic] = static_cast<T>((1.0 - momentum_) * run_mean_[ic] +
                                       momentum_ * mean);
        run_var_[ic] =
            static_cast<T>((1.0 - momentum_) * run_var_[ic] + momentum_ * var);
      } else {
        mean = run_mean_[ic];
        invstd = static_cast<T>(1.0 / std::sqrt(static_cast<double>(run_var_[ic]) + eps_));
      }
      invstd_[ic] = invstd;
      const T scale = gamma_[ic], shift = beta_[ic];
      for (int in = 0; in < x.n; ++in) {
        const std::size_t base = (static_cast<std::size_t>(in) * c_ + ic) * plane;
        const T* p = &x.v[base];
        T* xh = &xhat_.v[base];
        T* out = &y.v[base];
        for (std::size_t i = 0; i < plane; ++i) {
          xh[i] = (p[i] - mean) * invstd;
          out[i] = scale * xh[i] + shift;
        }
      }
    }
    return y;
  }

  Tensor<T> backward(const Tensor<T>& g) override {
    const std::size_t plane = g.plane();
    const std::size_t count = static_cast<std::size_t>(g.n) * plane;
    Tensor<T> dx(g.n, g.c, g.h, g.w);

    for (int ic = 0; ic < c_; ++ic) {
      double sum_g = 0.0, sum_gx = 0.0;
      for (int in = 0; in < g.n; ++in) {
        const std::size_t base = (static_cast<std::size_t>(in) * c_ + ic) * plane;
        const T* gp = &g.v[base];
        const T* xh = &xhat_.v[base];
        for (std::size_t i = 0; i < plane; ++i) {
          sum_g += gp[i];
          sum_gx += static_cast<double>(gp[i]) * xh[i];
        }
      }
      g_beta_[ic] += static_cast<T>(sum_g);
      g_gamma_[ic] += static_cast<T>(sum_gx);

      const T scale = gamma_[ic] * invstd_[ic];
      if (train_cached_) {
        const T mean_g = static_cast<T>(sum_g / static_cast<double>(count));
        const T mean_gx = static_cast<T>(sum_gx / static_cast<double>(count));
        for (int in = 0; in < g.n; ++in) {
          const std::size_t base = (static_cast<std::size_t>(in) * c_ + ic) * plane;
          const T* gp = &g.v[base];
          const T* xh = &xhat_.v[base];
          T* dxp = &dx.v[base];
          for (std::size_t i = 0; i < plane; ++i)
            dxp[i] = scale * (gp[i] - mean_g - xh[i] * mean_gx);
        }
      } else {
        for (int in = 0; in < g.n; ++in) {
          const std::size_t base = (static_cast<std::size_t>(in) * c_ + ic) * plane;
          const T* gp = &g.v[base];
          T* dxp = &dx.v[base];
          for (std::size_t i = 0; i < plane; ++i) dxp[i] = scale * gp[i];
        }
      }
    }
    return dx;
  }

  void collect(const std::string& prefix, std::vector<ParamRef<T>>& params,
               std::vector<BufferRef<T>>& buffers) override {
    params.push_back({prefix + ".gamma", &gamma_, &g_gamma_});
    params.push_back({prefix + ".beta", &beta_, &g_beta_});
    buffers.push_back({prefix + ".running_mean", &run_mean_});
    buffers.push_back({prefix + ".running_var", &run_var_});
  }

 private:
  int c_;
  double momentum_, eps_;
  std::vector<T> gamma_, beta_, g_gamma_, g_beta_, run_mean_, run_var_;
  std::vector<T> invstd_;
  Tensor<T> xhat_;
  bool train_cached_ = false;
};

template <typename T>
class ReLU : public Layer<T> {
 public:
  Tensor<T> forward(const Tensor<T>& x, Context&) override {
    y_ = x;
    for (T& v : y_.v) v = v > T(0) ? v : T(0);
    return y_;
  }
  Tensor<T> backward(const Tensor<T>& g) override {
    Tensor<T> dx = g;
    for (std::size_t i = 0; i < dx.v.size(); ++i)
      if (!(y_.v[i] > T(0))) dx.v[i] = T(0);
    return dx;
  }

 private:
  Tensor<T> y_;
};

// Average pooling; padded cells count toward the divisor (always kh*kw).
template <typename T>
class AvgPool2d : public Layer<T> {
 public:
  AvgPool2d(int kh, int kw, int sh, int sw, int ph = 0, int pw = 0)
      : kh_(kh), kw_(kw), sh_(sh), sw_(sw), ph_(ph), pw_(pw) {}

  Tensor<T> forward(const Tensor<T>& x, Context&) override {
    in_shape_ = {x.n, x.c, x.h, x.w};
    const int oh = (x.h + 2 * ph_ - kh_) / sh_ + 1;
    const int ow = (x.w + 2 * pw_ - kw_) / sw_ + 1;
    if (oh < 1 || ow < 1) throw ShapeError("avgpool: input too small");
    Tensor<T> y(x.n, x.c, oh, ow);
    const T inv = T(1) / static_cast<T>(kh_ * kw_);
    for (int in = 0; in < x.n; ++in) {
      for (int ic = 0; ic < x.c; ++ic) {
        const T* plane = &x.v[(static_cast<std::size_t>(in) * x.c + ic) * x.plane()];
        T* out = &y.v[(static_cast<std::size_t>(in) * x.c + ic) * y.plane()];
        for (int oy = 0; oy < oh; ++oy) {
          for (int ox = 0; ox < ow; ++ox) {
            T sum = T(0);
            for (int ky = 0; ky < kh_; ++ky) {
              const int iy = oy * sh_ - ph_ + ky;
              if (iy < 0 || iy >= x.h) continue;
              for (int kx = 0; kx < kw_; ++kx) {
                const int ix = ox * sw_ - pw_ + kx;
                if (ix >= 0 && ix < x.w)
                  sum += plane[static_cast<std::size_t>(iy) * x.w + ix];
              }
            }
            out[static_cast<std::size_t>(oy) * ow + ox] = sum * inv;
          }
        }
      }
    }
    return y;
  }

  Tensor<T> backward(const Tensor<T>& g) override {
    auto [n, c, h, w] = in_shape_;
    Tensor<T> dx(n, c, h, w);
    const T inv = T(1) / static_cast<T>(kh_ * kw_);
    for (int in = 0; in < g.n; ++in) {
      for (int ic = 0; ic < g.c; ++ic) {
        T* plane = &dx.v[(static_cast<std::size_t>(in) * c + ic) * dx.plane()];
        const T* gp = &g.v[(static_cast<std::size_t>(in) * c + ic) * g.plane()];
        for (int oy = 0; oy < g.h; ++oy) {
          for (int ox = 0; ox < g.w; ++ox) {
            const T v = gp[static_cast<std::size_t>(oy) * g.w + ox] * inv;
            for (int ky = 0; ky < kh_; ++ky) {
              const int iy = oy * sh_ - ph_ + ky;
              if (iy < 0 || iy >= h) continue;
              for (int kx = 0; kx < kw_; ++kx) {
                const int ix = ox * sw_ - pw_ + kx;
                if (ix >= 0 && ix < w)
                  plane[static_cast<std::size_t>(iy) * w + ix] += v;
              }
            }
          }
        }
      }
    }
    return dx;
  }

 private:
  int kh_, kw_, sh_, sw_, ph_, pw_;
  std::array<int, 4> in_shape_{};
};

// Pools H x W down to a fixed output grid with (possibly overlapping)
// floor/ceil bins.
template <typename T>
class AdaptiveAvgPool2d : public Layer<T> {
 public:
  AdaptiveAvgPool2d(int oh, int ow) : oh_(oh), ow_(ow) {}

  Tensor<T> forward(const Tensor<T>& x, Context&) override {
    if (x.h < oh_ || x.w < ow_) throw ShapeError("adaptive avgpool: input too small");
    in_shape_ = {x.n, x.c, x.h, x.w};
    Tensor<T> y(x.n, x.c, oh_, ow_);
    for (int in = 0; in < x.n; ++in) {
      for (int ic = 0; ic < x.c; ++ic) {
        const T* plane = &x.v[(static_cast<std::size_t>(in) * x.c + ic) * x.plane()];
        T* out = &y.v[(static_cast<std::size_t>(in) * x.c + ic) * y.plane()];
        for (int oy = 0; oy < oh_; ++oy) {
          const auto [ys, ye] = bin(oy, x.h, oh_);
          for (int ox = 0; ox < ow_; ++ox) {
            const auto [xs, xe] = bin(ox, x.w, ow_);
            T sum = T(0);
            for (int iy = ys; iy < ye; ++iy)
              for (int ix = xs; ix < xe; ++ix)
                sum += plane[static_cast<std::size_t>(iy) * x.w + ix];
            out[static_cast<std::size_t>(oy) * ow_ + ox] =
                sum / static_cast<T>((ye - ys) * (xe - xs));
          }
        }
      }
    }
    return y;
  }

  Tensor<T> backward(const Tensor<T>& g) override {
    auto [n, c, h, w] = in_shape_;
    Tensor<T> dx(n, c, h, w);
    for (int in = 0; in < n; ++in) {
      for (int ic = 0; ic < c; ++ic) {
        T* plane = &dx.v[(static_cast<std::size_t>(in) * c + ic) * dx.plane()];
        const T* gp = &g.v[(static_cast<std::size_t>(in) * c + ic) * g.plane()];
        for (int oy = 0; oy < oh_; ++oy) {
          const auto [ys, ye] = bin(oy, h, oh_);
          for (int ox = 0; ox < ow_; ++ox) {
            const auto [xs, xe] = bin(ox, w, ow_);
            const T v = gp[static_cast<std::size_t>(oy) * ow_ + ox] /
                        static_cast<T>((ye - ys) * (xe - xs));
            for (int iy = ys; iy < ye; ++iy)
              for (int ix = xs; ix < xe; ++ix)
                plane[static_cast<std::size_t>(iy) * w + ix] += v;
          }
        }
      }
    }
    return dx;
  }

 private:
  static std::pair<int, int> bin(int i, int extent, int out) {
    return {(i * extent) / out, ((i + 1) * extent + out - 1) / out};
  }
  int oh_, ow_;
  std::array<int, 4> in_shape_{};
};

template <typename T>
class Flatten : public Layer<T> {
 public:
  Tensor<T> forward(const Tensor<T>& x, Context&) override {
    in_shape_ = {x.n, x.c, x.h, x.w};
    Tensor<T> y;
    y.n = x.n;
    y.c = x.c * x.h * x.w;
    y.h = 1;
    y.w = 1;
    y.v = x.v;
    return y;
  }
  Tensor<T> backward(const Tensor<T>& g) override {
    auto [n, c, h, w] = in_shape_;
    Tensor<T> dx;
    dx.n = n;
    dx.c = c;
    dx.h = h;
    dx.w = w;
    dx.v = g.v;
    return dx;
  }

 private:
  std::array<int, 4> in_shape_{};
};

template <typename T>
class Linear : public Layer<T> {
 public:
  Linear(int in_f, int out_f)
      : in_f_(in_f), out_f_(out_f),
        w_(static_cast<std::size_t>(out_f) * in_f, T(0)), wg_(w_.size(), T(0)),
        b_(out_f, T(0)), bg_(out_f, T(0)) {}

  void init(std::mt19937_64& rng) override {
    fan_in_uniform(w_, in_f_, rng);
    fan_in_uniform(b_, in_f_, rng);
  }

  Tensor<T> forward(const Tensor<T>& x, Context&) override {
    if (x.c != in_f_ || x.h != 1 || x.w != 1)
      throw ShapeError("linear: expected " + std::to_string(in_f_) +
                       " flat features, got " + x.shape_str());
    x_ = x;
    Tensor<T> y(x.n, out_f_, 1, 1);
    MapRowMat<T> wm(w_.data(), out_f_, in_f_);
    Eigen::Map<const MatrixX<T>> xm(x.v.data(), in_f_, x.n);
    MapMat<T> ym(y.v.data(), out_f_, x.n);
    ym.noalias() = wm * xm;
    for (int in = 0; in < x.n; ++in)
      for (int of = 0; of < out_f_; ++of) y.v[static_cast<std::size_t>(in) * out_f_ + of] += b_[of];
    return y;
  }

  Tensor<T> backward(const Tensor<T>& g) override {
    Tensor<T> dx(x_.n, in_f_, 1, 1);
    MapRowMat<T> wm(w_.data(), out_f_, in_f_);
    MapRowMat<T> wgm(wg_.data(), out_f_, in_f_);
    Eigen::Map<const MatrixX<T>> gm(g.v.data(), out_f_, g.n);
    Eigen::Map<const MatrixX<T>> xm(x_.v.data(), in_f_, x_.n);
    MapMat<T> dxm(dx.v.data(), in_f_, x_.n);
    wgm.noalias() += gm * xm.transpose();
    for (int of = 0; of < out_f_; ++of) bg_[of] += gm.row(of).sum();
    dxm.noalias() = wm.transpose() * gm;
    return dx;
  }

  void collect(const std::string& prefix, std::vector<ParamRef<T>>& params,
               std::vector<BufferRef<T>>& buffers) override {
    (void)buffers;
    params.push_back({prefix + ".weight", &w_, &wg_});
    params.push_back({prefix + ".bias", &b_, &bg_});
  }

 private:
  int in_f_, out_f_;
  std::vector<T> w_, wg_, b_, bg_;
  Tensor<T> x_;
};

// Inverted dropout; identity in eval mode.
template <typename T>
class Dropout : public Layer<T> {
 public:
  explicit Dropout(double rate) : rate_(rate) {
    if (rate < 0.0 || rate >= 1.0) throw ArgumentError("dropout: rate must be in [0, 1)");
  }

  Tensor<T> forward(const Tensor<T>& x, Context& ctx) override {
    active_ = ctx.train && rate_ > 0.0;
    if (!active_) return x;
    if (!ctx.rng) throw StateError("dropout: no RNG supplied in train mode");
    mask_.resize(x.size());
    std::uniform_real_distribution<double> dist(0.0, 1.0);
    const T keep_scale = static_cast<T>(1.0 / (1.0 - rate_));
    Tensor<T> y = x;
    for (std::size_t i = 0; i < x.size(); ++i) {
      mask_[i] = dist(*ctx.rng) < rate_ ? T(0) : keep_scale;
      y.v[i] *= mask_[i];
    }
    return y;
  }

  Tensor<T> backward(const Tensor<T>& g) override {
    if (!active_) return g;
    Tensor<T> dx = g;
    for (std::size_t i = 0; i < dx.v.size(); ++i) dx.v[i] *= mask_[i];
    return dx;
  }

 private:
  double rate_;
  bool active_ = false;
  std::vector<T> mask_;
};

// Squeeze-and-excitation: global average pool -> bottleneck -> expansion
// -> sigmoid gates scaling each channel.
template <typename T>
class SqueezeExcite : public Layer<T> {
 public:
  SqueezeExcite(int channels, int reduction)
      : c_(channels), mid_(std::max(1, channels / reduction)),
        w1_(static_cast<std::size_t>(mid_) * c_, T(0)), w1g_(w1_.size(), T(0)),
        b1_(mid_, T(0)), b1g_(mid_, T(0)),
        w2_(static_cast<std::size_t>(c_) * mid_, T(0)), w2g_(w2_.size(), T(0)),
        b2_(c_, T(0)), b2g_(c_, T(0)) {}

  int bottleneck_width() const { return mid_; }

  Tensor<T> forward(const Tensor<T>& x, Context&) override {
    if (x.c != c_) throw ShapeError("squeeze-excite: channel mismatch");
    x_ = x;
    const std::size_t plane = x.plane();
    z_.assign(static_cast<std::size_t>(x.n) * c_, T(0));
    a_.assign(static_cast<std::size_t>(x.n) * mid_, T(0));
    s_.assign(static_cast<std::size_t>(x.n) * c_, T(0));

    Tensor<T> y(x.n, x.c, x.h, x.w);
    for (int in = 0; in < x.n; ++in) {
      T* z = &z_[static_cast<std::size_t>(in) * c_];
      for (int ic = 0; ic < c_; ++ic) {
        const T* p = &x.v[(static_cast<std::size_t>(in) * c_ + ic) * plane];
        double sum = 0.0;
        for (std::size_t i = 0; i < plane; ++i) sum += p[i];
        z[ic] = static_cast<T>(sum / static_cast<double>(plane));
      }
      T* a = &a_[static_cast<std::size_t>(in) * mid_];
      for (int j = 0; j < mid_; ++j) {
        T acc = b1_[j];
        const T* row = &w1_[static_cast<std::size_t>(j) * c_];
        for (int ic = 0; ic < c_; ++ic) acc += row[ic] * z[ic];
        a[j] = acc > T(0) ? acc : T(0);
      }
      T* s = &s_[static_cast<std::size_t>(in) * c_];
      for (int ic = 0; ic < c_; ++ic) {
        T acc = b2_[ic];
        const T* row = &w2_[static_cast<std::size_t>(ic) * mid_];
        for (int j = 0; j < mid_; ++j) acc += row[j] * a[j];
        s[ic] = static_cast<T>(1.0 / (1.0 + std::exp(-static_cast<double>(acc))));
      }
      for (int ic = 0; ic < c_; ++ic) {
        const T* p = &x.v[(static_cast<std::size_t>(in) * c_ + ic) * plane];
        T* out = &y.v[(static_cast<std::size_t>(in) * c_ + ic) * plane];
        for (std::size_t i = 0; i < plane; ++i) out[i] = p[i] * s[ic];
      }
    }
    return y;
  }

  Tensor<T> backward(const Tensor<T>& g) override {
    const std::size_t plane = x_.plane();
    Tensor<T> dx(x_.n, x_.c, x_.h, x_.w);
    const T inv_plane = T(1) / static_cast<T>(plane);

    std::vector<T> ds(c_), dpre2(c_), da(mid_), dz(c_);
    for (int in = 0; in < x_.n; ++in) {
      const T* z = &z_[static_cast<std::size_t>(in) * c_];
      const T* a = &a_[static_cast<std::size_t>(in) * mid_];
      const T* s = &s_[static_cast<std::size_t>(in) * c_];

      for (int ic = 0; ic < c_; ++ic) {
        const std::size_t base = (static_cast<std::size_t>(in) * c_ + ic) * plane;
        const T* gp = &g.v[base];
        const T* xp = &x_.v[base];
        double acc = 0.0;
        for (std::size_t i = 0; i < plane; ++i) acc += static_cast<double>(gp[i]) * xp[i];
        ds[ic] = static_cast<T>(acc);
        dpre2[ic] = ds[ic] * s[ic] * (T(1) - s[ic]);
        b2g_[ic] += dpre2[ic];
      }
      for (int ic = 0; ic < c_; ++ic) {
        T* row = &w2g_[static_cast<std::size_t>(ic) * mid_];
        for (int j = 0; j < mid_; ++j) row[j] += dpre2[ic] * a[j];
      }
      for (int j = 0; j < mid_; ++j) {
        T acc = T(0);
        for (int ic = 0; ic < c_; ++ic)
          acc += w2_[static_cast<std::size_t>(ic) * mid_ + j] * dpre2[ic];
        da[j] = a[j] > T(0) ? acc : T(0);
        b1g_[j] += da[j];
      }
      for (int j = 0; j < mid_; ++j) {
        T* row = &w1g_[static_cast<std::size_t>(j) * c_];
        for (int ic = 0; ic < c_; ++ic) row[ic] += da[j] * z[ic];
      }
      for (int ic = 0; ic < c_; ++ic) {
        T acc = T(0);
        for (int j = 0; j < mid_; ++j)
          acc += w1_[static_cast<std::size_t>(j) * c_ + ic] * da[j];
        dz[ic] = acc;
      }
      for (int ic = 0; ic < c_; ++ic) {
        const std::size_t base = (static_cast<std::size_t>(in) * c_ + ic) * plane;
        const T* gp = &g.v[base];
        T* dxp = &dx.v[base];
        const T gate = s[ic];
        const T spread = dz[ic] * inv_plane;
        for (std::size_t i = 0; i < plane; ++i) dxp[i] = gp[i] * gate + spread;
      }
    }
    return dx;
  }

  void init(std::mt19937_64& rng) override {
    fan_in_uniform(w1_, c_, rng);
    fan_in_uniform(b1_, c_, rng);
    fan_in_uniform(w2_, mid_, rng);
    fan_in_uniform(b2_, mid_, rng);
  }

  void collect(const std::string& prefix, std::vector<ParamRef<T>>& params,
               std::vector<BufferRef<T>>& buffers) override {
    (void)buffers;
    params.push_back({prefix + ".fc1.weight", &w1_, &w1g_});
    params.push_back({prefix + ".fc1.bias", &b1_, &b1g_});
    params.push_back({prefix + ".fc2.weight", &w2_, &w2g_});
    params.push_back({prefix + ".fc2.bias", &b2_, &b2g_});
  }

 private:
  int c_, mid_;
  std::vector<T> w1_, w1g_, b1_, b1g_, w2_, w2g_, b2_, b2g_;
  std::vector<T> z_, a_, s_;
  Tensor<T> x_;
};

template <typename T>
class Sequential : public Layer<T> {
 public:
  Sequential() = default;

  void add(std::string name, std::unique_ptr<Layer<T>> layer) {
    children_.emplace_back(std::move(name), std::move(layer));
  }

  std::size_t size() const { return children_.size(); }
  const std::string& name(std::size_t i) const { return children_[i].first; }
  Layer<T>* layer(std::size_t i) { return children_[i].second.get(); }

  Tensor<T> forward(const Tensor<T>& x, Context& ctx) override {
    Tensor<T> cur = x;
    for (auto& [name, layer] : children_) cur = layer->forward(cur, ctx);
    return cur;
  }

  Tensor<T> backward(const Tensor<T>& g) override {
    Tensor<T> cur = g;
    for (auto it = children_.rbegin(); it != children_.rend(); ++it)
      cur = it->second->backward(cur);
    return cur;
  }

  void init(std::mt19937_64& rng) override {
    for (auto& [name, layer] : children_) layer->init(rng);
  }

  void collect(const std::string& prefix, std::vector<ParamRef<T>>& params,
               std::vector<BufferRef<T>>& buffers) override {
    for (auto& [name, layer] : children_)
      layer->collect(prefix.empty() ? name : prefix + "." + name, params, buffers);
  }

 private:
  std::vector<std::pair<std::string, std::unique_ptr<Layer<T>>>> children_;
};

// Four parallel branches concatenated along the channel axis.
template <typename T>
class InceptionBlock : public Layer<T> {
 public:
  void add_branch(std::string name, std::unique_ptr<Sequential<T>> branch) {
    branches_.emplace_back(std::move(name), std::move(branch));
  }

  Tensor<T> forward(const Tensor<T>& x, Context& ctx) override {
    std::vector<Tensor<T>> outs;
    outs.reserve(branches_.size());
    for (auto& [name, branch] : branches_) outs.push_back(branch->forward(x, ctx));
    for (std::size_t i = 1; i < outs.size(); ++i) {
      if (outs[i].n != outs[0].n || outs[i].h != outs[0].h || outs[i].w != outs[0].w)
        throw ShapeError("inception: branch '" + branches_[i].first +
                         "' spatial dims " + outs[i].shape_str() +
                         " disagree with '" + branches_[0].first + "' " +
                         outs[0].shape_str());
    }
    branch_channels_.clear();
    int total_c = 0;
    for (const auto& o : outs) {
      branch_channels_.push_back(o.c);
      total_c += o.c;
    }
    Tensor<T> y(outs[0].n, total_c, outs[0].h, outs[0].w);
    const std::size_t plane = y.plane();
    for (int in = 0; in < y.n; ++in) {
      int oc = 0;
      for (const auto& o : outs) {
        for (int ic = 0; ic < o.c; ++ic, ++oc) {
          std::copy_n(&o.v[(static_cast<std::size_t>(in) * o.c + ic) * plane], plane,
                      &y.v[(static_cast<std::size_t>(in) * total_c + oc) * plane]);
        }
      }
    }
    return y;
  }

  Tensor<T> backward(const Tensor<T>& g) override {
    Tensor<T> dx;
    const std::size_t plane = g.plane();
    int offset = 0;
    for (std::size_t bi = 0; bi < branches_.size(); ++bi) {
      const int bc = branch_channels_[bi];
      Tensor<T> gb(g.n, bc, g.h, g.w);
      for (int in = 0; in < g.n; ++in)
        for (int ic = 0; ic < bc; ++ic)
          std::copy_n(
              &g.v[(static_cast<std::size_t>(in) * g.c + offset + ic) * plane], plane,
              &gb.v[(static_cast<std::size_t>(in) * bc + ic) * plane]);
      Tensor<T> dxb = branches_[bi].second->backward(gb);
      if (dx.size() == 0) {
        dx = std::move(dxb);
      } else {
        for (std::size_t i = 0; i < dx.v.size(); ++i) dx.v[i] += dxb.v[i];
      }
      offset += bc;
    }
    return dx;
  }

  void init(std::mt19937_64& rng) override {
    for (auto& [name, branch] : branches_) branch->init(rng);
  }

  void collect(const std::string& prefix, std::vector<ParamRef<T>>& params,
               std::vector<BufferRef<T>>& buffers) override {
    for (auto& [name, branch] : branches_)
      branch->collect(prefix + "." + name, params, buffers);
  }

 private:
  std::vector<std::pair<std::string, std::unique_ptr<Sequential<T>>>> branches_;
  std::vector<int> branch_channels_;
};

template <typename T>
class Adam {
 public:
  Adam(std::vector<ParamRef<T>> params, double lr, double beta1 = 0.9,
       double beta2 = 0.999, double eps = 1e-8)
      : params_(std::move(params)), lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {
    m_.reserve(params_.size());
    v_.reserve(params_.size());
    for (const auto& p : params_) {
      m_.emplace_back(p.value->size(), T(0));
      v_.emplace_back(p.value->size(), T(0));
    }
  }

  void set_lr(double lr) { lr_ = lr; }
  double lr() const { return lr_; }

  void zero_grad() {
    for (auto& p : params_) std::fill(p.grad->begin(), p.grad->end(), T(0));
  }

  void step() {
    ++t_;
    const double bc1 = 1.0 - std::pow(beta1_, t_);
    const double bc2 = 1.0 - std::pow(beta2_, t_);
    for (std::size_t pi = 0; pi < params_.size(); ++pi) {
      auto& value = *params_[pi].value;
      const auto& grad = *params_[pi].grad;
      auto& m = m_[pi];
      auto& v = v_[pi];
      for (std::size_t i = 0; i < value.size(); ++i) {
        const double g = static_cast<double>(grad[i]);
        m[i] = static_cast<T>(beta1_ * m[i] + (1.0 - beta1_) * g);
        v[i] = static_cast<T>(beta2_ * v[i] + (1.0 - beta2_) * g * g);
        const double mh = static_cast<double>(m[i]) / bc1;
        const double vh = static_cast<double>(v[i]) / bc2;
        value[i] -= static_cast<T>(lr_ * mh / (std::sqrt(vh) + eps_));
      }
    }
  }

 private:
  std::vector<ParamRef<T>> params_;
  double lr_, beta1_, beta2_, eps_;
  long t_ = 0;
  std::vector<std::vector<T>> m_, v_;
};

}  // namespace inse::nn

#endif  // INSE_NN_HPP_

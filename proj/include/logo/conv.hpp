// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <vector>

#include "logo/nn.hpp"

namespace logo {

// Spatial activations are stored as [channels, batch*h*w] matrices with column
// index b*h*w + y*w + x. This keeps every layer a plain GEMM over columns.
struct ConvDims {
  int b = 0, h = 0, w = 0;
};

// 3x3-style convolution lowered to a GEMM through im2col. Weight layout is
// [cout, cin*k*k] with patch row index c*k*k + ky*k + kx.
template <typename T>
class Conv2d {
 public:
  struct Cache {
    MatX<T> cols;
    ConvDims in;
    int ho = 0, wo = 0;
  };

  Conv2d() = default;
  Conv2d(int cin, int cout, int k, int stride, int pad)
      : cin_(cin), cout_(cout), k_(k), stride_(stride), pad_(pad) {
    w_.setup(cout, cin * k * k);
    b_.setup(cout, 1);
  }

  void init(Rng& rng) {
    T std = std::sqrt(T(2) / T(cin_ * k_ * k_));
    for (Eigen::Index j = 0; j < w_.v.cols(); ++j)
      for (Eigen::Index i = 0; i < w_.v.rows(); ++i) w_.v(i, j) = T(rng.normal()) * std;
    b_.v.setZero();
  }

  int out_h(int h) const { return (h + 2 * pad_ - k_) / stride_ + 1; }
  int out_w(int w) const { return (w + 2 * pad_ - k_) / stride_ + 1; }

  MatX<T> forward(const MatX<T>& x, const ConvDims& d, Cache* cache) const {
    LOGO_REQUIRE(x.rows() == cin_, "conv input channel mismatch");
    LOGO_REQUIRE(x.cols() == Eigen::Index(d.b) * d.h * d.w, "conv input dims mismatch");
    const int ho = out_h(d.h), wo = out_w(d.w);
    MatX<T> cols = im2col(x, d, ho, wo);
    MatX<T> y = w_.v * cols;
    y.colwise() += VecX<T>(b_.v.col(0));
    if (cache) {
      cache->cols = std::move(cols);
      cache->in = d;
      cache->ho = ho;
      cache->wo = wo;
    }
    return y;
  }

  // Accumulates weight gradients; returns the input gradient unless the layer
  // sits at the front of the network and input_grad is false.
  MatX<T> backward(const Cache& cache, const MatX<T>& dy, bool input_grad = true) {
    w_.g.noalias() += dy * cache.cols.transpose();
    b_.g.col(0) += dy.rowwise().sum();
    if (!input_grad) return MatX<T>();
    MatX<T> dcols = w_.v.transpose() * dy;
    return col2im(dcols, cache.in, cache.ho, cache.wo);
  }

  void collect_params(ParamList<T>& out, const std::string& prefix) {
    out.push_back({prefix + ".weight", &w_, true});
    out.push_back({prefix + ".bias", &b_, true});
  }

  int in_channels() const { return cin_; }
  int out_channels() const { return cout_; }
  int kernel() const { return k_; }
  int stride() const { return stride_; }
  int padding() const { return pad_; }
  Param<T>& weight() { return w_; }
  const Param<T>& weight() const { return w_; }
  const Param<T>& bias() const { return b_; }

 private:
  MatX<T> im2col(const MatX<T>& x, const ConvDims& d, int ho, int wo) const {
    MatX<T> cols(cin_ * k_ * k_, Eigen::Index(d.b) * ho * wo);
    for (int b = 0; b < d.b; ++b) {
      const Eigen::Index in_base = Eigen::Index(b) * d.h * d.w;
      const Eigen::Index out_base = Eigen::Index(b) * ho * wo;
      for (int yo = 0; yo < ho; ++yo) {
        for (int xo = 0; xo < wo; ++xo) {
          const Eigen::Index col = out_base + Eigen::Index(yo) * wo + xo;
          T* dst = cols.data() + col * cols.rows();
          for (int c = 0; c < cin_; ++c) {
            for (int ky = 0; ky < k_; ++ky) {
              const int yi = yo * stride_ + ky - pad_;
              for (int kx = 0; kx < k_; ++kx) {
                const int xi = xo * stride_ + kx - pad_;
                const bool ok = yi >= 0 && yi < d.h && xi >= 0 && xi < d.w;
                *dst++ = ok ? x(c, in_base + Eigen::Index(yi) * d.w + xi) : T(0);
              }
            }
          }
        }
      }
    }
    return cols;
  }

  MatX<T> col2im(const MatX<T>& cols, const ConvDims& d, int ho, int wo) const {
    MatX<T> x = MatX<T>::Zero(cin_, Eigen::Index(d.b) * d.h * d.w);
    for (int b = 0; b < d.b; ++b) {
      const Eigen::Index in_base = Eigen::Index(b) * d.h * d.w;
      const Eigen::Index out_base = Eigen::Index(b) * ho * wo;
      for (int yo = 0; yo < ho; ++yo) {
        for (int xo = 0; xo < wo; ++xo) {
          const Eigen::Index col = out_base + Eigen::Index(yo) * wo + xo;
          const T* src = cols.data() + col * cols.rows();
          for (int c = 0; c < cin_; ++c) {
            for (int ky = 0; ky < k_; ++ky) {
              const int yi = yo * stride_ + ky - pad_;
              for (int kx = 0; kx < k_; ++kx) {
                const int xi = xo * stride_ + kx - pad_;
                if (yi >= 0 && yi < d.h && xi >= 0 && xi < d.w)
                  x(c, in_base + Eigen::Index(yi) * d.w + xi) += *src;
                ++src;
              }
            }
          }
        }
      }
    }
    return x;
  }

  int cin_ = 0, cout_ = 0, k_ = 3, stride_ = 1, pad_ = 1;
  Param<T> w_, b_;
};

// Mean over the spatial extent: [c, b*h*w] -> [c, b].
template <typename T>
class GlobalAvgPool {
 public:
  struct Cache {
    ConvDims in;
  };

  MatX<T> forward(const MatX<T>& x, const ConvDims& d, Cache* cache) const {
    const Eigen::Index hw = Eigen::Index(d.h) * d.w;
    MatX<T> y(x.rows(), d.b);
    for (int b = 0; b < d.b; ++b) y.col(b) = x.middleCols(b * hw, hw).rowwise().sum() / T(hw);
    if (cache) cache->in = d;
    return y;
  }

  MatX<T> backward(const Cache& cache, const MatX<T>& dy) const {
    const Eigen::Index hw = Eigen::Index(cache.in.h) * cache.in.w;
    MatX<T> dx(dy.rows(), Eigen::Index(cache.in.b) * hw);
    for (int b = 0; b < cache.in.b; ++b) {
      VecX<T> g = dy.col(b) / T(hw);
      for (Eigen::Index i = 0; i < hw; ++i) dx.col(b * hw + i) = g;
    }
    return dx;
  }
};

// Small convolutional encoder: repeated stride-2 blocks of conv / batch norm /
// ReLU, then global average pooling. Output width equals the last block width.
template <typename T>
class TinyConvBackbone {
 public:
  struct Cache {
    std::vector<typename Conv2d<T>::Cache> conv;
    std::vector<typename BatchNorm<T>::Cache> bn;
    std::vector<MatX<T>> relu_in;
    typename GlobalAvgPool<T>::Cache gap;
  };

  TinyConvBackbone() = default;
  explicit TinyConvBackbone(std::vector<int> widths, int in_channels = 3)
      : widths_(std::move(widths)) {
    int cin = in_channels;
    for (int w : widths_) {
      convs_.emplace_back(cin, w, 3, 2, 1);
      bns_.emplace_back(w);
      cin = w;
    }
  }

  void init(Rng& rng) {
    for (auto& c : convs_) c.init(rng);
  }

  int feature_dim() const { return widths_.back(); }

  MatX<T> forward(const MatX<T>& images, const ConvDims& d, bool train, bool update_running,
                  Cache* cache) {
    if (cache) {
      cache->conv.resize(convs_.size());
      cache->bn.resize(bns_.size());
      cache->relu_in.resize(convs_.size());
    }
    MatX<T> h = images;
    ConvDims cur = d;
    for (std::size_t i = 0; i < convs_.size(); ++i) {
      h = convs_[i].forward(h, cur, cache ? &cache->conv[i] : nullptr);
      cur = {cur.b, convs_[i].out_h(cur.h), convs_[i].out_w(cur.w)};
      LOGO_REQUIRE(cur.h >= 1 && cur.w >= 1, "input too small for backbone depth");
      h = bns_[i].forward(h, train, update_running, cache ? &cache->bn[i] : nullptr);
      if (cache) cache->relu_in[i] = h;
      h = relu(h);
    }
    return gap_.forward(h, cur, cache ? &cache->gap : nullptr);
  }

  void backward(const Cache& cache, const MatX<T>& dfeat) {
    MatX<T> d = gap_.backward(cache.gap, dfeat);
    for (std::size_t i = convs_.size(); i-- > 0;) {
      d = relu_backward(cache.relu_in[i], d);
      d = bns_[i].backward(cache.bn[i], d);
      d = convs_[i].backward(cache.conv[i], d, i > 0);
    }
  }

  void collect_params(ParamList<T>& out, const std::string& prefix) {
    for (std::size_t i = 0; i < convs_.size(); ++i) {
      convs_[i].collect_params(out, prefix + ".conv" + std::to_string(i));
      bns_[i].collect_params(out, prefix + ".bn" + std::to_string(i));
    }
  }

  const std::vector<int>& widths() const { return widths_; }

 private:
  std::vector<int> widths_;
  std::vector<Conv2d<T>> convs_;
  std::vector<BatchNorm<T>> bns_;
  GlobalAvgPool<T> gap_;
};

}  // namespace logo

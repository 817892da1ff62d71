// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "logo/linalg.hpp"
#include "logo/rng.hpp"

namespace logo {

// A trainable tensor with its gradient accumulator. Matrices are stored
// column-major; vectors (biases, batch-norm affine terms) use a single column.
template <typename T>
struct Param {
  MatX<T> v;
  MatX<T> g;

  void setup(Eigen::Index rows, Eigen::Index cols) {
    v.setZero(rows, cols);
    g.setZero(rows, cols);
  }
  void zero_grad() { g.setZero(); }
};

// Named view into a module's parameter. Buffers (running statistics, queues)
// register with trainable=false: they are serialized and digested but never
// receive gradients or optimizer updates.
template <typename T>
struct ParamRef {
  std::string name;
  Param<T>* p;
  bool trainable;
};

template <typename T>
using ParamList = std::vector<ParamRef<T>>;

template <typename T>
void zero_grads(const ParamList<T>& params) {
  for (auto& r : params) r.p->zero_grad();
}

// Fully connected layer, y = W x + b. Inputs are [in, batch] columns.
template <typename T>
class Linear {
 public:
  struct Cache {
    MatX<T> x;
  };

  Linear() = default;
  Linear(int in, int out, bool bias = true) : in_(in), out_(out), has_bias_(bias) {
    w_.setup(out, in);
    if (has_bias_) b_.setup(out, 1);
  }

  void init(Rng& rng) {
    T std = std::sqrt(T(2) / T(in_));
    for (Eigen::Index j = 0; j < w_.v.cols(); ++j)
      for (Eigen::Index i = 0; i < w_.v.rows(); ++i) w_.v(i, j) = T(rng.normal()) * std;
    if (has_bias_) b_.v.setZero();
  }

  MatX<T> forward(const MatX<T>& x, Cache* cache) const {
    LOGO_REQUIRE(x.rows() == in_, "linear input dimension mismatch");
    MatX<T> y = w_.v * x;
    if (has_bias_) y.colwise() += VecX<T>(b_.v.col(0));
    if (cache) cache->x = x;
    return y;
  }

  MatX<T> backward(const Cache& cache, const MatX<T>& dy) {
    w_.g.noalias() += dy * cache.x.transpose();
    if (has_bias_) b_.g.col(0) += dy.rowwise().sum();
    return w_.v.transpose() * dy;
  }

  void collect_params(ParamList<T>& out, const std::string& prefix) {
    out.push_back({prefix + ".weight", &w_, true});
    if (has_bias_) out.push_back({prefix + ".bias", &b_, true});
  }

  int in_dim() const { return in_; }
  int out_dim() const { return out_; }
  Param<T>& weight() { return w_; }
  Param<T>& bias() { return b_; }

 private:
  int in_ = 0, out_ = 0;
  bool has_bias_ = true;
  Param<T> w_, b_;
};

// Batch normalization over the columns of a [channels, m] matrix. The same
// code serves 1-d features (m = batch) and conv maps flattened to
// [channels, batch*h*w]. Normalization uses biased batch variance; running
// statistics follow r = (1 - momentum) * r + momentum * batch_stat.
template <typename T>
class BatchNorm {
 public:
  struct Cache {
    MatX<T> xhat;
    VecX<T> inv_std;
  };

  BatchNorm() = default;
  explicit BatchNorm(int channels, T momentum = T(0.1), T eps = T(1e-5))
      : c_(channels), momentum_(momentum), eps_(eps) {
    gamma_.setup(channels, 1);
    gamma_.v.setOnes();
    beta_.setup(channels, 1);
    run_mean_.setup(channels, 1);
    run_var_.setup(channels, 1);
    run_var_.v.setOnes();
  }

  MatX<T> forward(const MatX<T>& x, bool train, bool update_running, Cache* cache) {
    LOGO_REQUIRE(x.rows() == c_, "batchnorm channel mismatch");
    if (!train) {
      MatX<T> y(x.rows(), x.cols());
      for (Eigen::Index i = 0; i < c_; ++i) {
        T inv = T(1) / std::sqrt(run_var_.v(i, 0) + eps_);
        y.row(i) = ((x.row(i).array() - run_mean_.v(i, 0)) * inv * gamma_.v(i, 0) + beta_.v(i, 0)).matrix();
      }
      return y;
    }
    LOGO_REQUIRE(x.cols() >= 1, "batchnorm requires at least one column");
    const T m = T(x.cols());
    MatX<T> xhat(x.rows(), x.cols());
    VecX<T> inv_std(c_);
    for (Eigen::Index i = 0; i < c_; ++i) {
      T mu = x.row(i).mean();
      T var = (x.row(i).array() - mu).square().sum() / m;
      T inv = T(1) / std::sqrt(var + eps_);
      inv_std(i) = inv;
      xhat.row(i) = ((x.row(i).array() - mu) * inv).matrix();
      if (update_running) {
        run_mean_.v(i, 0) = (T(1) - momentum_) * run_mean_.v(i, 0) + momentum_ * mu;
        run_var_.v(i, 0) = (T(1) - momentum_) * run_var_.v(i, 0) + momentum_ * var;
      }
    }
    MatX<T> y(x.rows(), x.cols());
    for (Eigen::Index i = 0; i < c_; ++i)
      y.row(i) = (xhat.row(i).array() * gamma_.v(i, 0) + beta_.v(i, 0)).matrix();
    if (cache) {
      cache->xhat = std::move(xhat);
      cache->inv_std = std::move(inv_std);
    }
    return y;
  }

  // Train-mode backward only; eval-mode forwards are used for inference paths
  // that never need gradients.
  MatX<T> backward(const Cache& cache, const MatX<T>& dy) {
    const T m = T(dy.cols());
    MatX<T> dx(dy.rows(), dy.cols());
    for (Eigen::Index i = 0; i < c_; ++i) {
      auto xh = cache.xhat.row(i).array();
      auto g = dy.row(i).array();
      T dgamma = (g * xh).sum();
      T dbeta = g.sum();
      gamma_.g(i, 0) += dgamma;
      beta_.g(i, 0) += dbeta;
      auto dxhat = g * gamma_.v(i, 0);
      dx.row(i) = ((dxhat * m - dxhat.sum() - xh * (dxhat * xh).sum()) * (cache.inv_std(i) / m)).matrix();
    }
    return dx;
  }

  void collect_params(ParamList<T>& out, const std::string& prefix) {
    out.push_back({prefix + ".gamma", &gamma_, true});
    out.push_back({prefix + ".beta", &beta_, true});
    out.push_back({prefix + ".running_mean", &run_mean_, false});
    out.push_back({prefix + ".running_var", &run_var_, false});
  }

  int channels() const { return c_; }
  Param<T>& gamma() { return gamma_; }
  Param<T>& beta() { return beta_; }
  Param<T>& running_mean() { return run_mean_; }
  Param<T>& running_var() { return run_var_; }

 private:
  int c_ = 0;
  T momentum_ = T(0.1), eps_ = T(1e-5);
  Param<T> gamma_, beta_, run_mean_, run_var_;
};

template <typename T>
MatX<T> relu(const MatX<T>& x) {
  return x.cwiseMax(T(0));
}

template <typename T>
MatX<T> relu_backward(const MatX<T>& x_in, const MatX<T>& dy) {
  return (x_in.array() > T(0)).template cast<T>() * dy.array();
}

inline double softplus(double x) {
  if (x > 30.0) return x;
  return std::log1p(std::exp(x));
}

inline double softplus_grad(double x) {
  if (x > 30.0) return 1.0;
  if (x < -30.0) return std::exp(x);
  return 1.0 / (1.0 + std::exp(-x));
}

// Multilayer perceptron: hidden blocks of Linear -> BatchNorm -> ReLU followed
// by a final Linear. dims lists layer widths including input and output, so
// dims {256, 256, 128} is one hidden block into a 128-wide head and
// dims {n, n} is a single linear map. hidden_bn toggles the hidden BatchNorm.
template <typename T>
class Mlp {
 public:
  struct Cache {
    std::vector<typename Linear<T>::Cache> lin;
    std::vector<typename BatchNorm<T>::Cache> bn;
    std::vector<MatX<T>> relu_in;
  };

  Mlp() = default;
  Mlp(std::vector<int> dims, bool hidden_bn, bool final_bias = true) : dims_(std::move(dims)), hidden_bn_(hidden_bn) {
    LOGO_REQUIRE(dims_.size() >= 2, "mlp needs at least input and output widths");
    const int hidden = static_cast<int>(dims_.size()) - 2;
    for (int i = 0; i < hidden; ++i) {
      // Hidden bias is redundant under BatchNorm.
      lins_.emplace_back(dims_[i], dims_[i + 1], !hidden_bn_);
      if (hidden_bn_) bns_.emplace_back(dims_[i + 1]);
    }
    lins_.emplace_back(dims_[dims_.size() - 2], dims_.back(), final_bias);
  }

  void init(Rng& rng) {
    for (auto& l : lins_) l.init(rng);
  }

  MatX<T> forward(const MatX<T>& x, bool train, bool update_running, Cache* cache) {
    const std::size_t hidden = lins_.size() - 1;
    if (cache) {
      cache->lin.resize(lins_.size());
      cache->bn.resize(hidden_bn_ ? hidden : 0);
      cache->relu_in.resize(hidden);
    }
    MatX<T> h = x;
    for (std::size_t i = 0; i < hidden; ++i) {
      h = lins_[i].forward(h, cache ? &cache->lin[i] : nullptr);
      if (hidden_bn_) h = bns_[i].forward(h, train, update_running, cache ? &cache->bn[i] : nullptr);
      if (cache) cache->relu_in[i] = h;
      h = relu(h);
    }
    return lins_.back().forward(h, cache ? &cache->lin.back() : nullptr);
  }

  MatX<T> backward(const Cache& cache, const MatX<T>& dy) {
    const std::size_t hidden = lins_.size() - 1;
    MatX<T> d = lins_.back().backward(cache.lin.back(), dy);
    for (std::size_t i = hidden; i-- > 0;) {
      d = relu_backward(cache.relu_in[i], d);
      if (hidden_bn_) d = bns_[i].backward(cache.bn[i], d);
      d = lins_[i].backward(cache.lin[i], d);
    }
    return d;
  }

  void collect_params(ParamList<T>& out, const std::string& prefix) {
    for (std::size_t i = 0; i < lins_.size(); ++i)
      lins_[i].collect_params(out, prefix + ".lin" + std::to_string(i));
    for (std::size_t i = 0; i < bns_.size(); ++i)
      bns_[i].collect_params(out, prefix + ".bn" + std::to_string(i));
  }

  const std::vector<int>& dims() const { return dims_; }
  int in_dim() const { return dims_.front(); }
  int out_dim() const { return dims_.back(); }
  std::vector<Linear<T>>& linears() { return lins_; }

 private:
  std::vector<int> dims_;
  bool hidden_bn_ = true;
  std::vector<Linear<T>> lins_;
  std::vector<BatchNorm<T>> bns_;
};

}  // namespace logo

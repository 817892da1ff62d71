// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "logo/losses.hpp"

namespace logo {

// A batch of embedding pairs. Joint pairs put two views of the same image side
// by side; product pairs combine views of different images.
template <typename T>
struct PairBatch {
  enum class Kind { joint, product };

  MatX<T> left, right;  // [embed_dim, batch]
  std::vector<std::int64_t> left_ids, right_ids;
  Kind kind = Kind::joint;

  void validate() const {
    LOGO_REQUIRE(left.rows() == right.rows() && left.cols() == right.cols(),
                 "pair batch sides must match in shape");
    LOGO_REQUIRE(left_ids.size() == right_ids.size() &&
                     Eigen::Index(left_ids.size()) == left.cols(),
                 "pair batch ids must cover every column");
    for (std::size_t i = 0; i < left_ids.size(); ++i) {
      if (kind == Kind::joint)
        LOGO_REQUIRE(left_ids[i] == right_ids[i], "joint pairs must come from one source image");
      else
        LOGO_REQUIRE(left_ids[i] != right_ids[i], "product pairs must come from distinct images");
    }
  }
};

// Pairwise affinity between embedding columns. Implementations score a batch
// of (left, right) pairs and can push gradients back into the inputs and,
// when asked, into their own parameters.
template <typename T>
class LocalAffinity {
 public:
  struct Cache {
    virtual ~Cache() = default;
  };

  virtual ~LocalAffinity() = default;
  virtual std::string kind() const = 0;
  virtual void init(Rng&) {}
  virtual void collect_params(ParamList<T>&) {}

  virtual VecX<T> score(const MatX<T>& left, const MatX<T>& right, bool train,
                        bool update_running, std::unique_ptr<Cache>* cache) = 0;
  virtual void backward(const Cache& cache, const VecX<T>& dscore, bool param_grads,
                        MatX<T>* dleft, MatX<T>* dright) = 0;
};

// Learned measure: the pair is concatenated and passed through five
// fully-connected blocks with batch normalization and ReLU, a linear head and
// a softplus, so scores are positive. The head starts at zero, which makes
// every initial score log(2) and the initial input gradient zero.
template <typename T>
class LearnedAffinity final : public LocalAffinity<T> {
 public:
  using Base = LocalAffinity<T>;

  LearnedAffinity() = default;
  LearnedAffinity(int embed_dim, int hidden)
      : embed_dim_(embed_dim),
        net_({2 * embed_dim, hidden, hidden, hidden, hidden, hidden, 1}, true) {}

  std::string kind() const override { return "learned"; }

  void init(Rng& rng) override {
    net_.init(rng);
    net_.linears().back().weight().v.setZero();
    net_.linears().back().bias().v.setZero();
  }

  void collect_params(ParamList<T>& out) override { net_.collect_params(out, "regressor"); }

  VecX<T> score(const MatX<T>& left, const MatX<T>& right, bool train, bool update_running,
                std::unique_ptr<typename Base::Cache>* cache) override {
    LOGO_REQUIRE(left.rows() == embed_dim_ && right.rows() == embed_dim_,
                 "affinity embedding width mismatch");
    LOGO_REQUIRE(left.cols() == right.cols(), "affinity pair count mismatch");
    LOGO_REQUIRE(train || cache == nullptr, "gradient caches require train mode");
    MatX<T> x(2 * embed_dim_, left.cols());
    x.topRows(embed_dim_) = left;
    x.bottomRows(embed_dim_) = right;
    auto c = std::make_unique<CacheImpl>();
    MatX<T> raw = net_.forward(x, train, update_running, cache ? &c->net : nullptr);
    VecX<T> s(raw.cols());
    for (Eigen::Index j = 0; j < raw.cols(); ++j) s(j) = T(softplus(double(raw(0, j))));
    if (cache) {
      c->raw = raw;
      *cache = std::move(c);
    }
    return s;
  }

  void backward(const typename Base::Cache& cache, const VecX<T>& dscore, bool param_grads,
                MatX<T>* dleft, MatX<T>* dright) override {
    const auto& c = static_cast<const CacheImpl&>(cache);
    MatX<T> draw(1, c.raw.cols());
    for (Eigen::Index j = 0; j < c.raw.cols(); ++j)
      draw(0, j) = dscore(j) * T(softplus_grad(double(c.raw(0, j))));
    std::vector<MatX<T>> saved;
    ParamList<T> params;
    if (!param_grads) {
      // The measure is frozen on this path: run the backward for input
      // gradients, then restore the parameter gradient accumulators.
      net_.collect_params(params, "r");
      saved.reserve(params.size());
      for (auto& r : params) saved.push_back(r.p->g);
    }
    MatX<T> dx = net_.backward(c.net, draw);
    if (!param_grads)
      for (std::size_t i = 0; i < params.size(); ++i) params[i].p->g = saved[i];
    if (dleft) *dleft += dx.topRows(embed_dim_);
    if (dright) *dright += dx.bottomRows(embed_dim_);
  }

  Mlp<T>& net() { return net_; }
  int embed_dim() const { return embed_dim_; }

 private:
  struct CacheImpl : Base::Cache {
    typename Mlp<T>::Cache net;
    MatX<T> raw;
  };

  int embed_dim_ = 0;
  Mlp<T> net_;
};

// Fixed measure: cosine similarity of the pair. No parameters.
template <typename T>
class CosineAffinity final : public LocalAffinity<T> {
 public:
  using Base = LocalAffinity<T>;

  std::string kind() const override { return "cosine"; }

  VecX<T> score(const MatX<T>& left, const MatX<T>& right, bool, bool,
                std::unique_ptr<typename Base::Cache>* cache) override {
    LOGO_REQUIRE(left.rows() == right.rows() && left.cols() == right.cols(),
                 "affinity pair shape mismatch");
    MatX<T> lh = l2_normalize_cols(left);
    MatX<T> rh = l2_normalize_cols(right);
    VecX<T> s(left.cols());
    for (Eigen::Index j = 0; j < left.cols(); ++j) s(j) = lh.col(j).dot(rh.col(j));
    if (cache) {
      auto c = std::make_unique<CacheImpl>();
      c->left = left;
      c->right = right;
      c->lh = std::move(lh);
      c->rh = std::move(rh);
      *cache = std::move(c);
    }
    return s;
  }

  void backward(const typename Base::Cache& cache, const VecX<T>& dscore, bool, MatX<T>* dleft,
                MatX<T>* dright) override {
    const auto& c = static_cast<const CacheImpl&>(cache);
    if (dleft) {
      MatX<T> dlh(c.lh.rows(), c.lh.cols());
      for (Eigen::Index j = 0; j < dlh.cols(); ++j) dlh.col(j) = c.rh.col(j) * dscore(j);
      *dleft += l2_normalize_cols_backward(c.left, dlh);
    }
    if (dright) {
      MatX<T> drh(c.rh.rows(), c.rh.cols());
      for (Eigen::Index j = 0; j < drh.cols(); ++j) drh.col(j) = c.lh.col(j) * dscore(j);
      *dright += l2_normalize_cols_backward(c.right, drh);
    }
  }

 private:
  struct CacheImpl : Base::Cache {
    MatX<T> left, right, lh, rh;
  };
};

// Uniform random pairing of a batch with itself such that no element is its
// own partner; the shuffle is redrawn until it has no fixed point.
inline std::vector<int> sample_negative_partner(int batch, Rng& rng) {
  LOGO_REQUIRE(batch >= 2, "negative partners need at least two elements");
  std::vector<int> perm(batch);
  bool ok = false;
  while (!ok) {
    for (int i = 0; i < batch; ++i) perm[i] = i;
    rng.shuffle(perm);
    ok = true;
    for (int i = 0; i < batch; ++i)
      if (perm[i] == i) {
        ok = false;
        break;
      }
  }
  return perm;
}

// Separation objective for the affinity measure: mean score on joint pairs
// minus mean score on product pairs. Both batches share one forward pass so
// batch normalization sees identical statistics for the two sides. When
// grad_upstream is nonzero, grad_upstream * d(objective)/d(params) is
// accumulated into the measure's parameters.
template <typename T>
LossValue omega_objective(LocalAffinity<T>& f, const PairBatch<T>& joint,
                          const PairBatch<T>& product, double grad_upstream = 0.0,
                          bool update_running = true) {
  joint.validate();
  product.validate();
  LOGO_REQUIRE(joint.kind == PairBatch<T>::Kind::joint, "first batch must hold joint pairs");
  LOGO_REQUIRE(product.kind == PairBatch<T>::Kind::product, "second batch must hold product pairs");
  LOGO_REQUIRE(joint.left.cols() >= 1 && product.left.cols() >= 1, "empty pair batch");

  const Eigen::Index bj = joint.left.cols(), bp = product.left.cols();
  MatX<T> left(joint.left.rows(), bj + bp), right(joint.right.rows(), bj + bp);
  left.leftCols(bj) = joint.left;
  left.rightCols(bp) = product.left;
  right.leftCols(bj) = joint.right;
  right.rightCols(bp) = product.right;

  std::unique_ptr<typename LocalAffinity<T>::Cache> cache;
  VecX<T> s = f.score(left, right, true, update_running, grad_upstream != 0.0 ? &cache : nullptr);
  double joint_mean = 0.0, product_mean = 0.0;
  for (Eigen::Index j = 0; j < bj; ++j) joint_mean += double(s(j));
  for (Eigen::Index j = 0; j < bp; ++j) product_mean += double(s(bj + j));
  joint_mean /= double(bj);
  product_mean /= double(bp);

  if (grad_upstream != 0.0) {
    VecX<T> ds(bj + bp);
    for (Eigen::Index j = 0; j < bj; ++j) ds(j) = T(grad_upstream / double(bj));
    for (Eigen::Index j = 0; j < bp; ++j) ds(bj + j) = T(-grad_upstream / double(bp));
    f.backward(*cache, ds, true, nullptr, nullptr);
  }

  LossValue out;
  out.value = joint_mean - product_mean;
  out.parts["joint_mean"] = joint_mean;
  out.parts["product_mean"] = product_mean;
  return out;
}

// Mean affinity of paired columns under train-mode statistics, without any
// gradient work. Reported for monitoring when the term is inactive.
template <typename T>
double local_local_value(LocalAffinity<T>& f, const MatX<T>& l1, const MatX<T>& l2) {
  VecX<T> s = f.score(l1, l2, true, false, nullptr);
  double total = 0.0;
  for (Eigen::Index j = 0; j < s.size(); ++j) total += double(s(j));
  return total / double(s.size());
}

// Local-to-local term: mean affinity of paired views of the same image. The
// measure's parameters are frozen here; gradients flow only into the
// embeddings, scaled by `upstream`.
template <typename T>
LossValue local_local_loss(LocalAffinity<T>& f, EmbeddingBatch<T>& l1, EmbeddingBatch<T>& l2,
                           double upstream = 1.0) {
  LOGO_REQUIRE(l1.grad_enabled && l2.grad_enabled, "local views must carry gradients");
  LOGO_REQUIRE(l1.source_ids == l2.source_ids, "local views must pair the same source images");
  LOGO_REQUIRE(l1.batch() >= 1, "empty batch");

  std::unique_ptr<typename LocalAffinity<T>::Cache> cache;
  VecX<T> s = f.score(l1.values, l2.values, true, false, &cache);
  const Eigen::Index b = s.size();
  double total = 0.0;
  for (Eigen::Index j = 0; j < b; ++j) total += double(s(j));

  VecX<T> ds = VecX<T>::Constant(b, T(upstream / double(b)));
  f.backward(*cache, ds, false, &l1.grad, &l2.grad);

  LossValue out;
  out.value = total / double(b);
  return out;
}

}  // namespace logo

// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "logo/conv.hpp"
#include "logo/nn.hpp"

namespace logo {

enum class Variant { contrastive, noncontrastive };

inline std::string to_string(Variant v) {
  return v == Variant::contrastive ? "contrastive" : "noncontrastive";
}

inline Variant variant_from_string(const std::string& s) {
  if (s == "contrastive") return Variant::contrastive;
  if (s == "noncontrastive") return Variant::noncontrastive;
  throw ConfigError("unknown variant '" + s + "' (expected contrastive or noncontrastive)");
}

// Projection embeddings for one batch of views. Columns are samples;
// source_ids track which dataset instance produced each column. Batches with
// grad_enabled=false act as optimization constants: no loss may route
// gradients into them, and `grad` stays all-zero as a checkable witness.
template <typename T>
struct EmbeddingBatch {
  MatX<T> values;                        // [embed_dim, batch]
  MatX<T> grad;                          // same shape, accumulated by losses
  bool grad_enabled = false;
  std::vector<std::int64_t> source_ids;  // one per column

  void reset_grad() { grad.setZero(values.rows(), values.cols()); }
  Eigen::Index batch() const { return values.cols(); }
};

template <typename T>
EmbeddingBatch<T> detach(const EmbeddingBatch<T>& e) {
  EmbeddingBatch<T> out;
  out.values = e.values;
  out.grad_enabled = false;
  out.source_ids = e.source_ids;
  out.reset_grad();
  return out;
}

// Backbone plus projection head. features() output feeds evaluation; the
// projected embedding feeds the losses.
template <typename T>
class Encoder {
 public:
  struct Cache {
    typename TinyConvBackbone<T>::Cache backbone;
    typename Mlp<T>::Cache projection;
  };

  Encoder() = default;
  Encoder(std::vector<int> widths, int embed_dim)
      : backbone_(std::move(widths)),
        projection_({backbone_.feature_dim(), backbone_.feature_dim(), embed_dim}, true) {}

  void init(Rng& rng) {
    backbone_.init(rng);
    projection_.init(rng);
  }

  // images: [3, b*h*w]. Returns features [feat_dim, b] through `features` when
  // requested and the projected embeddings [embed_dim, b].
  MatX<T> forward(const MatX<T>& images, const ConvDims& d, bool train, bool update_running,
                  Cache* cache, MatX<T>* features = nullptr) {
    MatX<T> f = backbone_.forward(images, d, train, update_running, cache ? &cache->backbone : nullptr);
    if (features) *features = f;
    return projection_.forward(f, train, update_running, cache ? &cache->projection : nullptr);
  }

  void backward(const Cache& cache, const MatX<T>& dembed) {
    MatX<T> dfeat = projection_.backward(cache.projection, dembed);
    backbone_.backward(cache.backbone, dfeat);
  }

  void collect_params(ParamList<T>& out, const std::string& prefix) {
    backbone_.collect_params(out, prefix + ".backbone");
    projection_.collect_params(out, prefix + ".projection");
  }

  int feature_dim() const { return backbone_.feature_dim(); }
  int embed_dim() const { return projection_.out_dim(); }
  TinyConvBackbone<T>& backbone() { return backbone_; }
  Mlp<T>& projection() { return projection_; }

 private:
  TinyConvBackbone<T> backbone_;
  Mlp<T> projection_;
};

// FIFO ring of unit-norm embedding columns serving as negatives. Entries are
// consumed oldest-first by construction: enqueue overwrites at a cursor that
// advances modulo the capacity.
template <typename T>
class NegativeQueue {
 public:
  NegativeQueue() = default;
  NegativeQueue(int embed_dim, int capacity, Rng& rng) : buf_(embed_dim, capacity) {
    LOGO_REQUIRE(capacity > 0, "queue capacity must be positive");
    for (Eigen::Index j = 0; j < buf_.cols(); ++j) {
      T n = T(0);
      while (n < T(1e-6)) {
        for (Eigen::Index i = 0; i < buf_.rows(); ++i) buf_(i, j) = T(rng.normal());
        n = buf_.col(j).norm();
      }
      buf_.col(j) /= n;
    }
  }

  void enqueue(const MatX<T>& batch) {
    LOGO_REQUIRE(batch.rows() == buf_.rows(), "queue embedding width mismatch");
    LOGO_REQUIRE(batch.cols() <= buf_.cols(), "enqueue batch exceeds queue capacity");
    LOGO_REQUIRE(cols_unit_norm(batch, T(1e-3)), "queue entries must be L2-normalized");
    for (Eigen::Index j = 0; j < batch.cols(); ++j) {
      buf_.col(head_) = batch.col(j);
      head_ = (head_ + 1) % buf_.cols();
    }
  }

  const MatX<T>& data() const { return buf_; }
  MatX<T>& data() { return buf_; }
  Eigen::Index capacity() const { return buf_.cols(); }
  Eigen::Index head() const { return head_; }
  void set_head(Eigen::Index h) { head_ = h; }

 private:
  MatX<T> buf_;
  Eigen::Index head_ = 0;
};

// Full embedding stack for one training run. The contrastive variant carries a
// momentum copy of the encoder; the noncontrastive variant carries the
// predictor used on the similarity branch.
template <typename T>
struct EncoderState {
  Variant variant = Variant::noncontrastive;
  Encoder<T> online;
  std::optional<Encoder<T>> momentum;
  std::optional<Mlp<T>> predictor;

  void collect_params(ParamList<T>& out) {
    online.collect_params(out, "online");
    if (momentum) momentum->collect_params(out, "momentum");
    if (predictor) predictor->collect_params(out, "predictor");
  }

  // Parameters updated by the representation step: everything the encoder
  // gradient reaches. The momentum copy is excluded, it only moves via EMA.
  void collect_trainable(ParamList<T>& out) {
    online.collect_params(out, "online");
    if (predictor) predictor->collect_params(out, "predictor");
  }
};

template <typename T>
EncoderState<T> make_encoder_state(Variant variant, std::vector<int> widths, int embed_dim,
                                   int predictor_hidden, Rng& rng) {
  EncoderState<T> st;
  st.variant = variant;
  st.online = Encoder<T>(widths, embed_dim);
  st.online.init(rng);
  if (variant == Variant::contrastive) {
    st.momentum = st.online;  // exact copy, including initialization
  } else {
    if (predictor_hidden > 0)
      st.predictor = Mlp<T>({embed_dim, predictor_hidden, embed_dim}, true);
    else
      st.predictor = Mlp<T>({embed_dim, embed_dim}, false);  // single linear map
    st.predictor->init(rng);
  }
  return st;
}

// EMA update of the momentum copy toward the online encoder:
// p_m <- m * p_m + (1 - m) * p_online, applied to parameters and buffers.
// Accumulation runs in double so that m = 1 leaves the copy bitwise unchanged
// and m = 0 makes it a bitwise clone of the online encoder.
template <typename T>
void momentum_update(EncoderState<T>& st, double m) {
  LOGO_REQUIRE(st.momentum.has_value(), "momentum update requires a momentum encoder");
  LOGO_REQUIRE(m >= 0.0 && m <= 1.0, "momentum coefficient must lie in [0, 1]");
  ParamList<T> online, mom;
  st.online.collect_params(online, "e");
  st.momentum->collect_params(mom, "e");
  LOGO_REQUIRE(online.size() == mom.size(), "momentum copy structure mismatch");
  for (std::size_t i = 0; i < online.size(); ++i) {
    auto& ov = online[i].p->v;
    auto& mv = mom[i].p->v;
    LOGO_REQUIRE(ov.rows() == mv.rows() && ov.cols() == mv.cols(),
                 "momentum copy shape mismatch at " + online[i].name);
    for (Eigen::Index k = 0; k < ov.size(); ++k)
      mv.data()[k] = T(m * double(mv.data()[k]) + (1.0 - m) * double(ov.data()[k]));
  }
}

// Runs a packed image batch through the chosen encoder. Momentum embeddings
// are produced without gradient caches and arrive detached.
template <typename T>
EmbeddingBatch<T> encode(EncoderState<T>& st, const MatX<T>& images, const ConvDims& d,
                         const std::vector<std::int64_t>& source_ids, bool use_momentum,
                         typename Encoder<T>::Cache* cache) {
  LOGO_REQUIRE(Eigen::Index(source_ids.size()) == Eigen::Index(d.b), "one source id per image");
  EmbeddingBatch<T> out;
  out.source_ids = source_ids;
  if (use_momentum) {
    LOGO_REQUIRE(st.momentum.has_value(), "momentum encoding requires a momentum encoder");
    // Batch statistics are used but running buffers stay frozen; the momentum
    // copy evolves only through the EMA.
    out.values = st.momentum->forward(images, d, true, false, nullptr);
    out.grad_enabled = false;
  } else {
    out.values = st.online.forward(images, d, true, true, cache);
    out.grad_enabled = cache != nullptr;
  }
  out.reset_grad();
  return out;
}

}  // namespace logo

// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <map>
#include <string>

#include "logo/encoder.hpp"
#include "logo/linalg.hpp"

namespace logo {

struct LossValue {
  double value = 0.0;
  std::map<std::string, double> parts;
};

struct LossConfig {
  double temperature = 0.1;
  bool symmetrize = true;
};

// InfoNCE over unit-norm embeddings: each anchor column of z is scored against
// its positive column in zpos and every column of `negatives`, and the loss is
// the mean cross entropy of picking the positive. Gradients, scaled by
// `upstream`, are accumulated into *dz and *dzpos when non-null; negatives are
// constants and never receive gradients.
template <typename T>
double info_nce(const MatX<T>& z, const MatX<T>& zpos, const MatX<T>& negatives, double tau,
                double upstream = 1.0, MatX<T>* dz = nullptr, MatX<T>* dzpos = nullptr) {
  LOGO_REQUIRE(tau > 0.0, "temperature must be positive");
  LOGO_REQUIRE(z.rows() == zpos.rows() && z.cols() == zpos.cols(), "anchor/positive shape mismatch");
  LOGO_REQUIRE(negatives.rows() == z.rows(), "negative embedding width mismatch");
  LOGO_REQUIRE(z.cols() >= 1, "empty batch");
  LOGO_REQUIRE(negatives.cols() >= 1, "at least one negative required");
  LOGO_REQUIRE(cols_unit_norm(z, T(1e-3)) && cols_unit_norm(zpos, T(1e-3)) &&
                   cols_unit_norm(negatives, T(1e-3)),
               "info_nce inputs must be L2-normalized");

  const Eigen::Index b = z.cols(), k = negatives.cols();
  MatX<T> neg_logits = negatives.transpose() * z;  // [k, b]
  double total = 0.0;
  MatX<T> probs;  // negative-class softmax mass, reused by the backward GEMM
  VecX<T> pos_coef;
  if (dz || dzpos) {
    probs.resize(k, b);
    pos_coef.resize(b);
  }
  for (Eigen::Index j = 0; j < b; ++j) {
    double a = double(z.col(j).dot(zpos.col(j))) / tau;
    double m = a;
    for (Eigen::Index i = 0; i < k; ++i) m = std::max(m, double(neg_logits(i, j)) / tau);
    double denom = std::exp(a - m);
    for (Eigen::Index i = 0; i < k; ++i) denom += std::exp(double(neg_logits(i, j)) / tau - m);
    double lse = m + std::log(denom);
    total += lse - a;
    if (dz || dzpos) {
      double ppos = std::exp(a - lse);
      pos_coef(j) = T(ppos - 1.0);
      for (Eigen::Index i = 0; i < k; ++i) probs(i, j) = T(std::exp(double(neg_logits(i, j)) / tau - lse));
    }
  }
  const double value = total / double(b);
  if (dz || dzpos) {
    const T coef = T(upstream / (double(b) * tau));
    if (dz) {
      dz->noalias() += (negatives * probs) * coef;
      for (Eigen::Index j = 0; j < b; ++j) dz->col(j) += zpos.col(j) * (pos_coef(j) * coef);
    }
    if (dzpos)
      for (Eigen::Index j = 0; j < b; ++j) dzpos->col(j) += z.col(j) * (pos_coef(j) * coef);
  }
  return value;
}

// Negative cosine similarity between the predicted view h(z1) and the constant
// target z2, averaged over the batch. Both sides are L2-normalized internally.
// Gradients flow into z1 and the predictor's parameters only; z2 is treated as
// detached by construction.
template <typename T>
double cosine_loss(const MatX<T>& z1, const MatX<T>& z2, Mlp<T>& predictor, bool update_running,
                   double upstream = 1.0, MatX<T>* dz1 = nullptr) {
  LOGO_REQUIRE(z1.rows() == z2.rows() && z1.cols() == z2.cols(), "view shape mismatch");
  LOGO_REQUIRE(z1.cols() >= 1, "empty batch");
  typename Mlp<T>::Cache cache;
  MatX<T> p = predictor.forward(z1, true, update_running, dz1 ? &cache : nullptr);
  MatX<T> phat = l2_normalize_cols(p);
  MatX<T> that = l2_normalize_cols(z2);
  const Eigen::Index b = z1.cols();
  double total = 0.0;
  for (Eigen::Index j = 0; j < b; ++j) total += double(phat.col(j).dot(that.col(j)));
  const double value = -total / double(b);
  if (dz1) {
    MatX<T> dphat = that * T(-upstream / double(b));
    MatX<T> dp = l2_normalize_cols_backward(p, dphat);
    dz1->noalias() += predictor.backward(cache, dp);
  }
  return value;
}

namespace detail {

template <typename T>
void require_target(const EmbeddingBatch<T>& t, const char* what) {
  LOGO_REQUIRE(!t.grad_enabled, std::string(what) + " must be detached from the encoder");
}

template <typename T>
void require_aligned(const EmbeddingBatch<T>& a, const EmbeddingBatch<T>& b) {
  LOGO_REQUIRE(a.source_ids == b.source_ids, "view batches must pair the same source images");
}

}  // namespace detail

// Global-to-global similarity. Contrastive: symmetrized InfoNCE where each
// normalized online view is the anchor and the opposite detached momentum view
// is the positive, scored against the queue. Noncontrastive: symmetrized
// negative cosine through the predictor against detached opposite views.
// Gradients accumulate into g1.grad / g2.grad (and predictor parameters).
template <typename T>
LossValue global_global_loss(EncoderState<T>& st, EmbeddingBatch<T>& g1, EmbeddingBatch<T>& g2,
                             const EmbeddingBatch<T>& t1, const EmbeddingBatch<T>& t2,
                             const NegativeQueue<T>* queue, const LossConfig& cfg) {
  LOGO_REQUIRE(g1.grad_enabled && g2.grad_enabled, "online globals must carry gradients");
  detail::require_target(t1, "global targets");
  detail::require_target(t2, "global targets");
  detail::require_aligned(g1, g2);
  detail::require_aligned(g1, t1);
  detail::require_aligned(g1, t2);

  LossValue out;
  const double w = cfg.symmetrize ? 0.5 : 1.0;
  if (st.variant == Variant::contrastive) {
    LOGO_REQUIRE(queue != nullptr, "contrastive loss requires a negative queue");
    double a = info_nce(g1.values, t2.values, queue->data(), cfg.temperature, w, &g1.grad);
    out.parts["g1_t2"] = a;
    out.value = a * w;
    if (cfg.symmetrize) {
      double b = info_nce(g2.values, t1.values, queue->data(), cfg.temperature, w, &g2.grad);
      out.parts["g2_t1"] = b;
      out.value += b * w;
    }
  } else {
    LOGO_REQUIRE(st.predictor.has_value(), "noncontrastive loss requires a predictor");
    double a = cosine_loss(g1.values, t2.values, *st.predictor, true, w, &g1.grad);
    out.parts["g1_t2"] = a;
    out.value = a * w;
    if (cfg.symmetrize) {
      double b = cosine_loss(g2.values, t1.values, *st.predictor, true, w, &g2.grad);
      out.parts["g2_t1"] = b;
      out.value += b * w;
    }
  }
  return out;
}

// Local-to-global similarity: the plain sum of one term per (local, global)
// pair, locals as anchors, detached globals as targets. Four terms with two
// locals and two globals; no averaging over the term count.
template <typename T>
LossValue local_global_loss(EncoderState<T>& st, EmbeddingBatch<T>& l1, EmbeddingBatch<T>& l2,
                            const EmbeddingBatch<T>& t1, const EmbeddingBatch<T>& t2,
                            const NegativeQueue<T>* queue, const LossConfig& cfg) {
  LOGO_REQUIRE(l1.grad_enabled && l2.grad_enabled, "online locals must carry gradients");
  detail::require_target(t1, "global targets");
  detail::require_target(t2, "global targets");
  detail::require_aligned(l1, l2);
  detail::require_aligned(l1, t1);
  detail::require_aligned(l1, t2);

  LossValue out;
  EmbeddingBatch<T>* locals[2] = {&l1, &l2};
  const EmbeddingBatch<T>* targets[2] = {&t1, &t2};
  const char* names[2][2] = {{"l1_g1", "l1_g2"}, {"l2_g1", "l2_g2"}};
  for (int i = 0; i < 2; ++i) {
    for (int j = 0; j < 2; ++j) {
      double v;
      if (st.variant == Variant::contrastive) {
        LOGO_REQUIRE(queue != nullptr, "contrastive loss requires a negative queue");
        v = info_nce(locals[i]->values, targets[j]->values, queue->data(), cfg.temperature, 1.0,
                     &locals[i]->grad);
      } else {
        LOGO_REQUIRE(st.predictor.has_value(), "noncontrastive loss requires a predictor");
        v = cosine_loss(locals[i]->values, targets[j]->values, *st.predictor, true, 1.0,
                        &locals[i]->grad);
      }
      out.parts[names[i][j]] = v;
      out.value += v;
    }
  }
  return out;
}

}  // namespace logo

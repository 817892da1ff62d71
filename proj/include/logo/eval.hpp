// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include "logo/affinity.hpp"
#include "logo/data.hpp"
#include "logo/encoder.hpp"
#include "logo/optim.hpp"

namespace logo {

// Backbone features (pre-projection) with labels, columns L2-normalized.
struct FeatureBank {
  Mat features;  // [feat_dim, count]
  std::vector<int> labels;
};

inline FeatureBank build_feature_bank(Encoder<real>& enc, const Dataset& ds,
                                      const std::vector<int>& indices, int batch = 256) {
  LOGO_REQUIRE(!indices.empty(), "feature bank needs at least one sample");
  LOGO_REQUIRE(batch >= 1, "batch must be positive");
  FeatureBank bank;
  bank.features.resize(enc.feature_dim(), Eigen::Index(indices.size()));
  bank.labels.reserve(indices.size());
  const int h = ds.samples[indices[0]].image.h, w = ds.samples[indices[0]].image.w;
  for (std::size_t start = 0; start < indices.size(); start += std::size_t(batch)) {
    const std::size_t n = std::min(std::size_t(batch), indices.size() - start);
    std::vector<Image> chunk;
    chunk.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
      const auto& s = ds.samples[indices[start + i]];
      LOGO_REQUIRE(s.image.h == h && s.image.w == w, "feature bank requires equal image sizes");
      chunk.push_back(s.image);
      bank.labels.push_back(s.label);
    }
    Mat f;
    enc.forward(pack_images(chunk), {int(n), h, w}, false, false, nullptr, &f);
    bank.features.middleCols(Eigen::Index(start), Eigen::Index(n)) = l2_normalize_cols(f);
  }
  return bank;
}

struct KnnConfig {
  int k = 20;
  double vote_temperature = 0.07;
};

namespace detail {

// Similarity of one query column against every bank column, accumulated in
// double with ascending element order. Both the classifier and any external
// cross-check must use this exact kernel so candidate rankings agree bit for
// bit.
inline std::vector<double> knn_similarities(const Mat& bank, const Mat& queries, Eigen::Index q) {
  std::vector<double> sims(std::size_t(bank.cols()));
  for (Eigen::Index j = 0; j < bank.cols(); ++j) {
    double acc = 0.0;
    for (Eigen::Index i = 0; i < bank.rows(); ++i) acc += double(bank(i, j)) * double(queries(i, q));
    sims[std::size_t(j)] = acc;
  }
  return sims;
}

}  // namespace detail

// Weighted k-nearest-neighbor classification over cosine similarity. The k
// most similar bank entries vote exp(sim / temperature) for their label.
// Neighbor order breaks similarity ties by lower index; label ties resolve to
// the lower class id.
inline std::vector<int> knn_classify(const FeatureBank& bank, const Mat& queries, int num_classes,
                                     const KnnConfig& cfg = {}) {
  LOGO_REQUIRE(bank.features.cols() >= 1, "empty feature bank");
  LOGO_REQUIRE(bank.features.rows() == queries.rows(), "feature width mismatch");
  LOGO_REQUIRE(cfg.k >= 1, "k must be positive");
  LOGO_REQUIRE(cfg.vote_temperature > 0.0, "vote temperature must be positive");
  LOGO_REQUIRE(num_classes >= 1, "need at least one class");
  const Eigen::Index m = bank.features.cols();
  const int k = int(std::min<Eigen::Index>(cfg.k, m));
  std::vector<int> out(static_cast<std::size_t>(queries.cols()));
  std::vector<int> order(static_cast<std::size_t>(m));
  for (Eigen::Index q = 0; q < queries.cols(); ++q) {
    std::vector<double> sims = detail::knn_similarities(bank.features, queries, q);
    std::iota(order.begin(), order.end(), 0);
    std::partial_sort(order.begin(), order.begin() + k, order.end(), [&](int a, int b) {
      if (sims[a] != sims[b]) return sims[a] > sims[b];
      return a < b;
    });
    std::vector<double> votes(std::size_t(num_classes), 0.0);
    for (int i = 0; i < k; ++i) {
      const int idx = order[std::size_t(i)];
      const int label = bank.labels[std::size_t(idx)];
      LOGO_REQUIRE(label >= 0 && label < num_classes, "bank label outside class range");
      votes[std::size_t(label)] += std::exp(sims[std::size_t(idx)] / cfg.vote_temperature);
    }
    int best = 0;
    for (int c = 1; c < num_classes; ++c)
      if (votes[std::size_t(c)] > votes[std::size_t(best)]) best = c;
    out[std::size_t(q)] = best;
  }
  return out;
}

inline double knn_top1(const FeatureBank& bank, const FeatureBank& queries, int num_classes,
                       const KnnConfig& cfg = {}) {
  std::vector<int> pred = knn_classify(bank, queries.features, num_classes, cfg);
  LOGO_REQUIRE(pred.size() == queries.labels.size(), "query label count mismatch");
  std::size_t hit = 0;
  for (std::size_t i = 0; i < pred.size(); ++i)
    if (pred[i] == queries.labels[i]) ++hit;
  return double(hit) / double(pred.size());
}

// Convenience monitor used during training: bank from the train split,
// queries from the val split.
inline double knn_monitor(Encoder<real>& enc, const Dataset& ds, const KnnConfig& cfg = {},
                          int batch = 256) {
  FeatureBank bank = build_feature_bank(enc, ds, ds.split("train"), batch);
  FeatureBank queries = build_feature_bank(enc, ds, ds.split("val"), batch);
  return knn_top1(bank, queries, ds.num_classes(), cfg);
}

struct ProbeConfig {
  int epochs = 30;
  double lr = 0.3;
  double momentum = 0.9;
  double weight_decay = 0.0;
  int batch = 256;
  std::uint64_t seed = 11;
};

struct ProbeResult {
  double train_top1 = 0.0;
  double val_top1 = 0.0;
};

namespace detail {

inline double probe_accuracy(Linear<real>& head, const FeatureBank& bank) {
  Mat logits = head.forward(bank.features, nullptr);
  std::size_t hit = 0;
  for (Eigen::Index j = 0; j < logits.cols(); ++j) {
    int best = 0;
    for (Eigen::Index c = 1; c < logits.rows(); ++c)
      if (logits(c, j) > logits(best, j)) best = int(c);
    if (best == bank.labels[std::size_t(j)]) ++hit;
  }
  return double(hit) / double(logits.cols());
}

}  // namespace detail

// Multinomial logistic regression on frozen features: a single linear head
// trained with SGD and a cosine schedule. The encoder is not touched.
inline ProbeResult linear_probe(const FeatureBank& train, const FeatureBank& val, int num_classes,
                                const ProbeConfig& cfg = {}) {
  LOGO_REQUIRE(train.features.cols() >= 1, "empty probe training bank");
  LOGO_REQUIRE(cfg.epochs >= 1 && cfg.batch >= 1, "invalid probe schedule");
  const Eigen::Index m = train.features.cols();
  Linear<real> head(int(train.features.rows()), num_classes, true);
  ParamList<real> params;
  head.collect_params(params, "probe");
  Sgd<real> opt({cfg.momentum, cfg.weight_decay});

  const std::int64_t steps_per_epoch = (m + cfg.batch - 1) / cfg.batch;
  const std::int64_t total = std::int64_t(cfg.epochs) * steps_per_epoch;
  std::int64_t t = 0;
  std::vector<int> order(static_cast<std::size_t>(m));
  for (int e = 0; e < cfg.epochs; ++e) {
    std::iota(order.begin(), order.end(), 0);
    Rng rng = derive_rng(cfg.seed, "probe_shuffle", std::uint64_t(e));
    rng.shuffle(order);
    for (Eigen::Index start = 0; start < m; start += cfg.batch) {
      const Eigen::Index n = std::min<Eigen::Index>(cfg.batch, m - start);
      Mat x(train.features.rows(), n);
      std::vector<int> y(static_cast<std::size_t>(n));
      for (Eigen::Index i = 0; i < n; ++i) {
        x.col(i) = train.features.col(order[std::size_t(start + i)]);
        y[std::size_t(i)] = train.labels[std::size_t(order[std::size_t(start + i)])];
      }
      typename Linear<real>::Cache cache;
      Mat logits = head.forward(x, &cache);
      Mat dlogits(logits.rows(), logits.cols());
      for (Eigen::Index j = 0; j < n; ++j) {
        double mx = logits.col(j).maxCoeff();
        double denom = 0.0;
        for (Eigen::Index c = 0; c < logits.rows(); ++c) denom += std::exp(double(logits(c, j)) - mx);
        for (Eigen::Index c = 0; c < logits.rows(); ++c) {
          double p = std::exp(double(logits(c, j)) - mx) / denom;
          dlogits(c, j) = real((p - (c == y[std::size_t(j)] ? 1.0 : 0.0)) / double(n));
        }
      }
      zero_grads(params);
      head.backward(cache, dlogits);
      opt.step(params, lr_at(t, total, cfg.lr, 0.0));
      ++t;
    }
  }
  ProbeResult r;
  r.train_top1 = detail::probe_accuracy(head, train);
  r.val_top1 = val.features.cols() > 0 ? detail::probe_accuracy(head, val) : 0.0;
  return r;
}

struct AffinityRow {
  std::string id;
  double cosine_raw = 0.0, cosine_norm = 0.0;
  double learned_raw = 0.0, learned_norm = 0.0;
};

struct AffinityReport {
  std::vector<AffinityRow> rows;
};

namespace detail {

inline void minmax_normalize(std::vector<AffinityRow>& rows, double AffinityRow::*raw,
                             double AffinityRow::*norm) {
  double lo = rows.front().*raw, hi = rows.front().*raw;
  for (const auto& r : rows) {
    lo = std::min(lo, r.*raw);
    hi = std::max(hi, r.*raw);
  }
  for (auto& r : rows) r.*norm = hi > lo ? (r.*raw - lo) / (hi - lo) : 1.0;
}

}  // namespace detail

// Scores each candidate crop against a reference crop with both the cosine of
// the projected embeddings and the learned measure, reporting raw values and
// min-max normalized values. A single candidate normalizes to 1.0 under both
// measures.
inline AffinityReport affinity_compare(Encoder<real>& enc, LocalAffinity<real>& measure,
                                       const Image& reference,
                                       const std::vector<std::pair<std::string, Image>>& candidates) {
  LOGO_REQUIRE(!candidates.empty(), "affinity comparison needs at least one candidate");
  std::vector<Image> batch;
  batch.push_back(reference);
  for (const auto& [id, im] : candidates) {
    LOGO_REQUIRE(im.h == reference.h && im.w == reference.w,
                 "candidate crops must match the reference size");
    batch.push_back(im);
  }
  Mat z = enc.forward(pack_images(batch), {int(batch.size()), reference.h, reference.w}, false,
                      false, nullptr);
  Mat zn = l2_normalize_cols(z);
  const Eigen::Index n = Eigen::Index(candidates.size());
  Mat left(zn.rows(), n), right(zn.rows(), n);
  for (Eigen::Index j = 0; j < n; ++j) {
    left.col(j) = zn.col(0);
    right.col(j) = zn.col(j + 1);
  }
  VecX<real> learned = measure.score(left, right, false, false, nullptr);
  AffinityReport rep;
  rep.rows.resize(std::size_t(n));
  for (Eigen::Index j = 0; j < n; ++j) {
    auto& row = rep.rows[std::size_t(j)];
    row.id = candidates[std::size_t(j)].first;
    row.cosine_raw = double(zn.col(0).dot(zn.col(j + 1)));
    row.learned_raw = double(learned(j));
  }
  detail::minmax_normalize(rep.rows, &AffinityRow::cosine_raw, &AffinityRow::cosine_norm);
  detail::minmax_normalize(rep.rows, &AffinityRow::learned_raw, &AffinityRow::learned_norm);
  return rep;
}

inline std::string format_affinity_report(const AffinityReport& rep) {
  std::string out = "crop\tcosine_raw\tcosine_norm\tlearned_raw\tlearned_norm\n";
  char line[256];
  for (const auto& r : rep.rows) {
    std::snprintf(line, sizeof(line), "%s\t%.6f\t%.6f\t%.6f\t%.6f\n", r.id.c_str(), r.cosine_raw,
                  r.cosine_norm, r.learned_raw, r.learned_norm);
    out += line;
  }
  return out;
}

}  // namespace logo

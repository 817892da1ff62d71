// SPDX-License-Identifier: Apache-2.0
// Shared fixtures and independent oracles used across the test binaries.
#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <vector>

#include "logo/eval.hpp"
#include "logo/image.hpp"
#include "logo/nn.hpp"
#include "logo/rng.hpp"

namespace testutil {

// Deterministic colorful image: smooth gradients plus a seeded checker block,
// so crops from different corners are visually distinct.
inline logo::Image make_test_image(int h, int w, unsigned seed) {
  logo::Image im(h, w);
  logo::Rng rng = logo::derive_rng(seed, "test_image");
  const float ox = float(rng.uniform());
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const float fy = float(y) / float(h - 1), fx = float(x) / float(w - 1);
      im.at(y, x, 0) = 0.5f + 0.5f * std::sin(6.28318f * (fx + ox));
      im.at(y, x, 1) = fy;
      im.at(y, x, 2) = ((x / 4 + y / 4) % 2) ? 0.8f : 0.2f;
    }
  for (auto& v : im.px) v = std::clamp(v + 0.01f * float(rng.normal()), 0.f, 1.f);
  return im;
}

// Central-difference gradient check. `loss` re-evaluates the scalar objective
// from the current parameter values; analytic gradients must already sit in
// the `.g` slots. Compares on up to `coords_per_tensor` sampled coordinates
// per tensor and returns ||ga - gf|| / max(||ga||, ||gf||) over the sample.
template <typename LossFn>
double fd_check_params(logo::ParamList<double>& params, LossFn loss, double eps,
                       int coords_per_tensor, logo::Rng& rng, std::string* worst = nullptr) {
  std::vector<double> ga, gf;
  double worst_gap = -1.0;
  for (auto& pr : params) {
    if (!pr.trainable) continue;
    auto& v = pr.p->v;
    auto& g = pr.p->g;
    const Eigen::Index n = v.size();
    for (int c = 0; c < coords_per_tensor && c < n; ++c) {
      const Eigen::Index i =
          n <= coords_per_tensor ? c : Eigen::Index(rng.uniform_int(std::uint64_t(n)));
      const double saved = v.data()[i];
      v.data()[i] = saved + eps;
      const double lp = loss();
      v.data()[i] = saved - eps;
      const double lm = loss();
      v.data()[i] = saved;
      const double fd = (lp - lm) / (2.0 * eps);
      ga.push_back(g.data()[i]);
      gf.push_back(fd);
      if (std::abs(fd - g.data()[i]) > worst_gap) {
        worst_gap = std::abs(fd - g.data()[i]);
        if (worst) *worst = pr.name + "[" + std::to_string(i) + "] analytic " +
                            std::to_string(g.data()[i]) + " fd " + std::to_string(fd);
      }
    }
  }
  double na = 0.0, nf = 0.0, nd = 0.0;
  for (std::size_t i = 0; i < ga.size(); ++i) {
    na += ga[i] * ga[i];
    nf += gf[i] * gf[i];
    nd += (ga[i] - gf[i]) * (ga[i] - gf[i]);
  }
  const double denom = std::max(std::sqrt(na), std::sqrt(nf));
  return denom > 0.0 ? std::sqrt(nd) / denom : std::sqrt(nd);
}

// Same check for a gradient that lives in a plain buffer (embedding inputs).
template <typename LossFn>
double fd_check_buffer(double* data, Eigen::Index n, const double* analytic, LossFn loss,
                       double eps, int coords, logo::Rng& rng) {
  std::vector<double> ga, gf;
  for (int c = 0; c < coords && c < n; ++c) {
    const Eigen::Index i = n <= coords ? c : Eigen::Index(rng.uniform_int(std::uint64_t(n)));
    const double saved = data[i];
    data[i] = saved + eps;
    const double lp = loss();
    data[i] = saved - eps;
    const double lm = loss();
    data[i] = saved;
    ga.push_back(analytic[i]);
    gf.push_back((lp - lm) / (2.0 * eps));
  }
  double na = 0.0, nf = 0.0, nd = 0.0;
  for (std::size_t i = 0; i < ga.size(); ++i) {
    na += ga[i] * ga[i];
    nf += gf[i] * gf[i];
    nd += (ga[i] - gf[i]) * (ga[i] - gf[i]);
  }
  const double denom = std::max(std::sqrt(na), std::sqrt(nf));
  return denom > 0.0 ? std::sqrt(nd) / denom : std::sqrt(nd);
}

// Brute-force nearest-neighbor classifier. Reimplements candidate selection
// (full sort) and voting from scratch; shares only the documented similarity
// accumulation order (plain ascending scalar loop in double).
inline std::vector<int> knn_oracle(const logo::FeatureBank& bank,
                                   const logo::MatX<logo::real>& queries, int num_classes,
                                   const logo::KnnConfig& cfg) {
  const Eigen::Index m = bank.features.cols();
  const int k = int(std::min<Eigen::Index>(cfg.k, m));
  std::vector<int> out;
  for (Eigen::Index q = 0; q < queries.cols(); ++q) {
    std::vector<std::pair<double, int>> scored;
    for (Eigen::Index j = 0; j < m; ++j) {
      double s = 0.0;
      for (Eigen::Index r = 0; r < bank.features.rows(); ++r)
        s += double(bank.features(r, j)) * double(queries(r, q));
      scored.emplace_back(s, int(j));
    }
    std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
      if (a.first != b.first) return a.first > b.first;
      return a.second < b.second;
    });
    std::vector<double> votes(std::size_t(num_classes), 0.0);
    for (int i = 0; i < k; ++i)
      votes[std::size_t(bank.labels[std::size_t(scored[std::size_t(i)].second)])] +=
          std::exp(scored[std::size_t(i)].first / cfg.vote_temperature);
    int best = 0;
    for (int c = 1; c < num_classes; ++c)
      if (votes[std::size_t(c)] > votes[std::size_t(best)]) best = c;
    out.push_back(best);
  }
  return out;
}

}  // namespace testutil

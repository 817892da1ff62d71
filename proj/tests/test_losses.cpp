// SPDX-License-Identifier: Apache-2.0
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "logo/digest.hpp"
#include "logo/losses.hpp"
#include "oracle_helpers.hpp"

using namespace logo;

namespace {

template <typename T>
MatX<T> random_unit_cols(Eigen::Index r, Eigen::Index c, Rng& rng) {
  MatX<T> m(r, c);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = T(rng.normal());
  return l2_normalize_cols(m);
}

// Predictor fixture that computes the identity map.
Mlp<double> identity_predictor(int n) {
  Mlp<double> p({n, n}, false);
  p.linears()[0].weight().v = MatX<double>::Identity(n, n);
  p.linears()[0].bias().v.setZero();
  return p;
}

template <typename T>
EmbeddingBatch<T> make_batch(const MatX<T>& values, bool grad_enabled,
                             std::vector<std::int64_t> ids) {
  EmbeddingBatch<T> e;
  e.values = values;
  e.grad_enabled = grad_enabled;
  e.source_ids = std::move(ids);
  e.reset_grad();
  return e;
}

}  // namespace

const NegativeQueue<double>* const kNoQueue = nullptr;

TEST_CASE("info_nce equals ln(K+1) when every candidate scores the same") {
  for (int k : {1, 7, 64}) {
    MatX<double> e = MatX<double>::Zero(5, 3);
    e.row(0).setOnes();  // every column is the same unit vector
    MatX<double> negs = MatX<double>::Zero(5, k);
    negs.row(0).setOnes();
    for (double tau : {0.07, 0.1, 0.5}) {
      const double v = info_nce(e, e, negs, tau);
      CHECK(v == doctest::Approx(std::log(double(k + 1))).epsilon(1e-12));
    }
  }
}

TEST_CASE("info_nce is strictly below ln(K+1) when the positive dominates") {
  Rng rng = derive_rng(1, "nce");
  MatX<double> z = random_unit_cols<double>(8, 4, rng);
  MatX<double> negs = random_unit_cols<double>(8, 16, rng);
  const double v = info_nce(z, z, negs, 0.1);  // positive similarity is maximal
  CHECK(v < std::log(17.0));
  CHECK(v > 0.0);
}

TEST_CASE("info_nce gradients match finite differences") {
  Rng rng = derive_rng(2, "nce_fd");
  MatX<double> z = random_unit_cols<double>(6, 5, rng);
  MatX<double> zpos = random_unit_cols<double>(6, 5, rng);
  MatX<double> negs = random_unit_cols<double>(6, 9, rng);
  MatX<double> dz = MatX<double>::Zero(6, 5), dzpos = MatX<double>::Zero(6, 5);
  info_nce(z, zpos, negs, 0.2, 1.0, &dz, &dzpos);

  auto loss_z = [&]() { return info_nce(z, zpos, negs, 0.2); };
  CHECK(testutil::fd_check_buffer(z.data(), z.size(), dz.data(), loss_z, 1e-6, 25, rng) < 1e-7);
  CHECK(testutil::fd_check_buffer(zpos.data(), zpos.size(), dzpos.data(), loss_z, 1e-6, 25, rng) <
        1e-7);

  // `upstream` scales gradients linearly.
  MatX<double> dz2 = MatX<double>::Zero(6, 5);
  info_nce(z, zpos, negs, 0.2, 2.5, &dz2);
  CHECK((dz2 - 2.5 * dz).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("info_nce rejects unnormalized inputs and missing negatives") {
  Rng rng = derive_rng(3, "nce_bad");
  MatX<double> z = random_unit_cols<double>(4, 2, rng);
  MatX<double> bad = z * 2.0;
  MatX<double> negs = random_unit_cols<double>(4, 3, rng);
  CHECK_THROWS_AS(info_nce(bad, z, negs, 0.1), ContractViolation);
  CHECK_THROWS_AS(info_nce(z, bad, negs, 0.1), ContractViolation);
  CHECK_THROWS_AS(info_nce(z, z, MatX<double>(4, 0), 0.1), ContractViolation);
  CHECK_THROWS_AS(info_nce(z, z, negs, 0.0), ContractViolation);
}

TEST_CASE("cosine loss with an identity predictor and equal views is exactly -1") {
  Rng rng = derive_rng(4, "cos");
  MatX<double> z = random_unit_cols<double>(6, 4, rng);
  Mlp<double> pred = identity_predictor(6);
  const double v = cosine_loss(z, z, pred, false);
  CHECK(v == doctest::Approx(-1.0).epsilon(1e-12));

  // Orthogonal views score zero.
  MatX<double> a = MatX<double>::Zero(4, 1), b = MatX<double>::Zero(4, 1);
  a(0, 0) = 1.0;
  b(1, 0) = 1.0;
  Mlp<double> pred4 = identity_predictor(4);
  CHECK(cosine_loss(a, b, pred4, false) == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("cosine loss gradients match finite differences") {
  Rng rng = derive_rng(5, "cos_fd");
  MatX<double> z1(6, 4), z2(6, 4);
  for (Eigen::Index i = 0; i < z1.size(); ++i) z1.data()[i] = rng.normal();
  for (Eigen::Index i = 0; i < z2.size(); ++i) z2.data()[i] = rng.normal();
  Mlp<double> pred({6, 4, 6}, true);
  pred.init(rng);

  ParamList<double> params;
  pred.collect_params(params, "pred");
  zero_grads(params);
  MatX<double> dz1 = MatX<double>::Zero(6, 4);
  cosine_loss(z1, z2, pred, false, 1.0, &dz1);

  auto loss = [&]() {
    Mlp<double> probe = pred;  // running stats stay fixed across evaluations
    return cosine_loss(z1, z2, probe, false);
  };
  CHECK(testutil::fd_check_params(params, loss, 1e-6, 16, rng) < 1e-6);
  CHECK(testutil::fd_check_buffer(z1.data(), z1.size(), dz1.data(), loss, 1e-6, 24, rng) < 1e-6);
}

TEST_CASE("global loss on identical views hits its optimum value") {
  Rng rng = derive_rng(6, "gg");
  const int n = 8, b = 4;

  SUBCASE("noncontrastive: -1") {
    auto st = make_encoder_state<double>(Variant::noncontrastive, {4, 8}, n, 0, rng);
    st.predictor->linears()[0].weight().v = MatX<double>::Identity(n, n);
    st.predictor->linears()[0].bias().v.setZero();
    MatX<double> z = random_unit_cols<double>(n, b, rng);
    auto g1 = make_batch(z, true, {0, 1, 2, 3});
    auto g2 = make_batch(z, true, {0, 1, 2, 3});
    auto t1 = make_batch(z, false, {0, 1, 2, 3});
    auto t2 = make_batch(z, false, {0, 1, 2, 3});
    LossValue v = global_global_loss(st, g1, g2, t1, t2, kNoQueue, LossConfig{0.1, true});
    CHECK(v.value == doctest::Approx(-1.0).epsilon(1e-9));
    CHECK(v.parts.at("g1_t2") == doctest::Approx(-1.0).epsilon(1e-9));
    CHECK(v.parts.at("g2_t1") == doctest::Approx(-1.0).epsilon(1e-9));
  }

  SUBCASE("contrastive with a uniform queue: ln(K+1)") {
    auto st = make_encoder_state<double>(Variant::contrastive, {4, 8}, n, 0, rng);
    Rng qrng = derive_rng(7, "q");
    NegativeQueue<double> queue(n, 32, qrng);
    MatX<double> e = MatX<double>::Zero(n, b);
    e.row(0).setOnes();
    MatX<double> uniform = MatX<double>::Zero(n, 32);
    uniform.row(0).setOnes();
    // Fill the whole ring with the shared direction.
    queue.enqueue(uniform);
    auto g1 = make_batch(e, true, {0, 1, 2, 3});
    auto g2 = make_batch(e, true, {0, 1, 2, 3});
    auto t1 = make_batch(e, false, {0, 1, 2, 3});
    auto t2 = make_batch(e, false, {0, 1, 2, 3});
    LossValue v = global_global_loss(st, g1, g2, t1, t2, &queue, LossConfig{0.1, true});
    CHECK(v.value == doctest::Approx(std::log(33.0)).epsilon(1e-9));
  }
}

TEST_CASE("global loss without symmetrization keeps a single direction") {
  Rng rng = derive_rng(8, "gg_one");
  const int n = 6, b = 3;
  auto st = make_encoder_state<double>(Variant::noncontrastive, {4, 8}, n, 4, rng);
  // A dead ReLU bottleneck would zero a column; the bias keeps outputs nonzero.
  st.predictor->linears().back().bias().v.setConstant(0.1);
  MatX<double> z1 = random_unit_cols<double>(n, b, rng);
  MatX<double> z2 = random_unit_cols<double>(n, b, rng);
  auto g1 = make_batch(z1, true, {0, 1, 2});
  auto g2 = make_batch(z2, true, {0, 1, 2});
  auto t1 = make_batch(z1, false, {0, 1, 2});
  auto t2 = make_batch(z2, false, {0, 1, 2});
  LossValue v = global_global_loss(st, g1, g2, t1, t2, kNoQueue, LossConfig{0.1, false});
  CHECK(v.parts.count("g1_t2") == 1);
  CHECK(v.parts.count("g2_t1") == 0);
  CHECK(v.value == doctest::Approx(v.parts.at("g1_t2")));
  CHECK(g1.grad.cwiseAbs().maxCoeff() > 0.0);
  CHECK(g2.grad.cwiseAbs().maxCoeff() == 0.0);  // no second term, no gradient
}

TEST_CASE("local-to-global loss is the plain four-term sum") {
  Rng rng = derive_rng(9, "lg");
  const int n = 8, b = 4;

  SUBCASE("noncontrastive identical embeddings: -4") {
    auto st = make_encoder_state<double>(Variant::noncontrastive, {4, 8}, n, 0, rng);
    st.predictor->linears()[0].weight().v = MatX<double>::Identity(n, n);
    st.predictor->linears()[0].bias().v.setZero();
    MatX<double> z = random_unit_cols<double>(n, b, rng);
    auto l1 = make_batch(z, true, {0, 1, 2, 3});
    auto l2 = make_batch(z, true, {0, 1, 2, 3});
    auto t1 = make_batch(z, false, {0, 1, 2, 3});
    auto t2 = make_batch(z, false, {0, 1, 2, 3});
    LossValue v = local_global_loss(st, l1, l2, t1, t2, kNoQueue, LossConfig{0.1, true});
    CHECK(v.parts.size() == 4);
    CHECK(v.value == doctest::Approx(-4.0).epsilon(1e-9));
    for (const char* key : {"l1_g1", "l1_g2", "l2_g1", "l2_g2"})
      CHECK(v.parts.at(key) == doctest::Approx(-1.0).epsilon(1e-9));
  }

  SUBCASE("contrastive uniform queue: 4 ln(K+1)") {
    auto st = make_encoder_state<double>(Variant::contrastive, {4, 8}, n, 0, rng);
    Rng qrng = derive_rng(10, "q");
    NegativeQueue<double> queue(n, 16, qrng);
    MatX<double> uniform = MatX<double>::Zero(n, 16);
    uniform.row(0).setOnes();
    queue.enqueue(uniform);
    MatX<double> e = MatX<double>::Zero(n, b);
    e.row(0).setOnes();
    auto l1 = make_batch(e, true, {0, 1, 2, 3});
    auto l2 = make_batch(e, true, {0, 1, 2, 3});
    auto t1 = make_batch(e, false, {0, 1, 2, 3});
    auto t2 = make_batch(e, false, {0, 1, 2, 3});
    LossValue v = local_global_loss(st, l1, l2, t1, t2, &queue, LossConfig{0.1, true});
    CHECK(v.value == doctest::Approx(4.0 * std::log(17.0)).epsilon(1e-9));
  }

  SUBCASE("each term carries unit weight: value matches the sum of parts") {
    auto st = make_encoder_state<double>(Variant::noncontrastive, {4, 8}, n, 4, rng);
    st.predictor->linears().back().bias().v.setConstant(0.1);
    MatX<double> zl1 = random_unit_cols<double>(n, b, rng);
    MatX<double> zl2 = random_unit_cols<double>(n, b, rng);
    MatX<double> zt1 = random_unit_cols<double>(n, b, rng);
    MatX<double> zt2 = random_unit_cols<double>(n, b, rng);
    auto l1 = make_batch(zl1, true, {0, 1, 2, 3});
    auto l2 = make_batch(zl2, true, {0, 1, 2, 3});
    auto t1 = make_batch(zt1, false, {0, 1, 2, 3});
    auto t2 = make_batch(zt2, false, {0, 1, 2, 3});
    LossValue v = local_global_loss(st, l1, l2, t1, t2, kNoQueue, LossConfig{0.1, true});
    double sum = 0.0;
    for (const auto& [k, x] : v.parts) sum += x;
    CHECK(v.value == doctest::Approx(sum).epsilon(1e-12));
  }
}

TEST_CASE("losses enforce detached targets and aligned sources") {
  Rng rng = derive_rng(11, "guard");
  const int n = 6, b = 2;
  auto st = make_encoder_state<double>(Variant::noncontrastive, {4, 8}, n, 4, rng);
  MatX<double> z = random_unit_cols<double>(n, b, rng);
  auto g1 = make_batch(z, true, {0, 1});
  auto g2 = make_batch(z, true, {0, 1});
  auto undetached = make_batch(z, true, {0, 1});
  auto t = make_batch(z, false, {0, 1});
  auto misaligned = make_batch(z, false, {5, 6});
  CHECK_THROWS_AS(global_global_loss(st, g1, g2, undetached, t, kNoQueue, LossConfig{0.1, true}),
                  ContractViolation);
  CHECK_THROWS_AS(global_global_loss(st, g1, g2, t, misaligned, kNoQueue, LossConfig{0.1, true}),
                  ContractViolation);
  auto frozen = make_batch(z, false, {0, 1});
  CHECK_THROWS_AS(global_global_loss(st, frozen, g2, t, t, kNoQueue, LossConfig{0.1, true}),
                  ContractViolation);
}

TEST_CASE("targets never accumulate gradient and detach copies values") {
  Rng rng = derive_rng(12, "detach");
  const int n = 6, b = 3;
  auto st = make_encoder_state<double>(Variant::noncontrastive, {4, 8}, n, 4, rng);
  st.predictor->linears().back().bias().v.setConstant(0.1);
  MatX<double> z1 = random_unit_cols<double>(n, b, rng);
  MatX<double> z2 = random_unit_cols<double>(n, b, rng);
  auto g1 = make_batch(z1, true, {0, 1, 2});
  auto g2 = make_batch(z2, true, {0, 1, 2});
  auto t1 = make_batch(z1, false, {0, 1, 2});
  auto t2 = make_batch(z2, false, {0, 1, 2});
  global_global_loss(st, g1, g2, t1, t2, kNoQueue, LossConfig{0.1, true});
  // Detached batches keep an all-zero gradient buffer as the witness.
  CHECK(t1.grad.cwiseAbs().maxCoeff() == 0.0);
  CHECK(t2.grad.cwiseAbs().maxCoeff() == 0.0);
  CHECK(g1.grad.cwiseAbs().maxCoeff() > 0.0);
  CHECK(g2.grad.cwiseAbs().maxCoeff() > 0.0);

  EmbeddingBatch<double> det = detach(g1);
  CHECK(!det.grad_enabled);
  CHECK(det.values == g1.values);
  CHECK(det.source_ids == g1.source_ids);
}

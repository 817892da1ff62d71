// SPDX-License-Identifier: Apache-2.0
#include "logo/trainer.hpp"

#include <map>

namespace logo {

namespace {

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::map<std::string, std::string> parse_kv_block(const std::string& text) {
  std::map<std::string, std::string> kv;
  std::stringstream ss(text);
  std::string line;
  while (std::getline(ss, line)) {
    if (line.empty()) continue;
    auto eq = line.find('=');
    LOGO_REQUIRE(eq != std::string::npos, "malformed config line: " + line);
    kv[line.substr(0, eq)] = line.substr(eq + 1);
  }
  return kv;
}

}  // namespace

std::string train_config_to_text(const TrainConfig& t, const AugmentationConfig& a) {
  std::string s;
  s += "variant=" + to_string(t.variant) + "\n";
  s += "lambda=" + fmt(t.lambda) + "\n";
  s += "lambda_mode=" + t.lambda_mode + "\n";
  s += "batch_size=" + std::to_string(t.batch_size) + "\n";
  s += "epochs=" + std::to_string(t.epochs) + "\n";
  s += "eta_max=" + fmt(t.eta_max) + "\n";
  s += "eta_min=" + fmt(t.eta_min) + "\n";
  s += "sgd_momentum=" + fmt(t.sgd_momentum) + "\n";
  s += "weight_decay=" + fmt(t.weight_decay) + "\n";
  s += "regressor_weight_decay=" + fmt(t.regressor_weight_decay) + "\n";
  s += "regressor_momentum=" + fmt(t.regressor_momentum) + "\n";
  s += "temperature=" + fmt(t.temperature) + "\n";
  s += "momentum_coef=" + fmt(t.momentum_coef) + "\n";
  s += "queue_size=" + std::to_string(t.queue_size) + "\n";
  s += "seed=" + std::to_string(t.seed) + "\n";
  s += "regressor_seed=" + std::to_string(t.regressor_seed) + "\n";
  s += "symmetrize=" + std::string(t.symmetrize ? "1" : "0") + "\n";
  s += "affinity=" + t.affinity + "\n";
  s += "embed_dim=" + std::to_string(t.embed_dim) + "\n";
  s += "backbone_widths=" + detail::widths_to_string(t.backbone_widths) + "\n";
  s += "predictor_hidden=" + std::to_string(t.predictor_hidden) + "\n";
  s += "regressor_hidden=" + std::to_string(t.regressor_hidden) + "\n";
  s += "monitor_every=" + std::to_string(t.monitor_every) + "\n";
  s += "checkpoint_every=" + std::to_string(t.checkpoint_every) + "\n";
  s += "knn_k=" + std::to_string(t.knn_k) + "\n";
  s += "knn_vote_temperature=" + fmt(t.knn_vote_temperature) + "\n";
  s += "aug.global_scale_min=" + fmt(a.global_scale_min) + "\n";
  s += "aug.global_scale_max=" + fmt(a.global_scale_max) + "\n";
  s += "aug.local_scale_min=" + fmt(a.local_scale_min) + "\n";
  s += "aug.local_scale_max=" + fmt(a.local_scale_max) + "\n";
  s += "aug.aspect_min=" + fmt(a.aspect_min) + "\n";
  s += "aug.aspect_max=" + fmt(a.aspect_max) + "\n";
  s += "aug.out_global=" + std::to_string(a.out_global) + "\n";
  s += "aug.out_local=" + std::to_string(a.out_local) + "\n";
  s += "aug.flip_prob=" + fmt(a.flip_prob) + "\n";
  s += "aug.jitter_prob=" + fmt(a.jitter_prob) + "\n";
  s += "aug.jitter_brightness=" + fmt(a.jitter_brightness) + "\n";
  s += "aug.jitter_contrast=" + fmt(a.jitter_contrast) + "\n";
  s += "aug.jitter_saturation=" + fmt(a.jitter_saturation) + "\n";
  s += "aug.jitter_hue=" + fmt(a.jitter_hue) + "\n";
  s += "aug.grayscale_prob=" + fmt(a.grayscale_prob) + "\n";
  s += "aug.blur_prob=" + fmt(a.blur_prob) + "\n";
  s += "aug.blur_sigma_min=" + fmt(a.blur_sigma_min) + "\n";
  s += "aug.blur_sigma_max=" + fmt(a.blur_sigma_max) + "\n";
  return s;
}

void train_config_from_text(const std::string& text, TrainConfig& t, AugmentationConfig& a) {
  auto kv = parse_kv_block(text);
  auto get = [&](const char* k) -> const std::string& {
    auto it = kv.find(k);
    LOGO_REQUIRE(it != kv.end(), std::string("missing config key: ") + k);
    return it->second;
  };
  t.variant = variant_from_string(get("variant"));
  t.lambda = std::stod(get("lambda"));
  t.lambda_mode = get("lambda_mode");
  t.batch_size = std::stoi(get("batch_size"));
  t.epochs = std::stoi(get("epochs"));
  t.eta_max = std::stod(get("eta_max"));
  t.eta_min = std::stod(get("eta_min"));
  t.sgd_momentum = std::stod(get("sgd_momentum"));
  t.weight_decay = std::stod(get("weight_decay"));
  t.regressor_weight_decay = std::stod(get("regressor_weight_decay"));
  t.regressor_momentum = std::stod(get("regressor_momentum"));
  t.temperature = std::stod(get("temperature"));
  t.momentum_coef = std::stod(get("momentum_coef"));
  t.queue_size = std::stoi(get("queue_size"));
  t.seed = std::stoull(get("seed"));
  t.regressor_seed = std::stoll(get("regressor_seed"));
  t.symmetrize = get("symmetrize") == "1";
  t.affinity = get("affinity");
  t.embed_dim = std::stoi(get("embed_dim"));
  t.backbone_widths = detail::widths_from_string(get("backbone_widths"));
  t.predictor_hidden = std::stoi(get("predictor_hidden"));
  t.regressor_hidden = std::stoi(get("regressor_hidden"));
  t.monitor_every = std::stoi(get("monitor_every"));
  t.checkpoint_every = std::stoi(get("checkpoint_every"));
  t.knn_k = std::stoi(get("knn_k"));
  t.knn_vote_temperature = std::stod(get("knn_vote_temperature"));
  a.global_scale_min = std::stod(get("aug.global_scale_min"));
  a.global_scale_max = std::stod(get("aug.global_scale_max"));
  a.local_scale_min = std::stod(get("aug.local_scale_min"));
  a.local_scale_max = std::stod(get("aug.local_scale_max"));
  a.aspect_min = std::stod(get("aug.aspect_min"));
  a.aspect_max = std::stod(get("aug.aspect_max"));
  a.out_global = std::stoi(get("aug.out_global"));
  a.out_local = std::stoi(get("aug.out_local"));
  a.flip_prob = std::stod(get("aug.flip_prob"));
  a.jitter_prob = std::stod(get("aug.jitter_prob"));
  a.jitter_brightness = std::stod(get("aug.jitter_brightness"));
  a.jitter_contrast = std::stod(get("aug.jitter_contrast"));
  a.jitter_saturation = std::stod(get("aug.jitter_saturation"));
  a.jitter_hue = std::stod(get("aug.jitter_hue"));
  a.grayscale_prob = std::stod(get("aug.grayscale_prob"));
  a.blur_prob = std::stod(get("aug.blur_prob"));
  a.blur_sigma_min = std::stod(get("aug.blur_sigma_min"));
  a.blur_sigma_max = std::stod(get("aug.blur_sigma_max"));
}

namespace {

struct PackedViews {
  Mat g1, g2, l1, l2;
  ConvDims dg, dl;
  std::vector<std::int64_t> ids;
};

PackedViews pack_views(const std::vector<ViewSet>& views) {
  LOGO_REQUIRE(views.size() >= 2, "train step needs a batch of at least 2");
  PackedViews p;
  std::vector<Image> g1, g2, l1, l2;
  for (const auto& v : views) {
    g1.push_back(v.globals[0]);
    g2.push_back(v.globals[1]);
    l1.push_back(v.locals[0]);
    l2.push_back(v.locals[1]);
    p.ids.push_back(v.source_id);
  }
  p.g1 = pack_images(g1);
  p.g2 = pack_images(g2);
  p.l1 = pack_images(l1);
  p.l2 = pack_images(l2);
  p.dg = {int(views.size()), g1[0].h, g1[0].w};
  p.dl = {int(views.size()), l1[0].h, l1[0].w};
  return p;
}

EmbeddingBatch<real> loss_facing(const EmbeddingBatch<real>& raw, bool normalized) {
  EmbeddingBatch<real> out;
  out.values = normalized ? l2_normalize_cols(raw.values) : raw.values;
  out.grad_enabled = true;
  out.source_ids = raw.source_ids;
  out.reset_grad();
  return out;
}

Mat pull_grad(const EmbeddingBatch<real>& facing, const EmbeddingBatch<real>& raw, bool normalized) {
  return normalized ? l2_normalize_cols_backward(raw.values, facing.grad) : facing.grad;
}

double global_grad_norm(const ParamList<real>& params) {
  double sq = 0.0;
  for (const auto& r : params) sq += r.p->g.template cast<double>().squaredNorm();
  return std::sqrt(sq);
}

}  // namespace

StepRecord train_step(TrainState& st, const std::vector<ViewSet>& views) {
  const TrainConfig& cfg = st.cfg;
  LOGO_REQUIRE(st.total_steps >= 1, "schedule horizon not set; call fit or set total_steps");
  LOGO_REQUIRE(st.step < st.total_steps, "training already complete");
  const bool contrastive = cfg.variant == Variant::contrastive;
  LOGO_REQUIRE(!contrastive || st.queue.has_value(), "contrastive training requires the queue");

  const double lr = lr_at(st.step, st.total_steps, cfg.eta_max_value(), cfg.eta_min);
  PackedViews p = pack_views(views);
  const int b = p.dg.b;

  // Encode the four views with gradient caches.
  Encoder<real>::Cache cg1, cg2, cl1, cl2;
  EmbeddingBatch<real> eg1 = encode(st.enc, p.g1, p.dg, p.ids, false, &cg1);
  EmbeddingBatch<real> eg2 = encode(st.enc, p.g2, p.dg, p.ids, false, &cg2);
  EmbeddingBatch<real> el1 = encode(st.enc, p.l1, p.dl, p.ids, false, &cl1);
  EmbeddingBatch<real> el2 = encode(st.enc, p.l2, p.dl, p.ids, false, &cl2);

  // Loss-facing views: the contrastive losses consume unit-norm embeddings,
  // the noncontrastive ones normalize internally. The dissimilarity measure
  // always sees unit-norm locals.
  EmbeddingBatch<real> sg1 = loss_facing(eg1, contrastive);
  EmbeddingBatch<real> sg2 = loss_facing(eg2, contrastive);
  EmbeddingBatch<real> sl1 = loss_facing(el1, contrastive);
  EmbeddingBatch<real> sl2 = loss_facing(el2, contrastive);
  EmbeddingBatch<real> nl1 = loss_facing(el1, true);
  EmbeddingBatch<real> nl2 = loss_facing(el2, true);

  // Targets are constants for the encoder step.
  EmbeddingBatch<real> t1, t2;
  if (contrastive) {
    EmbeddingBatch<real> m1 = encode(st.enc, p.g1, p.dg, p.ids, true, nullptr);
    EmbeddingBatch<real> m2 = encode(st.enc, p.g2, p.dg, p.ids, true, nullptr);
    t1 = detach(m1);
    t1.values = l2_normalize_cols(t1.values);
    t2 = detach(m2);
    t2.values = l2_normalize_cols(t2.values);
  } else {
    t1 = detach(eg1);
    t2 = detach(eg2);
  }

  // Measure ascent: maximize separation of joint from product pairs. Only the
  // measure's parameters move here.
  Rng pair_rng = derive_rng(cfg.seed, "pairs", std::uint64_t(st.step));
  std::vector<int> perm = sample_negative_partner(b, pair_rng);
  PairBatch<real> joint;
  joint.kind = PairBatch<real>::Kind::joint;
  joint.left = nl1.values;
  joint.right = nl2.values;
  joint.left_ids = p.ids;
  joint.right_ids = p.ids;
  PairBatch<real> product;
  product.kind = PairBatch<real>::Kind::product;
  product.left = nl1.values;
  product.right.resize(nl1.values.rows(), b);
  product.left_ids = p.ids;
  product.right_ids.resize(std::size_t(b));
  for (int j = 0; j < b; ++j) {
    product.right.col(j) = nl1.values.col(perm[std::size_t(j)]);
    product.right_ids[std::size_t(j)] = p.ids[std::size_t(perm[std::size_t(j)])];
  }

  ParamList<real> dparams = st.regressor_params();
  double omega;
  if (!dparams.empty()) {
    zero_grads(dparams);
    omega = omega_objective(*st.affinity, joint, product, -1.0, true).value;
    st.opt_regressor.step(dparams, lr);
    zero_grads(dparams);
  } else {
    omega = omega_objective(*st.affinity, joint, product, 0.0, true).value;
  }

  // Encoder descent on the similarity terms plus the weighted dissimilarity
  // term, with the measure frozen.
  ParamList<real> eparams = st.encoder_trainable();
  zero_grads(eparams);
  LossConfig lcfg{cfg.temperature, cfg.symmetrize};
  const NegativeQueue<real>* q = st.queue ? &*st.queue : nullptr;
  LossValue gg = global_global_loss(st.enc, sg1, sg2, t1, t2, q, lcfg);
  LossValue lg = local_global_loss(st.enc, sl1, sl2, t1, t2, q, lcfg);
  st.enc.online.backward(cg1, pull_grad(sg1, eg1, contrastive));
  st.enc.online.backward(cg2, pull_grad(sg2, eg2, contrastive));
  st.enc.online.backward(cl1, pull_grad(sl1, el1, contrastive));
  st.enc.online.backward(cl2, pull_grad(sl2, el2, contrastive));

  const double lambda = cfg.lambda_value();
  double ll_value;
  double ll_scale = 0.0;
  if (lambda > 0.0) {
    std::vector<Mat> sim_grads;
    sim_grads.reserve(eparams.size());
    for (auto& r : eparams) sim_grads.push_back(r.p->g);
    zero_grads(eparams);
    ll_value = local_local_loss(*st.affinity, nl1, nl2, 1.0).value;
    st.enc.online.backward(cl1, l2_normalize_cols_backward(el1.values, nl1.grad));
    st.enc.online.backward(cl2, l2_normalize_cols_backward(el2.values, nl2.grad));
    if (cfg.lambda_mode == "fixed_weight") {
      ll_scale = lambda;
    } else {
      double sim_norm = 0.0, dis_norm = 0.0;
      for (std::size_t i = 0; i < eparams.size(); ++i)
        sim_norm += sim_grads[i].template cast<double>().squaredNorm();
      dis_norm = global_grad_norm(eparams);
      sim_norm = std::sqrt(sim_norm);
      ll_scale = dis_norm > 0.0 ? lambda * sim_norm / dis_norm : 0.0;
    }
    if (ll_scale > 0.0) {
      for (std::size_t i = 0; i < eparams.size(); ++i)
        eparams[i].p->g = sim_grads[i] + eparams[i].p->g * real(ll_scale);
    } else {
      for (std::size_t i = 0; i < eparams.size(); ++i) eparams[i].p->g = sim_grads[i];
    }
  } else {
    // Inactive term: report its value without routing any gradient, so the
    // encoder trajectory matches a run without the measure entirely.
    ll_value = local_local_value(*st.affinity, nl1.values, nl2.values);
  }
  st.opt_encoder.step(eparams, lr);
  zero_grads(eparams);

  if (contrastive) {
    momentum_update(st.enc, cfg.momentum_coef);
    st.queue->enqueue(t1.values);
    st.queue->enqueue(t2.values);
  }

  StepRecord rec;
  rec.step = st.step;
  rec.lr = lr;
  rec.loss_gg = gg.value;
  rec.loss_lg = lg.value;
  rec.loss_ll = ll_value;
  rec.omega = omega;
  // With the dissimilarity term inactive the total is exactly the similarity
  // cost; multiplying by zero would poison it with NaN if the measure's value
  // overflowed.
  rec.total = gg.value + lg.value + (ll_scale > 0.0 ? ll_scale * ll_value : 0.0);
  LOGO_REQUIRE(std::isfinite(rec.total),
               "non-finite encoder loss at step " + std::to_string(st.step));
  // The measure ascends unopposed when lambda is zero: nothing counters its
  // objective, so it may saturate or overflow. It feeds no gradient to the
  // encoder then, so only treat its divergence as fatal when the weighted
  // term is live.
  if (ll_scale > 0.0)
    LOGO_REQUIRE(std::isfinite(rec.omega) && std::isfinite(rec.loss_ll),
                 "non-finite measure objective at step " + std::to_string(st.step));
  ++st.step;
  return rec;
}

void fit(TrainState& st, const Dataset& data, const FitHooks& hooks) {
  const TrainConfig& cfg = st.cfg;
  const std::vector<int>& train_idx = data.split("train");
  LOGO_REQUIRE(int(train_idx.size()) >= cfg.batch_size,
               "training split smaller than one batch");
  const std::int64_t steps_per_epoch = std::int64_t(train_idx.size()) / cfg.batch_size;
  const std::int64_t total = steps_per_epoch * cfg.epochs;
  if (st.total_steps == 0) st.total_steps = total;
  LOGO_REQUIRE(st.total_steps == total, "resumed run must keep the original schedule");
  LOGO_REQUIRE(st.step <= total, "checkpoint is past the end of the schedule");

  const bool has_val = data.splits.count("val") && !data.split("val").empty();
  std::string last_checkpoint = "(none)";

  std::vector<int> order;
  std::int64_t order_epoch = -1;
  while (st.step < total) {
    const std::int64_t epoch = st.step / steps_per_epoch;
    if (epoch != order_epoch) {
      order = train_idx;
      Rng shuffle_rng = derive_rng(cfg.seed, "shuffle", std::uint64_t(epoch));
      shuffle_rng.shuffle(order);
      order_epoch = epoch;
    }
    const std::int64_t batch_in_epoch = st.step % steps_per_epoch;
    Rng aug_rng = derive_rng(cfg.seed, "augment", std::uint64_t(st.step));
    std::vector<ViewSet> views;
    views.reserve(std::size_t(cfg.batch_size));
    for (int i = 0; i < cfg.batch_size; ++i) {
      const int idx = order[std::size_t(batch_in_epoch * cfg.batch_size + i)];
      const ImageSample& s = data.samples[std::size_t(idx)];
      views.push_back(make_views(s.image, s.source_id, st.aug, aug_rng));
    }

    StepRecord rec;
    try {
      rec = train_step(st, views);
    } catch (const ContractViolation& e) {
      throw ContractViolation(std::string(e.what()) + "; last good checkpoint: " + last_checkpoint);
    }
    rec.epoch = epoch;
    if (hooks.metrics) hooks.metrics->write(rec);

    const bool epoch_end = (st.step % steps_per_epoch) == 0;
    if (epoch_end) {
      const std::int64_t finished = epoch + 1;
      const bool last_epoch = st.step == total;
      if (has_val && cfg.monitor_every > 0 &&
          (finished % cfg.monitor_every == 0 || last_epoch)) {
        EvalRecord er;
        er.step = st.step;
        er.knn_top1 = knn_monitor(st.enc.online, data, {cfg.knn_k, cfg.knn_vote_temperature});
        if (hooks.metrics) hooks.metrics->write(er);
        if (hooks.on_eval) hooks.on_eval(er);
      }
      if (!hooks.checkpoint_path.empty() && cfg.checkpoint_every > 0 &&
          (finished % cfg.checkpoint_every == 0 || last_epoch)) {
        save_checkpoint(st, hooks.checkpoint_path);
        last_checkpoint = hooks.checkpoint_path;
      }
      if (hooks.stop_after_epochs > 0 && finished >= hooks.stop_after_epochs) break;
    }
  }
}

namespace {

constexpr std::uint32_t kCheckpointMagic = 0x4f474f4cu;  // "LOGO"
constexpr std::uint32_t kCheckpointVersion = 1;

// Every serialized tensor of a run, in a fixed order.
struct ArchiveView {
  ParamList<real> params;
  std::vector<std::pair<std::string, MatX<real>*>> extra;
};

ArchiveView archive_view(TrainState& st) {
  ArchiveView v;
  st.enc.collect_params(v.params);
  if (st.affinity) st.affinity->collect_params(v.params);
  if (st.queue) v.extra.emplace_back("queue.buffer", &st.queue->data());
  auto& ev = st.opt_encoder.velocities();
  for (std::size_t i = 0; i < ev.size(); ++i)
    if (ev[i].size() > 0) v.extra.emplace_back("opt_encoder.v" + std::to_string(i), &ev[i]);
  auto& rv = st.opt_regressor.velocities();
  for (std::size_t i = 0; i < rv.size(); ++i)
    if (rv[i].size() > 0) v.extra.emplace_back("opt_regressor.v" + std::to_string(i), &rv[i]);
  return v;
}

}  // namespace

void save_checkpoint(const TrainState& st_const, const std::string& path) {
  // The archive layout walks a deterministic view of the state; building that
  // view needs non-const access to parameter storage but mutates nothing.
  TrainState& st = const_cast<TrainState&>(st_const);
  std::string buf;
  ser::put_pod<std::uint32_t>(buf, kCheckpointMagic);
  ser::put_pod<std::uint32_t>(buf, kCheckpointVersion);
  ser::put_string(buf, train_config_to_text(st.cfg, st.aug));
  ser::put_string(buf, st.run_config_echo);
  ser::put_pod<std::int64_t>(buf, st.step);
  ser::put_pod<std::int64_t>(buf, st.total_steps);
  ser::put_pod<std::int64_t>(buf, st.queue ? std::int64_t(st.queue->head()) : -1);

  ArchiveView view = archive_view(st);
  std::uint64_t count = view.params.size() + view.extra.size();
  ser::put_pod<std::uint64_t>(buf, count);
  for (const auto& r : view.params) {
    ser::put_string(buf, r.name);
    ser::put_mat_f32(buf, r.p->v);
  }
  for (const auto& [name, m] : view.extra) {
    ser::put_string(buf, name);
    ser::put_mat_f32(buf, *m);
  }
  ser::put_pod<std::uint64_t>(buf, fnv1a(buf.data(), buf.size()));
  write_file(path, buf);
}

TrainState load_checkpoint(const std::string& path) {
  ser::Reader r(read_file(path));
  if (r.size() < 16) throw IoError("checkpoint too small: " + path);
  {
    const std::string& all = r.data();
    std::uint64_t stored;
    std::memcpy(&stored, all.data() + all.size() - 8, 8);
    if (fnv1a(all.data(), all.size() - 8) != stored)
      throw IoError("checkpoint checksum mismatch: " + path);
  }
  if (r.pod<std::uint32_t>() != kCheckpointMagic) throw IoError("not a checkpoint archive: " + path);
  const auto version = r.pod<std::uint32_t>();
  if (version != kCheckpointVersion)
    throw IoError("unsupported checkpoint version " + std::to_string(version));

  TrainConfig cfg;
  AugmentationConfig aug;
  train_config_from_text(r.str(), cfg, aug);
  std::string echo = r.str();
  const std::int64_t step = r.pod<std::int64_t>();
  const std::int64_t total_steps = r.pod<std::int64_t>();
  const std::int64_t queue_head = r.pod<std::int64_t>();

  TrainState st = make_train_state(cfg, aug);
  st.step = step;
  st.total_steps = total_steps;
  st.run_config_echo = echo;
  if (st.queue) {
    LOGO_REQUIRE(queue_head >= 0 && queue_head < st.queue->capacity(),
                 "queue cursor out of range");
    st.queue->set_head(queue_head);
  }

  ArchiveView view = archive_view(st);
  const std::uint64_t count = r.pod<std::uint64_t>();
  LOGO_REQUIRE(count == view.params.size() + view.extra.size(),
               "checkpoint tensor count does not match the configuration");
  for (auto& p : view.params) {
    std::string name = r.str();
    LOGO_REQUIRE(name == p.name, "unexpected tensor '" + name + "', expected '" + p.name + "'");
    MatX<real> m = r.mat_f32();
    LOGO_REQUIRE(m.rows() == p.p->v.rows() && m.cols() == p.p->v.cols(),
                 "tensor shape mismatch for " + name);
    p.p->v = m;
  }
  for (auto& [name, dst] : view.extra) {
    std::string got = r.str();
    LOGO_REQUIRE(got == name, "unexpected tensor '" + got + "', expected '" + name + "'");
    MatX<real> m = r.mat_f32();
    LOGO_REQUIRE(m.rows() == dst->rows() && m.cols() == dst->cols(),
                 "tensor shape mismatch for " + name);
    *dst = m;
  }
  r.pod<std::uint64_t>();  // checksum, already verified
  LOGO_REQUIRE(r.done(), "trailing bytes in checkpoint");
  return st;
}

}  // namespace logo

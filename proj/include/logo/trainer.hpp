// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <functional>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "logo/affinity.hpp"
#include "logo/augment.hpp"
#include "logo/digest.hpp"
#include "logo/encoder.hpp"
#include "logo/eval.hpp"
#include "logo/losses.hpp"
#include "logo/metrics.hpp"
#include "logo/optim.hpp"
#include "logo/serialize.hpp"

namespace logo {

// Run-defining hyperparameters. Values of -1 resolve to per-variant defaults.
struct TrainConfig {
  Variant variant = Variant::noncontrastive;
  double lambda = -1.0;                      // weight of the local dissimilarity term
  std::string lambda_mode = "fixed_weight";  // fixed_weight | gradient_ratio
  int batch_size = 64;
  int epochs = 20;
  double eta_max = -1.0;
  double eta_min = 0.0;
  double sgd_momentum = 0.9;
  double weight_decay = 1e-4;
  // The measure's objective is unbounded above (its score head saturates only
  // downward), so its ascent needs a stronger pull toward the origin than the
  // encoder does; -1 resolves to a default that keeps scores finite. Velocity
  // accumulation compounds the same runaway, so the measure defaults to plain
  // SGD.
  double regressor_weight_decay = -1.0;
  double regressor_momentum = 0.0;
  double temperature = 0.1;
  double momentum_coef = 0.99;
  int queue_size = 4096;
  std::uint64_t seed = 1;
  std::int64_t regressor_seed = -1;  // -1 derives the stream from `seed`
  bool symmetrize = true;
  std::string affinity = "learned";  // learned | cosine
  int embed_dim = 128;
  std::vector<int> backbone_widths = {32, 64, 128, 256};
  int predictor_hidden = -1;  // -1 resolves to embed_dim / 2; 0 means a single linear predictor
  int regressor_hidden = 512;
  int monitor_every = 1;     // epochs between knn evaluations; 0 disables
  int checkpoint_every = 1;  // epochs between checkpoint saves; 0 disables
  int knn_k = 20;
  double knn_vote_temperature = 0.07;

  double lambda_value() const {
    if (lambda >= 0.0) return lambda;
    return variant == Variant::contrastive ? 5e-4 : 1e-4;
  }
  double eta_max_value() const {
    if (eta_max >= 0.0) return eta_max;
    return variant == Variant::contrastive ? 0.03 : 0.05;
  }
  int predictor_hidden_value() const {
    return predictor_hidden >= 0 ? predictor_hidden : embed_dim / 2;
  }
  std::uint64_t regressor_seed_value() const {
    return regressor_seed >= 0 ? std::uint64_t(regressor_seed) : seed + 0x51d7ull;
  }
  double regressor_weight_decay_value() const {
    return regressor_weight_decay >= 0.0 ? regressor_weight_decay : 1e-2;
  }

  void validate() const {
    LOGO_REQUIRE(lambda >= 0.0 || lambda == -1.0, "lambda must be non-negative");
    LOGO_REQUIRE(lambda_mode == "fixed_weight" || lambda_mode == "gradient_ratio",
                 "lambda_mode must be fixed_weight or gradient_ratio");
    LOGO_REQUIRE(batch_size >= 2, "batch_size must be at least 2");
    LOGO_REQUIRE(epochs >= 1, "epochs must be positive");
    LOGO_REQUIRE(eta_min >= 0.0 && (eta_max == -1.0 || eta_max >= eta_min),
                 "invalid learning rate interval");
    LOGO_REQUIRE(sgd_momentum >= 0.0 && sgd_momentum < 1.0, "invalid sgd momentum");
    LOGO_REQUIRE(weight_decay >= 0.0, "invalid weight decay");
    LOGO_REQUIRE(regressor_weight_decay >= 0.0 || regressor_weight_decay == -1.0,
                 "invalid regressor weight decay");
    LOGO_REQUIRE(regressor_momentum >= 0.0 && regressor_momentum < 1.0,
                 "invalid regressor momentum");
    LOGO_REQUIRE(temperature > 0.0, "temperature must be positive");
    LOGO_REQUIRE(momentum_coef >= 0.0 && momentum_coef <= 1.0,
                 "momentum coefficient must lie in [0, 1]");
    LOGO_REQUIRE(queue_size >= 1, "queue size must be positive");
    LOGO_REQUIRE(affinity == "learned" || affinity == "cosine",
                 "affinity must be learned or cosine");
    LOGO_REQUIRE(embed_dim >= 2, "embedding width too small");
    LOGO_REQUIRE(!backbone_widths.empty(), "backbone needs at least one block");
    LOGO_REQUIRE(regressor_hidden >= 1, "regressor width must be positive");
    LOGO_REQUIRE(monitor_every >= 0 && checkpoint_every >= 0, "cadence must be non-negative");
    LOGO_REQUIRE(knn_k >= 1 && knn_vote_temperature > 0.0, "invalid knn settings");
  }
};

namespace detail {

inline std::string widths_to_string(const std::vector<int>& w) {
  std::string s;
  for (std::size_t i = 0; i < w.size(); ++i) s += (i ? "," : "") + std::to_string(w[i]);
  return s;
}

inline std::vector<int> widths_from_string(const std::string& s) {
  std::vector<int> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(std::stoi(item));
  return out;
}

}  // namespace detail

// Canonical key=value form of the semantic configuration, embedded in
// checkpoints so a run can be rebuilt from the archive alone.
std::string train_config_to_text(const TrainConfig& t, const AugmentationConfig& a);
void train_config_from_text(const std::string& text, TrainConfig& t, AugmentationConfig& a);

struct TrainState {
  TrainConfig cfg;
  AugmentationConfig aug;
  EncoderState<real> enc;
  std::unique_ptr<LocalAffinity<real>> affinity;
  std::optional<NegativeQueue<real>> queue;
  Sgd<real> opt_encoder;
  Sgd<real> opt_regressor;
  std::int64_t step = 0;
  std::int64_t total_steps = 0;  // schedule horizon; fixed on the first fit
  std::string run_config_echo;   // resolved tool configuration, carried verbatim

  ParamList<real> encoder_trainable() {
    ParamList<real> p;
    enc.collect_trainable(p);
    return p;
  }
  ParamList<real> regressor_params() {
    ParamList<real> p;
    if (affinity) affinity->collect_params(p);
    return p;
  }
};

inline TrainState make_train_state(const TrainConfig& cfg, const AugmentationConfig& aug) {
  cfg.validate();
  aug.validate();
  TrainState st;
  st.cfg = cfg;
  st.aug = aug;
  Rng enc_rng = derive_rng(cfg.seed, "encoder");
  st.enc = make_encoder_state<real>(cfg.variant, cfg.backbone_widths, cfg.embed_dim,
                                    cfg.predictor_hidden_value(), enc_rng);
  if (cfg.affinity == "learned") {
    st.affinity = std::make_unique<LearnedAffinity<real>>(cfg.embed_dim, cfg.regressor_hidden);
    Rng reg_rng = derive_rng(cfg.regressor_seed_value(), "regressor");
    st.affinity->init(reg_rng);
  } else {
    st.affinity = std::make_unique<CosineAffinity<real>>();
  }
  if (cfg.variant == Variant::contrastive) {
    Rng qrng = derive_rng(cfg.seed, "queue");
    st.queue.emplace(cfg.embed_dim, cfg.queue_size, qrng);
  }
  st.opt_encoder = Sgd<real>({cfg.sgd_momentum, cfg.weight_decay});
  st.opt_regressor = Sgd<real>({cfg.regressor_momentum, cfg.regressor_weight_decay_value()});
  st.opt_encoder.bind(st.encoder_trainable());
  st.opt_regressor.bind(st.regressor_params());
  return st;
}

StepRecord train_step(TrainState& st, const std::vector<ViewSet>& views);

struct FitHooks {
  MetricsWriter* metrics = nullptr;
  std::string checkpoint_path;  // rolling archive; empty disables saving
  std::function<void(const EvalRecord&)> on_eval;
  int stop_after_epochs = 0;  // pause after this many epochs, keeping the full schedule; 0 runs to the end
};

void fit(TrainState& st, const Dataset& data, const FitHooks& hooks = {});

void save_checkpoint(const TrainState& st, const std::string& path);
TrainState load_checkpoint(const std::string& path);

}  // namespace logo

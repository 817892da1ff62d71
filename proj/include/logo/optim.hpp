// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <numbers>
#include <vector>

#include "logo/nn.hpp"

namespace logo {

// Cosine-annealed learning rate over T total steps. The endpoints are returned
// exactly; intermediate steps follow
// eta_min + 0.5 * (eta_max - eta_min) * (1 + cos(t * pi / T)).
inline double lr_at(std::int64_t t, std::int64_t total, double eta_max, double eta_min) {
  LOGO_REQUIRE(total >= 1, "schedule length must be positive");
  LOGO_REQUIRE(t >= 0 && t <= total, "step outside the schedule");
  LOGO_REQUIRE(eta_max >= eta_min, "eta_max must be at least eta_min");
  if (t == 0) return eta_max;
  if (t == total) return eta_min;
  return eta_min + 0.5 * (eta_max - eta_min) * (1.0 + std::cos(double(t) * std::numbers::pi / double(total)));
}

struct SgdConfig {
  double momentum = 0.9;
  double weight_decay = 1e-4;
};

// SGD with classical momentum and decoupled-from-schedule L2 weight decay:
// v <- mu * v + (g + wd * p); p <- p - lr * v. Velocity slots are created on
// first use and follow the registration order of the parameter list.
template <typename T>
class Sgd {
 public:
  Sgd() = default;
  explicit Sgd(SgdConfig cfg) : cfg_(cfg) {}

  // Creates zero velocity slots matching the parameter list. Safe to call
  // again with the same list.
  void bind(const ParamList<T>& params) {
    if (!vel_.empty()) {
      LOGO_REQUIRE(vel_.size() == params.size(), "optimizer bound to a different parameter list");
      return;
    }
    for (const auto& r : params)
      vel_.push_back(r.trainable ? MatX<T>::Zero(r.p->v.rows(), r.p->v.cols()) : MatX<T>());
  }

  void step(const ParamList<T>& params, double lr) {
    bind(params);
    for (std::size_t i = 0; i < params.size(); ++i) {
      if (!params[i].trainable) continue;
      auto& p = *params[i].p;
      vel_[i] = vel_[i] * T(cfg_.momentum) + (p.g + p.v * T(cfg_.weight_decay));
      p.v -= vel_[i] * T(lr);
    }
  }

  const SgdConfig& config() const { return cfg_; }
  std::vector<MatX<T>>& velocities() { return vel_; }

 private:
  SgdConfig cfg_;
  std::vector<MatX<T>> vel_;
};

}  // namespace logo

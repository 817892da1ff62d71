// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>

#include "logo/nn.hpp"

namespace logo {

// Order-sensitive digest over names and raw value bytes. Two digests are equal
// exactly when every parameter is bitwise identical, which is what the
// alternation and determinism checks assert.
template <typename T>
std::uint64_t param_digest(const ParamList<T>& params) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (const auto& r : params) {
    h = fnv1a(r.name, h);
    h = fnv1a(r.p->v.data(), sizeof(T) * r.p->v.size(), h);
  }
  return h;
}

template <typename T>
std::uint64_t grad_digest(const ParamList<T>& params) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (const auto& r : params) {
    h = fnv1a(r.name, h);
    h = fnv1a(r.p->g.data(), sizeof(T) * r.p->g.size(), h);
  }
  return h;
}

}  // namespace logo

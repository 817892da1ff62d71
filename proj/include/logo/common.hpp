// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace logo {

// Thrown when a caller breaks a documented precondition or invariant.
class ContractViolation : public std::runtime_error {
 public:
  explicit ContractViolation(const std::string& msg) : std::runtime_error(msg) {}
};

// Thrown on malformed files, decode failures and serialization problems.
class IoError : public std::runtime_error {
 public:
  explicit IoError(const std::string& msg) : std::runtime_error(msg) {}
};

// Thrown on invalid configuration values or unknown keys.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

[[noreturn]] inline void contract_fail(const char* expr, const std::string& msg) {
  throw ContractViolation(msg + " [" + expr + "]");
}

}  // namespace logo

#define LOGO_REQUIRE(cond, msg)                  \
  do {                                           \
    if (!(cond)) ::logo::contract_fail(#cond, (msg)); \
  } while (0)

namespace logo {

// FNV-1a, used for parameter digests and derived rng stream keys.
inline std::uint64_t fnv1a(const void* data, std::size_t len,
                           std::uint64_t h = 0xcbf29ce484222325ull) {
  auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < len; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ull;
  }
  return h;
}

inline std::uint64_t fnv1a(const std::string& s, std::uint64_t h = 0xcbf29ce484222325ull) {
  return fnv1a(s.data(), s.size(), h);
}

}  // namespace logo

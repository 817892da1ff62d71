// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "logo/common.hpp"
#include "logo/linalg.hpp"

namespace logo {

// Little-endian binary primitives. Numeric payloads are written as float32
// regardless of the in-memory scalar type of the build.
namespace ser {

inline void put_bytes(std::string& buf, const void* p, std::size_t n) {
  buf.append(static_cast<const char*>(p), n);
}

template <typename T>
void put_pod(std::string& buf, T v) {
  static_assert(std::is_trivially_copyable_v<T>);
  put_bytes(buf, &v, sizeof(v));
}

inline void put_string(std::string& buf, const std::string& s) {
  put_pod<std::uint64_t>(buf, s.size());
  put_bytes(buf, s.data(), s.size());
}

inline void put_mat_f32(std::string& buf, const MatX<float>& m) {
  put_pod<std::uint64_t>(buf, std::uint64_t(m.rows()));
  put_pod<std::uint64_t>(buf, std::uint64_t(m.cols()));
  put_bytes(buf, m.data(), sizeof(float) * m.size());
}

class Reader {
 public:
  explicit Reader(std::string data) : data_(std::move(data)) {}

  template <typename T>
  T pod() {
    static_assert(std::is_trivially_copyable_v<T>);
    need(sizeof(T));
    T v;
    std::memcpy(&v, data_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return v;
  }

  std::string str() {
    auto n = pod<std::uint64_t>();
    need(n);
    std::string s = data_.substr(pos_, n);
    pos_ += n;
    return s;
  }

  MatX<float> mat_f32() {
    auto rows = pod<std::uint64_t>();
    auto cols = pod<std::uint64_t>();
    LOGO_REQUIRE(rows < (1u << 30) && cols < (1u << 30), "corrupt matrix header");
    need(sizeof(float) * rows * cols);
    MatX<float> m(rows, cols);
    std::memcpy(m.data(), data_.data() + pos_, sizeof(float) * m.size());
    pos_ += sizeof(float) * m.size();
    return m;
  }

  std::size_t pos() const { return pos_; }
  std::size_t size() const { return data_.size(); }
  bool done() const { return pos_ == data_.size(); }
  const std::string& data() const { return data_; }

 private:
  void need(std::size_t n) {
    if (pos_ + n > data_.size()) throw IoError("truncated archive");
  }
  std::string data_;
  std::size_t pos_ = 0;
};

}  // namespace ser

inline void write_file(const std::string& path, const std::string& bytes) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError("cannot open for writing: " + path);
  f.write(bytes.data(), std::streamsize(bytes.size()));
  if (!f) throw IoError("write failed: " + path);
}

inline std::string read_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open: " + path);
  std::string s((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  return s;
}

}  // namespace logo

// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cstdint>
#include <vector>

#include "logo/common.hpp"
#include "logo/linalg.hpp"

namespace logo {

// Interleaved RGB float image with values in [0, 1].
struct Image {
  int h = 0, w = 0;
  std::vector<float> px;  // size h*w*3, index (y*w + x)*3 + c

  Image() = default;
  Image(int height, int width) : h(height), w(width), px(std::size_t(height) * width * 3, 0.f) {}

  float& at(int y, int x, int c) { return px[(std::size_t(y) * w + x) * 3 + c]; }
  float at(int y, int x, int c) const { return px[(std::size_t(y) * w + x) * 3 + c]; }
};

// Bilinear sampling of an axis-aligned source window onto a square output.
// Output pixel centers map linearly onto the window; source reads clamp to the
// image border. When the window is the full image and sizes match, the map is
// the identity and pixels are copied through exactly.
inline Image resize_window(const Image& src, int top, int left, int win_h, int win_w, int out) {
  LOGO_REQUIRE(win_h > 0 && win_w > 0 && out > 0, "resize window must be non-empty");
  LOGO_REQUIRE(top >= 0 && left >= 0 && top + win_h <= src.h && left + win_w <= src.w,
               "resize window out of bounds");
  Image dst(out, out);
  const float sy = float(win_h) / float(out);
  const float sx = float(win_w) / float(out);
  for (int y = 0; y < out; ++y) {
    float fy = (float(y) + 0.5f) * sy - 0.5f + float(top);
    float cy = std::clamp(fy, float(top), float(top + win_h - 1));
    int y0 = int(std::floor(cy));
    int y1 = std::min(y0 + 1, top + win_h - 1);
    float wy = cy - float(y0);
    for (int x = 0; x < out; ++x) {
      float fx = (float(x) + 0.5f) * sx - 0.5f + float(left);
      float cx = std::clamp(fx, float(left), float(left + win_w - 1));
      int x0 = int(std::floor(cx));
      int x1 = std::min(x0 + 1, left + win_w - 1);
      float wx = cx - float(x0);
      for (int c = 0; c < 3; ++c) {
        float a = src.at(y0, x0, c) * (1.f - wx) + src.at(y0, x1, c) * wx;
        float b = src.at(y1, x0, c) * (1.f - wx) + src.at(y1, x1, c) * wx;
        dst.at(y, x, c) = a * (1.f - wy) + b * wy;
      }
    }
  }
  return dst;
}

inline Image resize(const Image& src, int out) { return resize_window(src, 0, 0, src.h, src.w, out); }

// Packs interleaved images into the planar [3, b*h*w] activation layout.
inline Mat pack_images(const std::vector<Image>& batch) {
  LOGO_REQUIRE(!batch.empty(), "cannot pack an empty batch");
  const int h = batch[0].h, w = batch[0].w;
  Mat out(3, Eigen::Index(batch.size()) * h * w);
  for (std::size_t b = 0; b < batch.size(); ++b) {
    LOGO_REQUIRE(batch[b].h == h && batch[b].w == w, "pack_images requires equal sizes");
    const Eigen::Index base = Eigen::Index(b) * h * w;
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x)
        for (int c = 0; c < 3; ++c) out(c, base + Eigen::Index(y) * w + x) = batch[b].at(y, x, c);
  }
  return out;
}

}  // namespace logo

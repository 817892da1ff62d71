// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <vector>

#include "logo/image.hpp"
#include "logo/rng.hpp"

namespace logo {

// Two-tier random resized cropping. Global crops keep a large fraction of the
// source area, local crops a small one, so the two scale intervals must not
// let a local crop grow past a global crop.
struct AugmentationConfig {
  double global_scale_min = 0.4;
  double global_scale_max = 1.0;
  double local_scale_min = 0.05;
  double local_scale_max = 0.4;
  double aspect_min = 3.0 / 4.0;
  double aspect_max = 4.0 / 3.0;
  int out_global = 64;
  int out_local = 32;
  double flip_prob = 0.5;
  double jitter_prob = 0.8;
  double jitter_brightness = 0.4;
  double jitter_contrast = 0.4;
  double jitter_saturation = 0.4;
  double jitter_hue = 0.1;
  double grayscale_prob = 0.2;
  double blur_prob = 0.5;
  double blur_sigma_min = 0.1;
  double blur_sigma_max = 2.0;

  void validate() const {
    LOGO_REQUIRE(global_scale_min > 0 && global_scale_min <= global_scale_max && global_scale_max <= 1.0,
                 "global scale interval invalid");
    LOGO_REQUIRE(local_scale_min > 0 && local_scale_min <= local_scale_max && local_scale_max <= 1.0,
                 "local scale interval invalid");
    LOGO_REQUIRE(global_scale_min >= local_scale_max,
                 "global scale lower bound must not fall below local scale upper bound");
    LOGO_REQUIRE(aspect_min > 0 && aspect_min <= aspect_max, "aspect interval invalid");
    LOGO_REQUIRE(out_global > 0 && out_local > 0 && out_local <= out_global,
                 "output sizes invalid");
    for (double p : {flip_prob, jitter_prob, grayscale_prob, blur_prob})
      LOGO_REQUIRE(p >= 0.0 && p <= 1.0, "probabilities must lie in [0, 1]");
  }
};

struct CropRect {
  int top = 0, left = 0, height = 0, width = 0;
  double area_fraction = 0.0;
  bool fallback = false;  // set when attempt sampling failed and the maximal centered crop was used
};

// Samples a crop window whose area fraction lies in [scale_lo, scale_hi] up to
// one-pixel rounding and whose aspect ratio is log-uniform in the given range.
// After ten rejected attempts the maximal centered crop with clamped aspect is
// returned and flagged.
inline CropRect sample_crop_rect(Rng& rng, int h, int w, double scale_lo, double scale_hi,
                                 double ratio_lo, double ratio_hi) {
  LOGO_REQUIRE(h > 0 && w > 0, "crop source must be non-empty");
  LOGO_REQUIRE(scale_lo > 0 && scale_lo <= scale_hi, "invalid scale interval");
  LOGO_REQUIRE(ratio_lo > 0 && ratio_lo <= ratio_hi, "invalid aspect interval");
  const double area = double(h) * double(w);
  for (int attempt = 0; attempt < 10; ++attempt) {
    double target = area * rng.uniform(scale_lo, scale_hi);
    double ratio = std::exp(rng.uniform(std::log(ratio_lo), std::log(ratio_hi)));
    int cw = int(std::lround(std::sqrt(target * ratio)));
    int ch = int(std::lround(std::sqrt(target / ratio)));
    if (cw >= 1 && ch >= 1 && cw <= w && ch <= h) {
      int top = int(rng.uniform_int(std::uint64_t(h - ch + 1)));
      int left = int(rng.uniform_int(std::uint64_t(w - cw + 1)));
      return {top, left, ch, cw, double(ch) * cw / area, false};
    }
  }
  double in_ratio = double(w) / double(h);
  int cw = w, ch = h;
  if (in_ratio < ratio_lo) {
    cw = w;
    ch = int(std::lround(cw / ratio_lo));
  } else if (in_ratio > ratio_hi) {
    ch = h;
    cw = int(std::lround(ch * ratio_hi));
  }
  ch = std::max(1, std::min(ch, h));
  cw = std::max(1, std::min(cw, w));
  return {(h - ch) / 2, (w - cw) / 2, ch, cw, double(ch) * cw / area, true};
}

namespace detail {

inline float luma(float r, float g, float b) { return 0.299f * r + 0.587f * g + 0.114f * b; }

inline void rgb_to_hsv(float r, float g, float b, float& h, float& s, float& v) {
  float mx = std::max({r, g, b}), mn = std::min({r, g, b});
  v = mx;
  float d = mx - mn;
  s = mx > 0.f ? d / mx : 0.f;
  if (d <= 0.f) {
    h = 0.f;
    return;
  }
  if (mx == r)
    h = (g - b) / d + (g < b ? 6.f : 0.f);
  else if (mx == g)
    h = (b - r) / d + 2.f;
  else
    h = (r - g) / d + 4.f;
  h /= 6.f;
}

inline void hsv_to_rgb(float h, float s, float v, float& r, float& g, float& b) {
  h = h - std::floor(h);
  float hh = h * 6.f;
  int i = int(hh) % 6;
  float f = hh - std::floor(hh);
  float p = v * (1.f - s);
  float q = v * (1.f - s * f);
  float t = v * (1.f - s * (1.f - f));
  switch (i) {
    case 0: r = v; g = t; b = p; break;
    case 1: r = q; g = v; b = p; break;
    case 2: r = p; g = v; b = t; break;
    case 3: r = p; g = q; b = v; break;
    case 4: r = t; g = p; b = v; break;
    default: r = v; g = p; b = q; break;
  }
}

inline void scale_clamp(Image& im, float factor) {
  for (auto& v : im.px) v = std::clamp(v * factor, 0.f, 1.f);
}

inline void blend_toward(Image& im, const std::vector<float>& target, float factor) {
  for (std::size_t i = 0; i < im.px.size(); ++i)
    im.px[i] = std::clamp(im.px[i] * factor + target[i] * (1.f - factor), 0.f, 1.f);
}

inline void gaussian_blur(Image& im, float sigma) {
  int radius = std::max(1, int(std::ceil(2.5f * sigma)));
  std::vector<float> k(2 * radius + 1);
  float sum = 0.f;
  for (int i = -radius; i <= radius; ++i) {
    k[i + radius] = std::exp(-0.5f * float(i) * float(i) / (sigma * sigma));
    sum += k[i + radius];
  }
  for (auto& v : k) v /= sum;
  Image tmp(im.h, im.w);
  for (int y = 0; y < im.h; ++y)
    for (int x = 0; x < im.w; ++x)
      for (int c = 0; c < 3; ++c) {
        float acc = 0.f;
        for (int i = -radius; i <= radius; ++i)
          acc += k[i + radius] * im.at(y, std::clamp(x + i, 0, im.w - 1), c);
        tmp.at(y, x, c) = acc;
      }
  for (int y = 0; y < im.h; ++y)
    for (int x = 0; x < im.w; ++x)
      for (int c = 0; c < 3; ++c) {
        float acc = 0.f;
        for (int i = -radius; i <= radius; ++i)
          acc += k[i + radius] * tmp.at(std::clamp(y + i, 0, im.h - 1), x, c);
        im.at(y, x, c) = acc;
      }
}

}  // namespace detail

inline Image to_grayscale(const Image& im) {
  Image out(im.h, im.w);
  for (int y = 0; y < im.h; ++y)
    for (int x = 0; x < im.w; ++x) {
      float v = detail::luma(im.at(y, x, 0), im.at(y, x, 1), im.at(y, x, 2));
      out.at(y, x, 0) = out.at(y, x, 1) = out.at(y, x, 2) = v;
    }
  return out;
}

// Stochastic photometric pipeline: color jitter, then grayscale, then blur,
// then horizontal flip, each behind an independent gate. With every
// probability at zero the input is returned unchanged, bit for bit. Gate draws
// are consumed even when an op is skipped so the draw sequence depends only on
// the config, not on earlier outcomes; op parameters are drawn only when the
// gate fires.
inline Image apply_photometric(const Image& in, const AugmentationConfig& cfg, Rng& rng) {
  Image im = in;
  if (rng.bernoulli(cfg.jitter_prob)) {
    float fb = float(rng.uniform(std::max(0.0, 1.0 - cfg.jitter_brightness), 1.0 + cfg.jitter_brightness));
    float fc = float(rng.uniform(std::max(0.0, 1.0 - cfg.jitter_contrast), 1.0 + cfg.jitter_contrast));
    float fs = float(rng.uniform(std::max(0.0, 1.0 - cfg.jitter_saturation), 1.0 + cfg.jitter_saturation));
    float dh = float(rng.uniform(-cfg.jitter_hue, cfg.jitter_hue));
    detail::scale_clamp(im, fb);
    float mean_luma = 0.f;
    for (int y = 0; y < im.h; ++y)
      for (int x = 0; x < im.w; ++x) mean_luma += detail::luma(im.at(y, x, 0), im.at(y, x, 1), im.at(y, x, 2));
    mean_luma /= float(im.h) * float(im.w);
    std::vector<float> grey(im.px.size(), mean_luma);
    detail::blend_toward(im, grey, fc);
    std::vector<float> sat(im.px.size());
    for (int y = 0; y < im.h; ++y)
      for (int x = 0; x < im.w; ++x) {
        float v = detail::luma(im.at(y, x, 0), im.at(y, x, 1), im.at(y, x, 2));
        for (int c = 0; c < 3; ++c) sat[(std::size_t(y) * im.w + x) * 3 + c] = v;
      }
    detail::blend_toward(im, sat, fs);
    for (int y = 0; y < im.h; ++y)
      for (int x = 0; x < im.w; ++x) {
        float h, s, v;
        detail::rgb_to_hsv(im.at(y, x, 0), im.at(y, x, 1), im.at(y, x, 2), h, s, v);
        detail::hsv_to_rgb(h + dh, s, v, im.at(y, x, 0), im.at(y, x, 1), im.at(y, x, 2));
      }
  }
  if (rng.bernoulli(cfg.grayscale_prob)) im = to_grayscale(im);
  if (rng.bernoulli(cfg.blur_prob)) {
    float sigma = float(rng.uniform(cfg.blur_sigma_min, cfg.blur_sigma_max));
    detail::gaussian_blur(im, sigma);
  }
  if (rng.bernoulli(cfg.flip_prob)) {
    for (int y = 0; y < im.h; ++y)
      for (int x = 0; x < im.w / 2; ++x)
        for (int c = 0; c < 3; ++c) std::swap(im.at(y, x, c), im.at(y, im.w - 1 - x, c));
  }
  return im;
}

// One training example: two global and two local views of a single source
// image, each independently cropped and photometrically transformed.
struct ViewSet {
  std::array<Image, 2> globals;
  std::array<Image, 2> locals;
  std::array<CropRect, 4> rects;  // global0, global1, local0, local1
  std::int64_t source_id = -1;
};

inline ViewSet make_views(const Image& src, std::int64_t source_id, const AugmentationConfig& cfg,
                          Rng& rng) {
  cfg.validate();
  ViewSet vs;
  vs.source_id = source_id;
  for (int i = 0; i < 2; ++i) {
    CropRect r = sample_crop_rect(rng, src.h, src.w, cfg.global_scale_min, cfg.global_scale_max,
                                  cfg.aspect_min, cfg.aspect_max);
    Image crop = resize_window(src, r.top, r.left, r.height, r.width, cfg.out_global);
    vs.globals[i] = apply_photometric(crop, cfg, rng);
    vs.rects[i] = r;
  }
  for (int i = 0; i < 2; ++i) {
    CropRect r = sample_crop_rect(rng, src.h, src.w, cfg.local_scale_min, cfg.local_scale_max,
                                  cfg.aspect_min, cfg.aspect_max);
    Image crop = resize_window(src, r.top, r.left, r.height, r.width, cfg.out_local);
    vs.locals[i] = apply_photometric(crop, cfg, rng);
    vs.rects[2 + i] = r;
  }
  return vs;
}

}  // namespace logo

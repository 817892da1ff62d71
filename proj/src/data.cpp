// SPDX-License-Identifier: Apache-2.0
#include "logo/data.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>

#include <opencv2/imgcodecs.hpp>

#include "logo/rng.hpp"

namespace fs = std::filesystem;

namespace logo {

const std::vector<int>& Dataset::split(const std::string& name) const {
  auto it = splits.find(name);
  LOGO_REQUIRE(it != splits.end(), "dataset has no split named '" + name + "'");
  return it->second;
}

void SynthConfig::validate() const {
  LOGO_REQUIRE(num_images >= 1, "num_images must be positive");
  LOGO_REQUIRE(canvas_size >= 16, "canvas too small");
  LOGO_REQUIRE(objects_per_image >= 1, "need at least one object per image");
  LOGO_REQUIRE(num_shape_classes >= 2 && num_shape_classes <= 10, "2..10 shape classes supported");
  LOGO_REQUIRE(background_kinds >= 1 && background_kinds <= 3, "1..3 background kinds supported");
  LOGO_REQUIRE(val_fraction >= 0.0 && val_fraction < 1.0, "val fraction must lie in [0, 1)");
}

namespace {

const char* kShapeNames[10] = {"circle", "square",  "triangle", "diamond", "ring",
                               "plus",   "stripes", "checker",  "frame",   "cross"};

// Point-in-shape test in box-relative coordinates u, v in [0, 1].
bool inside_shape(int cls, float u, float v) {
  const float dx = u - 0.5f, dy = v - 0.5f;
  switch (cls) {
    case 0: return dx * dx + dy * dy <= 0.25f;
    case 1: return true;
    case 2: return v >= 0.06f && std::abs(dx) <= 0.5f * (v - 0.06f) / 0.94f;
    case 3: return std::abs(dx) + std::abs(dy) <= 0.5f;
    case 4: {
      float r2 = dx * dx + dy * dy;
      return r2 <= 0.25f && r2 >= 0.09f;
    }
    case 5: return std::abs(dx) <= 0.17f || std::abs(dy) <= 0.17f;
    case 6: {
      int band = int(v * 5.f);
      return band % 2 == 0;
    }
    case 7: {
      int cx = int(u * 2.f), cy = int(v * 2.f);
      return (cx + cy) % 2 == 0;
    }
    case 8: return std::abs(dx) >= 0.32f || std::abs(dy) >= 0.32f;
    default: return std::abs(dx - dy) <= 0.12f || std::abs(dx + dy) <= 0.12f;
  }
}

void hsv_color(float h, float s, float v, float rgb[3]) {
  h = h - std::floor(h);
  float hh = h * 6.f;
  int i = int(hh) % 6;
  float f = hh - std::floor(hh);
  float p = v * (1.f - s), q = v * (1.f - s * f), t = v * (1.f - s * (1.f - f));
  switch (i) {
    case 0: rgb[0] = v; rgb[1] = t; rgb[2] = p; break;
    case 1: rgb[0] = q; rgb[1] = v; rgb[2] = p; break;
    case 2: rgb[0] = p; rgb[1] = v; rgb[2] = t; break;
    case 3: rgb[0] = p; rgb[1] = q; rgb[2] = v; break;
    case 4: rgb[0] = t; rgb[1] = p; rgb[2] = v; break;
    default: rgb[0] = v; rgb[1] = p; rgb[2] = q; break;
  }
}

void paint_background(Image& im, int kind, Rng& rng) {
  float c0[3], c1[3];
  hsv_color(float(rng.uniform()), 0.25f + 0.2f * float(rng.uniform()),
            0.35f + 0.3f * float(rng.uniform()), c0);
  hsv_color(float(rng.uniform()), 0.25f + 0.2f * float(rng.uniform()),
            0.35f + 0.3f * float(rng.uniform()), c1);
  const float cx = 0.2f + 0.6f * float(rng.uniform());
  const float cy = 0.2f + 0.6f * float(rng.uniform());
  for (int y = 0; y < im.h; ++y) {
    for (int x = 0; x < im.w; ++x) {
      float t;
      if (kind == 0) {
        t = float(y) / float(im.h - 1);
      } else if (kind == 1) {
        t = float(x) / float(im.w - 1);
      } else {
        float dx = float(x) / float(im.w - 1) - cx;
        float dy = float(y) / float(im.h - 1) - cy;
        t = std::min(1.f, std::sqrt(dx * dx + dy * dy) * 1.4f);
      }
      for (int c = 0; c < 3; ++c) im.at(y, x, c) = c0[c] * (1.f - t) + c1[c] * t;
    }
  }
  // Mild per-pixel texture.
  for (auto& v : im.px) v = std::clamp(v + 0.02f * float(rng.normal()), 0.f, 1.f);
}

void draw_shape(Image& im, const ObjectBox& box, const float rgb[3]) {
  // 2x2 supersampling per pixel for soft edges.
  for (int y = box.top; y < box.top + box.height; ++y) {
    for (int x = box.left; x < box.left + box.width; ++x) {
      int hits = 0;
      for (int sy = 0; sy < 2; ++sy)
        for (int sx = 0; sx < 2; ++sx) {
          float u = (float(x - box.left) + 0.25f + 0.5f * float(sx)) / float(box.width);
          float v = (float(y - box.top) + 0.25f + 0.5f * float(sy)) / float(box.height);
          if (inside_shape(box.cls, u, v)) ++hits;
        }
      if (hits == 0) continue;
      float a = float(hits) / 4.f;
      for (int c = 0; c < 3; ++c) im.at(y, x, c) = im.at(y, x, c) * (1.f - a) + rgb[c] * a;
    }
  }
}

double overlap_fraction(const ObjectBox& a, const ObjectBox& b) {
  int top = std::max(a.top, b.top);
  int left = std::max(a.left, b.left);
  int bottom = std::min(a.top + a.height, b.top + b.height);
  int right = std::min(a.left + a.width, b.left + b.width);
  if (bottom <= top || right <= left) return 0.0;
  double inter = double(bottom - top) * double(right - left);
  double smaller = double(std::min(a.height * a.width, b.height * b.width));
  return inter / smaller;
}

bool place_box(Rng& rng, int canvas, double lo, double hi, int cls, bool primary,
               const std::vector<ObjectBox>& placed, ObjectBox& out) {
  double shrink = 1.0;
  for (int attempt = 0; attempt < 400; ++attempt) {
    if (attempt > 0 && attempt % 50 == 0) shrink *= 0.9;
    int size = std::max(4, int(std::lround(double(canvas) * rng.uniform(lo, hi) * shrink)));
    size = std::min(size, canvas - 2);
    int top = 1 + int(rng.uniform_int(std::uint64_t(canvas - size - 1)));
    int left = 1 + int(rng.uniform_int(std::uint64_t(canvas - size - 1)));
    ObjectBox box{top, left, size, size, cls, primary};
    bool ok = true;
    for (const auto& other : placed)
      if (overlap_fraction(box, other) >= 0.3) {
        ok = false;
        break;
      }
    if (ok) {
      out = box;
      return true;
    }
  }
  return false;
}

}  // namespace

Dataset generate_synthetic(const SynthConfig& cfg) {
  cfg.validate();
  Dataset ds;
  for (int c = 0; c < cfg.num_shape_classes; ++c) ds.class_names.push_back(kShapeNames[c]);
  ds.samples.reserve(std::size_t(cfg.num_images));
  ds.boxes.resize(std::size_t(cfg.num_images));

  for (int i = 0; i < cfg.num_images; ++i) {
    Rng rng = derive_rng(cfg.seed, "synth_image", std::uint64_t(i));
    Image im(cfg.canvas_size, cfg.canvas_size);
    paint_background(im, int(rng.uniform_int(std::uint64_t(cfg.background_kinds))), rng);

    const int primary_cls = int(rng.uniform_int(std::uint64_t(cfg.num_shape_classes)));
    std::vector<ObjectBox>& boxes = ds.boxes[std::size_t(i)];
    ObjectBox primary;
    bool placed = place_box(rng, cfg.canvas_size, 0.42, 0.62, primary_cls, true, boxes, primary);
    LOGO_REQUIRE(placed, "failed to place the primary object");
    boxes.push_back(primary);
    for (int d = 1; d < cfg.objects_per_image; ++d) {
      int cls = int(rng.uniform_int(std::uint64_t(cfg.num_shape_classes - 1)));
      if (cls >= primary_cls) ++cls;  // distractors come from other classes
      ObjectBox box;
      if (place_box(rng, cfg.canvas_size, 0.16, 0.26, cls, false, boxes, box)) boxes.push_back(box);
    }

    // Class-correlated colors: stable hue per class, small per-instance jitter.
    // Reverse order draws distractors first so the primary is never occluded.
    for (std::size_t b = boxes.size(); b-- > 0;) {
      const ObjectBox& box = boxes[b];
      float hue = float(box.cls) / float(cfg.num_shape_classes) + 0.02f * float(rng.normal());
      float rgb[3];
      hsv_color(hue, 0.8f + 0.1f * float(rng.uniform()), 0.8f + 0.15f * float(rng.uniform()), rgb);
      draw_shape(im, box, rgb);
    }

    ImageSample s;
    s.image = std::move(im);
    s.label = primary_cls;
    s.source_id = i;
    ds.samples.push_back(std::move(s));
  }

  // Deterministic split.
  std::vector<int> idx(std::size_t(cfg.num_images));
  for (int i = 0; i < cfg.num_images; ++i) idx[std::size_t(i)] = i;
  Rng split_rng = derive_rng(cfg.seed, "synth_split");
  split_rng.shuffle(idx);
  const int val = int(std::lround(cfg.val_fraction * cfg.num_images));
  std::vector<int> val_idx(idx.begin(), idx.begin() + val);
  std::vector<int> train_idx(idx.begin() + val, idx.end());
  std::sort(val_idx.begin(), val_idx.end());
  std::sort(train_idx.begin(), train_idx.end());
  ds.splits["train"] = std::move(train_idx);
  ds.splits["val"] = std::move(val_idx);
  return ds;
}

namespace {

Image decode_to_image(const cv::Mat& bgr) {
  Image im(bgr.rows, bgr.cols);
  for (int y = 0; y < bgr.rows; ++y)
    for (int x = 0; x < bgr.cols; ++x) {
      const auto& px = bgr.at<cv::Vec3b>(y, x);
      im.at(y, x, 0) = float(px[2]) / 255.f;
      im.at(y, x, 1) = float(px[1]) / 255.f;
      im.at(y, x, 2) = float(px[0]) / 255.f;
    }
  return im;
}

}  // namespace

Dataset load_image_folder(const std::string& path) {
  LOGO_REQUIRE(fs::is_directory(path), "not a directory: " + path);
  Dataset ds;
  std::vector<fs::path> class_dirs;
  for (const auto& e : fs::directory_iterator(path))
    if (e.is_directory()) class_dirs.push_back(e.path());
  std::sort(class_dirs.begin(), class_dirs.end());
  if (class_dirs.empty()) throw IoError("no class subdirectories found in " + path);

  std::vector<std::string> failures;
  std::vector<int> train;
  std::int64_t next_id = 0;
  for (std::size_t c = 0; c < class_dirs.size(); ++c) {
    ds.class_names.push_back(class_dirs[c].filename().string());
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(class_dirs[c]))
      if (e.is_regular_file()) files.push_back(e.path());
    std::sort(files.begin(), files.end());
    for (const auto& f : files) {
      cv::Mat bgr = cv::imread(f.string(), cv::IMREAD_COLOR);
      if (bgr.empty()) {
        failures.push_back(f.string());
        continue;
      }
      ImageSample s;
      s.image = decode_to_image(bgr);
      s.label = int(c);
      s.source_id = next_id;
      train.push_back(int(next_id));
      ++next_id;
      ds.samples.push_back(std::move(s));
      ds.boxes.emplace_back();
    }
  }
  if (!failures.empty()) {
    std::string msg = std::to_string(failures.size()) + " files failed to decode:";
    for (std::size_t i = 0; i < failures.size() && i < 10; ++i) msg += "\n  " + failures[i];
    throw IoError(msg);
  }
  if (ds.samples.empty()) throw IoError("no decodable images found in " + path);
  ds.splits["train"] = std::move(train);
  return ds;
}

namespace {

void load_cifar_file(const fs::path& file, Dataset& ds, std::vector<int>& split_idx) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw IoError("cannot open: " + file.string());
  std::vector<char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  constexpr std::size_t kRecord = 1 + 32 * 32 * 3;
  if (bytes.empty() || bytes.size() % kRecord != 0)
    throw IoError("not a CIFAR batch (size " + std::to_string(bytes.size()) + "): " + file.string());
  const std::size_t n = bytes.size() / kRecord;
  for (std::size_t r = 0; r < n; ++r) {
    const unsigned char* rec = reinterpret_cast<const unsigned char*>(bytes.data()) + r * kRecord;
    ImageSample s;
    s.label = rec[0];
    s.image = Image(32, 32);
    for (int c = 0; c < 3; ++c)
      for (int y = 0; y < 32; ++y)
        for (int x = 0; x < 32; ++x)
          s.image.at(y, x, c) = float(rec[1 + c * 1024 + y * 32 + x]) / 255.f;
    s.source_id = std::int64_t(ds.samples.size());
    split_idx.push_back(int(ds.samples.size()));
    ds.samples.push_back(std::move(s));
    ds.boxes.emplace_back();
  }
}

}  // namespace

Dataset load_cifar_binary(const std::string& path) {
  Dataset ds;
  ds.class_names = {"airplane", "automobile", "bird", "cat", "deer",
                    "dog",      "frog",       "horse", "ship", "truck"};
  std::vector<int> train, val;
  if (fs::is_regular_file(path)) {
    load_cifar_file(path, ds, train);
  } else if (fs::is_directory(path)) {
    std::vector<fs::path> train_files, test_files;
    for (const auto& e : fs::directory_iterator(path)) {
      if (!e.is_regular_file()) continue;
      const std::string name = e.path().filename().string();
      if (name.rfind("data_batch", 0) == 0 && name.ends_with(".bin")) train_files.push_back(e.path());
      if (name == "test_batch.bin") test_files.push_back(e.path());
    }
    std::sort(train_files.begin(), train_files.end());
    if (train_files.empty() && test_files.empty())
      throw IoError("no CIFAR batch files found in " + path);
    for (const auto& f : train_files) load_cifar_file(f, ds, train);
    for (const auto& f : test_files) load_cifar_file(f, ds, val);
  } else {
    throw IoError("no such file or directory: " + path);
  }
  ds.splits["train"] = std::move(train);
  if (!val.empty()) ds.splits["val"] = std::move(val);
  return ds;
}

void export_image_folder(const Dataset& ds, const std::string& out_dir) {
  fs::create_directories(out_dir);
  char name[64];
  for (std::size_t i = 0; i < ds.samples.size(); ++i) {
    const auto& s = ds.samples[i];
    std::string cls = s.label >= 0 && s.label < int(ds.class_names.size())
                          ? ds.class_names[std::size_t(s.label)]
                          : "unlabeled";
    fs::path dir = fs::path(out_dir) / cls;
    fs::create_directories(dir);
    cv::Mat bgr(s.image.h, s.image.w, CV_8UC3);
    for (int y = 0; y < s.image.h; ++y)
      for (int x = 0; x < s.image.w; ++x) {
        auto& px = bgr.at<cv::Vec3b>(y, x);
        px[2] = uchar(std::lround(std::clamp(s.image.at(y, x, 0), 0.f, 1.f) * 255.f));
        px[1] = uchar(std::lround(std::clamp(s.image.at(y, x, 1), 0.f, 1.f) * 255.f));
        px[0] = uchar(std::lround(std::clamp(s.image.at(y, x, 2), 0.f, 1.f) * 255.f));
      }
    std::snprintf(name, sizeof(name), "img_%06zu.png", i);
    if (!cv::imwrite((dir / name).string(), bgr))
      throw IoError("failed to write " + (dir / name).string());
  }
}

void make_val_split(Dataset& ds, double val_fraction, std::uint64_t seed) {
  LOGO_REQUIRE(val_fraction >= 0.0 && val_fraction < 1.0, "val fraction must lie in [0, 1)");
  auto it = ds.splits.find("train");
  LOGO_REQUIRE(it != ds.splits.end(), "dataset has no train split");
  std::vector<int> idx = it->second;
  Rng rng = derive_rng(seed, "val_split");
  rng.shuffle(idx);
  const int val = int(std::lround(val_fraction * double(idx.size())));
  std::vector<int> val_idx(idx.begin(), idx.begin() + val);
  std::vector<int> train_idx(idx.begin() + val, idx.end());
  std::sort(val_idx.begin(), val_idx.end());
  std::sort(train_idx.begin(), train_idx.end());
  ds.splits["train"] = std::move(train_idx);
  ds.splits["val"] = std::move(val_idx);
}

}  // namespace logo

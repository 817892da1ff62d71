// SPDX-License-Identifier: Apache-2.0
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>

#include "logo/data.hpp"

using namespace logo;
namespace fs = std::filesystem;

namespace {

SynthConfig small_synth() {
  SynthConfig cfg;
  cfg.num_images = 40;
  cfg.canvas_size = 32;
  cfg.seed = 42;
  return cfg;
}

double box_overlap(const ObjectBox& a, const ObjectBox& b) {
  const int top = std::max(a.top, b.top), left = std::max(a.left, b.left);
  const int bottom = std::min(a.top + a.height, b.top + b.height);
  const int right = std::min(a.left + a.width, b.left + b.width);
  if (bottom <= top || right <= left) return 0.0;
  return double(bottom - top) * double(right - left) /
         double(std::min(a.height * a.width, b.height * b.width));
}

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() /
           ("logo_test_" + std::to_string(std::uintptr_t(this)) + "_" +
            std::to_string(std::rand()));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

}  // namespace

TEST_CASE("synthetic generation is deterministic") {
  Dataset a = generate_synthetic(small_synth());
  Dataset b = generate_synthetic(small_synth());
  REQUIRE(a.samples.size() == 40);
  for (std::size_t i = 0; i < a.samples.size(); ++i) {
    CHECK(a.samples[i].image.px == b.samples[i].image.px);
    CHECK(a.samples[i].label == b.samples[i].label);
  }
  SynthConfig other = small_synth();
  other.seed = 43;
  Dataset c = generate_synthetic(other);
  CHECK(a.samples[0].image.px != c.samples[0].image.px);
}

TEST_CASE("synthetic samples carry valid labels, ids, and boxes") {
  Dataset ds = generate_synthetic(small_synth());
  CHECK(ds.num_classes() == 10);
  std::set<int> seen_labels;
  for (std::size_t i = 0; i < ds.samples.size(); ++i) {
    const auto& s = ds.samples[i];
    CHECK(s.label >= 0);
    CHECK(s.label < 10);
    CHECK(s.source_id == std::int64_t(i));
    seen_labels.insert(s.label);
    for (float v : s.image.px) {
      CHECK(v >= 0.f);
      CHECK(v <= 1.f);
    }
    const auto& boxes = ds.boxes[i];
    REQUIRE(!boxes.empty());
    int primaries = 0;
    for (const auto& b : boxes) {
      CHECK(b.top >= 0);
      CHECK(b.left >= 0);
      CHECK(b.top + b.height <= 32);
      CHECK(b.left + b.width <= 32);
      if (b.primary) {
        ++primaries;
        CHECK(b.cls == s.label);
      }
    }
    CHECK(primaries == 1);
    // The primary is the largest object by construction.
    const ObjectBox* primary = nullptr;
    for (const auto& b : boxes)
      if (b.primary) primary = &b;
    for (const auto& b : boxes)
      if (!b.primary) CHECK(b.height * b.width < primary->height * primary->width);
  }
  CHECK(seen_labels.size() >= 5);  // 40 draws over 10 classes hit most of them
}

TEST_CASE("synthetic objects do not overlap beyond the placement limit") {
  Dataset ds = generate_synthetic(small_synth());
  for (const auto& boxes : ds.boxes)
    for (std::size_t i = 0; i < boxes.size(); ++i)
      for (std::size_t j = i + 1; j < boxes.size(); ++j)
        CHECK(box_overlap(boxes[i], boxes[j]) < 0.3);
}

TEST_CASE("synthetic split is disjoint, covering, and sized by the fraction") {
  SynthConfig cfg = small_synth();
  cfg.val_fraction = 0.25;
  Dataset ds = generate_synthetic(cfg);
  const auto& train = ds.split("train");
  const auto& val = ds.split("val");
  CHECK(val.size() == 10);
  CHECK(train.size() == 30);
  std::set<int> all(train.begin(), train.end());
  all.insert(val.begin(), val.end());
  CHECK(all.size() == 40);
  CHECK(std::is_sorted(train.begin(), train.end()));
  CHECK(std::is_sorted(val.begin(), val.end()));
  CHECK_THROWS_AS(ds.split("nope"), ContractViolation);
}

TEST_CASE("image folder export and reload round-trips within quantization") {
  SynthConfig cfg = small_synth();
  cfg.num_images = 12;
  Dataset ds = generate_synthetic(cfg);
  TempDir tmp;
  export_image_folder(ds, tmp.path.string());
  Dataset back = load_image_folder(tmp.path.string());
  REQUIRE(back.samples.size() == 12);
  // Class names come back sorted; only classes that actually occur appear.
  CHECK(std::is_sorted(back.class_names.begin(), back.class_names.end()));
  std::set<std::string> expected;
  for (const auto& s : ds.samples) expected.insert(ds.class_names[std::size_t(s.label)]);
  CHECK(back.class_names.size() == expected.size());

  // Pixels survive the u8 round trip within one quantization step.
  // Match source to reloaded sample by class name and file order.
  std::map<std::string, std::vector<const ImageSample*>> by_class;
  for (const auto& s : ds.samples) by_class[ds.class_names[std::size_t(s.label)]].push_back(&s);
  std::map<std::string, int> cursor;
  for (const auto& s : back.samples) {
    const std::string& cls = back.class_names[std::size_t(s.label)];
    const ImageSample* src = by_class[cls][std::size_t(cursor[cls]++)];
    REQUIRE(s.image.px.size() == src->image.px.size());
    for (std::size_t i = 0; i < s.image.px.size(); ++i)
      CHECK(std::abs(s.image.px[i] - src->image.px[i]) <= 0.5f / 255.f + 1e-6f);
  }
}

TEST_CASE("image folder loader rejects empty and missing layouts") {
  TempDir tmp;
  CHECK_THROWS_AS(load_image_folder(tmp.path.string()), IoError);
  fs::create_directories(tmp.path / "classa");
  CHECK_THROWS_AS(load_image_folder(tmp.path.string()), IoError);
  std::ofstream(tmp.path / "classa" / "broken.png") << "not a png";
  CHECK_THROWS_AS(load_image_folder(tmp.path.string()), IoError);
}

TEST_CASE("cifar loader parses the binary record layout") {
  TempDir tmp;
  const fs::path file = tmp.path / "data_batch_1.bin";
  {
    std::ofstream out(file, std::ios::binary);
    // Two records: label 3 with red plane 255, label 7 with blue plane 128.
    std::vector<unsigned char> rec(3073, 0);
    rec[0] = 3;
    for (int i = 0; i < 1024; ++i) rec[1 + i] = 255;
    out.write(reinterpret_cast<char*>(rec.data()), std::streamsize(rec.size()));
    std::fill(rec.begin(), rec.end(), (unsigned char)(0));
    rec[0] = 7;
    for (int i = 0; i < 1024; ++i) rec[1 + 2048 + i] = 128;
    out.write(reinterpret_cast<char*>(rec.data()), std::streamsize(rec.size()));
  }
  Dataset ds = load_cifar_binary(file.string());
  REQUIRE(ds.samples.size() == 2);
  CHECK(ds.samples[0].label == 3);
  CHECK(ds.samples[1].label == 7);
  CHECK(ds.samples[0].image.at(0, 0, 0) == 1.0f);
  CHECK(ds.samples[0].image.at(31, 31, 2) == 0.0f);
  CHECK(ds.samples[1].image.at(5, 5, 2) == doctest::Approx(128.f / 255.f));
  CHECK(ds.split("train").size() == 2);

  // Directory layout: data_batch_*.bin fills train, test_batch.bin fills val.
  fs::copy_file(file, tmp.path / "test_batch.bin");
  Dataset both = load_cifar_binary(tmp.path.string());
  CHECK(both.split("train").size() == 2);
  CHECK(both.split("val").size() == 2);

  std::ofstream(tmp.path / "data_batch_1.bin", std::ios::binary) << "tiny";
  CHECK_THROWS_AS(load_cifar_binary((tmp.path / "data_batch_1.bin").string()), IoError);
  CHECK_THROWS_AS(load_cifar_binary((tmp.path / "missing").string()), IoError);
}

TEST_CASE("val split carve-out is deterministic and disjoint") {
  SynthConfig cfg = small_synth();
  cfg.val_fraction = 0.0;
  Dataset ds = generate_synthetic(cfg);
  CHECK(ds.split("val").empty());
  make_val_split(ds, 0.2, 5);
  const auto train = ds.split("train");
  const auto val = ds.split("val");
  CHECK(val.size() == 8);
  CHECK(train.size() == 32);

  Dataset ds2 = generate_synthetic(cfg);
  make_val_split(ds2, 0.2, 5);
  CHECK(ds2.split("val") == val);
  Dataset ds3 = generate_synthetic(cfg);
  make_val_split(ds3, 0.2, 6);
  CHECK(ds3.split("val") != val);
}

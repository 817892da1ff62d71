// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "logo/image.hpp"

namespace logo {

struct ImageSample {
  Image image;
  int label = -1;  // -1 when unlabeled
  std::int64_t source_id = -1;
};

// Axis-aligned object box, recorded by the synthetic generator.
struct ObjectBox {
  int top = 0, left = 0, height = 0, width = 0;
  int cls = -1;
  bool primary = false;
};

struct Dataset {
  std::vector<ImageSample> samples;
  std::vector<std::string> class_names;
  std::map<std::string, std::vector<int>> splits;    // split name -> sample indices
  std::vector<std::vector<ObjectBox>> boxes;         // per sample; empty for loaded datasets

  const std::vector<int>& split(const std::string& name) const;
  int num_classes() const { return int(class_names.size()); }
};

// Procedural dataset: each image carries one large primary shape on a textured
// background plus smaller distractor shapes of other classes. The label is the
// primary shape class. Object boxes are recorded and pairwise overlap between
// objects is kept under 30 percent of either box.
struct SynthConfig {
  int num_images = 2000;
  int canvas_size = 64;
  int objects_per_image = 3;
  int num_shape_classes = 10;
  int background_kinds = 3;
  std::uint64_t seed = 7;
  double val_fraction = 0.1;

  void validate() const;
};

Dataset generate_synthetic(const SynthConfig& cfg);

// Directory tree with one subdirectory per class. Decodable images load into
// the "train" split; a deterministic fraction can be carved into "val" with
// make_val_split.
Dataset load_image_folder(const std::string& path);

// CIFAR-style binary batches: one record is a label byte followed by
// 32*32*3 channel-planar pixels. A file loads into "train"; a directory loads
// data_batch_*.bin into "train" and test_batch.bin into "val".
Dataset load_cifar_binary(const std::string& path);

void export_image_folder(const Dataset& ds, const std::string& out_dir);

void make_val_split(Dataset& ds, double val_fraction, std::uint64_t seed);

}  // namespace logo

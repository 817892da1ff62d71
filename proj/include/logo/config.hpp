// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <vector>

#include "logo/augment.hpp"
#include "logo/data.hpp"
#include "logo/eval.hpp"
#include "logo/trainer.hpp"

namespace logo {

// Full tool configuration addressed through flat dotted keys (train.lambda,
// aug.flip_prob, ...). Files hold one key=value per line with # comments;
// command-line overrides use the same syntax and win over files.
struct RunConfig {
  std::string data_kind = "synthetic";  // synthetic | image_folder | cifar
  std::string data_path;
  double data_val_fraction = 0.1;  // carved from train when the source has no val split
  SynthConfig synth;
  TrainConfig train;
  AugmentationConfig aug;
  ProbeConfig probe;

  void validate() const;
};

// Throws ConfigError on unreadable files, malformed lines, unknown keys, or
// unparsable values.
void apply_config_file(RunConfig& cfg, const std::string& path);
void apply_override(RunConfig& cfg, const std::string& assignment);

// Canonical one-key-per-line echo in schema order. Parsing the echo back
// reproduces the same configuration exactly.
std::string echo_config(const RunConfig& cfg);

// Materializes the configured dataset, guaranteeing train and val splits.
Dataset load_dataset(const RunConfig& cfg);

}  // namespace logo

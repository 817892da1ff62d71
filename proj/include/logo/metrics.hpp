// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <fstream>
#include <limits>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "logo/common.hpp"

namespace logo {

struct StepRecord {
  std::int64_t step = 0;
  std::int64_t epoch = 0;
  double lr = 0.0;
  double loss_gg = 0.0;
  double loss_lg = 0.0;
  double loss_ll = 0.0;
  double omega = 0.0;
  double total = 0.0;
};

struct EvalRecord {
  std::int64_t step = 0;
  double knn_top1 = 0.0;
};

struct MetricsLog {
  std::vector<StepRecord> steps;
  std::vector<EvalRecord> evals;
  int skipped_lines = 0;
};

// Appends one JSON object per line; each line is flushed so an aborted run
// keeps everything written so far.
class MetricsWriter {
 public:
  explicit MetricsWriter(const std::string& path) : out_(path, std::ios::trunc) {
    if (!out_) throw IoError("cannot open metrics log for writing: " + path);
  }

  void write(const StepRecord& r) {
    nlohmann::json j{{"kind", "step"},     {"step", r.step},       {"epoch", r.epoch},
                     {"lr", r.lr},         {"loss_gg", r.loss_gg}, {"loss_lg", r.loss_lg},
                     {"loss_ll", r.loss_ll}, {"omega", r.omega},   {"total", r.total}};
    out_ << j.dump() << '\n';
    out_.flush();
  }

  void write(const EvalRecord& r) {
    nlohmann::json j{{"kind", "eval"}, {"step", r.step}, {"knn_top1", r.knn_top1}};
    out_ << j.dump() << '\n';
    out_.flush();
  }

 private:
  std::ofstream out_;
};

// Reads a metrics log back. Lines that fail to parse are counted and skipped
// rather than aborting, so partially written logs remain usable.
inline MetricsLog parse_metrics(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open metrics log: " + path);
  MetricsLog log;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object()) {
      ++log.skipped_lines;
      continue;
    }
    try {
      const std::string kind = j.value("kind", "");
      if (kind == "step") {
        StepRecord r;
        r.step = j.at("step").get<std::int64_t>();
        r.epoch = j.at("epoch").get<std::int64_t>();
        r.lr = j.at("lr").get<double>();
        r.loss_gg = j.at("loss_gg").get<double>();
        r.loss_lg = j.at("loss_lg").get<double>();
        // The measure's diagnostics overflow to null in JSON when it diverges
        // on an inactive term; keep the step and surface them as NaN.
        r.loss_ll = j.at("loss_ll").is_null() ? std::numeric_limits<double>::quiet_NaN()
                                              : j.at("loss_ll").get<double>();
        r.omega = j.at("omega").is_null() ? std::numeric_limits<double>::quiet_NaN()
                                          : j.at("omega").get<double>();
        r.total = j.at("total").get<double>();
        log.steps.push_back(r);
      } else if (kind == "eval") {
        EvalRecord r;
        r.step = j.at("step").get<std::int64_t>();
        r.knn_top1 = j.at("knn_top1").get<double>();
        log.evals.push_back(r);
      } else {
        ++log.skipped_lines;
      }
    } catch (const nlohmann::json::exception&) {
      ++log.skipped_lines;
    }
  }
  return log;
}

}  // namespace logo

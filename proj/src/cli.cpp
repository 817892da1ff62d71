// SPDX-License-Identifier: Apache-2.0
#include "logo/cli.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "logo/chart.hpp"
#include "logo/config.hpp"
#include "logo/trainer.hpp"

namespace fs = std::filesystem;

namespace logo {

namespace {

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write " + path);
  out << text;
}

// Replays a canonical config echo (one `key = value` per line).
void apply_echo(RunConfig& cfg, const std::string& echo) {
  std::stringstream ss(echo);
  std::string line;
  while (std::getline(ss, line))
    if (line.find('=') != std::string::npos) apply_override(cfg, line);
}

RunConfig build_config(const std::vector<std::string>& files,
                       const std::vector<std::string>& overrides,
                       const std::string& base_echo = "") {
  RunConfig cfg;
  if (!base_echo.empty()) apply_echo(cfg, base_echo);
  for (const auto& f : files) apply_config_file(cfg, f);
  for (const auto& o : overrides) apply_override(cfg, o);
  cfg.validate();
  return cfg;
}

struct CommonOpts {
  std::vector<std::string> configs;
  std::vector<std::string> overrides;
};

void add_common(CLI::App* cmd, CommonOpts& opts) {
  cmd->add_option("--config", opts.configs, "Config file, key = value per line; repeatable")
      ->check(CLI::ExistingFile);
  cmd->add_option("overrides", opts.overrides, "Trailing key=value settings; win over files");
}

int cmd_train(const CommonOpts& opts, const std::string& out_dir, const std::string& resume,
              int stop_after_epochs) {
  TrainState st;
  RunConfig cfg;
  if (resume.empty()) {
    cfg = build_config(opts.configs, opts.overrides);
    st = make_train_state(cfg.train, cfg.aug);
    st.run_config_echo = echo_config(cfg);
  } else {
    st = load_checkpoint(resume);
    cfg = build_config(opts.configs, opts.overrides, st.run_config_echo);
    st.run_config_echo = echo_config(cfg);
  }

  fs::create_directories(out_dir);
  write_text(out_dir + "/config.resolved", echo_config(cfg));
  Dataset data = load_dataset(cfg);
  std::fprintf(stderr, "dataset: %zu samples, %d classes, train=%zu val=%zu\n",
               data.samples.size(), data.num_classes(), data.split("train").size(),
               data.splits.count("val") ? data.split("val").size() : std::size_t(0));

  MetricsWriter metrics(out_dir + "/metrics.jsonl");
  FitHooks hooks;
  hooks.metrics = &metrics;
  hooks.checkpoint_path = out_dir + "/checkpoint.bin";
  hooks.stop_after_epochs = stop_after_epochs;
  hooks.on_eval = [](const EvalRecord& er) {
    std::fprintf(stderr, "step %lld knn_top1 %.4f\n", (long long)er.step, er.knn_top1);
  };
  fit(st, data, hooks);
  std::printf("trained to step %lld of %lld\n", (long long)st.step, (long long)st.total_steps);
  std::printf("checkpoint: %s\n", hooks.checkpoint_path.c_str());
  return 0;
}

int cmd_eval(const CommonOpts& opts, const std::string& checkpoint, const std::string& out_dir,
             bool with_probe) {
  TrainState st = load_checkpoint(checkpoint);
  RunConfig cfg = build_config(opts.configs, opts.overrides, st.run_config_echo);
  Dataset data = load_dataset(cfg);
  LOGO_REQUIRE(data.splits.count("val") && !data.split("val").empty(),
               "evaluation needs a val split");

  FeatureBank bank = build_feature_bank(st.enc.online, data, data.split("train"));
  FeatureBank queries = build_feature_bank(st.enc.online, data, data.split("val"));
  const double knn = knn_top1(bank, queries, data.num_classes(),
                              {cfg.train.knn_k, cfg.train.knn_vote_temperature});
  std::printf("knn_top1 %.4f\n", knn);

  nlohmann::json j{{"step", st.step}, {"knn_top1", knn}};
  if (with_probe) {
    ProbeResult pr = linear_probe(bank, queries, data.num_classes(), cfg.probe);
    std::printf("probe_train_top1 %.4f\n", pr.train_top1);
    std::printf("probe_val_top1 %.4f\n", pr.val_top1);
    j["probe_train_top1"] = pr.train_top1;
    j["probe_val_top1"] = pr.val_top1;
  }
  if (!out_dir.empty()) {
    fs::create_directories(out_dir);
    write_text(out_dir + "/eval.json", j.dump(2) + "\n");
  }
  return 0;
}

int cmd_affinity(const CommonOpts& opts, const std::string& checkpoint, const std::string& out_dir,
                 int reference, int num_candidates) {
  TrainState st = load_checkpoint(checkpoint);
  RunConfig cfg = build_config(opts.configs, opts.overrides, st.run_config_echo);
  Dataset data = load_dataset(cfg);

  const std::vector<int>& val_idx =
      data.splits.count("val") && !data.split("val").empty() ? data.split("val")
                                                             : data.split("train");
  LOGO_REQUIRE(reference >= 0 && reference < int(val_idx.size()),
               "reference index out of range");
  const ImageSample& ref = data.samples[std::size_t(val_idx[std::size_t(reference)])];

  const std::vector<int>& train_idx = data.split("train");
  LOGO_REQUIRE(num_candidates >= 1, "need at least one candidate");
  std::vector<std::pair<std::string, Image>> candidates;
  char name[96];
  for (int i = 0; i < num_candidates && i < int(train_idx.size()); ++i) {
    const ImageSample& s = data.samples[std::size_t(train_idx[std::size_t(i)])];
    const char* cls = s.label >= 0 && s.label < data.num_classes()
                          ? data.class_names[std::size_t(s.label)].c_str()
                          : "?";
    std::snprintf(name, sizeof(name), "%05lld:%s", (long long)s.source_id, cls);
    candidates.emplace_back(name, s.image);
  }

  AffinityReport rep = affinity_compare(st.enc.online, *st.affinity, ref.image, candidates);
  std::string tsv = format_affinity_report(rep);
  std::fputs(tsv.c_str(), stdout);

  fs::create_directories(out_dir);
  write_text(out_dir + "/affinity.tsv", tsv);
  std::vector<std::string> groups;
  Series cosine{"cosine (normalized)", {}, {}}, learned{"learned (normalized)", {}, {}};
  for (const auto& r : rep.rows) {
    groups.push_back(r.id);
    cosine.y.push_back(r.cosine_norm);
    learned.y.push_back(r.learned_norm);
  }
  const char* ref_cls = ref.label >= 0 && ref.label < data.num_classes()
                            ? data.class_names[std::size_t(ref.label)].c_str()
                            : "?";
  render_bar_chart(out_dir + "/affinity.png",
                   std::string("affinity vs reference ") + ref_cls, groups, {cosine, learned});
  std::printf("report: %s/affinity.tsv\n", out_dir.c_str());
  return 0;
}

int cmd_plot(const std::string& metrics_path, const std::string& out_dir) {
  MetricsLog log = parse_metrics(metrics_path);
  if (log.skipped_lines > 0)
    std::fprintf(stderr, "skipped %d malformed metric lines\n", log.skipped_lines);
  LOGO_REQUIRE(!log.steps.empty(), "no step records in " + metrics_path);
  fs::create_directories(out_dir);

  Series gg{"global-global", {}, {}}, lg{"local-global", {}, {}}, ll{"local dissimilarity", {}, {}},
      om{"measure objective", {}, {}}, tot{"total", {}, {}};
  for (const auto& r : log.steps) {
    const double s = double(r.step);
    gg.x.push_back(s), gg.y.push_back(r.loss_gg);
    lg.x.push_back(s), lg.y.push_back(r.loss_lg);
    // Measure diagnostics can be NaN in logs from runs with the term inactive.
    if (std::isfinite(r.loss_ll)) ll.x.push_back(s), ll.y.push_back(r.loss_ll);
    if (std::isfinite(r.omega)) om.x.push_back(s), om.y.push_back(r.omega);
    tot.x.push_back(s), tot.y.push_back(r.total);
  }
  render_line_chart(out_dir + "/losses.png", "training losses", "step", "loss",
                    {gg, lg, ll, om, tot});
  std::printf("wrote %s/losses.png\n", out_dir.c_str());

  if (!log.evals.empty()) {
    Series knn{"knn top-1", {}, {}};
    for (const auto& e : log.evals) {
      knn.x.push_back(double(e.step));
      knn.y.push_back(e.knn_top1);
    }
    render_line_chart(out_dir + "/knn.png", "nearest-neighbor accuracy", "step", "top-1", {knn});
    std::printf("wrote %s/knn.png\n", out_dir.c_str());
  }
  return 0;
}

int cmd_make_synth(const CommonOpts& opts, const std::string& out_dir) {
  RunConfig cfg = build_config(opts.configs, opts.overrides);
  Dataset ds = generate_synthetic(cfg.synth);
  export_image_folder(ds, out_dir);
  std::printf("wrote %zu images across %d classes to %s\n", ds.samples.size(), ds.num_classes(),
              out_dir.c_str());
  return 0;
}

}  // namespace

int run_cli(const std::vector<std::string>& args) {
  CLI::App app{"self-supervised representation learning with global and local crops"};
  app.require_subcommand(1);

  CommonOpts train_opts, eval_opts, aff_opts, synth_opts;
  std::string train_out, train_resume, eval_ckpt, eval_out, aff_ckpt, aff_out, plot_metrics,
      plot_out, synth_out;
  int stop_after_epochs = 0, aff_reference = 0, aff_candidates = 12;
  bool with_probe = false;

  CLI::App* train = app.add_subcommand("train", "Train an encoder");
  train->add_option("--out", train_out, "Output directory")->required();
  train->add_option("--resume", train_resume, "Checkpoint to continue from")
      ->check(CLI::ExistingFile);
  train->add_option("--stop-after-epochs", stop_after_epochs,
                    "Pause after this many epochs without shortening the schedule");
  add_common(train, train_opts);

  CLI::App* eval = app.add_subcommand("eval", "Evaluate a checkpoint with knn and a linear probe");
  eval->add_option("--checkpoint", eval_ckpt, "Trained checkpoint")->required()
      ->check(CLI::ExistingFile);
  eval->add_option("--out", eval_out, "Directory for eval.json");
  eval->add_flag("--probe", with_probe, "Also train a linear probe on frozen features");
  add_common(eval, eval_opts);

  CLI::App* aff = app.add_subcommand("affinity", "Score candidate crops against a reference");
  aff->add_option("--checkpoint", aff_ckpt, "Trained checkpoint")->required()
      ->check(CLI::ExistingFile);
  aff->add_option("--out", aff_out, "Output directory")->required();
  aff->add_option("--reference", aff_reference, "Index of the reference image in the val split");
  aff->add_option("--candidates", aff_candidates, "Number of candidate images from the train split");
  add_common(aff, aff_opts);

  CLI::App* plot = app.add_subcommand("plot", "Render metric curves to PNG");
  plot->add_option("--metrics", plot_metrics, "metrics.jsonl from a training run")->required()
      ->check(CLI::ExistingFile);
  plot->add_option("--out", plot_out, "Output directory")->required();

  CLI::App* synth = app.add_subcommand("make-synth", "Write the synthetic dataset as an image folder");
  synth->add_option("--out", synth_out, "Output directory")->required();
  add_common(synth, synth_opts);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (train->parsed()) return cmd_train(train_opts, train_out, train_resume, stop_after_epochs);
    if (eval->parsed()) return cmd_eval(eval_opts, eval_ckpt, eval_out, with_probe);
    if (aff->parsed()) return cmd_affinity(aff_opts, aff_ckpt, aff_out, aff_reference, aff_candidates);
    if (plot->parsed()) return cmd_plot(plot_metrics, plot_out);
    if (synth->parsed()) return cmd_make_synth(synth_opts, synth_out);
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}

int run_cli(int argc, const char* const* argv) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return run_cli(args);
}

}  // namespace logo

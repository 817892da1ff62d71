// SPDX-License-Identifier: Apache-2.0
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "logo/cli.hpp"
#include "logo/config.hpp"
#include "logo/metrics.hpp"
#include "logo/trainer.hpp"

using namespace logo;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    Rng rng = derive_rng(std::uint64_t(std::time(nullptr)), "tmp_cli");
    char buf[32];
    std::snprintf(buf, sizeof(buf), "logo_cli_%08llx",
                  static_cast<unsigned long long>(rng.uniform_int(0xffffffffull)));
    path = fs::temp_directory_path() / buf;
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string file(const std::string& name) const { return (path / name).string(); }
};

void put_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::trunc | std::ios::binary);
  REQUIRE(bool(out));
  out << text;
}

std::string get_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(bool(in));
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void replay_echo(RunConfig& cfg, const std::string& echo) {
  std::stringstream ss(echo);
  std::string line;
  while (std::getline(ss, line))
    if (!line.empty()) apply_override(cfg, line);
}

// Small deterministic run shared by the command-line cases.
std::vector<std::string> tiny_run_overrides() {
  return {
      "synth.num_images=12",    "synth.canvas_size=16",    "synth.num_shape_classes=4",
      "synth.objects_per_image=2", "synth.val_fraction=0.25",
      "train.epochs=2",         "train.batch_size=4",      "train.monitor_every=1",
      "train.checkpoint_every=1", "train.knn_k=3",
      "model.embed_dim=8",      "model.backbone_widths=4,8", "model.predictor_hidden=16",
      "model.regressor_hidden=8",
      "aug.out_global=16",      "aug.out_local=8",
  };
}

std::vector<std::string> with_overrides(std::vector<std::string> head) {
  for (const auto& o : tiny_run_overrides()) head.push_back(o);
  return head;
}

int count_files_with_extension(const fs::path& root, const std::string& ext) {
  int n = 0;
  for (const auto& entry : fs::recursive_directory_iterator(root))
    if (entry.is_regular_file() && entry.path().extension() == ext) ++n;
  return n;
}

}  // namespace

TEST_CASE("the canonical echo is a fixed point of parsing") {
  RunConfig cfg;
  for (const auto& o : std::vector<std::string>{
           "data.kind=image_folder", "data.path=/somewhere/images", "data.val_fraction=0.2",
           "synth.num_images=64", "train.variant=contrastive", "train.lambda=0.5",
           "train.lambda_mode=gradient_ratio", "train.symmetrize=0",
           "model.backbone_widths=8,16,32", "model.predictor_hidden=0", "aug.flip_prob=0.25",
           "aug.blur_sigma_max=1.25", "probe.epochs=3", "train.regressor_seed=99"})
    apply_override(cfg, o);

  const std::string echo = echo_config(cfg);
  RunConfig round;
  replay_echo(round, echo);
  CHECK(echo_config(round) == echo);

  // Spot checks that the overrides actually landed.
  CHECK(round.data_kind == "image_folder");
  CHECK(round.train.variant == Variant::contrastive);
  CHECK(round.train.symmetrize == false);
  CHECK(round.train.backbone_widths == std::vector<int>{8, 16, 32});
  CHECK(round.train.predictor_hidden == 0);
  CHECK(round.train.regressor_seed == 99);
  CHECK(round.aug.flip_prob == 0.25);
  CHECK(round.probe.epochs == 3);

  // Every echo line names a known key, so the echo parses with no leftovers.
  CHECK(echo.find("model.embed_dim = ") != std::string::npos);
  CHECK(echo.find("train.knn_vote_temperature = ") != std::string::npos);
  CHECK(echo.find("aug.out_local = ") != std::string::npos);
}

TEST_CASE("unknown keys and unparsable values raise configuration errors") {
  RunConfig cfg;
  CHECK_THROWS_AS(apply_override(cfg, "nope=1"), ConfigError);
  CHECK_THROWS_AS(apply_override(cfg, "train.nope=1"), ConfigError);
  CHECK_THROWS_AS(apply_override(cfg, "train.lambda=abc"), ConfigError);
  CHECK_THROWS_AS(apply_override(cfg, "train.batch_size=1.5"), ConfigError);
  CHECK_THROWS_AS(apply_override(cfg, "train.batch_size="), ConfigError);
  CHECK_THROWS_AS(apply_override(cfg, "train.symmetrize=maybe"), ConfigError);
  CHECK_THROWS_AS(apply_override(cfg, "model.backbone_widths=8,,16"), ConfigError);
  CHECK_THROWS_AS(apply_override(cfg, "no equals sign"), ConfigError);
  CHECK_THROWS_AS(apply_override(cfg, "train.variant=sideways"), ConfigError);

  // Failed overrides leave no partial effect on unrelated fields.
  CHECK(cfg.train.batch_size == TrainConfig{}.batch_size);
}

TEST_CASE("config files apply in order with comments stripped and lines diagnosed") {
  TempDir tmp;
  put_text(tmp.file("a.conf"),
             "# base settings\n"
             "\n"
             "train.lambda = 0.25   # inline comment\n"
             "aug.flip_prob=0.1\n");
  put_text(tmp.file("b.conf"), "train.lambda=0.75\n");

  RunConfig cfg;
  apply_config_file(cfg, tmp.file("a.conf"));
  CHECK(cfg.train.lambda == 0.25);
  CHECK(cfg.aug.flip_prob == 0.1);
  apply_config_file(cfg, tmp.file("b.conf"));
  CHECK(cfg.train.lambda == 0.75);
  CHECK(cfg.aug.flip_prob == 0.1);

  put_text(tmp.file("bad.conf"), "train.lambda=0.5\n\nthis line is wrong\n");
  try {
    apply_config_file(cfg, tmp.file("bad.conf"));
    FAIL("expected a ConfigError");
  } catch (const ConfigError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("bad.conf:3") != std::string::npos);
    CHECK(msg.find("this line is wrong") != std::string::npos);
  }
  CHECK_THROWS_AS(apply_config_file(cfg, tmp.file("missing.conf")), ConfigError);
}

TEST_CASE("validation enforces cross-field contracts as configuration errors") {
  RunConfig ok;
  ok.validate();  // defaults are valid

  RunConfig bad_kind;
  apply_override(bad_kind, "data.kind=banana");
  CHECK_THROWS_AS(bad_kind.validate(), ConfigError);

  RunConfig no_path;
  apply_override(no_path, "data.kind=image_folder");
  CHECK_THROWS_AS(no_path.validate(), ConfigError);

  RunConfig bad_fraction;
  apply_override(bad_fraction, "data.val_fraction=1.0");
  CHECK_THROWS_AS(bad_fraction.validate(), ConfigError);

  RunConfig bad_train;
  apply_override(bad_train, "train.batch_size=1");
  CHECK_THROWS_AS(bad_train.validate(), ConfigError);

  RunConfig bad_synth;
  apply_override(bad_synth, "synth.canvas_size=0");
  CHECK_THROWS_AS(bad_synth.validate(), ConfigError);

  RunConfig bad_aug;
  apply_override(bad_aug, "aug.flip_prob=1.5");
  CHECK_THROWS_AS(bad_aug.validate(), ConfigError);
}

TEST_CASE("dataset loading dispatches on the configured kind") {
  TempDir tmp;

  RunConfig synth;
  for (const auto& o : std::vector<std::string>{"synth.num_images=12", "synth.canvas_size=16",
                                                "synth.num_shape_classes=3",
                                                "synth.objects_per_image=2",
                                                "synth.val_fraction=0.25"})
    apply_override(synth, o);
  Dataset ds = load_dataset(synth);
  CHECK(ds.samples.size() == 12);
  CHECK(ds.split("train").size() == 9);
  CHECK(ds.split("val").size() == 3);

  // Folder round trip: exported images load back with a carved val split.
  export_image_folder(ds, tmp.file("folder"));
  RunConfig folder;
  apply_override(folder, "data.kind=image_folder");
  apply_override(folder, "data.path=" + tmp.file("folder"));
  apply_override(folder, "data.val_fraction=0.25");
  Dataset re = load_dataset(folder);
  CHECK(re.samples.size() == 12);
  CHECK(re.split("train").size() + re.split("val").size() == 12);
  CHECK(re.split("val").size() == 3);
  CHECK(re.num_classes() == ds.num_classes());

  // Binary records: one label byte then three 1024-byte planes per image.
  std::string blob(4 * 3073, '\0');
  for (int i = 0; i < 4; ++i) blob[std::size_t(i) * 3073] = char(i % 2);
  put_text(tmp.file("batch.bin"), blob);
  RunConfig cifar;
  apply_override(cifar, "data.kind=cifar");
  apply_override(cifar, "data.path=" + tmp.file("batch.bin"));
  apply_override(cifar, "data.val_fraction=0.5");
  Dataset cf = load_dataset(cifar);
  CHECK(cf.samples.size() == 4);
  CHECK(cf.split("train").size() == 2);
  CHECK(cf.split("val").size() == 2);
}

TEST_CASE("the command line drives train, eval, affinity, and plot end to end") {
  TempDir tmp;
  const std::string out = tmp.file("run");

  CHECK(run_cli(with_overrides({"train", "--out", out})) == 0);
  REQUIRE(fs::exists(out + "/config.resolved"));
  REQUIRE(fs::exists(out + "/metrics.jsonl"));
  REQUIRE(fs::exists(out + "/checkpoint.bin"));

  // The resolved config is itself a parseable fixed point.
  const std::string resolved = get_text(out + "/config.resolved");
  RunConfig parsed;
  apply_config_file(parsed, out + "/config.resolved");
  CHECK(echo_config(parsed) == resolved);
  CHECK(resolved.find("model.embed_dim = 8") != std::string::npos);

  // 9 train images, batch 4: 2 steps per epoch, 2 epochs, eval each epoch.
  MetricsLog log = parse_metrics(out + "/metrics.jsonl");
  CHECK(log.steps.size() == 4);
  CHECK(log.evals.size() == 2);
  CHECK(log.skipped_lines == 0);
  TrainState final_state = load_checkpoint(out + "/checkpoint.bin");
  CHECK(final_state.step == 4);
  CHECK(final_state.total_steps == 4);

  const std::string ck = out + "/checkpoint.bin";
  const std::string eval_dir = tmp.file("eval");
  CHECK(run_cli({"eval", "--checkpoint", ck, "--out", eval_dir, "--probe", "probe.epochs=3",
                 "probe.batch=8"}) == 0);
  nlohmann::json j = nlohmann::json::parse(get_text(eval_dir + "/eval.json"));
  CHECK(j.at("step").get<std::int64_t>() == 4);
  const double knn = j.at("knn_top1").get<double>();
  CHECK(knn >= 0.0);
  CHECK(knn <= 1.0);
  CHECK(j.contains("probe_train_top1"));
  CHECK(j.contains("probe_val_top1"));

  const std::string aff_dir = tmp.file("aff");
  CHECK(run_cli({"affinity", "--checkpoint", ck, "--out", aff_dir, "--reference", "0",
                 "--candidates", "5"}) == 0);
  const std::string tsv = get_text(aff_dir + "/affinity.tsv");
  CHECK(tsv.rfind("crop\tcosine_raw\tcosine_norm\tlearned_raw\tlearned_norm\n", 0) == 0);
  CHECK(std::count(tsv.begin(), tsv.end(), '\n') == 6);  // header + 5 candidates
  CHECK(fs::exists(aff_dir + "/affinity.png"));

  const std::string plot_dir = tmp.file("plots");
  CHECK(run_cli({"plot", "--metrics", out + "/metrics.jsonl", "--out", plot_dir}) == 0);
  CHECK(fs::exists(plot_dir + "/losses.png"));
  CHECK(fs::exists(plot_dir + "/knn.png"));
}

TEST_CASE("an interrupted command-line run resumes to the full schedule") {
  TempDir tmp;
  const std::string out = tmp.file("run");
  CHECK(run_cli(with_overrides({"train", "--out", out, "--stop-after-epochs", "1"})) == 0);
  CHECK(load_checkpoint(out + "/checkpoint.bin").step == 2);

  CHECK(run_cli(with_overrides(
            {"train", "--out", out, "--resume", out + "/checkpoint.bin"})) == 0);
  TrainState done = load_checkpoint(out + "/checkpoint.bin");
  CHECK(done.step == 4);
  CHECK(done.total_steps == 4);
}

TEST_CASE("the command line reports usage, configuration, and runtime failures distinctly") {
  TempDir tmp;
  CHECK(run_cli({}) == 2);                               // a subcommand is required
  CHECK(run_cli({"train"}) == 2);                        // --out is required
  CHECK(run_cli({"frobnicate"}) == 2);                   // unknown subcommand
  CHECK(run_cli({"--help"}) == 0);                       // help is a successful exit
  CHECK(run_cli({"train", "--out", tmp.file("x"), "--config", tmp.file("missing.conf")}) == 2);
  CHECK(run_cli({"train", "--out", tmp.file("x"), "bogus.key=1"}) == 2);
  CHECK(run_cli({"train", "--out", tmp.file("x"), "train.batch_size=banana"}) == 2);
  CHECK(run_cli({"eval", "--checkpoint", tmp.file("missing.bin")}) == 2);

  // A present but contentless metrics file is a runtime failure, not usage.
  put_text(tmp.file("junk.jsonl"), "not json\n");
  CHECK(run_cli({"plot", "--metrics", tmp.file("junk.jsonl"), "--out", tmp.file("p")}) == 1);

  // A corrupt checkpoint is a runtime failure.
  put_text(tmp.file("broken.bin"), "definitely not an archive");
  CHECK(run_cli({"eval", "--checkpoint", tmp.file("broken.bin")}) == 1);
}

TEST_CASE("make-synth writes a loadable image folder") {
  TempDir tmp;
  const std::string dir = tmp.file("synthetic");
  CHECK(run_cli({"make-synth", "--out", dir, "synth.num_images=8", "synth.canvas_size=16",
                 "synth.num_shape_classes=3", "synth.objects_per_image=2"}) == 0);
  CHECK(count_files_with_extension(dir, ".png") == 8);

  RunConfig folder;
  apply_override(folder, "data.kind=image_folder");
  apply_override(folder, "data.path=" + dir);
  apply_override(folder, "data.val_fraction=0.25");
  Dataset ds = load_dataset(folder);
  CHECK(ds.samples.size() == 8);
  CHECK(ds.num_classes() >= 1);
}

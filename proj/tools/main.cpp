// Copyright 2026 The strided-tenet Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// strided-tenet: dataset synthesis, training, prediction, evaluation,
// checkpoint inspection and gradient checking.
//
// Exit codes: 0 success, 1 usage, 2 data/shape/IO, 3 numeric.

#include <CLI11.hpp>
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <iostream>
#include <nlohmann/json.hpp>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include "params.hpp"
#include "stenet/checkpoint.hpp"
#include "stenet/data_io.hpp"
#include "stenet/errors.hpp"
#include "stenet/metrics.hpp"
#include "stenet/mps.hpp"
#include "stenet/segmenter.hpp"
#include "stenet/training.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace stenet::cli {
namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitNumeric = 3;

using Clock = std::chrono::steady_clock;

const std::map<std::string, PadMode> kPadModes = {{"error", PadMode::kError},
                                                  {"reflect", PadMode::kReflect}};
const std::map<std::string, Normalization> kNormalizations = {
    {"bitdepth", Normalization::kBitDepth}, {"minmax", Normalization::kMinMax}};
const std::map<std::string, InitScheme> kInitSchemes = {{"unit-response", InitScheme::kUnitResponse},
                                                        {"identity", InitScheme::kIdentity}};

template <typename T>
T lookup(const std::map<std::string, T>& table, const std::string& key, const char* what) {
  auto it = table.find(key);
  if (it == table.end()) throw UsageError(std::string("unknown ") + what + " '" + key + "'");
  return it->second;
}

void write_json(const fs::path& path, const json& j) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << j.dump(2) << '\n';
  if (!out) throw IoError("failed writing " + path.string());
}

json with_command(json resolved, const char* command) {
  resolved["command"] = command;
  resolved["checkpoint_format_version"] = kCheckpointVersion;
  return resolved;
}

// ---------------------------------------------------------------- synth

struct SynthArgs {
  std::string out;
  std::uint64_t seed = 1;
  int size = 64;
  int train = 200;
  int val = 50;
  int test = 50;
  int min_shapes = 1;
  int max_shapes = 3;
  double noise = 0.05;
  double fg_min = 0.6;
  double fg_max = 0.9;
  double bg_min = 0.1;
  double bg_max = 0.35;
  std::string config;
  ParamSet params;
};

void setup_synth(CLI::App& app, SynthArgs& a) {
  a.params.add(app, "--out", a.out, "Output directory")->required();
  a.params.add(app, "--seed", a.seed, "Generator seed");
  a.params.add(app, "--size", a.size, "Image side length in pixels");
  a.params.add(app, "--train", a.train, "Training images");
  a.params.add(app, "--val", a.val, "Validation images");
  a.params.add(app, "--test", a.test, "Test images");
  a.params.add(app, "--min-shapes", a.min_shapes, "Fewest shapes per image");
  a.params.add(app, "--max-shapes", a.max_shapes, "Most shapes per image");
  a.params.add(app, "--noise", a.noise, "Gaussian noise standard deviation");
  a.params.add(app, "--fg-min", a.fg_min, "Lowest foreground intensity");
  a.params.add(app, "--fg-max", a.fg_max, "Highest foreground intensity");
  a.params.add(app, "--bg-min", a.bg_min, "Lowest background intensity");
  a.params.add(app, "--bg-max", a.bg_max, "Highest background intensity");
  app.add_option("--config", a.config, "JSON config file; flags override it");
}

int run_synth(SynthArgs& a) {
  SynthConfig cfg;
  cfg.seed = a.seed;
  cfg.image_size = a.size;
  cfg.train_count = a.train;
  cfg.val_count = a.val;
  cfg.test_count = a.test;
  cfg.min_shapes = a.min_shapes;
  cfg.max_shapes = a.max_shapes;
  cfg.noise_std = a.noise;
  cfg.fg_min = a.fg_min;
  cfg.fg_max = a.fg_max;
  cfg.bg_min = a.bg_min;
  cfg.bg_max = a.bg_max;
  // Rectangles and discs scale with the image side (defaults at 64 px).
  cfg.rect_min_side = std::max(2, a.size * 12 / 64);
  cfg.rect_max_side = std::max(cfg.rect_min_side, a.size / 2);
  cfg.disc_min_radius = std::max(1, a.size * 6 / 64);
  cfg.disc_max_radius = std::max(cfg.disc_min_radius, a.size / 4);
  const DatasetManifest m = generate_synthetic(cfg, a.out);
  write_json(fs::path(a.out) / "synth_config.json", with_command(a.params.resolved(), "synth"));
  std::printf("wrote %zu/%zu/%zu images to %s\n", m.train.size(), m.val.size(), m.test.size(),
              a.out.c_str());
  return kExitOk;
}

// ---------------------------------------------------------------- shared model/data flags

struct DataFlags {
  std::string pad = "error";
  std::string normalization = "bitdepth";
  int threads = 1;

  void add(CLI::App& app, ParamSet& params) {
    params.add(app, "--pad", pad, "Edge handling when K does not divide the image")
        ->check(CLI::IsMember({"error", "reflect"}));
    params.add(app, "--normalization", normalization, "Intensity normalization")
        ->check(CLI::IsMember({"bitdepth", "minmax"}));
    params.add(app, "--threads", threads, "Worker threads")->check(CLI::PositiveNumber);
  }
  PadMode pad_mode() const { return lookup(kPadModes, pad, "pad mode"); }
  Normalization norm() const { return lookup(kNormalizations, normalization, "normalization"); }
};

DatasetManifest open_manifest(const std::string& data) {
  if (data.empty()) throw UsageError("--data is required");
  return load_manifest(data);
}

void write_overlays(const MpsModel& model, const Dataset& data, const SegmentOptions& seg,
                    const fs::path& dir) {
  fs::create_directories(dir);
  for (const auto& s : data) {
    const BinaryMask pred = threshold(segment_image(model, s.image, seg), 0.5);
    render_overlay(s.image, pred, s.mask, dir / (s.name + "_overlay.png"));
  }
}

// ---------------------------------------------------------------- train

struct TrainArgs {
  std::string data;
  int k = 8;
  int d = 4;
  int bond = 4;
  double lr = 5e-4;
  int patience = 10;
  int max_epochs = 200;
  int batch_size = 1;
  std::uint64_t seed = 0;
  int snapshot_every = 0;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_epsilon = 1e-8;
  std::string init = "unit-response";
  double init_noise = 1e-2;
  std::string feature_map = kSinusoidalFeatureMap;
  bool deterministic = false;
  std::string run_dir = "runs";
  std::string name;
  std::string config;
  DataFlags flags;
  ParamSet params;
};

void setup_train(CLI::App& app, TrainArgs& a) {
  a.params.add(app, "--data", a.data, "Dataset manifest or directory containing manifest.json");
  a.params.add(app, "--k", a.k, "Stride / patch side K");
  a.params.add(app, "--d", a.d, "Local feature dimension");
  a.params.add(app, "--bond", a.bond, "Bond dimension");
  a.params.add(app, "--lr", a.lr, "Adam learning rate");
  a.params.add(app, "--patience", a.patience, "Epochs without validation Dice improvement");
  a.params.add(app, "--max-epochs", a.max_epochs, "Epoch limit");
  a.params.add(app, "--batch-size", a.batch_size, "Whole images per optimizer step");
  a.params.add(app, "--seed", a.seed, "Initialization and shuffling seed");
  a.params.add(app, "--snapshot-every", a.snapshot_every,
               "Write validation overlays every E epochs (0 = never)");
  a.params.add(app, "--adam-beta1", a.adam_beta1, "Adam first-moment decay");
  a.params.add(app, "--adam-beta2", a.adam_beta2, "Adam second-moment decay");
  a.params.add(app, "--adam-epsilon", a.adam_epsilon, "Adam denominator offset");
  a.params.add(app, "--init", a.init, "Core initialization")
      ->check(CLI::IsMember({"unit-response", "identity"}));
  a.params.add(app, "--init-noise", a.init_noise, "Initialization noise standard deviation");
  a.params.add(app, "--feature-map", a.feature_map, "Registered local feature map");
  a.params.add_flag(app, "--deterministic", a.deterministic,
                    "Zero the wall-clock column of history.csv");
  a.params.add(app, "--run-dir", a.run_dir, "Parent directory of run outputs");
  a.params.add(app, "--name", a.name, "Run name (default derived from K, d, bond and seed)");
  a.flags.add(app, a.params);
  app.add_option("--config", a.config, "JSON config file; flags override it");
}

int run_train(TrainArgs& a) {
  TrainConfig cfg;
  cfg.stride = a.k;
  cfg.local_dim = a.d;
  cfg.bond_dim = a.bond;
  cfg.learning_rate = a.lr;
  cfg.patience = a.patience;
  cfg.max_epochs = a.max_epochs;
  cfg.batch_size = a.batch_size;
  cfg.seed = a.seed;
  cfg.snapshot_every = a.snapshot_every;
  cfg.adam_beta1 = a.adam_beta1;
  cfg.adam_beta2 = a.adam_beta2;
  cfg.adam_epsilon = a.adam_epsilon;
  cfg.init = lookup(kInitSchemes, a.init, "init scheme");
  cfg.init_noise = a.init_noise;
  cfg.feature_map = a.feature_map;
  cfg.pad = a.flags.pad_mode();
  cfg.threads = a.flags.threads;
  cfg.deterministic = a.deterministic;
  cfg.validate();
  if (!FeatureMapRegistry::instance().contains(cfg.feature_map)) {
    throw UsageError("unknown feature map '" + cfg.feature_map + "'");
  }

  const DatasetManifest manifest = open_manifest(a.data);
  const Dataset train_set = load_split(manifest, "train", a.flags.norm());
  const Dataset val_set = load_split(manifest, "val", a.flags.norm());
  const Dataset test_set = load_split(manifest, "test", a.flags.norm());

  if (a.name.empty()) {
    a.name = "k" + std::to_string(a.k) + "_d" + std::to_string(a.d) + "_b" +
             std::to_string(a.bond) + "_s" + std::to_string(a.seed);
  }
  const fs::path run = fs::path(a.run_dir) / a.name;
  fs::create_directories(run);
  write_json(run / "config.json", with_command(a.params.resolved(), "train"));

  const MpsModel init =
      init_mps(cfg.stride, cfg.local_dim, cfg.bond_dim, cfg.seed,
               {cfg.init, cfg.init_noise, cfg.feature_map});
  save_checkpoint(init, run / "model.ckpt");
  std::printf("run %s: K=%d d=%d bond=%d, %zu parameters, %zu/%zu/%zu images\n",
              run.string().c_str(), cfg.stride, cfg.local_dim, cfg.bond_dim,
              parameter_count(init), train_set.size(), val_set.size(), test_set.size());

  const SegmentOptions seg{cfg.pad, 0, cfg.threads};
  std::vector<std::pair<int, double>> timings;
  auto epoch_start = Clock::now();
  TrainHooks hooks;
  hooks.on_epoch = [&](const EpochRecord& r, const MpsModel&) {
    const double secs = std::chrono::duration<double>(Clock::now() - epoch_start).count();
    timings.emplace_back(r.epoch, secs);
    std::printf("epoch %3d  loss %.6f  val dice %.4f  val prauc %.4f  %.2fs\n", r.epoch,
                r.train_loss, r.val_dice, r.val_prauc, secs);
    std::fflush(stdout);
    epoch_start = Clock::now();
  };
  hooks.on_improvement = [&](const EpochRecord&, const MpsModel& best) {
    save_checkpoint(best, run / "model.ckpt");
  };
  hooks.on_snapshot = [&](int epoch, const MpsModel& current) {
    char dir[32];
    std::snprintf(dir, sizeof(dir), "epoch_%04d", epoch);
    write_overlays(current, val_set, seg, run / "snapshots" / dir);
  };

  const TrainResult result = train(init, train_set, val_set, cfg, hooks);
  save_checkpoint(result.model, run / "model.ckpt");
  result.history.write_csv(run / "history.csv");
  {
    std::ofstream t(run / "timing.csv");
    t << "epoch,seconds\n";
    for (const auto& [epoch, secs] : timings) t << epoch << ',' << secs << '\n';
    if (!t) throw IoError("cannot write " + (run / "timing.csv").string());
  }

  if (result.history.best_epoch) {
    const EpochRecord& best = result.history.epochs[*result.history.best_epoch - 1];
    std::printf("best epoch %d: val dice %.4f, val prauc %.4f\n", best.epoch, best.val_dice,
                best.val_prauc);
  } else {
    std::printf("no epochs run; wrote initial model\n");
  }
  if (!test_set.empty()) {
    const EvaluationResult ev = evaluate(result.model, test_set, seg);
    std::printf("test dice %.4f +/- %.4f, test prauc %.4f\n", ev.dice.mean, ev.dice.stddev,
                ev.prauc);
  }
  return kExitOk;
}

// ---------------------------------------------------------------- predict

struct PredictArgs {
  std::string checkpoint;
  std::string data;
  std::string split = "test";
  std::vector<std::string> inputs;
  std::string out;
  double threshold = 0.5;
  bool overlay = false;
  std::string config;
  DataFlags flags;
  ParamSet params;
};

void setup_predict(CLI::App& app, PredictArgs& a) {
  a.params.add(app, "--checkpoint", a.checkpoint, "Model checkpoint")->required();
  a.params.add(app, "--data", a.data, "Dataset manifest (predicts one split)");
  a.params.add(app, "--split", a.split, "Split to predict with --data")
      ->check(CLI::IsMember({"train", "val", "test"}));
  a.params.add(app, "--input", a.inputs, "Image files or directories");
  a.params.add(app, "--out", a.out, "Output directory")->required();
  a.params.add(app, "--threshold", a.threshold, "Binarization threshold")
      ->check(CLI::Range(0.0, 1.0));
  a.params.add_flag(app, "--overlay", a.overlay, "Also write TP/FN/FP overlays (needs --data)");
  a.flags.add(app, a.params);
  app.add_option("--config", a.config, "JSON config file; flags override it");
}

std::vector<fs::path> expand_inputs(const std::vector<std::string>& inputs) {
  std::vector<fs::path> files;
  for (const auto& in : inputs) {
    if (fs::is_directory(in)) {
      std::vector<fs::path> found;
      for (const auto& e : fs::directory_iterator(in)) {
        const auto ext = e.path().extension().string();
        if (e.is_regular_file() && (ext == ".png" || ext == ".pgm" || ext == ".ppm")) {
          found.push_back(e.path());
        }
      }
      std::sort(found.begin(), found.end());
      files.insert(files.end(), found.begin(), found.end());
    } else {
      files.emplace_back(in);
    }
  }
  return files;
}

int run_predict(PredictArgs& a) {
  if (a.data.empty() == a.inputs.empty()) {
    throw UsageError("predict: give exactly one of --data or --input");
  }
  if (a.overlay && a.data.empty()) throw UsageError("predict: --overlay needs masks from --data");
  const MpsModel model = load_checkpoint(a.checkpoint);
  const SegmentOptions seg{a.flags.pad_mode(), 0, a.flags.threads};

  Dataset items;
  if (!a.data.empty()) {
    items = load_split(open_manifest(a.data), a.split, a.flags.norm());
  } else {
    for (const auto& p : expand_inputs(a.inputs)) {
      items.push_back({p.stem().string(), load_image(p, a.flags.norm()), {}});
    }
  }
  const fs::path out(a.out);
  fs::create_directories(out);
  write_json(out / "config.json", with_command(a.params.resolved(), "predict"));

  std::vector<double> dices;
  for (const auto& s : items) {
    const SoftSegmentation soft = segment_image(model, s.image, seg);
    const BinaryMask mask = threshold(soft, a.threshold);
    save_soft_png(soft, out / (s.name + "_soft.png"));
    save_mask_png(mask, out / (s.name + "_mask.png"));
    if (a.overlay) render_overlay(s.image, mask, s.mask, out / (s.name + "_overlay.png"));
    if (!a.data.empty()) dices.push_back(dice(mask, s.mask));
  }
  std::printf("wrote predictions for %zu images to %s\n", items.size(), out.string().c_str());
  if (!dices.empty()) {
    const MeanStd ms = mean_std(dices);
    std::printf("dice %.4f +/- %.4f\n", ms.mean, ms.stddev);
  }
  return kExitOk;
}

// ---------------------------------------------------------------- evaluate

struct EvaluateArgs {
  std::string checkpoint;
  std::string data;
  std::string split = "test";
  std::string pred_dir;
  std::string report;
  std::string config;
  DataFlags flags;
  ParamSet params;
};

void setup_evaluate(CLI::App& app, EvaluateArgs& a) {
  a.params.add(app, "--checkpoint", a.checkpoint, "Model checkpoint");
  a.params.add(app, "--data", a.data, "Dataset manifest or directory")->required();
  a.params.add(app, "--split", a.split, "Split to score")
      ->check(CLI::IsMember({"train", "val", "test"}));
  a.params.add(app, "--pred-dir", a.pred_dir,
               "Score <name>_soft.png maps from this directory instead of running the model");
  a.params.add(app, "--report", a.report, "Write the JSON report here");
  a.flags.add(app, a.params);
  app.add_option("--config", a.config, "JSON config file; flags override it");
}

int run_evaluate(EvaluateArgs& a) {
  if (a.checkpoint.empty() && a.pred_dir.empty()) {
    throw UsageError("evaluate: give --checkpoint, --pred-dir, or both");
  }
  std::optional<MpsModel> model;
  if (!a.checkpoint.empty()) model = load_checkpoint(a.checkpoint);
  const Dataset data = load_split(open_manifest(a.data), a.split, a.flags.norm());
  if (data.empty()) throw UsageError("evaluate: split '" + a.split + "' is empty");

  EvaluationResult ev;
  if (!a.pred_dir.empty()) {
    std::vector<SoftSegmentation> preds;
    for (const auto& s : data) preds.push_back(load_soft_png(fs::path(a.pred_dir) / (s.name + "_soft.png")));
    ev = evaluate_predictions(preds, data);
  } else {
    ev = evaluate(*model, data, {a.flags.pad_mode(), 0, a.flags.threads});
  }

  json report = {{"split", a.split},
                 {"images", data.size()},
                 {"dice_mean", ev.dice.mean},
                 {"dice_std", ev.dice.stddev},
                 {"prauc", ev.prauc},
                 {"parameter_count", model ? json(parameter_count(*model)) : json(nullptr)},
                 {"seconds_per_image", a.pred_dir.empty() ? json(ev.seconds_per_image) : json(nullptr)}};
  json per_image = json::array();
  for (std::size_t i = 0; i < data.size(); ++i) {
    per_image.push_back({{"name", data[i].name}, {"dice", ev.per_image_dice[i]}});
  }
  report["per_image"] = per_image;
  report["config"] = with_command(a.params.resolved(), "evaluate");
  if (!a.report.empty()) write_json(a.report, report);

  std::printf("%-8s %-7s %-19s %-8s %-12s %-10s\n", "split", "images", "dice (mean+/-std)", "prauc",
              "|theta|", "s/image");
  std::printf("%-8s %-7zu %.4f +/- %-8.4f %-8.4f %-12s %-10s\n", a.split.c_str(), data.size(),
              ev.dice.mean, ev.dice.stddev, ev.prauc,
              model ? std::to_string(parameter_count(*model)).c_str() : "-",
              a.pred_dir.empty() ? std::to_string(ev.seconds_per_image).c_str() : "-");
  return kExitOk;
}

// ---------------------------------------------------------------- inspect

struct InspectArgs {
  std::string checkpoint;
  bool as_json = false;
};

void setup_inspect(CLI::App& app, InspectArgs& a) {
  app.add_option("checkpoint", a.checkpoint, "Checkpoint file")->required();
  app.add_flag("--json", a.as_json, "Print a JSON object");
}

int run_inspect(InspectArgs& a) {
  // Load fully before printing anything.
  const MpsModel m = load_checkpoint(a.checkpoint);
  const json info = {{"stride", m.stride},
                     {"local_dim", m.local_dim},
                     {"bond_dim", m.bond_dim},
                     {"n_sites", m.n_sites},
                     {"output_site", m.output_site},
                     {"output_dim", m.output_dim},
                     {"parameter_count", parameter_count(m)},
                     {"feature_map", m.feature_map},
                     {"seed", m.seed},
                     {"format_version", kCheckpointVersion}};
  if (a.as_json) {
    std::printf("%s\n", info.dump(2).c_str());
    return kExitOk;
  }
  std::ostringstream s;
  s << "stride K         " << m.stride << '\n'
    << "local dim d      " << m.local_dim << '\n'
    << "bond dim         " << m.bond_dim << '\n'
    << "sites N          " << m.n_sites << '\n'
    << "output site      " << m.output_site << '\n'
    << "outputs m        " << m.output_dim << '\n'
    << "parameters       " << parameter_count(m) << '\n'
    << "feature map      " << m.feature_map << '\n'
    << "seed             " << m.seed << '\n'
    << "format version   " << kCheckpointVersion << '\n';
  std::fputs(s.str().c_str(), stdout);
  return kExitOk;
}

// ---------------------------------------------------------------- gradcheck

struct GradcheckArgs {
  int k = 2;
  int d = 2;
  int bond = 2;
  std::uint64_t seed = 3;
  double eps = 1e-6;
  int image_size = 0;
  double init_noise = 0.5;
  bool flip_sign = false;
  std::string config;
  ParamSet params;
};

constexpr double kGradcheckTolerance = 1e-5;
constexpr std::size_t kGradcheckMaxParameters = 20000;

void setup_gradcheck(CLI::App& app, GradcheckArgs& a) {
  a.params.add(app, "--k", a.k, "Stride K");
  a.params.add(app, "--d", a.d, "Local feature dimension");
  a.params.add(app, "--bond", a.bond, "Bond dimension");
  a.params.add(app, "--seed", a.seed, "Model and data seed");
  a.params.add(app, "--eps", a.eps, "Central-difference step");
  a.params.add(app, "--image-size", a.image_size, "Side of the random image (default 2K)");
  a.params.add(app, "--init-noise", a.init_noise, "Noise of the identity initialization");
  // Test hook: negates the analytic gradient so the harness must fail.
  a.params.add_flag(app, "--flip-sign", a.flip_sign, "Negate the analytic gradient")->group("");
  app.add_option("--config", a.config, "JSON config file; flags override it");
}

int run_gradcheck(GradcheckArgs& a) {
  if (!(a.eps > 0.0)) throw UsageError("gradcheck: --eps must be > 0");
  if (a.k < 1 || a.d < 2 || a.bond < 1) throw UsageError("gradcheck: need K >= 1, d >= 2, bond >= 1");
  const int side = a.image_size > 0 ? a.image_size : 2 * a.k;
  if (side % a.k != 0) throw UsageError("gradcheck: --image-size must be a multiple of K");
  double features = 1.0;
  for (int j = 0; j < a.k * a.k; ++j) features *= a.d;
  if (features > static_cast<double>(kOracleCapacity)) {
    throw UsageError("gradcheck: d^(K*K) exceeds the oracle guard of 2^20");
  }
  const MpsModel model = init_mps(a.k, a.d, a.bond, a.seed, {InitScheme::kIdentity, a.init_noise});
  if (parameter_count(model) > kGradcheckMaxParameters) {
    throw UsageError("gradcheck: model has more than " + std::to_string(kGradcheckMaxParameters) +
                     " parameters");
  }

  std::mt19937_64 rng(a.seed ^ 0x9e3779b97f4a7c15ull);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const std::size_t pixels = static_cast<std::size_t>(side) * side;
  std::vector<double> values(pixels);
  std::vector<std::uint8_t> labels(pixels);
  for (std::size_t i = 0; i < pixels; ++i) {
    values[i] = u(rng);
    labels[i] = rng() & 1;
  }
  const Sample sample{"gradcheck", NormalizedImage(side, side, values),
                      BinaryMask(side, side, labels)};
  const double scale = 1.0 / static_cast<double>(pixels);
  std::vector<double> grad(parameter_count(model), 0.0);
  image_loss_and_gradient(model, sample, scale, grad);
  if (a.flip_sign) {
    for (double& g : grad) g = -g;
  }
  MpsModel probe = model;
  auto loss = [&](std::span<const double> p) {
    assign_parameters(probe, p);
    std::vector<double> scratch(p.size(), 0.0);
    return scale * image_loss_and_gradient(probe, sample, scale, scratch);
  };
  const GradCheckReport report =
      finite_difference_check(loss, flatten_parameters(model), grad, a.eps);

  // Locate the worst flat coordinate within its core.
  std::size_t flat = report.worst_coordinate.empty() ? 0 : report.worst_coordinate[0];
  int core = 0;
  while (core + 1 < model.n_sites && flat >= model.cores[core].values.size()) {
    flat -= model.cores[core].values.size();
    ++core;
  }
  const bool pass = report.max_relative_error < kGradcheckTolerance;
  std::printf("gradcheck K=%d d=%d bond=%d seed=%llu eps=%g: %zu parameters\n", a.k, a.d, a.bond,
              static_cast<unsigned long long>(a.seed), a.eps, grad.size());
  std::printf("max relative error %.3e at core %d entry %zu (analytic %.10g, numeric %.10g)\n",
              report.max_relative_error, core, flat, report.analytic_value, report.numeric_value);
  std::printf("%s (tolerance %.0e)\n", pass ? "PASS" : "FAIL", kGradcheckTolerance);
  return pass ? kExitOk : kExitNumeric;
}

int exit_code_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kUsage:
      return kExitUsage;
    case ErrorKind::kData:
      return kExitData;
    case ErrorKind::kNumeric:
      return kExitNumeric;
  }
  return kExitData;
}

}  // namespace
}  // namespace stenet::cli

int main(int argc, char** argv) {
  using namespace stenet::cli;
  CLI::App app{"Strided matrix-product-state image segmentation", "strided-tenet"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "strided-tenet 0.1.0");

  SynthArgs synth;
  TrainArgs train;
  PredictArgs predict;
  EvaluateArgs evaluate;
  InspectArgs inspect;
  GradcheckArgs gradcheck;
  CLI::App* c_synth = app.add_subcommand("synth", "Generate a synthetic shapes dataset");
  CLI::App* c_train = app.add_subcommand("train", "Train a model and write a run directory");
  CLI::App* c_predict = app.add_subcommand("predict", "Write soft maps, masks and overlays");
  CLI::App* c_evaluate = app.add_subcommand("evaluate", "Report Dice, PRAUC and model size");
  CLI::App* c_inspect = app.add_subcommand("inspect", "Summarize a checkpoint");
  CLI::App* c_gradcheck = app.add_subcommand("gradcheck", "Finite-difference gradient check");
  setup_synth(*c_synth, synth);
  setup_train(*c_train, train);
  setup_predict(*c_predict, predict);
  setup_evaluate(*c_evaluate, evaluate);
  setup_inspect(*c_inspect, inspect);
  setup_gradcheck(*c_gradcheck, gradcheck);

  // Required flags may come from --config, so requirement checks run after
  // the file is applied.
  auto parse_with_config = [&]() -> int {
    struct Deferred {
      CLI::App* app;
      ParamSet* params;
      std::string* config;
    };
    const Deferred deferred[] = {{c_synth, &synth.params, &synth.config},
                                 {c_train, &train.params, &train.config},
                                 {c_predict, &predict.params, &predict.config},
                                 {c_evaluate, &evaluate.params, &evaluate.config},
                                 {c_gradcheck, &gradcheck.params, &gradcheck.config}};
    std::vector<std::tuple<CLI::App*, CLI::Option*, std::string>> required;
    for (const auto& d : deferred) {
      for (CLI::Option* opt : d.app->get_options()) {
        if (opt->get_required()) {
          required.emplace_back(d.app, opt, opt->get_name());
          opt->required(false);
        }
      }
    }
    try {
      app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
      const int code = app.exit(e);
      return code == 0 ? kExitOk : kExitUsage;
    }
    for (const auto& d : deferred) {
      if (!d.app->parsed()) continue;
      if (!d.config->empty()) d.params->apply_config_file(*d.config);
      const auto resolved = d.params->resolved();
      for (const auto& [owner, opt, name] : required) {
        if (owner != d.app || opt->count() > 0) continue;
        std::string key = name;
        while (!key.empty() && key.front() == '-') key.erase(key.begin());
        for (char& ch : key) {
          if (ch == '-') ch = '_';
        }
        const bool from_file = !d.config->empty() && resolved.contains(key) &&
                               resolved[key].is_string() && !resolved[key].get<std::string>().empty();
        if (!from_file) {
          std::fprintf(stderr, "%s is required\nRun with --help for more information.\n",
                       name.c_str());
          return kExitUsage;
        }
      }
    }
    return -1;
  };

  try {
    const int parsed = parse_with_config();
    if (parsed >= 0) return parsed;
    if (c_synth->parsed()) return run_synth(synth);
    if (c_train->parsed()) return run_train(train);
    if (c_predict->parsed()) return run_predict(predict);
    if (c_evaluate->parsed()) return run_evaluate(evaluate);
    if (c_inspect->parsed()) return run_inspect(inspect);
    if (c_gradcheck->parsed()) return run_gradcheck(gradcheck);
    return kExitUsage;
  } catch (const stenet::Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return exit_code_for(e.kind());
  } catch (const std::filesystem::filesystem_error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitData;
  } catch (const std::bad_alloc&) {
    std::fprintf(stderr, "error: out of memory\n");
    return kExitNumeric;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitData;
  }
}

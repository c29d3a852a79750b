/* Copyright 2026 The bialign Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/
// Command-line front end: dataset generation, training, evaluation, the
// ablation table, gradient checks and visual dumps.
//
// Exit codes: 0 success, 1 usage error, 2 data error, 3 numeric failure.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "bialign/checkpoint.hpp"
#include "bialign/config.hpp"
#include "bialign/data.hpp"
#include "bialign/gradcheck.hpp"
#include "bialign/train.hpp"
#include "bialign/visuals.hpp"

namespace fs = std::filesystem;
using namespace bialign;

namespace {

enum ExitCode { kOk = 0, kUsage = 1, kData = 2, kNumeric = 3 };

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::pair<std::int64_t, std::int64_t> parse_size(const std::string& s) {
  const auto x = s.find('x');
  try {
    if (x == std::string::npos) throw std::invalid_argument("");
    std::size_t a = 0, b = 0;
    const auto h = std::stoll(s.substr(0, x), &a);
    const auto w = std::stoll(s.substr(x + 1), &b);
    if (a != x || b != s.size() - x - 1 || h < 1 || w < 1) throw std::invalid_argument("");
    return {h, w};
  } catch (const std::logic_error&) {
    throw UsageError("size must look like HxW, got '" + s + "'");
  }
}

RunConfig config_or_default(const std::string& path) {
  return path.empty() ? RunConfig{} : load_config(path);
}

int gen_data(const std::string& out, std::int64_t count, std::int64_t val_count, std::uint64_t seed,
             int classes, const std::string& size) {
  SceneSpec spec;
  spec.num_classes = classes;
  std::tie(spec.height, spec.width) = parse_size(size);
  try {
    spec.validate();
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  if (count < 1) throw UsageError("--count must be positive");
  write_split(out, "train", spec, count, seed);
  write_split(out, "val", spec, val_count < 0 ? count : val_count, seed);
  std::cout << fmt::format("wrote {} train and {} val samples to {}\n", count,
                           val_count < 0 ? count : val_count, out);
  return kOk;
}

int train_cmd(const std::string& data, const std::string& config, const std::string& out,
              std::string metrics_path) {
  const RunConfig cfg = config_or_default(config);
  if (metrics_path.empty()) metrics_path = out + ".metrics.csv";
  std::ofstream metrics(metrics_path);
  if (!metrics) throw DatasetError("cannot write " + metrics_path);
  const auto result = train(cfg, data, out, &metrics);
  const auto& last = result.rows.back();
  std::cout << fmt::format("trained {} iterations, final loss {:.4f}", result.rows.size(), last.loss_total);
  if (last.val_miou) std::cout << fmt::format(", val mIoU {:.4f}", *last.val_miou);
  std::cout << fmt::format("\ncheckpoint: {}\nmetrics: {}\n", out, metrics_path);
  return kOk;
}

int eval_cmd(const std::string& ckpt_path, const std::string& data, const std::string& split) {
  const Checkpoint ckpt = load_checkpoint(ckpt_path);
  const auto samples = load_split(data, split);
  const auto result = evaluate(ckpt, samples);
  std::cout << fmt::format("{} samples from {}/{}\n", samples.size(), data, split)
            << result.report.to_text();
  return kOk;
}

int ablate_cmd(const std::string& data, const std::string& out, const std::string& config) {
  const RunConfig base = config_or_default(config);
  const auto train_set = load_split(data, "train");
  const auto val = fs::is_directory(fs::path(data) / "val") ? load_split(data, "val") : train_set;
  const auto rows = ablate(base, train_set, val, [](const AblationRow& r) {
    std::cerr << fmt::format("{}: mIoU {:.4f}\n", r.label, r.miou);
  });
  const std::string table = format_ablation_table(rows);
  std::ofstream f(out);
  if (!f) throw DatasetError("cannot write " + out);
  f << table;
  std::cout << table;
  return kOk;
}

int gradcheck_cmd(const std::string& op, bool list) {
  if (list) {
    for (const auto& n : gradcheck_names()) std::cout << n << '\n';
    return kOk;
  }
  std::vector<GradcheckResult> results;
  try {
    results = run_gradchecks(op);
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  bool ok = true;
  for (const auto& r : results) {
    std::cout << fmt::format("{:<6} {:<44} max rel error {:.3e}\n", r.passed() ? "PASS" : "FAIL",
                             r.name, r.max_rel_error);
    ok = ok && r.passed();
  }
  return ok ? kOk : kNumeric;
}

int dump_cmd(const std::string& ckpt_path, const std::string& sample, const std::string& out) {
  const Checkpoint ckpt = load_checkpoint(ckpt_path);
  const Tensor image = raster_to_image(read_netpbm(sample));
  for (const auto& p : dump_visuals(ckpt, image, out)) std::cout << p.string() << '\n';
  return kOk;
}

int flops_cmd(const std::string& config, const std::string& size) {
  const RunConfig cfg = config_or_default(config);
  const auto [h, w] = parse_size(size);
  const auto report = count_flops(cfg.model, h, w);
  for (const auto& [name, macs] : report.by_module) std::cout << fmt::format("{:<20} {:>14}\n", name, macs);
  std::cout << fmt::format("{:<20} {:>14}\nparameters {}\n", "total", report.total(),
                           parameter_count(cfg.model));
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Two-path segmentation network with bidirectional flow alignment"};
  app.require_subcommand(1);

  std::string out, data, config, ckpt, split = "val", size = "64x64", op, sample, metrics;
  std::int64_t count = 16, val_count = -1;
  std::uint64_t seed = 0;
  int classes = 5;
  bool list = false;

  auto* gen = app.add_subcommand("gen-data", "Generate a synthetic dataset");
  gen->add_option("--out", out, "Dataset root")->required();
  gen->add_option("--count", count, "Training samples");
  gen->add_option("--val-count", val_count, "Validation samples (default: --count)");
  gen->add_option("--seed", seed, "Base seed");
  gen->add_option("--classes", classes, "Number of classes");
  gen->add_option("--size", size, "Canvas HxW");

  auto* tr = app.add_subcommand("train", "Train and write a checkpoint");
  tr->add_option("--data", data, "Dataset root")->required();
  tr->add_option("--config", config, "Config file (key = value)");
  tr->add_option("--out", out, "Checkpoint path")->required();
  tr->add_option("--metrics", metrics, "Metrics CSV (default: <out>.metrics.csv)");

  auto* ev = app.add_subcommand("eval", "Report per-class IoU and mIoU");
  ev->add_option("--ckpt", ckpt, "Checkpoint")->required();
  ev->add_option("--data", data, "Dataset root")->required();
  ev->add_option("--split", split, "Split name");

  auto* ab = app.add_subcommand("ablate", "Train the six ablation variants");
  ab->add_option("--data", data, "Dataset root")->required();
  ab->add_option("--out", out, "Table output file")->required();
  ab->add_option("--config", config, "Base config file");

  auto* gc = app.add_subcommand("gradcheck", "Compare tape gradients with finite differences");
  gc->add_option("--op", op, "Check name or group prefix");
  gc->add_flag("--list", list, "List check names");

  auto* dv = app.add_subcommand("dump-visuals", "Write prediction, flow, gate and indicator images");
  dv->add_option("--ckpt", ckpt, "Checkpoint")->required();
  dv->add_option("--sample", sample, "Input image (binary PPM)")->required();
  dv->add_option("--out", out, "Output directory")->required();

  auto* fl = app.add_subcommand("flops", "Print per-module multiply-accumulate counts");
  fl->add_option("--config", config, "Config file");
  fl->add_option("--size", size, "Input HxW");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsage;
  }

  try {
    if (*gen) return gen_data(out, count, val_count, seed, classes, size);
    if (*tr) return train_cmd(data, config, out, metrics);
    if (*ev) return eval_cmd(ckpt, data, split);
    if (*ab) return ablate_cmd(data, out, config);
    if (*gc) return gradcheck_cmd(op, list);
    if (*dv) return dump_cmd(ckpt, sample, out);
    if (*fl) return flops_cmd(config, size);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kUsage;
  } catch (const NumericError& e) {
    std::cerr << "numeric failure: " << e.what() << '\n';
    return kNumeric;
  } catch (const std::exception& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kData;
  }
  return kUsage;
}

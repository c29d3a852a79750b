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
#ifndef BIALIGN_TRAIN_HPP_
#define BIALIGN_TRAIN_HPP_

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "bialign/checkpoint.hpp"
#include "bialign/config.hpp"
#include "bialign/data.hpp"
#include "bialign/metrics.hpp"

namespace bialign {

inline constexpr std::string_view kMetricsHeader =
    "iter,lr,loss_total,loss_bce,loss_hard,loss_ohem,val_miou";

/// One line of the metrics log. val_miou is empty except on evaluation
/// iterations.
struct MetricsRow {
  std::int64_t iter = 0;
  double lr = 0.0;
  double loss_total = 0.0;
  double loss_bce = 0.0;
  double loss_hard = 0.0;
  double loss_ohem = 0.0;
  std::optional<double> val_miou;

  bool operator==(const MetricsRow&) const = default;
};

std::string format_metrics_row(const MetricsRow& row);
/// Throws std::invalid_argument on a malformed line.
MetricsRow parse_metrics_row(std::string_view line);

/// Thrown when the loss becomes non-finite; carries the state from before
/// the failing iteration.
class DivergedError : public NumericError {
 public:
  DivergedError(const std::string& what, Checkpoint last_good)
      : NumericError(what), last_good(std::move(last_good)) {}
  Checkpoint last_good;
};

struct TrainResult {
  Checkpoint checkpoint;
  std::vector<MetricsRow> rows;
};

/// Runs cfg.train.total_iters SGD iterations.
///
/// Each iteration takes the next batch_size samples of a per-epoch seeded
/// shuffle, optionally augments them, and minimises total_loss (or the OHEM
/// term alone when the spatial loss is disabled) with momentum SGD under
/// the poly schedule. When `val` is non-empty and eval_every > 0, val mIoU
/// is recorded every eval_every iterations and at the last one.
TrainResult train_on(const RunConfig& cfg, std::span<const Sample> train_set,
                     std::span<const Sample> val,
                     const std::function<void(const MetricsRow&)>& on_row = {});

/// Dataset-directory front end: reads `<root>/train` (and `<root>/val` if
/// present), writes the metrics CSV to `metrics` and the final checkpoint to
/// `checkpoint_out`. On divergence the last good state is written before
/// DivergedError propagates.
TrainResult train(const RunConfig& cfg, const std::filesystem::path& root,
                  const std::filesystem::path& checkpoint_out, std::ostream* metrics);

struct EvalResult {
  MiouReport report;
  std::vector<LabelMap> predictions;
};

/// Eval-mode forward per sample, argmax, confusion accumulation.
EvalResult evaluate(ModelState& state, const ModelConfig& cfg, std::span<const Sample> samples);
EvalResult evaluate(const Checkpoint& ckpt, std::span<const Sample> samples);

struct AblationRow {
  std::string label;
  RunConfig config;
  double miou = 0.0;
  double delta = 0.0;  // miou minus the baseline row
  std::int64_t params = 0;
  std::int64_t macs = 0;
};

/// The six ablation variants of `base`, differing only in alignment and
/// whether the spatial loss is used.
std::vector<std::pair<std::string, RunConfig>> ablation_configs(const RunConfig& base);

/// Trains every variant on `train_set` under identical seeds and scores it
/// on `val`. MACs are counted at the crop size.
std::vector<AblationRow> ablate(const RunConfig& base, std::span<const Sample> train_set,
                                std::span<const Sample> val,
                                const std::function<void(const AblationRow&)>& on_row = {});

std::string format_ablation_table(std::span<const AblationRow> rows);

}  // namespace bialign

#endif  // BIALIGN_TRAIN_HPP_

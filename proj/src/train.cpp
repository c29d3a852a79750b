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
#include "bialign/train.hpp"

#include <cmath>
#include <numeric>
#include <ostream>

#include <fmt/format.h>

#include "bialign/edges.hpp"
#include "bialign/losses.hpp"
#include "bialign/rng.hpp"

namespace bialign {

namespace {

// Endless stream of sample indices: a fresh Fisher-Yates shuffle per epoch.
class BatchOrder {
 public:
  BatchOrder(std::size_t size, std::uint64_t seed) : rng_(seed), order_(size) {}

  std::size_t next() {
    if (pos_ == order_.size()) pos_ = 0;
    if (pos_ == 0) {
      std::iota(order_.begin(), order_.end(), std::size_t{0});
      for (std::size_t i = order_.size(); i > 1; --i) {
        std::swap(order_[i - 1], order_[rng_.below(i)]);
      }
    }
    return order_[pos_++];
  }

 private:
  Rng rng_;
  std::vector<std::size_t> order_;
  std::size_t pos_ = 0;
};

std::vector<std::string> split_csv(std::string_view line) {
  std::vector<std::string> out(1);
  for (char c : line) {
    if (c == ',') {
      out.emplace_back();
    } else {
      out.back() += c;
    }
  }
  return out;
}

double parse_double(const std::string& s) {
  std::size_t used = 0;
  const double v = std::stod(s, &used);
  if (used != s.size()) throw std::invalid_argument("bad number '" + s + "'");
  return v;
}

}  // namespace

std::string format_metrics_row(const MetricsRow& r) {
  return fmt::format("{},{},{},{},{},{},{}", r.iter, r.lr, r.loss_total, r.loss_bce, r.loss_hard,
                     r.loss_ohem, r.val_miou ? fmt::format("{}", *r.val_miou) : std::string());
}

MetricsRow parse_metrics_row(std::string_view line) {
  const auto f = split_csv(line);
  if (f.size() != 7) throw std::invalid_argument("metrics row must have 7 fields");
  MetricsRow r;
  try {
    std::size_t used = 0;
    r.iter = std::stoll(f[0], &used);
    if (used != f[0].size()) throw std::invalid_argument("bad iteration");
    r.lr = parse_double(f[1]);
    r.loss_total = parse_double(f[2]);
    r.loss_bce = parse_double(f[3]);
    r.loss_hard = parse_double(f[4]);
    r.loss_ohem = parse_double(f[5]);
    if (!f[6].empty()) r.val_miou = parse_double(f[6]);
  } catch (const std::logic_error& e) {
    throw std::invalid_argument(std::string("malformed metrics row: ") + e.what());
  }
  return r;
}

TrainResult train_on(const RunConfig& cfg, std::span<const Sample> train_set,
                     std::span<const Sample> val,
                     const std::function<void(const MetricsRow&)>& on_row) {
  cfg.validate();
  if (train_set.empty()) throw DatasetError("training set is empty");
  const std::uint64_t seed = cfg.train.seed;
  const std::string config_text = to_config_text(cfg);

  ModelState state = init_parameters(cfg.model, seed);
  ParameterSet velocity = zero_velocity(state);
  BatchOrder order(train_set.size(), derive_seed(seed, "batch_order"));
  auto snapshot = [&](std::int64_t iter) {
    return Checkpoint{static_cast<std::uint32_t>(iter), config_text, state.clone(), velocity};
  };
  // The failing iteration's forward pass has already moved the BN running
  // statistics; the last good state keeps the values from before it.
  auto snapshot_before = [&](std::int64_t iter, const ParameterSet& buffers) {
    Checkpoint c = snapshot(iter);
    c.state.buffers = buffers;
    return c;
  };

  TrainResult result;
  Tape& tape = Tape::current();
  for (std::int64_t iter = 0; iter < cfg.train.total_iters; ++iter) {
    std::vector<Sample> picked;
    for (std::int64_t j = 0; j < cfg.train.batch_size; ++j) {
      const Sample& s = train_set[order.next()];
      if (cfg.augment) {
        const auto aug_seed = derive_seed(derive_seed(seed, "augment"),
                                          static_cast<std::uint64_t>(iter * cfg.train.batch_size + j));
        picked.push_back(augment(s, aug_seed, cfg.augment_cfg));
      } else {
        picked.push_back(s);
      }
    }
    const Sample batch = stack_samples(picked);
    const EdgeMap edges = extract_edge_map(batch.labels, cfg.edge_thickness);

    tape.reset();
    for (auto& [name, p] : state.params) p.zero_grad();
    const ParameterSet buffers_before = ModelState{{}, state.buffers}.clone().buffers;
    const auto out = bialignnet_forward(batch.image, state, cfg.model, Mode::kTrain);
    MetricsRow row;
    row.iter = iter;
    row.lr = poly_lr(iter, cfg.train);
    Tensor loss;
    if (cfg.model.spatial_loss_enabled) {
      const auto parts = total_loss(out.s_logits, out.d, edges, batch.labels, cfg.loss);
      loss = parts.total;
      row.loss_bce = parts.bce.item();
      row.loss_hard = parts.hard.item();
      row.loss_ohem = parts.ohem.item();
    } else {
      loss = ohem_ce(out.s_logits, batch.labels, cfg.loss).value;
      row.loss_ohem = loss.item();
    }
    row.loss_total = loss.item();
    if (!std::isfinite(row.loss_total)) {
      tape.reset();
      throw DivergedError(fmt::format("non-finite loss at iteration {}", iter),
                          snapshot_before(iter, buffers_before));
    }
    backward(loss);
    try {
      sgd_step(state, velocity, row.lr, cfg.train);
    } catch (const NumericError& e) {
      tape.reset();
      throw DivergedError(fmt::format("iteration {}: {}", iter, e.what()),
                          snapshot_before(iter, buffers_before));
    }
    tape.reset();

    const bool last = iter + 1 == cfg.train.total_iters;
    if (!val.empty() && cfg.train.eval_every > 0 && ((iter + 1) % cfg.train.eval_every == 0 || last)) {
      row.val_miou = evaluate(state, cfg.model, val).report.miou;
    }
    if (on_row) on_row(row);
    result.rows.push_back(row);
  }
  for (auto& [name, p] : state.params) p.zero_grad();
  result.checkpoint = snapshot(cfg.train.total_iters);
  return result;
}

TrainResult train(const RunConfig& cfg, const std::filesystem::path& root,
                  const std::filesystem::path& checkpoint_out, std::ostream* metrics) {
  const auto train_set = load_split(root, "train");
  std::vector<Sample> val;
  if (std::filesystem::is_directory(root / "val")) val = load_split(root, "val");
  if (metrics) *metrics << kMetricsHeader << '\n';
  auto on_row = [metrics](const MetricsRow& r) {
    if (metrics) *metrics << format_metrics_row(r) << '\n' << std::flush;
  };
  try {
    TrainResult r = train_on(cfg, train_set, val, on_row);
    save_checkpoint(checkpoint_out, r.checkpoint);
    return r;
  } catch (const DivergedError& e) {
    save_checkpoint(checkpoint_out, e.last_good);
    throw;
  }
}

EvalResult evaluate(ModelState& state, const ModelConfig& cfg, std::span<const Sample> samples) {
  NoGradGuard guard;
  ConfusionMatrix cm(cfg.num_classes);
  EvalResult r;
  for (const auto& s : samples) {
    const auto out = bialignnet_forward(s.image, state, cfg, Mode::kEval);
    LabelMap pred = argmax_labels(out.s_logits);
    accumulate_confusion(pred, s.labels, cm);
    r.predictions.push_back(std::move(pred));
  }
  r.report = miou(cm);
  return r;
}

EvalResult evaluate(const Checkpoint& ckpt, std::span<const Sample> samples) {
  const RunConfig cfg = parse_config(ckpt.config_text);
  ModelState state = ckpt.state.clone();
  return evaluate(state, cfg.model, samples);
}

std::vector<std::pair<std::string, RunConfig>> ablation_configs(const RunConfig& base) {
  const std::pair<const char*, Alignment> variants[] = {
      {"CP + SP (baseline)", Alignment::kNone},
      {"CP + SP + GFAM (CP->SP)", Alignment::kGfamCpToSp},
      {"CP + SP + GFAM (SP->CP)", Alignment::kGfamSpToCp},
      {"CP + SP + FAM (bidirection)", Alignment::kFamBidirectional},
      {"CP + SP + GFAM (bidirection)", Alignment::kGfamBidirectional},
  };
  std::vector<std::pair<std::string, RunConfig>> out;
  for (const auto& [label, a] : variants) {
    RunConfig c = base;
    c.model.alignment = a;
    c.model.spatial_loss_enabled = false;
    out.emplace_back(label, c);
  }
  RunConfig full = base;
  full.model.alignment = Alignment::kGfamBidirectional;
  full.model.spatial_loss_enabled = true;
  out.emplace_back("CP + SP + GFAM (bidirection) + SL", full);
  return out;
}

std::vector<AblationRow> ablate(const RunConfig& base, std::span<const Sample> train_set,
                                std::span<const Sample> val,
                                const std::function<void(const AblationRow&)>& on_row) {
  std::vector<AblationRow> rows;
  for (auto& [label, cfg] : ablation_configs(base)) {
    AblationRow row;
    row.label = label;
    row.config = cfg;
    RunConfig quiet = cfg;
    quiet.train.eval_every = 0;
    auto trained = train_on(quiet, train_set, {});
    row.miou = evaluate(trained.checkpoint.state, cfg.model, val).report.miou;
    row.delta = rows.empty() ? 0.0 : row.miou - rows.front().miou;
    row.params = parameter_count(cfg.model);
    row.macs = count_flops(cfg.model, cfg.augment_cfg.crop_h, cfg.augment_cfg.crop_w).total();
    if (on_row) on_row(row);
    rows.push_back(std::move(row));
  }
  return rows;
}

std::string format_ablation_table(std::span<const AblationRow> rows) {
  std::string s = fmt::format("{:<36} {:>8} {:>8} {:>10} {:>12} {:>9}\n", "Method", "mIoU(%)",
                              "Delta", "Params", "MACs", "MAC ovh");
  const double base_macs = rows.empty() ? 1.0 : static_cast<double>(rows.front().macs);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& r = rows[i];
    const std::string delta = i == 0 ? "-" : fmt::format("{:+.2f}", 100.0 * r.delta);
    s += fmt::format("{:<36} {:>8.2f} {:>8} {:>10} {:>12} {:>8.3f}%\n", r.label, 100.0 * r.miou,
                     delta, r.params, r.macs,
                     100.0 * (static_cast<double>(r.macs) - base_macs) / base_macs);
  }
  return s;
}

}  // namespace bialign

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
// Acceptance runner. Prints one PASS/FAIL line per criterion (A1..A8) on
// stdout, diagnostics on stderr, and exits non-zero if any criterion fails.

#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "bialign/checkpoint.hpp"
#include "bialign/config.hpp"
#include "bialign/data.hpp"
#include "bialign/edges.hpp"
#include "bialign/flow_align.hpp"
#include "bialign/gradcheck.hpp"
#include "bialign/losses.hpp"
#include "bialign/metrics.hpp"
#include "bialign/optim.hpp"
#include "bialign/train.hpp"
#include "fixtures.hpp"
#include "oracles.hpp"

namespace fs = std::filesystem;
using namespace bialign;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Verdict {
  bool pass = true;
  std::string detail;
  std::vector<std::string> failures;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      failures.push_back(what);
    }
  }
};

bool bit_equal(const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) return false;
  for (std::int64_t i = 0; i < a.numel(); ++i) {
    if (std::bit_cast<std::uint32_t>(a.data()[i]) != std::bit_cast<std::uint32_t>(b.data()[i])) return false;
  }
  return true;
}

bool bit_equal(const ParameterSet& a, const ParameterSet& b) {
  if (a.size() != b.size()) return false;
  for (const auto& [k, v] : a) {
    const auto it = b.find(k);
    if (it == b.end() || !bit_equal(v, it->second)) return false;
  }
  return true;
}

// Widths used for the desk-scale runs: wider late context stages keep the
// alignment overhead in proportion to a heavier backbone.
constexpr const char* kDeskConfig =
    "context_stage_widths = 32,64,128,128\n"
    "ppm_bins = 1,2\n";

constexpr const char* kOverfitConfig =
    "context_stage_widths = 32,64,128,128\n"
    "ppm_bins = 1,2\n"
    "alignment = gfam_bidirectional\n"
    "spatial_loss = true\n"
    "total_iters = 300\n"
    "batch_size = 4\n"
    "base_lr = 0.01\n"
    "augment = false\n"
    "eval_every = 0\n"
    "seed = 1\n";

// ---------------------------------------------------------------------------

Verdict a1_gradients() {
  Verdict v;
  const auto t0 = Clock::now();
  const auto results = run_gradchecks();
  const double secs = seconds_since(t0);
  double worst = 0.0;
  std::size_t passed = 0;
  for (const auto& r : results) {
    worst = std::max(worst, r.max_rel_error);
    passed += r.passed();
    v.require(r.passed(), fmt::format("{} rel err {:.3e}", r.name, r.max_rel_error));
  }
  v.require(secs < 60.0, fmt::format("runtime {:.1f} s", secs));
  v.detail = fmt::format("{}/{} checks within {:.0e}, worst {:.2e}, {:.1f} s", passed, results.size(),
                         kGradcheckTolerance, worst, secs);
  return v;
}

Verdict a2_warp() {
  Verdict v;
  int cases = 0;
  // Zero flow: bit-exact identity.
  for (std::uint64_t s = 0; s < 20; ++s) {
    const auto f = Tensor::randn({1 + static_cast<std::int64_t>(s % 2), 3, 5 + static_cast<std::int64_t>(s), 9}, s, 5.0);
    const auto out = warp_bilinear(f, FlowField::zeros(f.shape().n, f.shape().h, f.shape().w));
    v.require(bit_equal(f, out), fmt::format("zero flow identity, seed {}", s));
    ++cases;
  }
  // Bounded by input range, flows reaching past the border.
  for (std::uint64_t s = 0; s < 50; ++s) {
    const auto f = Tensor::randn({2, 3, 8, 8}, 100 + s, 4.0);
    const auto flow = Tensor::randn({2, 2, 8, 8}, 200 + s, 0.5 + static_cast<double>(s % 10));
    const auto out = warp_bilinear(f, FlowField(flow));
    const auto [lo, hi] = std::minmax_element(f.data().begin(), f.data().end());
    const bool bounded = std::all_of(out.data().begin(), out.data().end(),
                                     [&](float x) { return x >= *lo && x <= *hi; });
    v.require(bounded, fmt::format("bounds, seed {}", s));
    ++cases;
  }
  // Saturated gate: GFAM and FAM identical bit-for-bit.
  for (std::uint64_t s = 0; s < 10; ++s) {
    const auto f_s = Tensor::randn({2, 4, 4, 4}, 300 + s);
    const auto f_t = Tensor::randn({2, 4, 8, 8}, 400 + s);
    AlignParams<float> p{{Tensor::randn({2, 8, 3, 3}, 500 + s, 0.3), Tensor::randn({1, 2, 1, 1}, 600 + s)},
                         GateConv<float>{Tensor::zeros({1, 4, 3, 3}), Tensor::full({1, 1, 1, 1}, 100.0f)}};
    for (auto mode : {WarpMode::kWarpTarget, WarpMode::kWarpSource}) {
      v.require(bit_equal(gfam(f_s, f_t, p, mode), fam(f_s, f_t, p, mode)),
                fmt::format("saturated gate, seed {}", s));
      ++cases;
    }
  }
  // Identity at init: zero alignment convs reproduce the baseline network.
  auto cfg = parse_config(kDeskConfig).model;
  auto base = cfg;
  base.alignment = Alignment::kNone;
  for (std::uint64_t s = 0; s < 3; ++s) {
    const auto x = Tensor::randn({2, 3, 64, 64}, 700 + s);
    for (auto mode : {Mode::kEval, Mode::kTrain}) {
      auto st = init_parameters(cfg, s);
      auto bs = init_parameters(base, s);
      const auto a = bialignnet_forward(x, st, cfg, mode);
      const auto b = bialignnet_forward(x, bs, base, mode);
      v.require(bit_equal(a.s_logits, b.s_logits) && bit_equal(a.d, b.d),
                fmt::format("identity at init, seed {}", s));
      ++cases;
    }
  }
  v.detail = fmt::format("{} cases: zero-flow identity, range bounds, saturated gate, identity at init", cases);
  return v;
}

Verdict a3_losses() {
  Verdict v;
  const LossConfig cfg;
  double worst = 0.0;
  auto close = [&worst](double got, double want) {
    const double err = std::abs(got - want) / std::max(1.0, std::abs(want));
    worst = std::max(worst, err);
    return err <= 1e-12;
  };
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    const auto in = fixtures::random_instance(seed, 32);
    const auto logits = fixtures::logits_of(in);
    const auto labels = fixtures::labels_of(in);
    const auto d = fixtures::indicator_of(in);

    const auto oh = ohem_ce(logits, labels, cfg);
    const auto oh_want = oracle::ohem(in, cfg.ohem_prob_threshold, cfg.ohem_min_kept_fraction);
    v.require(oh.kept == oh_want.kept && close(oh.value.item(), oh_want.value),
              fmt::format("ohem_ce seed {}", seed));

    const auto hp = hard_pixel_loss(logits, labels, d, cfg);
    const auto hp_want = oracle::hard_pixels(in, cfg.t_b, cfg.hard_keep_fraction);
    v.require(hp.kept == hp_want.kept && close(hp.value.item(), hp_want.value),
              fmt::format("hard_pixel_loss seed {}", seed));

    EdgeMap b{in.n, in.h, in.w, {}};
    for (std::size_t i = 0; i < in.d.size(); ++i) b.values.push_back((in.labels[i] + i) % 3 == 0);
    v.require(close(bce(d, b).item(), oracle::bce(in.d, b.values)), fmt::format("bce seed {}", seed));

    // mIoU of the logits' argmax against the labels.
    const auto pred = argmax_labels(logits.cast<float>());
    ConfusionMatrix cm(in.c);
    accumulate_confusion(pred, labels, cm);
    const auto got = miou(cm);
    const auto want = oracle::miou(pred.values, in.labels, in.c);
    v.require(got.iou == want.iou && got.miou == want.miou && got.pixel_accuracy == want.accuracy,
              fmt::format("miou seed {}", seed));
  }

  // Worked example: candidate probabilities {0.2, 0.5, 0.1}, K = 2.
  oracle::Instance ex;
  ex.c = 2;
  ex.w = 4;
  for (double p : {0.2, 0.5, 0.1, 0.9}) ex.logits.push_back(std::log(p));
  for (double p : {0.2, 0.5, 0.1, 0.9}) ex.logits.push_back(std::log(1.0 - p));
  ex.labels = {0, 0, 0, 0};
  ex.d = {0.9, 0.85, 0.95, 0.1};
  LossConfig half = cfg;
  half.hard_keep_fraction = 0.5;
  const double worked = hard_pixel_loss(fixtures::logits_of(ex), fixtures::labels_of(ex),
                                        fixtures::indicator_of(ex), half).value.item();
  v.require(std::abs(worked - 1.9560) <= 1e-4, fmt::format("worked example gave {:.6f}", worked));

  // Degenerate cases: no candidates gives 0; keep-all gives the mean CE.
  const auto in = fixtures::random_instance(999, 16);
  const auto none = hard_pixel_loss(fixtures::logits_of(in), fixtures::labels_of(in),
                                    TensorD::zeros({in.n, 1, in.h, in.w}), cfg);
  v.require(none.value.item() == 0.0 && none.kept.empty(), "empty candidate set");
  LossConfig all = cfg;
  all.t_b = 1e-12;
  all.hard_keep_fraction = 1.0;
  const double keep_all = hard_pixel_loss(fixtures::logits_of(in), fixtures::labels_of(in),
                                          TensorD::full({in.n, 1, in.h, in.w}, 0.5), all).value.item();
  const double mean_ce = cross_entropy_pixelwise(fixtures::logits_of(in), fixtures::labels_of(in)).mean.item();
  v.require(close(keep_all, mean_ce), "keep-all equals mean CE");
  v.require(cfg.lambda == 25.0 && cfg.t_b == 0.8, "defaults lambda=25, t_b=0.8");

  v.detail = fmt::format(
      "200 random instances (ohem/hard/bce/miou) match oracles, worked example {:.4f}, "
      "degenerate cases ok, worst rel diff {:.1e}",
      worked, worst);
  return v;
}

Verdict a4_edges() {
  Verdict v;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const auto m = fixtures::random_labels(seed + 5000, 64, 5, true);
    v.require(extract_edge_map(m).values ==
                  oracle::edges(m.values, 1, static_cast<int>(m.h), static_cast<int>(m.w)),
              fmt::format("random map {}", seed));
  }
  LabelMap sq = LabelMap::filled(1, 6, 6, 0);
  for (int y = 2; y < 4; ++y)
    for (int x = 2; x < 4; ++x) sq.at(0, y, x) = 1;
  const std::vector<std::uint8_t> want{0, 0, 0, 0, 0, 0,  //
                                       0, 0, 1, 1, 0, 0,  //
                                       0, 1, 1, 1, 1, 0,  //
                                       0, 1, 1, 1, 1, 0,  //
                                       0, 0, 1, 1, 0, 0,  //
                                       0, 0, 0, 0, 0, 0};
  v.require(extract_edge_map(sq).values == want, "square in background");
  v.detail = "100 random label maps up to 64x64 and the 2x2 square case match the 4-neighbour oracle";
  return v;
}

struct OverfitRun {
  TrainResult train;
  MiouReport report;
  double seconds = 0.0;
};

OverfitRun overfit_once(const RunConfig& cfg, const std::vector<Sample>& data) {
  const auto t0 = Clock::now();
  OverfitRun r;
  r.train = train_on(cfg, data, {});
  r.report = evaluate(r.train.checkpoint, data).report;
  r.seconds = seconds_since(t0);
  return r;
}

// Loss averaged over consecutive 20-iteration windows never rises.
bool smoothed_non_increasing(const std::vector<MetricsRow>& rows) {
  double prev = INFINITY;
  for (std::size_t i = 0; i + 20 <= rows.size(); i += 20) {
    double s = 0.0;
    for (std::size_t j = i; j < i + 20; ++j) s += rows[j].loss_total;
    if (s / 20.0 > prev) return false;
    prev = s / 20.0;
  }
  return true;
}

Verdict a5_overfit(const std::vector<Sample>& data, Checkpoint& out_ckpt, std::vector<MetricsRow>& out_rows) {
  Verdict v;
  const RunConfig cfg = parse_config(kOverfitConfig);
  const auto first = overfit_once(cfg, data);
  const auto second = overfit_once(cfg, data);
  v.require(first.report.miou >= 0.90, fmt::format("mIoU {:.4f}", first.report.miou));
  v.require(first.report.pixel_accuracy >= 0.95, fmt::format("pixel accuracy {:.4f}", first.report.pixel_accuracy));
  v.require(first.seconds < 300.0 && second.seconds < 300.0,
            fmt::format("runtime {:.1f} s / {:.1f} s", first.seconds, second.seconds));
  v.require(first.report.miou == second.report.miou, "final mIoU differs between runs");
  v.require(first.train.rows == second.train.rows, "loss traces differ between runs");
  std::cerr << "A5 per-class IoU:\n" << first.report.to_text();
  std::cerr << fmt::format("A5 smoothed loss non-increasing over 20-iteration windows: {}\n",
                           smoothed_non_increasing(first.train.rows) ? "yes" : "no");
  v.detail = fmt::format("8 images, {} iters, batch {}: train mIoU {:.4f}, pixel acc {:.4f}, "
                         "{:.1f} s per run, repeat run identical: {}",
                         cfg.train.total_iters, cfg.train.batch_size, first.report.miou,
                         first.report.pixel_accuracy, first.seconds,
                         first.report.miou == second.report.miou ? "yes" : "no");
  out_ckpt = first.train.checkpoint;
  out_rows = first.train.rows;
  return v;
}

Verdict a6_ablation(const std::vector<Sample>& data) {
  Verdict v;
  RunConfig base = parse_config(std::string(kDeskConfig) + "total_iters = 20\nbatch_size = 4\naugment = false\n");
  const auto rows = ablate(base, data, data);
  std::cerr << "A6 ablation table (20 iterations per variant):\n" << format_ablation_table(rows);
  v.require(rows.size() == 6, "six rows");
  if (rows.size() != 6) return v;
  for (const auto& r : rows) {
    v.require(std::isfinite(r.miou) && r.miou >= 0.0 && r.miou <= 1.0, r.label + " mIoU");
  }
  const double overhead = static_cast<double>(rows[4].macs) / static_cast<double>(rows[0].macs) - 1.0;
  v.require(overhead < 0.02, fmt::format("MAC overhead {:.3f}%", 100.0 * overhead));
  // Gate conv per direction: 3x3 kernel over the c_sp-channel target to one
  // channel, plus its bias.
  const std::int64_t c_sp = base.model.spatial_channels();
  const std::int64_t gate_params = 2 * (9 * c_sp + 1);
  v.require(rows[4].params - rows[3].params == gate_params,
            fmt::format("FAM/GFAM delta {} vs {}", rows[4].params - rows[3].params, gate_params));
  v.detail = fmt::format("6 variants trained, GFAM-bidirectional MAC overhead {:.3f}%, "
                         "FAM->GFAM params +{} (= gate convs {})",
                         100.0 * overhead, rows[4].params - rows[3].params, gate_params);
  return v;
}

Verdict a7_schedule() {
  Verdict v;
  TrainConfig cfg;
  cfg.total_iters = 300;
  const double mid = poly_lr(150, cfg);
  v.require(poly_lr(0, cfg) == 0.01, "poly_lr(0)");
  v.require(poly_lr(300, cfg) == 0.0, "poly_lr(total)");
  v.require(std::abs(mid - 0.0053589) <= 1e-6, fmt::format("poly_lr(total/2) = {:.7f}", mid));
  const double lr = 0.01, g = 0.37;
  std::vector<float> p{0.0f}, vel{0.0f};
  const std::vector<double> grad{g};
  for (int i = 0; i < 2; ++i) sgd_momentum_step(p, grad, vel, lr, 0.9, 0.0);
  const double closed = -lr * g * (1.0 + 1.9);
  v.require(std::abs(p[0] - closed) <= 1e-6, fmt::format("momentum unroll {} vs {}", p[0], closed));
  v.detail = fmt::format("poly_lr(150/300) = {:.7f}, two-step momentum displacement {:.8f} (closed form {:.8f})",
                         mid, p[0], closed);
  return v;
}

Verdict a8_persistence(const Checkpoint& ckpt, const std::vector<MetricsRow>& rows, const fs::path& dir) {
  Verdict v;
  const auto path = dir / "overfit.ckpt";
  save_checkpoint(path, ckpt);
  const auto back = load_checkpoint(path);
  v.require(bit_equal(back.state.params, ckpt.state.params), "parameters");
  v.require(bit_equal(back.state.buffers, ckpt.state.buffers), "BN running statistics");
  v.require(bit_equal(back.velocity, ckpt.velocity), "momentum buffers");
  v.require(back.iteration == ckpt.iteration && back.config_text == ckpt.config_text, "header fields");

  auto bytes = encode_checkpoint(ckpt);
  bytes[4] = static_cast<std::uint8_t>(kCheckpointVersion + 1);
  bool rejected = false;
  try {
    decode_checkpoint(bytes);
  } catch (const CheckpointError&) {
    rejected = true;
  }
  v.require(rejected, "version mismatch accepted");

  // Label PGM round trip, including the ignore value.
  LabelMap labels = generate_scene(SceneSpec{}, 77).labels;
  for (std::int64_t x = 0; x < labels.w; ++x) labels.at(0, 0, x) = kIgnoreIndex;
  save_sample(Sample{Tensor::zeros({1, 3, labels.h, labels.w}), labels}, dir / "l.ppm", dir / "l.pgm");
  v.require(load_sample(dir / "l.ppm", dir / "l.pgm").labels == labels, "label PGM round trip");

  // Metrics CSV: header plus one parseable line per row.
  std::ostringstream csv;
  csv << kMetricsHeader << '\n';
  for (const auto& r : rows) csv << format_metrics_row(r) << '\n';
  std::istringstream in(csv.str());
  std::string line;
  std::getline(in, line);
  v.require(line == "iter,lr,loss_total,loss_bce,loss_hard,loss_ohem,val_miou", "CSV header");
  std::size_t n = 0;
  bool parsed = true;
  while (std::getline(in, line)) {
    try {
      parsed = parsed && parse_metrics_row(line) == rows.at(n++);
    } catch (const std::exception&) {
      parsed = false;
    }
  }
  v.require(parsed && n == rows.size(), "CSV rows");
  v.detail = fmt::format("checkpoint ({} bytes) bit-exact, version {} rejected, label PGM exact, {} CSV rows parsed",
                         encode_checkpoint(ckpt).size(), kCheckpointVersion + 1, n);
  return v;
}

}  // namespace

int main() {
  const fs::path dir = fs::temp_directory_path() / "bialign_acceptance";
  fs::remove_all(dir);
  fs::create_directories(dir);

  // The overfit and ablation runs use the same 8 generated scenes, written
  // to disk and read back like the command-line tools do.
  SceneSpec spec;
  write_split(dir / "data", "train", spec, 8, 7);
  const auto data = load_split(dir / "data", "train");

  Checkpoint ckpt;
  std::vector<MetricsRow> rows;
  const std::vector<std::pair<std::string, std::function<Verdict()>>> criteria{
      {"A1", a1_gradients},
      {"A2", a2_warp},
      {"A3", a3_losses},
      {"A4", a4_edges},
      {"A5", [&] { return a5_overfit(data, ckpt, rows); }},
      {"A6", [&] { return a6_ablation(data); }},
      {"A7", a7_schedule},
      {"A8", [&] { return a8_persistence(ckpt, rows, dir); }},
  };
  bool all = true;
  for (const auto& [id, fn] : criteria) {
    Verdict v;
    try {
      v = fn();
    } catch (const std::exception& e) {
      v.pass = false;
      v.failures.push_back(std::string("exception: ") + e.what());
    }
    for (const auto& f : v.failures) std::cerr << id << " failure: " << f << '\n';
    std::cout << id << (v.pass ? " PASS " : " FAIL ") << v.detail << std::endl;
    all = all && v.pass;
  }
  fs::remove_all(dir);
  return all ? 0 : 1;
}

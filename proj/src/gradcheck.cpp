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
#include "bialign/gradcheck.hpp"

#include <cmath>
#include <functional>
#include <stdexcept>
#include <utility>

#include "bialign/edges.hpp"
#include "bialign/flow_align.hpp"
#include "bialign/losses.hpp"
#include "bialign/model.hpp"
#include "bialign/nn.hpp"
#include "bialign/ops.hpp"
#include "bialign/rng.hpp"

namespace bialign {

namespace {

// Central-difference step. Every check keeps its inputs at least ~1e-2 away
// from kinks (ReLU at 0, integer warp positions, selection thresholds), far
// beyond this step.
constexpr double kEpsilon = 1e-5;

using Fn = std::function<TensorD(const TensorD&)>;

struct Check {
  std::string name;
  std::function<double(std::uint64_t)> run;
};

TensorD uniform(const Shape& s, std::uint64_t seed, double lo, double hi) {
  Rng rng(seed);
  std::vector<double> v(static_cast<std::size_t>(s.numel()));
  for (auto& x : v) x = lo + (hi - lo) * rng.uniform();
  return TensorD::from_data(s, std::move(v));
}

// Values with |x| in [0.05, 1.05) and random sign.
TensorD away_from_zero(const Shape& s, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<double> v(static_cast<std::size_t>(s.numel()));
  for (auto& x : v) {
    const double m = 0.05 + rng.uniform();
    x = rng.uniform() < 0.5 ? -m : m;
  }
  return TensorD::from_data(s, std::move(v));
}

// Scalar objective: a fixed random projection of y.
TensorD project(const TensorD& y, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<double> w(static_cast<std::size_t>(y.numel()));
  for (auto& x : w) x = rng.normal();
  return weighted_sum(y, std::span<const double>(w));
}

LabelMap random_labels(std::int64_t n, std::int64_t h, std::int64_t w, int classes,
                       std::uint64_t seed, double ignore_rate = 0.1) {
  Rng rng(seed);
  LabelMap m = LabelMap::filled(n, h, w, 0);
  for (auto& v : m.values) {
    v = rng.uniform() < ignore_rate ? kIgnoreIndex : static_cast<std::int32_t>(rng.below(classes));
  }
  return m;
}

// Flow whose sample points p + flow(p) stay strictly inside the image and
// at least 0.2 away from integer coordinates.
TensorD interior_flow(std::int64_t n, std::int64_t h, std::int64_t w, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<double> v(static_cast<std::size_t>(n * 2 * h * w));
  for (std::int64_t b = 0; b < n; ++b) {
    for (int c = 0; c < 2; ++c) {
      const std::int64_t len = c == 0 ? w : h;
      for (std::int64_t y = 0; y < h; ++y) {
        for (std::int64_t x = 0; x < w; ++x) {
          const std::int64_t here = c == 0 ? x : y;
          const double target = static_cast<double>(rng.range(0, len - 2)) + 0.2 + 0.6 * rng.uniform();
          v[((b * 2 + c) * h + y) * w + x] = target - static_cast<double>(here);
        }
      }
    }
  }
  return TensorD::from_data({n, 2, h, w}, std::move(v));
}

double check(const Fn& f, const TensorD& x) { return finite_diff_check(f, x, kEpsilon); }

std::vector<Check> conv_checks() {
  std::vector<Check> c;
  c.push_back({"conv2d.input", [](std::uint64_t s) {
                 const auto w = TensorD::randn({4, 3, 3, 3}, s + 1, 0.5);
                 const auto b = TensorD::randn({1, 4, 1, 1}, s + 2);
                 return check([&](const TensorD& x) { return project(conv2d<double>(x, w, b, 1, 1), s); },
                              TensorD::randn({2, 3, 8, 8}, s + 3));
               }});
  c.push_back({"conv2d.weight", [](std::uint64_t s) {
                 const auto x = TensorD::randn({2, 3, 8, 8}, s + 3);
                 return check([&](const TensorD& w) {
                   return project(conv2d<double>(x, w, std::nullopt, 1, 1), s);
                 }, TensorD::randn({4, 3, 3, 3}, s + 1, 0.5));
               }});
  c.push_back({"conv2d.bias", [](std::uint64_t s) {
                 const auto x = TensorD::randn({2, 3, 8, 8}, s + 3);
                 const auto w = TensorD::randn({4, 3, 3, 3}, s + 1, 0.5);
                 return check([&](const TensorD& b) { return project(conv2d<double>(x, w, b, 1, 1), s); },
                              TensorD::randn({1, 4, 1, 1}, s + 2));
               }});
  c.push_back({"conv2d.stride2", [](std::uint64_t s) {
                 const auto w = TensorD::randn({4, 4, 3, 3}, s + 1, 0.5);
                 return check([&](const TensorD& x) {
                   return project(conv2d<double>(x, w, std::nullopt, 2, 1), s);
                 }, TensorD::randn({2, 4, 8, 8}, s + 3));
               }});
  c.push_back({"conv2d.pointwise", [](std::uint64_t s) {
                 const auto w = TensorD::randn({3, 4, 1, 1}, s + 1, 0.5);
                 return check([&](const TensorD& x) {
                   return project(conv2d<double>(x, w, std::nullopt, 1, 0), s);
                 }, TensorD::randn({2, 4, 8, 8}, s + 3));
               }});
  return c;
}

std::vector<Check> layer_checks() {
  std::vector<Check> c;
  auto bn = [](std::uint64_t s, int which, Mode mode) {
    auto x = TensorD::randn({2, 4, 8, 8}, s + 1, 2.0);
    auto gamma = uniform({1, 4, 1, 1}, s + 2, 0.5, 1.5);
    auto beta = TensorD::randn({1, 4, 1, 1}, s + 3);
    auto rm = TensorD::randn({1, 4, 1, 1}, s + 4, 0.1);
    auto rv = uniform({1, 4, 1, 1}, s + 5, 0.5, 2.0);
    auto f = [&, which, mode](const TensorD& p) {
      TensorD m = rm.detach(), v = rv.detach();
      const TensorD& xi = which == 0 ? p : x;
      const TensorD& gi = which == 1 ? p : gamma;
      const TensorD& bi = which == 2 ? p : beta;
      return project(batchnorm2d<double>(xi, gi, bi, m, v, mode), s);
    };
    return check(f, which == 0 ? x : which == 1 ? gamma : beta);
  };
  c.push_back({"batchnorm.train.input", [bn](std::uint64_t s) { return bn(s, 0, Mode::kTrain); }});
  c.push_back({"batchnorm.train.gamma", [bn](std::uint64_t s) { return bn(s, 1, Mode::kTrain); }});
  c.push_back({"batchnorm.train.beta", [bn](std::uint64_t s) { return bn(s, 2, Mode::kTrain); }});
  c.push_back({"batchnorm.eval.input", [bn](std::uint64_t s) { return bn(s, 0, Mode::kEval); }});
  c.push_back({"relu", [](std::uint64_t s) {
                 return check([s](const TensorD& x) { return project(relu(x), s); },
                              away_from_zero({2, 4, 8, 8}, s + 1));
               }});
  c.push_back({"sigmoid", [](std::uint64_t s) {
                 return check([s](const TensorD& x) { return project(sigmoid(x), s); },
                              TensorD::randn({2, 4, 8, 8}, s + 1, 2.0));
               }});
  c.push_back({"bilinear_resize.up", [](std::uint64_t s) {
                 return check([s](const TensorD& x) { return project(bilinear_resize(x, 7, 8), s); },
                              TensorD::randn({2, 4, 3, 4}, s + 1));
               }});
  c.push_back({"bilinear_resize.down", [](std::uint64_t s) {
                 return check([s](const TensorD& x) { return project(bilinear_resize(x, 5, 3), s); },
                              TensorD::randn({2, 4, 8, 8}, s + 1));
               }});
  c.push_back({"adaptive_avg_pool", [](std::uint64_t s) {
                 return check([s](const TensorD& x) { return project(adaptive_avg_pool(x, 3), s); },
                              TensorD::randn({2, 4, 8, 8}, s + 1));
               }});
  c.push_back({"log_softmax", [](std::uint64_t s) {
                 return check([s](const TensorD& x) { return project(log_softmax_channel(x), s); },
                              TensorD::randn({2, 4, 8, 8}, s + 1, 2.0));
               }});
  c.push_back({"concat_slice", [](std::uint64_t s) {
                 const auto other = TensorD::randn({2, 2, 8, 8}, s + 2);
                 return check([&](const TensorD& x) {
                   return project(slice_channels(concat_channels(other, x), 1, 4), s);
                 }, TensorD::randn({2, 4, 8, 8}, s + 1));
               }});
  c.push_back({"elementwise", [](std::uint64_t s) {
                 const auto b = TensorD::randn({1, 4, 8, 8}, s + 2);
                 return check([&](const TensorD& x) {
                   return project(sub(mul_elem(add(x, b), x), scale(x, 0.5)), s);
                 }, TensorD::randn({2, 4, 8, 8}, s + 1));
               }});
  return c;
}

std::vector<Check> align_checks() {
  std::vector<Check> c;
  // Source (2,4,4,4) is upsampled to the target's 8x8 inside the module.
  auto flow_conv = [](std::uint64_t s) {
    return FlowConv<double>{TensorD::randn({2, 8, 3, 3}, s + 11, 0.3),
                            TensorD::randn({1, 2, 1, 1}, s + 12, 0.3)};
  };
  auto gate_conv = [](std::uint64_t s) {
    return GateConv<double>{TensorD::randn({1, 4, 3, 3}, s + 13, 0.3),
                            TensorD::randn({1, 1, 1, 1}, s + 14, 0.3)};
  };
  c.push_back({"make_flow_field.source", [flow_conv](std::uint64_t s) {
                 const auto ft = TensorD::randn({2, 4, 8, 8}, s + 2);
                 const auto conv = flow_conv(s);
                 return check([&](const TensorD& fs) {
                   return project(make_flow_field(fs, ft, conv).tensor(), s);
                 }, TensorD::randn({2, 4, 4, 4}, s + 1));
               }});
  c.push_back({"make_flow_field.target", [flow_conv](std::uint64_t s) {
                 const auto fs = TensorD::randn({2, 4, 4, 4}, s + 1);
                 const auto conv = flow_conv(s);
                 return check([&](const TensorD& ft) {
                   return project(make_flow_field(fs, ft, conv).tensor(), s);
                 }, TensorD::randn({2, 4, 8, 8}, s + 2));
               }});
  c.push_back({"make_flow_field.weight", [flow_conv](std::uint64_t s) {
                 const auto fs = TensorD::randn({2, 4, 4, 4}, s + 1);
                 const auto ft = TensorD::randn({2, 4, 8, 8}, s + 2);
                 const auto conv = flow_conv(s);
                 return check([&](const TensorD& w) {
                   return project(make_flow_field(fs, ft, FlowConv<double>{w, conv.bias}).tensor(), s);
                 }, conv.weight);
               }});
  c.push_back({"apply_gate.flow", [gate_conv](std::uint64_t s) {
                 const auto ft = TensorD::randn({2, 4, 8, 8}, s + 2);
                 const auto conv = gate_conv(s);
                 return check([&](const TensorD& g) {
                   return project(apply_gate(BasicFlowField<double>(g), ft, conv).first.tensor(), s);
                 }, TensorD::randn({2, 2, 8, 8}, s + 3));
               }});
  c.push_back({"apply_gate.target", [gate_conv](std::uint64_t s) {
                 const auto g = TensorD::randn({2, 2, 8, 8}, s + 3);
                 const auto conv = gate_conv(s);
                 return check([&](const TensorD& ft) {
                   return project(apply_gate(BasicFlowField<double>(g), ft, conv).first.tensor(), s);
                 }, TensorD::randn({2, 4, 8, 8}, s + 2));
               }});
  c.push_back({"apply_gate.weight", [gate_conv](std::uint64_t s) {
                 const auto g = TensorD::randn({2, 2, 8, 8}, s + 3);
                 const auto ft = TensorD::randn({2, 4, 8, 8}, s + 2);
                 const auto conv = gate_conv(s);
                 return check([&](const TensorD& w) {
                   return project(
                       apply_gate(BasicFlowField<double>(g), ft, GateConv<double>{w, conv.bias}).first.tensor(), s);
                 }, conv.weight);
               }});
  c.push_back({"warp_bilinear.feature", [](std::uint64_t s) {
                 const auto flow = BasicFlowField<double>(interior_flow(2, 8, 8, s + 4));
                 return check([&](const TensorD& f) { return project(warp_bilinear(f, flow), s); },
                              TensorD::randn({2, 4, 8, 8}, s + 1));
               }});
  c.push_back({"warp_bilinear.flow", [](std::uint64_t s) {
                 const auto f = TensorD::randn({2, 4, 8, 8}, s + 1);
                 return check([&](const TensorD& g) {
                   return project(warp_bilinear(f, BasicFlowField<double>(g)), s);
                 }, interior_flow(2, 8, 8, s + 4));
               }});
  for (WarpMode mode : {WarpMode::kWarpTarget, WarpMode::kWarpSource}) {
    const std::string suffix = mode == WarpMode::kWarpTarget ? "" : ".warp_source";
    c.push_back({"gfam.source" + suffix, [=](std::uint64_t s) {
                   const auto ft = TensorD::randn({2, 4, 8, 8}, s + 2);
                   const AlignParams<double> p{flow_conv(s), gate_conv(s)};
                   return check([&](const TensorD& fs) { return project(gfam(fs, ft, p, mode), s); },
                                TensorD::randn({2, 4, 4, 4}, s + 1));
                 }});
    c.push_back({"fam.target" + suffix, [=](std::uint64_t s) {
                   const auto fs = TensorD::randn({2, 4, 4, 4}, s + 1);
                   const AlignParams<double> p{flow_conv(s), std::nullopt};
                   return check([&](const TensorD& ft) { return project(fam(fs, ft, p, mode), s); },
                                TensorD::randn({2, 4, 8, 8}, s + 2));
                 }});
  }
  return c;
}

std::vector<Check> loss_checks() {
  std::vector<Check> c;
  const std::int64_t n = 2, h = 8, w = 8;
  const int classes = 4;
  c.push_back({"cross_entropy", [=](std::uint64_t s) {
                 const auto g = random_labels(n, h, w, classes, s + 5);
                 return check([&](const TensorD& x) { return cross_entropy_pixelwise(x, g).mean; },
                              TensorD::randn({n, classes, h, w}, s + 1, 2.0));
               }});
  c.push_back({"ohem_ce", [=](std::uint64_t s) {
                 const auto g = random_labels(n, h, w, classes, s + 5);
                 LossConfig cfg;
                 return check([&](const TensorD& x) { return ohem_ce(x, g, cfg).value; },
                              TensorD::randn({n, classes, h, w}, s + 1, 3.0));
               }});
  c.push_back({"ohem_ce.min_kept", [=](std::uint64_t s) {
                 const auto g = random_labels(n, h, w, classes, s + 5);
                 LossConfig cfg;
                 cfg.ohem_prob_threshold = 0.05;  // few qualify, the top-k fallback decides
                 cfg.ohem_min_kept_fraction = 0.25;
                 return check([&](const TensorD& x) { return ohem_ce(x, g, cfg).value; },
                              TensorD::randn({n, classes, h, w}, s + 1, 3.0));
               }});
  // Indicator values in [0.05, 0.75] U [0.85, 0.95]: clear of t_b = 0.8.
  auto indicator = [=](std::uint64_t s) {
    Rng rng(s);
    std::vector<double> v(static_cast<std::size_t>(n * h * w));
    for (auto& x : v) x = rng.uniform() < 0.5 ? 0.05 + 0.7 * rng.uniform() : 0.85 + 0.1 * rng.uniform();
    return TensorD::from_data({n, 1, h, w}, std::move(v));
  };
  c.push_back({"hard_pixel_loss.logits", [=](std::uint64_t s) {
                 const auto g = random_labels(n, h, w, classes, s + 5);
                 const auto d = indicator(s + 6);
                 LossConfig cfg;
                 return check([&](const TensorD& x) { return hard_pixel_loss(x, g, d, cfg).value; },
                              TensorD::randn({n, classes, h, w}, s + 1, 3.0));
               }});
  c.push_back({"hard_pixel_loss.indicator", [=](std::uint64_t s) {
                 const auto g = random_labels(n, h, w, classes, s + 5);
                 const auto x = TensorD::randn({n, classes, h, w}, s + 1, 3.0);
                 LossConfig cfg;
                 return check([&](const TensorD& d) { return hard_pixel_loss(x, g, d, cfg).value; },
                              indicator(s + 6));
               }});
  c.push_back({"bce", [=](std::uint64_t s) {
                 const auto b = extract_edge_map(random_labels(n, h, w, classes, s + 5, 0.0));
                 return check([&](const TensorD& d) { return bce(d, b); }, uniform({n, 1, h, w}, s + 6, 0.05, 0.95));
               }});
  c.push_back({"total_loss.logits", [=](std::uint64_t s) {
                 const auto g = random_labels(n, h, w, classes, s + 5);
                 const auto b = extract_edge_map(g);
                 const auto d = indicator(s + 6);
                 LossConfig cfg;
                 return check([&](const TensorD& x) { return total_loss(x, d, b, g, cfg).total; },
                              TensorD::randn({n, classes, h, w}, s + 1, 3.0));
               }});
  c.push_back({"total_loss.indicator", [=](std::uint64_t s) {
                 const auto g = random_labels(n, h, w, classes, s + 5);
                 const auto b = extract_edge_map(g);
                 const auto x = TensorD::randn({n, classes, h, w}, s + 1, 3.0);
                 LossConfig cfg;
                 return check([&](const TensorD& d) { return total_loss(x, d, b, g, cfg).total; },
                              indicator(s + 6));
               }});
  return c;
}

// Narrow network on a (2,3,64,64) batch. At 32x32 the context feature is a
// single pixel, and warping a spatially constant map has zero derivative
// with respect to the flow, so 64x64 is the smallest informative input.
// Checked with respect to one tensor per module.
std::vector<Check> model_checks() {
  ModelConfig cfg;
  cfg.num_classes = 3;
  cfg.spatial_widths = {4, 4, 8};
  cfg.context_stem_width = 4;
  cfg.context_stage_widths = {4, 4, 8, 8};
  cfg.ppm_bins = {1, 2};
  std::vector<Check> c;
  for (const std::string param : {"spatial.l1.conv.weight", "context.stage2.block0.conv1.conv.weight",
                                  "context.ppm.branch0.weight", "align.cp_to_sp.flow.weight",
                                  "align.sp_to_cp.gate.weight", "head.fuse.bn.gamma",
                                  "indicator.weight"}) {
    c.push_back({"model." + param, [cfg, param](std::uint64_t s) {
                   auto state = init_parameters(cfg, s).cast<double>();
                   // Flows of 0.5 +- small put every sample point near a
                   // pixel midpoint, away from the integer kinks of the warp.
                   for (auto& [name, t] : state.params) {
                     if (!name.starts_with("align.")) continue;
                     if (name.ends_with("flow.bias")) {
                       t = TensorD::full(t.shape(), 0.5);
                     } else {
                       const double stddev = name.ends_with("flow.weight") ? 0.01 : 0.3;
                       t = TensorD::randn(t.shape(), derive_seed(s, name), stddev);
                     }
                   }
                   const auto x = TensorD::randn({2, 3, 64, 64}, s + 1);
                   const auto g = random_labels(2, 64, 64, cfg.num_classes, s + 2);
                   const auto b = extract_edge_map(g);
                   // Keep-all selection: pixel mining swaps pixels of nearly
                   // equal loss under tiny perturbations, a discontinuity the
                   // loss checks above already cover on small inputs.
                   LossConfig loss_cfg;
                   loss_cfg.t_b = 1e-6;
                   loss_cfg.hard_keep_fraction = 1.0;
                   loss_cfg.ohem_prob_threshold = 1.0;
                   return check([&](const TensorD& p) {
                     state.params[param] = p;
                     const auto out = bialignnet_forward(x, state, cfg, Mode::kTrain);
                     return total_loss(out.s_logits, out.d, b, g, loss_cfg).total;
                   }, state.params.at(param).detach());
                 }});
  }
  return c;
}

const std::vector<Check>& all_checks() {
  static const std::vector<Check> kChecks = [] {
    std::vector<Check> all;
    for (auto group : {conv_checks(), layer_checks(), align_checks(), loss_checks(), model_checks()}) {
      for (auto& c : group) all.push_back(std::move(c));
    }
    return all;
  }();
  return kChecks;
}

bool matches(std::string_view name, std::string_view filter) {
  if (filter.empty() || name == filter) return true;
  return name.size() > filter.size() && name.starts_with(filter) && name[filter.size()] == '.';
}

}  // namespace

std::vector<std::string> gradcheck_names() {
  std::vector<std::string> out;
  for (const auto& c : all_checks()) out.push_back(c.name);
  return out;
}

std::vector<GradcheckResult> run_gradchecks(std::string_view filter, std::uint64_t seed) {
  std::vector<GradcheckResult> out;
  for (const auto& c : all_checks()) {
    if (!matches(c.name, filter)) continue;
    out.push_back({c.name, c.run(derive_seed(seed, c.name))});
  }
  if (out.empty()) throw std::invalid_argument("no gradient check named '" + std::string(filter) + "'");
  return out;
}

}  // namespace bialign

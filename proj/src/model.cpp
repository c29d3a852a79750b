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
#include "bialign/model.hpp"

#include <cmath>
#include <stdexcept>

#include "bialign/ops.hpp"
#include "bialign/rng.hpp"

namespace bialign {

namespace {

constexpr std::pair<Alignment, std::string_view> kAlignmentNames[] = {
    {Alignment::kNone, "none"},
    {Alignment::kGfamCpToSp, "gfam_cp_to_sp"},
    {Alignment::kGfamSpToCp, "gfam_sp_to_cp"},
    {Alignment::kFamBidirectional, "fam_bidirectional"},
    {Alignment::kGfamBidirectional, "gfam_bidirectional"},
};

std::string block_name(int stage, int block) {
  return "context.stage" + std::to_string(stage + 1) + ".block" + std::to_string(block);
}

std::string align_name(bool cp_to_sp) {
  return cp_to_sp ? "align.cp_to_sp" : "align.sp_to_cp";
}

class LayoutBuilder {
 public:
  void conv(const std::string& name, std::int64_t out, std::int64_t in, std::int64_t k,
            bool bias, InitRule init = InitRule::kHeNormal) {
    params.push_back({name + ".weight", {out, in, k, k}, init});
    if (bias) params.push_back({name + ".bias", {1, out, 1, 1}, InitRule::kZeros});
  }
  void bn(const std::string& name, std::int64_t c) {
    params.push_back({name + ".gamma", {1, c, 1, 1}, InitRule::kOnes});
    params.push_back({name + ".beta", {1, c, 1, 1}, InitRule::kZeros});
    buffers.push_back({name + ".running_mean", {1, c, 1, 1}, InitRule::kZeros});
    buffers.push_back({name + ".running_var", {1, c, 1, 1}, InitRule::kOnes});
  }
  void conv_bn(const std::string& name, std::int64_t out, std::int64_t in, std::int64_t k) {
    conv(name + ".conv", out, in, k, false);
    bn(name + ".bn", out);
  }

  std::vector<ParamSpec> params;
  std::vector<ParamSpec> buffers;
};

LayoutBuilder build_layout(const ModelConfig& cfg) {
  cfg.validate();
  LayoutBuilder b;
  std::int64_t in = 3;
  for (int i = 0; i < 3; ++i) {
    b.conv_bn("spatial.l" + std::to_string(i + 1), cfg.spatial_widths[i], in, 3);
    in = cfg.spatial_widths[i];
  }
  b.conv_bn("context.stem", cfg.context_stem_width, 3, 3);
  in = cfg.context_stem_width;
  for (int s = 0; s < 4; ++s) {
    const std::int64_t width = cfg.context_stage_widths[s];
    for (int k = 0; k < cfg.blocks_per_stage; ++k) {
      const std::string name = block_name(s, k);
      b.conv_bn(name + ".conv1", width, in, 3);
      b.conv_bn(name + ".conv2", width, width, 3);
      if (k == 0) b.conv_bn(name + ".shortcut", width, in, 1);  // stride 2 entry
      in = width;
    }
  }
  const std::int64_t c_cp = cfg.context_channels();
  const std::int64_t branch = cfg.ppm_branch_channels();
  for (std::size_t i = 0; i < cfg.ppm_bins.size(); ++i) {
    b.conv("context.ppm.branch" + std::to_string(i), branch, c_cp, 1, true);
  }
  b.conv_bn("context.ppm.fuse", c_cp,
            c_cp + branch * static_cast<std::int64_t>(cfg.ppm_bins.size()), 3);
  const std::int64_t c_sp = cfg.spatial_channels();
  b.conv_bn("context.proj", c_sp, c_cp, 1);
  for (bool cp_to_sp : {true, false}) {
    if (cp_to_sp ? !cfg.aligns_cp_to_sp() : !cfg.aligns_sp_to_cp()) continue;
    const std::string name = align_name(cp_to_sp);
    b.conv(name + ".flow", 2, 2 * c_sp, 3, true, InitRule::kZeros);
    if (cfg.gated()) b.conv(name + ".gate", 1, c_sp, 3, true, InitRule::kZeros);
  }
  b.conv_bn("head.fuse", c_sp, 2 * c_sp, 3);
  b.conv("head.classifier", cfg.num_classes, c_sp, 1, true);
  b.conv("indicator", 1, c_sp, 1, true);
  return b;
}

// Read access to parameters by name during a forward pass.
template <typename T>
class Scope {
 public:
  Scope(BasicModelState<T>& state, Mode mode) : state_(state), mode_(mode) {}

  const BasicTensor<T>& param(const std::string& name) const {
    auto it = state_.params.find(name);
    if (it == state_.params.end()) throw std::out_of_range("missing parameter " + name);
    return it->second;
  }
  BasicTensor<T>& buffer(const std::string& name) {
    auto it = state_.buffers.find(name);
    if (it == state_.buffers.end()) throw std::out_of_range("missing buffer " + name);
    return it->second;
  }

  BasicTensor<T> conv(const BasicTensor<T>& x, const std::string& name, int stride, int padding,
                      bool bias) const {
    std::optional<BasicTensor<T>> b;
    if (bias) b = param(name + ".bias");
    return conv2d(x, param(name + ".weight"), b, stride, padding);
  }

  BasicTensor<T> conv_bn(const BasicTensor<T>& x, const std::string& name, int stride,
                         bool with_relu) {
    const std::int64_t k = param(name + ".conv.weight").shape().h;
    BasicTensor<T> y = conv(x, name + ".conv", stride, static_cast<int>(k / 2), false);
    y = batchnorm2d(y, param(name + ".bn.gamma"), param(name + ".bn.beta"),
                    buffer(name + ".bn.running_mean"), buffer(name + ".bn.running_var"), mode_);
    return with_relu ? relu(y) : y;
  }

  AlignParams<T> align_params(const std::string& name, bool gated) const {
    AlignParams<T> p{{param(name + ".flow.weight"), param(name + ".flow.bias")}, std::nullopt};
    if (gated) p.gate = GateConv<T>{param(name + ".gate.weight"), param(name + ".gate.bias")};
    return p;
  }

 private:
  BasicModelState<T>& state_;
  Mode mode_;
};

void check_divisible(const Shape& s, std::int64_t k, const char* what) {
  if (s.h % k != 0 || s.w % k != 0 || s.h == 0 || s.w == 0) {
    throw std::invalid_argument(std::string(what) + ": input " + s.str() +
                                " must have h, w divisible by " + std::to_string(k));
  }
  if (s.c != 3) throw std::invalid_argument(std::string(what) + ": expects 3 input channels");
}

}  // namespace

std::string_view to_string(Alignment a) {
  for (const auto& [v, name] : kAlignmentNames) {
    if (v == a) return name;
  }
  return "unknown";
}

Alignment alignment_from_string(std::string_view s) {
  for (const auto& [v, name] : kAlignmentNames) {
    if (name == s) return v;
  }
  throw std::invalid_argument("unknown alignment '" + std::string(s) + "'");
}

std::string_view to_string(WarpMode m) {
  return m == WarpMode::kWarpTarget ? "warp_target" : "warp_source";
}

WarpMode warp_mode_from_string(std::string_view s) {
  if (s == "warp_target") return WarpMode::kWarpTarget;
  if (s == "warp_source") return WarpMode::kWarpSource;
  throw std::invalid_argument("unknown warp mode '" + std::string(s) + "'");
}

void ModelConfig::validate() const {
  if (num_classes < 2) throw std::invalid_argument("num_classes must be >= 2");
  for (int w : spatial_widths) {
    if (w < 1) throw std::invalid_argument("spatial widths must be positive");
  }
  for (int w : context_stage_widths) {
    if (w < 1) throw std::invalid_argument("context widths must be positive");
  }
  if (context_stem_width < 1) throw std::invalid_argument("context stem width must be positive");
  if (blocks_per_stage < 1) throw std::invalid_argument("blocks_per_stage must be >= 1");
  if (ppm_bins.empty()) throw std::invalid_argument("ppm_bins must not be empty");
  for (int b : ppm_bins) {
    if (b < 1) throw std::invalid_argument("ppm bins must be positive");
  }
  if (ppm_branch_channels() < 1) {
    throw std::invalid_argument("context width too small for the number of pyramid levels");
  }
}

bool ModelConfig::aligns_cp_to_sp() const {
  return alignment == Alignment::kGfamCpToSp || alignment == Alignment::kFamBidirectional ||
         alignment == Alignment::kGfamBidirectional;
}

bool ModelConfig::aligns_sp_to_cp() const {
  return alignment == Alignment::kGfamSpToCp || alignment == Alignment::kFamBidirectional ||
         alignment == Alignment::kGfamBidirectional;
}

bool ModelConfig::gated() const {
  return alignment != Alignment::kNone && alignment != Alignment::kFamBidirectional;
}

int ModelConfig::ppm_branch_channels() const {
  return context_channels() / static_cast<int>(ppm_bins.size());
}

std::vector<ParamSpec> parameter_layout(const ModelConfig& cfg) { return build_layout(cfg).params; }

std::vector<ParamSpec> buffer_layout(const ModelConfig& cfg) { return build_layout(cfg).buffers; }

std::int64_t parameter_count(const ModelConfig& cfg) {
  std::int64_t total = 0;
  for (const auto& p : parameter_layout(cfg)) total += p.shape.numel();
  return total;
}

bool applies_weight_decay(std::string_view name) { return name.ends_with(".weight"); }

ModelState init_parameters(const ModelConfig& cfg, std::uint64_t seed) {
  const LayoutBuilder layout = build_layout(cfg);
  ModelState state;
  auto make = [seed](const ParamSpec& p) {
    switch (p.init) {
      case InitRule::kOnes: return Tensor::full(p.shape, 1.0f);
      case InitRule::kZeros: return Tensor::zeros(p.shape);
      case InitRule::kHeNormal: break;
    }
    const double fan_in = static_cast<double>(p.shape.c * p.shape.h * p.shape.w);
    return Tensor::randn(p.shape, derive_seed(seed, p.name), std::sqrt(2.0 / fan_in));
  };
  for (const auto& p : layout.params) {
    state.params.emplace(p.name, make(p).set_requires_grad(true));
  }
  for (const auto& p : layout.buffers) state.buffers.emplace(p.name, make(p));
  return state;
}

template <typename T>
BasicTensor<T> spatial_path_forward(const BasicTensor<T>& x, BasicModelState<T>& state,
                                    const ModelConfig& cfg, Mode mode) {
  check_divisible(x.shape(), 8, "spatial path");
  (void)cfg;
  Scope<T> scope(state, mode);
  BasicTensor<T> y = x;
  for (int i = 1; i <= 3; ++i) y = scope.conv_bn(y, "spatial.l" + std::to_string(i), 2, true);
  return y;
}

template <typename T>
ContextOutput<T> context_path_forward(const BasicTensor<T>& x, BasicModelState<T>& state,
                                      const ModelConfig& cfg, Mode mode) {
  check_divisible(x.shape(), 32, "context path");
  Scope<T> scope(state, mode);
  BasicTensor<T> y = scope.conv_bn(x, "context.stem", 2, true);
  for (int s = 0; s < 4; ++s) {
    for (int k = 0; k < cfg.blocks_per_stage; ++k) {
      const std::string name = block_name(s, k);
      const int stride = k == 0 ? 2 : 1;
      BasicTensor<T> branch = scope.conv_bn(y, name + ".conv1", stride, true);
      branch = scope.conv_bn(branch, name + ".conv2", 1, false);
      BasicTensor<T> shortcut = k == 0 ? scope.conv_bn(y, name + ".shortcut", 2, false) : y;
      y = relu(add(branch, shortcut));
    }
  }
  ContextOutput<T> out;
  out.backbone = y;
  const std::int64_t h = y.shape().h, w = y.shape().w;
  BasicTensor<T> pyramid = y;
  for (std::size_t i = 0; i < cfg.ppm_bins.size(); ++i) {
    BasicTensor<T> level = adaptive_avg_pool(y, cfg.ppm_bins[i]);
    level = scope.conv(level, "context.ppm.branch" + std::to_string(i), 1, 0, true);
    pyramid = concat_channels(pyramid, bilinear_resize(level, h, w, true));
  }
  out.output = scope.conv_bn(pyramid, "context.ppm.fuse", 1, true);
  return out;
}

template <typename T>
ModelOutput<T> bialignnet_forward(const BasicTensor<T>& x, BasicModelState<T>& state,
                                  const ModelConfig& cfg, Mode mode) {
  check_divisible(x.shape(), 32, "bialignnet");
  const std::int64_t h = x.shape().h, w = x.shape().w;
  Scope<T> scope(state, mode);

  const BasicTensor<T> f_sp = spatial_path_forward(x, state, cfg, mode);
  BasicTensor<T> f_cp = context_path_forward(x, state, cfg, mode).output;
  f_cp = scope.conv_bn(f_cp, "context.proj", 1, true);
  f_cp = bilinear_resize(f_cp, f_sp.shape().h, f_sp.shape().w, true);

  ModelOutput<T> out;
  BasicTensor<T> aligned_sp = f_sp;
  BasicTensor<T> aligned_cp = f_cp;
  if (cfg.aligns_cp_to_sp()) {
    out.cp_to_sp = align_traced(f_cp, f_sp, scope.align_params(align_name(true), cfg.gated()),
                                cfg.warp_mode);
    aligned_sp = out.cp_to_sp->output;
  }
  if (cfg.aligns_sp_to_cp()) {
    out.sp_to_cp = align_traced(f_sp, f_cp, scope.align_params(align_name(false), cfg.gated()),
                                cfg.warp_mode);
    aligned_cp = out.sp_to_cp->output;
  }

  BasicTensor<T> fused = scope.conv_bn(concat_channels(aligned_sp, aligned_cp), "head.fuse", 1, true);
  BasicTensor<T> logits = scope.conv(fused, "head.classifier", 1, 0, true);
  out.s_logits = bilinear_resize(logits, h, w, true);
  BasicTensor<T> d = sigmoid(scope.conv(f_sp, "indicator", 1, 0, true));
  out.d = bilinear_resize(d, h, w, true);
  return out;
}

std::int64_t FlopsReport::total() const {
  std::int64_t t = 0;
  for (const auto& [k, v] : by_module) t += v;
  return t;
}

FlopsReport count_flops(const ModelConfig& cfg, std::int64_t input_h, std::int64_t input_w) {
  cfg.validate();
  if (input_h % 32 != 0 || input_w % 32 != 0 || input_h <= 0 || input_w <= 0) {
    throw std::invalid_argument("count_flops: input size must be divisible by 32");
  }
  FlopsReport r;
  auto conv = [](std::int64_t k, std::int64_t cin, std::int64_t cout, std::int64_t h,
                 std::int64_t w) { return k * k * cin * cout * h * w; };
  auto conv_bn = [&conv](std::int64_t k, std::int64_t cin, std::int64_t cout, std::int64_t h,
                         std::int64_t w) { return conv(k, cin, cout, h, w) + cout * h * w; };

  std::int64_t h = input_h, w = input_w, in = 3;
  std::int64_t& sp = r.by_module["spatial_path"];
  for (int i = 0; i < 3; ++i) {
    h /= 2;
    w /= 2;
    sp += conv_bn(3, in, cfg.spatial_widths[i], h, w);
    in = cfg.spatial_widths[i];
  }
  const std::int64_t h8 = h, w8 = w;
  const std::int64_t c_sp = cfg.spatial_channels();

  std::int64_t& cp = r.by_module["context_path"];
  h = input_h / 2;
  w = input_w / 2;
  cp += conv_bn(3, 3, cfg.context_stem_width, h, w);
  in = cfg.context_stem_width;
  for (int s = 0; s < 4; ++s) {
    const std::int64_t width = cfg.context_stage_widths[s];
    for (int k = 0; k < cfg.blocks_per_stage; ++k) {
      if (k == 0) {
        h /= 2;
        w /= 2;
        cp += conv_bn(1, in, width, h, w);
      }
      cp += conv_bn(3, in, width, h, w) + conv_bn(3, width, width, h, w);
      in = width;
    }
  }

  const std::int64_t c_cp = cfg.context_channels();
  const std::int64_t branch = cfg.ppm_branch_channels();
  std::int64_t& ppm = r.by_module["ppm"];
  for (int bins : cfg.ppm_bins) {
    ppm += c_cp * h * w;                    // pooling
    ppm += conv(1, c_cp, branch, bins, bins);
    ppm += 3 * branch * h * w;              // upsample back
  }
  ppm += conv_bn(3, c_cp + branch * static_cast<std::int64_t>(cfg.ppm_bins.size()), c_cp, h, w);

  r.by_module["context_projection"] = conv_bn(1, c_cp, c_sp, h, w) + 3 * c_sp * h8 * w8;

  for (bool cp_to_sp : {true, false}) {
    if (cp_to_sp ? !cfg.aligns_cp_to_sp() : !cfg.aligns_sp_to_cp()) continue;
    std::int64_t m = conv(3, 2 * c_sp, 2, h8, w8);
    if (cfg.gated()) m += conv(3, c_sp, 1, h8, w8) + 2 * h8 * w8;
    m += 3 * c_sp * h8 * w8;  // warp
    r.by_module[align_name(cp_to_sp)] = m;
  }

  r.by_module["head"] = conv_bn(3, 2 * c_sp, c_sp, h8, w8) +
                        conv(1, c_sp, cfg.num_classes, h8, w8) +
                        3 * cfg.num_classes * input_h * input_w;
  r.by_module["indicator"] = conv(1, c_sp, 1, h8, w8) + 3 * input_h * input_w;
  return r;
}

#define BIALIGN_INSTANTIATE(T)                                                                  \
  template BasicTensor<T> spatial_path_forward(const BasicTensor<T>&, BasicModelState<T>&,      \
                                               const ModelConfig&, Mode);                       \
  template ContextOutput<T> context_path_forward(const BasicTensor<T>&, BasicModelState<T>&,    \
                                                 const ModelConfig&, Mode);                     \
  template ModelOutput<T> bialignnet_forward(const BasicTensor<T>&, BasicModelState<T>&,        \
                                             const ModelConfig&, Mode);

BIALIGN_INSTANTIATE(float)
BIALIGN_INSTANTIATE(double)
#undef BIALIGN_INSTANTIATE

}  // namespace bialign

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
#include "bialign/config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>
#include <utility>
#include <vector>

#include <fmt/format.h>
#include <fmt/ranges.h>

namespace bialign {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

template <typename T>
T parse_number(const std::string& v) {
  T out{};
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size()) {
    throw std::invalid_argument("not a number: '" + v + "'");
  }
  return out;
}

bool parse_bool(const std::string& v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw std::invalid_argument("not a boolean: '" + v + "'");
}

std::vector<int> parse_int_list(const std::string& v) {
  std::vector<int> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(parse_number<int>(trim(item)));
  if (out.empty()) throw std::invalid_argument("empty list");
  return out;
}

template <std::size_t N>
std::array<int, N> parse_int_array(const std::string& v) {
  const auto list = parse_int_list(v);
  if (list.size() != N) throw std::invalid_argument(fmt::format("expected {} integers", N));
  std::array<int, N> out{};
  std::copy(list.begin(), list.end(), out.begin());
  return out;
}

std::pair<std::int64_t, std::int64_t> parse_size(const std::string& v) {
  const auto x = v.find('x');
  if (x == std::string::npos) throw std::invalid_argument("expected HxW, got '" + v + "'");
  return {parse_number<std::int64_t>(v.substr(0, x)), parse_number<std::int64_t>(v.substr(x + 1))};
}

struct Field {
  std::string key;
  std::function<void(RunConfig&, const std::string&)> set;
  std::function<std::string(const RunConfig&)> get;
};

const std::vector<Field>& fields() {
  static const std::vector<Field> kFields = [] {
    std::vector<Field> f;
    auto add = [&f](std::string key, auto set, auto get) {
      f.push_back({std::move(key), set, get});
    };
    // model
    add("num_classes", [](RunConfig& c, const std::string& v) { c.model.num_classes = parse_number<int>(v); },
        [](const RunConfig& c) { return fmt::format("{}", c.model.num_classes); });
    add("spatial_widths", [](RunConfig& c, const std::string& v) { c.model.spatial_widths = parse_int_array<3>(v); },
        [](const RunConfig& c) { return fmt::format("{}", fmt::join(c.model.spatial_widths, ",")); });
    add("context_stem_width", [](RunConfig& c, const std::string& v) { c.model.context_stem_width = parse_number<int>(v); },
        [](const RunConfig& c) { return fmt::format("{}", c.model.context_stem_width); });
    add("context_stage_widths", [](RunConfig& c, const std::string& v) { c.model.context_stage_widths = parse_int_array<4>(v); },
        [](const RunConfig& c) { return fmt::format("{}", fmt::join(c.model.context_stage_widths, ",")); });
    add("blocks_per_stage", [](RunConfig& c, const std::string& v) { c.model.blocks_per_stage = parse_number<int>(v); },
        [](const RunConfig& c) { return fmt::format("{}", c.model.blocks_per_stage); });
    add("ppm_bins", [](RunConfig& c, const std::string& v) { c.model.ppm_bins = parse_int_list(v); },
        [](const RunConfig& c) { return fmt::format("{}", fmt::join(c.model.ppm_bins, ",")); });
    add("alignment", [](RunConfig& c, const std::string& v) { c.model.alignment = alignment_from_string(v); },
        [](const RunConfig& c) { return std::string(to_string(c.model.alignment)); });
    add("spatial_loss", [](RunConfig& c, const std::string& v) { c.model.spatial_loss_enabled = parse_bool(v); },
        [](const RunConfig& c) { return std::string(c.model.spatial_loss_enabled ? "true" : "false"); });
    add("warp_mode", [](RunConfig& c, const std::string& v) { c.model.warp_mode = warp_mode_from_string(v); },
        [](const RunConfig& c) { return std::string(to_string(c.model.warp_mode)); });
    // optimisation
    add("total_iters", [](RunConfig& c, const std::string& v) { c.train.total_iters = parse_number<std::int64_t>(v); },
        [](const RunConfig& c) { return fmt::format("{}", c.train.total_iters); });
    add("batch_size", [](RunConfig& c, const std::string& v) { c.train.batch_size = parse_number<std::int64_t>(v); },
        [](const RunConfig& c) { return fmt::format("{}", c.train.batch_size); });
    add("base_lr", [](RunConfig& c, const std::string& v) { c.train.base_lr = parse_number<double>(v); },
        [](const RunConfig& c) { return fmt::format("{}", c.train.base_lr); });
    add("momentum", [](RunConfig& c, const std::string& v) { c.train.momentum = parse_number<double>(v); },
        [](const RunConfig& c) { return fmt::format("{}", c.train.momentum); });
    add("weight_decay", [](RunConfig& c, const std::string& v) { c.train.weight_decay = parse_number<double>(v); },
        [](const RunConfig& c) { return fmt::format("{}", c.train.weight_decay); });
    add("poly_power", [](RunConfig& c, const std::string& v) { c.train.poly_power = parse_number<double>(v); },
        [](const RunConfig& c) { return fmt::format("{}", c.train.poly_power); });
    add("seed", [](RunConfig& c, const std::string& v) { c.train.seed = parse_number<std::uint64_t>(v); },
        [](const RunConfig& c) { return fmt::format("{}", c.train.seed); });
    add("eval_every", [](RunConfig& c, const std::string& v) { c.train.eval_every = parse_number<std::int64_t>(v); },
        [](const RunConfig& c) { return fmt::format("{}", c.train.eval_every); });
    // loss
    add("lambda", [](RunConfig& c, const std::string& v) { c.loss.lambda = parse_number<double>(v); },
        [](const RunConfig& c) { return fmt::format("{}", c.loss.lambda); });
    add("t_b", [](RunConfig& c, const std::string& v) { c.loss.t_b = parse_number<double>(v); },
        [](const RunConfig& c) { return fmt::format("{}", c.loss.t_b); });
    add("hard_keep_fraction", [](RunConfig& c, const std::string& v) { c.loss.hard_keep_fraction = parse_number<double>(v); },
        [](const RunConfig& c) { return fmt::format("{}", c.loss.hard_keep_fraction); });
    add("ohem_prob_threshold", [](RunConfig& c, const std::string& v) { c.loss.ohem_prob_threshold = parse_number<double>(v); },
        [](const RunConfig& c) { return fmt::format("{}", c.loss.ohem_prob_threshold); });
    add("ohem_min_kept_fraction", [](RunConfig& c, const std::string& v) { c.loss.ohem_min_kept_fraction = parse_number<double>(v); },
        [](const RunConfig& c) { return fmt::format("{}", c.loss.ohem_min_kept_fraction); });
    add("edge_thickness", [](RunConfig& c, const std::string& v) { c.edge_thickness = parse_number<int>(v); },
        [](const RunConfig& c) { return fmt::format("{}", c.edge_thickness); });
    // augmentation
    add("augment", [](RunConfig& c, const std::string& v) { c.augment = parse_bool(v); },
        [](const RunConfig& c) { return std::string(c.augment ? "true" : "false"); });
    add("scale_min", [](RunConfig& c, const std::string& v) { c.augment_cfg.scale_min = parse_number<double>(v); },
        [](const RunConfig& c) { return fmt::format("{}", c.augment_cfg.scale_min); });
    add("scale_max", [](RunConfig& c, const std::string& v) { c.augment_cfg.scale_max = parse_number<double>(v); },
        [](const RunConfig& c) { return fmt::format("{}", c.augment_cfg.scale_max); });
    add("crop", [](RunConfig& c, const std::string& v) {
          std::tie(c.augment_cfg.crop_h, c.augment_cfg.crop_w) = parse_size(v);
        },
        [](const RunConfig& c) { return fmt::format("{}x{}", c.augment_cfg.crop_h, c.augment_cfg.crop_w); });
    add("hflip_prob", [](RunConfig& c, const std::string& v) { c.augment_cfg.hflip_prob = parse_number<double>(v); },
        [](const RunConfig& c) { return fmt::format("{}", c.augment_cfg.hflip_prob); });
    return f;
  }();
  return kFields;
}

}  // namespace

void RunConfig::validate() const {
  model.validate();
  train.validate();
  loss.validate();
  augment_cfg.validate();
  if (edge_thickness < 1) throw std::invalid_argument("edge_thickness must be >= 1");
  if (augment_cfg.crop_h % 32 != 0 || augment_cfg.crop_w % 32 != 0) {
    throw std::invalid_argument("crop sides must be multiples of 32");
  }
}

RunConfig parse_config(const std::string& text) {
  RunConfig cfg;
  std::set<std::string> seen;
  std::istringstream in(text);
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const auto hash = raw.find('#');
    const std::string line = trim(std::string_view(raw).substr(0, hash));
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(fmt::format("line {}: expected 'key = value'", line_no));
    }
    const std::string key = trim(std::string_view(line).substr(0, eq));
    const std::string value = trim(std::string_view(line).substr(eq + 1));
    const auto& fs = fields();
    const auto it = std::find_if(fs.begin(), fs.end(), [&key](const Field& f) { return f.key == key; });
    if (it == fs.end()) throw ConfigError(fmt::format("line {}: unknown key '{}'", line_no, key));
    if (!seen.insert(key).second) {
      throw ConfigError(fmt::format("line {}: key '{}' given twice", line_no, key));
    }
    try {
      it->set(cfg, value);
    } catch (const std::exception& e) {
      throw ConfigError(fmt::format("line {}: {}: {}", line_no, key, e.what()));
    }
  }
  try {
    cfg.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return parse_config(ss.str());
  } catch (const ConfigError& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

std::string to_config_text(const RunConfig& cfg) {
  std::string out;
  for (const auto& f : fields()) out += f.key + " = " + f.get(cfg) + "\n";
  return out;
}

}  // namespace bialign

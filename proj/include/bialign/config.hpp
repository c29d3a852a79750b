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
#ifndef BIALIGN_CONFIG_HPP_
#define BIALIGN_CONFIG_HPP_

#include <filesystem>
#include <stdexcept>
#include <string>

#include "bialign/data.hpp"
#include "bialign/losses.hpp"
#include "bialign/model.hpp"
#include "bialign/optim.hpp"

namespace bialign {

/// Malformed line, unknown key or out-of-range value; the message names the
/// line.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Everything a training run depends on.
struct RunConfig {
  ModelConfig model;
  TrainConfig train;
  LossConfig loss;
  bool augment = true;
  AugmentConfig augment_cfg;
  int edge_thickness = 1;

  void validate() const;
};

/// Parses flat `key = value` lines. '#' starts a comment; blank lines are
/// skipped. Keys not listed in to_config_text() are an error, as are
/// repeated keys. Missing keys keep their defaults.
RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::filesystem::path& path);

/// Canonical text of every key, one per line, in a fixed order. Parsing the
/// result gives back an equal configuration.
std::string to_config_text(const RunConfig& cfg);

}  // namespace bialign

#endif  // BIALIGN_CONFIG_HPP_

// Copyright 2026 The Project Authors. All Rights Reserved.
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

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "tablenet/extract.hpp"
#include "tablenet/network.hpp"
#include "tablenet/preprocess.hpp"
#include "tablenet/serialize.hpp"
#include "tablenet/trainer.hpp"

namespace tablenet::cli {

/// Everything a pipeline command can be configured with. The file form is a
/// JSON object with the sections "network", "preprocess", "train" and
/// "extract" plus a top-level "seed".
struct PipelineConfig {
  std::uint64_t seed = 0;
  NetworkSpec network;
  bool pretrained = false;
  PreprocessConfig preprocess;
  TrainConfig train;
  ExtractConfig extract;

  /// Unknown keys and out-of-range values raise ConfigError.
  static PipelineConfig fromJson(const Json& j);
  Json toJson() const;
  void validate() const;
};

/// Applies `section.key=value` overrides; the value is parsed as JSON and
/// falls back to a plain string.
Json applyOverrides(Json base, const std::vector<std::string>& assignments);

/// Default configuration merged with the optional file and overrides.
PipelineConfig loadPipelineConfig(const std::filesystem::path& file, const std::vector<std::string>& overrides);

/// Dotted key names of one section ("train.learning_rate", ...); "" lists the
/// top-level scalars.
std::vector<std::string> configKeys(const std::string& section);

ExtractConfig extractConfigFromJson(const Json& j);
Json extractConfigToJson(const ExtractConfig& c);
PreprocessConfig preprocessConfigFromJson(const Json& j);
Json preprocessConfigToJson(const PreprocessConfig& c);

}  // namespace tablenet::cli

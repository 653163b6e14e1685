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

#include "pipeline_config.hpp"

#include <set>

#include "tablenet/errors.hpp"

namespace tablenet::cli {

namespace {

void rejectUnknown(const Json& j, const std::set<std::string>& allowed, const std::string& section) {
  if (!j.is_object()) throw ConfigError(section + " must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    if (!allowed.count(key)) {
      throw ConfigError("unknown config key: " + (section.empty() ? key : section + "." + key));
    }
  }
}

std::set<std::string> keysOf(const Json& j) {
  std::set<std::string> out;
  for (const auto& [key, value] : j.items()) out.insert(key);
  return out;
}

Json defaultsJson() { return PipelineConfig{}.toJson(); }

}  // namespace

ExtractConfig extractConfigFromJson(const Json& j) {
  rejectUnknown(j, keysOf(extractConfigToJson({})), "extract");
  ExtractConfig c;
  try {
    c.pixelThreshold = j.value("pixel_threshold", c.pixelThreshold);
    c.minRegionAreaFrac = j.value("min_region_area_frac", c.minRegionAreaFrac);
    c.columnOverlapMin = j.value("column_overlap_min", c.columnOverlapMin);
    c.radonPeakFrac = j.value("radon_peak_frac", c.radonPeakFrac);
    c.lineDarknessThreshold = j.value("line_darkness_threshold", c.lineDarknessThreshold);
    c.tableOverlapMin = j.value("table_overlap_min", c.tableOverlapMin);
    c.textLineOverlapMin = j.value("text_line_overlap_min", c.textLineOverlapMin);
    c.ruledGapFrac = j.value("ruled_gap_frac", c.ruledGapFrac);
  } catch (const Json::exception& e) {
    throw ConfigError(std::string("extract config: ") + e.what());
  }
  c.validate();
  return c;
}

Json extractConfigToJson(const ExtractConfig& c) {
  return {{"pixel_threshold", c.pixelThreshold},
          {"min_region_area_frac", c.minRegionAreaFrac},
          {"column_overlap_min", c.columnOverlapMin},
          {"radon_peak_frac", c.radonPeakFrac},
          {"line_darkness_threshold", c.lineDarknessThreshold},
          {"table_overlap_min", c.tableOverlapMin},
          {"text_line_overlap_min", c.textLineOverlapMin},
          {"ruled_gap_frac", c.ruledGapFrac}};
}

PreprocessConfig preprocessConfigFromJson(const Json& j) {
  rejectUnknown(j, {"drop_prob", "target_size", "highlight", "palette"}, "preprocess");
  PreprocessConfig c;
  try {
    c.dropProb = j.value("drop_prob", c.dropProb);
    c.targetSize = j.value("target_size", c.targetSize);
    c.highlight = j.value("highlight", c.highlight);
    if (j.contains("palette")) {
      const auto& p = j.at("palette");
      if (!p.is_object()) throw ConfigError("preprocess.palette must map data types to \"#RRGGBB\"");
      for (const auto& [name, hex] : p.items()) {
        const auto type = dataTypeFromString(name);
        if (!type) throw ConfigError("unknown config key: preprocess.palette." + name);
        c.palette.setColor(*type, parseHexColor(hex.get<std::string>()));
      }
    }
  } catch (const Json::exception& e) {
    throw ConfigError(std::string("preprocess config: ") + e.what());
  }
  if (!(c.dropProb >= 0.0 && c.dropProb < 1.0)) throw ConfigError("preprocess.drop_prob must lie in [0,1)");
  if (c.targetSize < 32) throw ConfigError("preprocess.target_size must be at least 32");
  return c;
}

Json preprocessConfigToJson(const PreprocessConfig& c) {
  Json palette = Json::object();
  for (auto t : kAllDataTypes) palette[std::string(dataTypeName(t))] = toHexColor(c.palette.color(t));
  return {{"drop_prob", c.dropProb}, {"target_size", c.targetSize}, {"highlight", c.highlight}, {"palette", palette}};
}

PipelineConfig PipelineConfig::fromJson(const Json& j) {
  rejectUnknown(j, {"seed", "network", "preprocess", "train", "extract"}, "");
  PipelineConfig c;
  try {
    c.seed = j.value("seed", c.seed);
  } catch (const Json::exception& e) {
    throw ConfigError(std::string("seed: ") + e.what());
  }
  if (j.contains("preprocess")) c.preprocess = preprocessConfigFromJson(j.at("preprocess"));
  // Either size key alone sets both.
  const bool sizeGiven = j.contains("preprocess") && j.at("preprocess").contains("target_size");
  if (!sizeGiven && j.contains("network") && j.at("network").is_object() && j.at("network").contains("input_size")) {
    try {
      c.preprocess.targetSize = j.at("network").at("input_size").get<int>();
    } catch (const Json::exception& e) {
      throw ConfigError(std::string("network.input_size: ") + e.what());
    }
  }
  if (j.contains("network")) {
    Json net = j.at("network");
    auto allowed = keysOf(NetworkSpec{}.toJson());
    allowed.insert("pretrained");
    rejectUnknown(net, allowed, "network");
    if (net.contains("pretrained")) {
      if (!net.at("pretrained").is_boolean()) throw ConfigError("network.pretrained must be a boolean");
      c.pretrained = net.at("pretrained").get<bool>();
      net.erase("pretrained");
    }
    // The network input follows the preprocessing size unless stated.
    if (!net.contains("input_size")) net["input_size"] = c.preprocess.targetSize;
    c.network = NetworkSpec::fromJson(net);
  } else {
    c.network.inputSize = c.preprocess.targetSize;
  }
  if (j.contains("train")) {
    const auto& t = j.at("train");
    if (t.is_object() && t.contains("seed")) throw ConfigError("unknown config key: train.seed (use the top-level seed)");
    c.train = TrainConfig::fromJson(t);
  }
  c.train.seed = c.seed;
  if (j.contains("extract")) c.extract = extractConfigFromJson(j.at("extract"));
  c.validate();
  return c;
}

Json PipelineConfig::toJson() const {
  Json net = network.toJson();
  net["pretrained"] = pretrained;
  Json tr = train.toJson();
  tr.erase("seed");
  return {{"seed", seed},
          {"network", net},
          {"preprocess", preprocessConfigToJson(preprocess)},
          {"train", tr},
          {"extract", extractConfigToJson(extract)}};
}

void PipelineConfig::validate() const {
  network.validate();
  train.validate();
  extract.validate();
  preprocess.palette.validate();
  if (network.inputSize != preprocess.targetSize) {
    throw ConfigError("network.input_size (" + std::to_string(network.inputSize) +
                      ") must equal preprocess.target_size (" + std::to_string(preprocess.targetSize) + ")");
  }
}

Json applyOverrides(Json base, const std::vector<std::string>& assignments) {
  for (const auto& a : assignments) {
    const auto eq = a.find('=');
    if (eq == std::string::npos || eq == 0) throw ConfigError("override must look like section.key=value: " + a);
    const std::string path = a.substr(0, eq);
    const std::string text = a.substr(eq + 1);
    Json value = Json::parse(text, nullptr, false);
    if (value.is_discarded()) value = text;

    Json* node = &base;
    std::size_t start = 0;
    while (true) {
      const auto dot = path.find('.', start);
      const std::string key = path.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
      if (key.empty()) throw ConfigError("bad override key: " + path);
      if (dot == std::string::npos) {
        (*node)[key] = value;
        break;
      }
      if (!node->contains(key)) (*node)[key] = Json::object();
      node = &(*node)[key];
      if (!node->is_object()) throw ConfigError("override key does not name a section: " + path);
      start = dot + 1;
    }
  }
  return base;
}

PipelineConfig loadPipelineConfig(const std::filesystem::path& file, const std::vector<std::string>& overrides) {
  Json j = Json::object();
  if (!file.empty()) {
    if (!std::filesystem::exists(file)) throw ConfigError("config file not found: " + file.string());
    try {
      j = readJsonFile(file);
    } catch (const Json::exception& e) {
      throw ConfigError("config file " + file.string() + ": " + e.what());
    }
  }
  return PipelineConfig::fromJson(applyOverrides(std::move(j), overrides));
}

std::vector<std::string> configKeys(const std::string& section) {
  const auto defaults = defaultsJson();
  std::vector<std::string> out;
  if (section.empty()) {
    for (const auto& [key, value] : defaults.items()) {
      if (!value.is_object()) out.push_back(key);
    }
    return out;
  }
  for (const auto& [key, value] : defaults.at(section).items()) out.push_back(section + "." + key);
  return out;
}

}  // namespace tablenet::cli

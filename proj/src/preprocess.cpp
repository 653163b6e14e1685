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

#include "tablenet/preprocess.hpp"

#include <cstdio>
#include <random>
#include <regex>

#include <opencv2/imgproc.hpp>

#include "tablenet/errors.hpp"
#include "tablenet/ingestion.hpp"

namespace tablenet {

HighlightPalette::HighlightPalette() {
  colors_[static_cast<std::size_t>(DataType::Alphabetic)] = {0, 0, 255};
  colors_[static_cast<std::size_t>(DataType::Numeric)] = {255, 0, 0};
  colors_[static_cast<std::size_t>(DataType::Alphanumeric)] = {0, 255, 0};
  colors_[static_cast<std::size_t>(DataType::Date)] = {255, 0, 255};
  colors_[static_cast<std::size_t>(DataType::Currency)] = {255, 255, 0};
  colors_[static_cast<std::size_t>(DataType::Other)] = {0, 255, 255};
}

void HighlightPalette::setColor(DataType t, const cv::Vec3b& rgb) {
  auto previous = colors_[static_cast<std::size_t>(t)];
  colors_[static_cast<std::size_t>(t)] = rgb;
  try {
    validate();
  } catch (...) {
    colors_[static_cast<std::size_t>(t)] = previous;
    throw;
  }
}

void HighlightPalette::validate() const {
  const cv::Vec3b black{0, 0, 0}, white{255, 255, 255};
  for (std::size_t i = 0; i < colors_.size(); ++i) {
    if (colors_[i] == black || colors_[i] == white) {
      throw ConfigError("palette colour for " + std::string(dataTypeName(kAllDataTypes[i])) + " is black or white");
    }
    for (std::size_t j = i + 1; j < colors_.size(); ++j) {
      if (colors_[i] == colors_[j]) throw ConfigError("palette colours must be distinct");
    }
  }
}

cv::Vec3b parseHexColor(std::string_view hex) {
  if (hex.size() != 7 || hex[0] != '#') throw ConfigError("colour must be #RRGGBB: " + std::string(hex));
  cv::Vec3b out;
  for (int i = 0; i < 3; ++i) {
    unsigned v = 0;
    for (char c : hex.substr(1 + 2 * i, 2)) {
      v <<= 4;
      if (c >= '0' && c <= '9') v |= static_cast<unsigned>(c - '0');
      else if (c >= 'a' && c <= 'f') v |= static_cast<unsigned>(c - 'a' + 10);
      else if (c >= 'A' && c <= 'F') v |= static_cast<unsigned>(c - 'A' + 10);
      else throw ConfigError("colour must be #RRGGBB: " + std::string(hex));
    }
    out[i] = static_cast<uchar>(v);
  }
  return out;
}

std::string toHexColor(const cv::Vec3b& rgb) {
  char buf[8];
  std::snprintf(buf, sizeof buf, "#%02x%02x%02x", rgb[0], rgb[1], rgb[2]);
  return buf;
}

cv::Mat equalizeHistogram(const cv::Mat& image) {
  CV_Assert(image.depth() == CV_8U);
  if (image.channels() == 1) {
    cv::Mat out;
    cv::equalizeHist(image, out);
    return out;
  }
  std::vector<cv::Mat> planes;
  cv::split(image, planes);
  for (auto& p : planes) cv::equalizeHist(p, p);
  cv::Mat out;
  cv::merge(planes, out);
  return out;
}

namespace {

cv::Mat toRgb(const cv::Mat& image) {
  if (image.channels() == 3) return image;
  cv::Mat rgb;
  cv::cvtColor(image, rgb, image.channels() == 4 ? cv::COLOR_RGBA2RGB : cv::COLOR_GRAY2RGB);
  return rgb;
}

Rect scaleValid(const Rect& r, int srcW, int srcH, int outW, int outH) {
  Rect s = scaleRect(r, srcW, srcH, outW, outH);
  s.x0 = std::clamp(s.x0, 0, outW - 1);
  s.y0 = std::clamp(s.y0, 0, outH - 1);
  s.x1 = std::clamp(std::max(s.x1, s.x0 + 1), s.x0 + 1, outW);
  s.y1 = std::clamp(std::max(s.y1, s.y0 + 1), s.y0 + 1, outH);
  return s;
}

}  // namespace

DocumentSample resizeSample(const DocumentSample& sample, int outH, int outW) {
  DocumentSample out;
  out.id = sample.id;
  const int w = sample.width(), h = sample.height();
  const cv::Mat rgb = toRgb(sample.image);
  if (w == outW && h == outH) {
    out.image = rgb.clone();
  } else {
    cv::resize(rgb, out.image, cv::Size(outW, outH), 0, 0, cv::INTER_LINEAR);
  }
  out.words.reserve(sample.words.size());
  for (const auto& word : sample.words) out.words.push_back({word.text, scaleValid(word.box, w, h, outW, outH), word.dtype});
  for (const auto& t : sample.tables) out.tables.push_back(scaleValid(t, w, h, outW, outH));
  for (const auto& c : sample.columns) out.columns.push_back(scaleValid(c, w, h, outW, outH));
  if (!sample.tableMask.empty() || !sample.columnMask.empty()) {
    std::tie(out.tableMask, out.columnMask) = rasterizeMasks(out, outH, outW);
  }
  return out;
}

DataType classifyDataType(std::string_view textView) {
  static const std::regex currency(R"(^[+-]?(\$|€|£|₹)[+-]?(\d{1,3}(,\d{3})+|\d+)(\.\d+)?$)");
  static const std::string months = "(jan|feb|mar|apr|may|jun|jul|aug|sep|oct|nov|dec)[a-z]*\\.?";
  static const std::regex dateIso(R"(^\d{4}-\d{1,2}-\d{1,2}$)");
  static const std::regex dateDmy(R"(^\d{1,2}[/.-]\d{1,2}[/.-](\d{2}|\d{4})$)");
  static const std::regex dateDayMonth("^\\d{1,2}[-/ ]?" + months + "([-/ ,]?\\d{2,4})?$", std::regex::icase);
  static const std::regex dateMonthDay("^" + months + "[-/ ]?\\d{1,4}(,?[-/ ]?\\d{2,4})?$", std::regex::icase);
  static const std::regex numeric(R"(^[+-]?((\d{1,3}(,\d{3})+|\d+)(\.\d+)?|\.\d+)%?$)");
  static const std::regex letter("[A-Za-z]");
  static const std::regex digit("[0-9]");
  static const std::regex alphabetic(R"(^[A-Za-z]+(['-][A-Za-z]+)*$)");

  const std::string text(textView);
  if (std::regex_match(text, currency)) return DataType::Currency;
  if (std::regex_match(text, dateIso) || std::regex_match(text, dateDmy) || std::regex_match(text, dateDayMonth) ||
      std::regex_match(text, dateMonthDay)) {
    return DataType::Date;
  }
  if (std::regex_match(text, numeric)) return DataType::Numeric;
  const bool hasLetter = std::regex_search(text, letter);
  const bool hasDigit = std::regex_search(text, digit);
  if (hasLetter && hasDigit) return DataType::Alphanumeric;
  if (std::regex_match(text, alphabetic)) return DataType::Alphabetic;
  return DataType::Other;
}

cv::Mat highlightWords(const cv::Mat& image, const std::vector<WordBox>& words, const HighlightPalette& palette,
                       double dropProb, std::uint64_t seed) {
  if (dropProb < 0.0 || dropProb >= 1.0) throw ConfigError("drop probability must lie in [0,1)");
  const cv::Mat rgb = toRgb(image);
  cv::Mat overlay = cv::Mat::zeros(rgb.size(), CV_8UC3);
  std::mt19937_64 rng(seed);
  const Rect page{0, 0, rgb.cols, rgb.rows};
  for (const auto& word : words) {
    // 53 random bits -> [0,1), independent of the standard library's distributions.
    const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
    if (u < dropProb) continue;
    const auto clipped = intersect(word.box, page);
    if (!clipped) continue;
    const auto& c = palette.color(word.dtype);
    overlay(cv::Range(clipped->y0, clipped->y1), cv::Range(clipped->x0, clipped->x1)).setTo(cv::Scalar(c[0], c[1], c[2]));
  }
  cv::Mat out;
  cv::add(rgb, overlay, out);
  return out;
}

DocumentSample prepareSample(const DocumentSample& sample, const PreprocessConfig& config, std::uint64_t seed) {
  DocumentSample eq = sample;
  eq.image = equalizeHistogram(sample.image);
  eq.tableMask.release();
  eq.columnMask.release();
  DocumentSample out = resizeSample(eq, config.targetSize, config.targetSize);
  for (auto& w : out.words) w.dtype = classifyDataType(w.text);
  if (config.highlight) out.image = highlightWords(out.image, out.words, config.palette, config.dropProb, seed);
  std::tie(out.tableMask, out.columnMask) = rasterizeMasks(out, config.targetSize, config.targetSize);
  return out;
}

}  // namespace tablenet

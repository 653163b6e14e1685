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

#include <array>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include <opencv2/core.hpp>

#include "tablenet/types.hpp"

namespace tablenet {

/// Colour used to shade each data type's word boxes (RGB).
class HighlightPalette {
 public:
  HighlightPalette();

  const cv::Vec3b& color(DataType t) const { return colors_[static_cast<std::size_t>(t)]; }
  /// Throws ConfigError if the result would break distinctness or use pure
  /// black/white.
  void setColor(DataType t, const cv::Vec3b& rgb);
  void validate() const;

 private:
  std::array<cv::Vec3b, kAllDataTypes.size()> colors_;
};

/// "#RRGGBB" <-> RGB.
cv::Vec3b parseHexColor(std::string_view hex);
std::string toHexColor(const cv::Vec3b& rgb);

struct PreprocessConfig {
  double dropProb = 0.02;
  int targetSize = 1024;
  bool highlight = true;
  HighlightPalette palette;
};

/// Global per-channel histogram equalization.
cv::Mat equalizeHistogram(const cv::Mat& image);

/// Bilinear resize of the page to outW x outH RGB; words and annotation rects
/// follow the same (anisotropic) scale. Masks, if present, are re-rasterized.
DocumentSample resizeSample(const DocumentSample& sample, int outH, int outW);

/// First match in priority order CURRENCY, DATE, NUMERIC, ALPHANUMERIC,
/// ALPHABETIC, else OTHER.
DataType classifyDataType(std::string_view text);

/// Shades every kept word box with its palette colour on a black overlay and
/// saturating-adds the overlay to `image`. Each word is dropped independently
/// with probability `dropProb` using a generator seeded with `seed`.
cv::Mat highlightWords(const cv::Mat& image, const std::vector<WordBox>& words, const HighlightPalette& palette,
                       double dropProb, std::uint64_t seed);

/// Full chain: equalize, resize to the target size, classify word types,
/// highlight (optional) and rasterize both masks at the target size.
DocumentSample prepareSample(const DocumentSample& sample, const PreprocessConfig& config, std::uint64_t seed);

}  // namespace tablenet

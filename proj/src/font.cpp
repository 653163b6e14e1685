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

#include "tablenet/font.hpp"

#include <cmath>
#include <string>

#include <opencv2/imgproc.hpp>

namespace tablenet {

MonoFont::MonoFont(int size)
    : size_(size),
      advance_(size),
      ascent_(size + 2),
      descent_(static_cast<int>(std::ceil(0.4 * size))),
      scale_(size / 22.0) {}

Rect MonoFont::textBox(std::string_view text, int x, int top) const {
  return {x, top, x + static_cast<int>(text.size()) * advance_, top + lineHeight()};
}

void MonoFont::draw(cv::Mat& image, std::string_view text, int x, int top, const cv::Scalar& color) const {
  const int baseline = top + ascent_;
  for (std::size_t i = 0; i < text.size(); ++i) {
    char c = text[i];
    if (static_cast<unsigned char>(c) < 32 || static_cast<unsigned char>(c) > 126) c = '?';
    if (c == ' ') continue;
    const std::string glyph(1, c);
    int base = 0;
    const cv::Size sz = cv::getTextSize(glyph, cv::FONT_HERSHEY_SIMPLEX, scale_, 1, &base);
    const int cellX = x + static_cast<int>(i) * advance_;
    const int gx = cellX + (advance_ - sz.width) / 2;
    cv::putText(image, glyph, {gx, baseline}, cv::FONT_HERSHEY_SIMPLEX, scale_, color, 1, cv::LINE_8);
  }
}

}  // namespace tablenet

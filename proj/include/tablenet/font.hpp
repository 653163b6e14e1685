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

#include <string_view>

#include <opencv2/core.hpp>

#include "tablenet/geometry.hpp"

namespace tablenet {

/// Fixed-advance text renderer built on OpenCV's Hershey simplex glyphs. Every
/// character occupies one `advance`-wide cell, so a word's box follows from
/// its length alone and character sub-boxes are exact.
class MonoFont {
 public:
  explicit MonoFont(int size = 10);

  int size() const { return size_; }
  int advance() const { return advance_; }
  int lineHeight() const { return ascent_ + descent_; }

  /// Box of `text` drawn with its top-left corner at (x, top).
  Rect textBox(std::string_view text, int x, int top) const;
  /// Draws ASCII text (other bytes render as '?') in the given colour.
  void draw(cv::Mat& image, std::string_view text, int x, int top, const cv::Scalar& color) const;

 private:
  int size_;
  int advance_;
  int ascent_;
  int descent_;
  double scale_;
};

}  // namespace tablenet

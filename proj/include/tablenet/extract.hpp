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

#include <optional>
#include <vector>

#include <opencv2/core.hpp>

#include "tablenet/types.hpp"

namespace tablenet {

struct ExtractConfig {
  double pixelThreshold = 0.99;
  double minRegionAreaFrac = 0.0005;
  double columnOverlapMin = 0.5;
  double radonPeakFrac = 0.8;
  int lineDarknessThreshold = 128;  // gray level below which a pixel counts as ink
  double tableOverlapMin = 0.5;     // word-in-table containment needed to keep a word
  double textLineOverlapMin = 0.5;  // y-overlap (of the shorter word) that puts two words on one line
  double ruledGapFrac = 0.5;        // share of ruled gaps in a column that selects the ruled-row rule

  /// Throws ConfigError when a field is out of range.
  void validate() const;
};

/// 1 where prob >= threshold, else 0 (CV_8UC1).
cv::Mat thresholdMask(const cv::Mat& prob, double threshold);

/// Bounding boxes of 4-connected foreground components whose pixel count is
/// at least minRegionAreaFrac of the page, sorted top-to-bottom then
/// left-to-right.
std::vector<Rect> extractRegions(const cv::Mat& binary, const ExtractConfig& config);

/// Pixel row used as a word's vertical position.
constexpr int wordCenterRow(const WordBox& w) { return (w.box.y0 + w.box.y1) / 2; }

/// Groups words into text lines. Returned lines are ordered top to bottom and
/// hold indices into `words`.
std::vector<std::vector<std::size_t>> groupTextLines(const std::vector<WordBox>& words, double overlapMin = 0.5);

/// Keeps words at least half inside the table and assigns each to the column
/// containing most of it (ties go left). Words inside a column are sorted by
/// (y0, x0).
std::vector<std::vector<WordBox>> assignWords(const std::vector<WordBox>& words, const Rect& tableRect,
                                              const std::vector<Rect>& columnRects, const ExtractConfig& config);

/// 0-degree Radon projection test on a grayscale strip: true iff some pixel
/// row has at least radonPeakFrac * width ink pixels. `peakRow`, if given,
/// receives the row with the most ink.
bool detectRuleLine(const cv::Mat& strip, const ExtractConfig& config, int* peakRow = nullptr);

enum class RowRule { None, RuledLines, FilledLines, MaxFilledStart };

struct RowSegmentation {
  RowRule rule = RowRule::None;
  std::vector<RowSpan> rows;
};

/// Row segmentation in priority order: ruling lines, then one row per text
/// line when every column is filled on every line, else new rows start at
/// the lines with the most filled columns. `page` is the grayscale page the
/// word coordinates refer to.
RowSegmentation segmentRows(const std::vector<std::vector<WordBox>>& perColumnWords,
                            const std::vector<Rect>& columnRects, const cv::Mat& page, const ExtractConfig& config);

/// Cell text is the column's words (reading order, space-joined) whose
/// center row lies inside the row span.
TableGrid buildTableGrid(const Rect& tableRect, const std::vector<Rect>& columnRects,
                         const std::vector<RowSpan>& rowSpans, const std::vector<std::vector<WordBox>>& perColumnWords);

/// Column regions belonging to `table`: clipped to it, ordered by x0, with
/// columns overlapping by more than 10% of the narrower width merged.
std::vector<Rect> columnsForTable(const Rect& table, const std::vector<Rect>& columnRegions);

/// Full rule-based extraction from binary table/column masks at page
/// resolution.
std::vector<TableGrid> extractTables(const cv::Mat& tableBinary, const cv::Mat& columnBinary,
                                     const std::vector<WordBox>& words, const cv::Mat& page,
                                     const ExtractConfig& config);

/// Same, starting from probability maps of any resolution; they are resized
/// to the page before thresholding.
std::vector<TableGrid> extractTables(const MaskPair& masks, const std::vector<WordBox>& words, const cv::Mat& page,
                                     const ExtractConfig& config);

}  // namespace tablenet

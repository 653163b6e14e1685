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
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <opencv2/core.hpp>

#include "tablenet/geometry.hpp"

namespace tablenet {

enum class DataType { Alphabetic, Numeric, Alphanumeric, Date, Currency, Other };

inline constexpr std::array<DataType, 6> kAllDataTypes = {
    DataType::Alphabetic, DataType::Numeric, DataType::Alphanumeric,
    DataType::Date,       DataType::Currency, DataType::Other};

std::string_view dataTypeName(DataType t);
/// Accepts the upper-case names used in config files ("NUMERIC", ...).
std::optional<DataType> dataTypeFromString(std::string_view name);

struct WordBox {
  std::string text;
  Rect box;
  DataType dtype = DataType::Other;
};

/// Minimum containment of a column annotation inside some table annotation.
inline constexpr double kColumnInTableMin = 0.9;

struct DocumentSample {
  std::string id;
  cv::Mat image;  // CV_8UC1 or CV_8UC3 (RGB channel order)
  std::vector<WordBox> words;
  std::vector<Rect> tables;
  std::vector<Rect> columns;
  cv::Mat tableMask;   // CV_8UC1 {0,1}, empty until rasterized
  cv::Mat columnMask;  // CV_8UC1 {0,1}, empty until rasterized

  int width() const { return image.cols; }
  int height() const { return image.rows; }
};

/// Throws ValidationError when a column is not (>= 90%) inside any table or
/// when rasterized masks disagree with the image shape.
void validateSample(const DocumentSample& sample);

/// Foreground probabilities of both branches, CV_32FC1 in [0,1].
struct MaskPair {
  cv::Mat tableProb;
  cv::Mat columnProb;
};

/// Half-open vertical interval [y0, y1).
struct RowSpan {
  int y0 = 0;
  int y1 = 0;
  constexpr bool contains(double y) const { return y >= y0 && y < y1; }
  friend constexpr bool operator==(const RowSpan&, const RowSpan&) = default;
};

struct TableGrid {
  Rect region;
  std::vector<Rect> columns;
  std::vector<RowSpan> rows;
  std::vector<std::vector<std::string>> cells;  // rows x columns

  std::size_t rowCount() const { return rows.size(); }
  std::size_t columnCount() const { return columns.size(); }
};

/// Throws ValidationError when ordering or dimension invariants are broken.
void validateGrid(const TableGrid& grid);

enum class Direction { Horizontal, Vertical };

class AdjacencyRelation {
 public:
  AdjacencyRelation(std::string cellText, std::string neighborText, Direction direction)
      : cellText_(std::move(cellText)), neighborText_(std::move(neighborText)), direction_(direction) {}

  const std::string& cellText() const { return cellText_; }
  const std::string& neighborText() const { return neighborText_; }
  Direction direction() const { return direction_; }

  friend auto operator<=>(const AdjacencyRelation&, const AdjacencyRelation&) = default;
  friend bool operator==(const AdjacencyRelation&, const AdjacencyRelation&) = default;

 private:
  std::string cellText_;
  std::string neighborText_;
  Direction direction_;
};

}  // namespace tablenet

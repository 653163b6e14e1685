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

#include "tablenet/types.hpp"

#include <sstream>

#include "tablenet/errors.hpp"

namespace tablenet {

std::string_view dataTypeName(DataType t) {
  switch (t) {
    case DataType::Alphabetic: return "ALPHABETIC";
    case DataType::Numeric: return "NUMERIC";
    case DataType::Alphanumeric: return "ALPHANUMERIC";
    case DataType::Date: return "DATE";
    case DataType::Currency: return "CURRENCY";
    case DataType::Other: return "OTHER";
  }
  return "OTHER";
}

std::optional<DataType> dataTypeFromString(std::string_view name) {
  for (auto t : kAllDataTypes) {
    if (dataTypeName(t) == name) return t;
  }
  return std::nullopt;
}

void validateSample(const DocumentSample& sample) {
  for (const auto& t : sample.tables) {
    if (!t.valid()) {
      std::ostringstream os;
      os << "invalid table rect " << t;
      throw ValidationError(os.str());
    }
  }
  for (const auto& c : sample.columns) {
    if (!c.valid()) {
      std::ostringstream os;
      os << "invalid column rect " << c;
      throw ValidationError(os.str());
    }
    bool contained = false;
    for (const auto& t : sample.tables) {
      if (containmentFraction(c, t) >= kColumnInTableMin) {
        contained = true;
        break;
      }
    }
    if (!contained) {
      std::ostringstream os;
      os << "column " << c << " is not contained in any table";
      throw ValidationError(os.str());
    }
  }
  const cv::Size size = sample.image.size();
  for (const cv::Mat* m : {&sample.tableMask, &sample.columnMask}) {
    if (!m->empty() && m->size() != size) {
      throw ValidationError("mask shape does not match image shape");
    }
  }
}

void validateGrid(const TableGrid& grid) {
  for (std::size_t i = 1; i < grid.columns.size(); ++i) {
    const auto& a = grid.columns[i - 1];
    const auto& b = grid.columns[i];
    if (b.x0 < a.x0) throw ValidationError("grid columns not ordered by x0");
    const int overlap = intervalOverlap(a.x0, a.x1, b.x0, b.x1);
    if (overlap > 0.1 * std::min(a.width(), b.width())) {
      throw ValidationError("grid columns overlap by more than 10% of width");
    }
  }
  for (std::size_t i = 1; i < grid.rows.size(); ++i) {
    if (grid.rows[i].y0 < grid.rows[i - 1].y1) throw ValidationError("grid rows overlap or are unordered");
  }
  if (grid.cells.size() != grid.rows.size()) throw ValidationError("cell row count differs from row spans");
  for (const auto& row : grid.cells) {
    if (row.size() != grid.columns.size()) throw ValidationError("cell column count differs from columns");
  }
}

}  // namespace tablenet

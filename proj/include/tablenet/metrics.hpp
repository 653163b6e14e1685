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

#include <string>
#include <string_view>
#include <vector>

#include "tablenet/serialize.hpp"
#include "tablenet/types.hpp"

namespace tablenet {

/// Drops whitespace, replaces every other non-alphanumeric code point with
/// '_' and upper-cases ASCII letters.
std::string normalizeContent(std::string_view text);

/// A character sub-object, represented by the center of its box.
struct CharPoint {
  double x = 0.0;
  double y = 0.0;
};

/// Uniform horizontal subdivision of each word box into one box per code
/// point of its text.
std::vector<CharPoint> charBoxesFromWords(const std::vector<WordBox>& words);

struct PRF {
  double recall = 0.0;
  double precision = 0.0;
  double f1 = 0.0;
};

/// F1 = 2PR/(P+R), 0 when P+R = 0.
PRF makePRF(double recall, double precision);

struct CharLevelResult {
  PRF score;
  /// Truth regions whose characters were spread over more than one
  /// predicted region.
  int splitTruthRegions = 0;
};

/// Character-level recall (per truth region) and precision (per predicted
/// region), regions matched by maximum shared characters and averaged over
/// regions.
CharLevelResult charLevelPR(const std::vector<Rect>& predicted, const std::vector<Rect>& truth,
                            const std::vector<CharPoint>& chars);

/// Nearest non-empty right and below neighbour of every non-empty cell,
/// returned sorted (a multiset).
std::vector<AdjacencyRelation> cellAdjacencyRelations(const TableGrid& grid);

/// Multiset precision/recall of adjacency relations pooled over all tables of
/// a document. A ratio with an empty denominator counts as 1.
PRF extractionPR(const std::vector<TableGrid>& predicted, const std::vector<TableGrid>& truth);

struct DocumentScore {
  std::string document;
  std::string task;  // "detection" or "extraction"
  PRF score;
  int splitTruthRegions = 0;
};

struct EvalReport {
  std::vector<DocumentScore> perDocument;

  /// Arithmetic mean of each measure over documents of `task`.
  PRF macro(std::string_view task) const;
  Json toJson() const;
  std::string toCsv() const;
};

}  // namespace tablenet

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

#include "tablenet/ingestion.hpp"
#include "tablenet/types.hpp"

namespace tablenet {

struct SynthSpec {
  int pageWidth = 1024;
  int pageHeight = 1280;
  int nTables = 1;  // 0, 1 or 2
  int minColumns = 2;
  int maxColumns = 6;
  int minRows = 2;  // including the header row
  int maxRows = 12;
  bool ruled = false;
  /// Probability that a cell of the description (first) column wraps over
  /// two or three lines.
  double multiLineCellProb = 0.0;
  /// Data type per column; empty picks a random mix.
  std::vector<DataType> columnTypes;
  int fontSize = 12;
  int columnGapChars = 4;
  bool bodyText = true;
  std::uint64_t seed = 0;

  void validate() const;
};

struct SynthPage {
  DocumentSample sample;  // RGB page, word boxes with known dtypes, table/column rects
  std::vector<TableGrid> truth;
};

/// Renders a page. Throws LayoutError when the requested tables do not fit.
SynthPage generate(const SynthSpec& spec);

enum class SynthKind { Ruled, UnruledFilled, UnruledMultiLine, Mixed };

/// Spec for page `index` of a corpus of the given kind; deterministic in
/// (kind, seed, index).
SynthSpec corpusSpec(SynthKind kind, std::uint64_t seed, int index);

/// Generates with `spec`, retrying with derived seeds when the layout does
/// not fit.
SynthPage generateFitting(SynthSpec spec, int attempts = 16);

struct SynthBundlePaths {
  std::filesystem::path image, words, annotation, grid;
};

/// Writes <stem>.png, <stem>.words.tsv, <stem>.json and <stem>.grid.json.
SynthBundlePaths writePageBundle(const SynthPage& page, const std::filesystem::path& dir, const std::string& stem);

/// Writes `n` page bundles plus manifest.json; the last `valCount` pages are
/// marked VAL. Returns the manifest.
DatasetManifest writeCorpus(const std::filesystem::path& dir, int n, std::uint64_t seed, SynthKind kind,
                            int valCount = 0);

}  // namespace tablenet

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

#include <doctest.h>

#include <opencv2/imgproc.hpp>

#include "tablenet/errors.hpp"
#include "tablenet/extract.hpp"
#include "tablenet/ingestion.hpp"
#include "tablenet/synthgen.hpp"
#include "test_util.hpp"

using namespace tablenet;

namespace {

cv::Mat gray(const cv::Mat& rgb) {
  cv::Mat g;
  cv::cvtColor(rgb, g, cv::COLOR_RGB2GRAY);
  return g;
}

SynthSpec fixedSpec(int cols, int rows, bool ruled, std::uint64_t seed) {
  SynthSpec s;
  s.minColumns = s.maxColumns = cols;
  s.minRows = s.maxRows = rows;
  s.ruled = ruled;
  s.seed = seed;
  return s;
}

bool wordInsideSomeCell(const WordBox& w, const std::vector<TableGrid>& grids) {
  for (const auto& g : grids) {
    for (const auto& col : g.columns) {
      if (w.box.x0 < col.x0 || w.box.x1 > col.x1) continue;
      for (const auto& row : g.rows) {
        if (w.box.y0 >= row.y0 && w.box.y1 <= row.y1) return true;
      }
    }
  }
  return false;
}

}  // namespace

TEST_SUITE("synthgen") {
  TEST_CASE("generation is deterministic for a fixed seed") {
    SynthSpec spec = fixedSpec(4, 6, true, 99);
    spec.multiLineCellProb = 0.5;
    const auto a = generate(spec), b = generate(spec);
    CHECK(cv::norm(a.sample.image, b.sample.image, cv::NORM_INF) == 0.0);
    REQUIRE(a.sample.words.size() == b.sample.words.size());
    for (std::size_t i = 0; i < a.sample.words.size(); ++i) {
      CHECK(a.sample.words[i].text == b.sample.words[i].text);
      CHECK(a.sample.words[i].box == b.sample.words[i].box);
    }
    REQUIRE(a.truth.size() == b.truth.size());
    CHECK(a.truth[0].cells == b.truth[0].cells);

    spec.seed = 100;
    CHECK(cv::norm(a.sample.image, generate(spec).sample.image, cv::NORM_INF) > 0.0);
  }

  TEST_CASE("no tables and no body text gives a blank page") {
    SynthSpec spec;
    spec.nTables = 0;
    spec.bodyText = false;
    const auto page = generate(spec);
    CHECK(page.sample.tables.empty());
    CHECK(page.sample.columns.empty());
    CHECK(page.sample.words.empty());
    CHECK(page.truth.empty());
    CHECK(cv::countNonZero(gray(page.sample.image) != 255) == 0);
  }

  TEST_CASE("too many rows for the page raises LayoutError") {
    SynthSpec spec = fixedSpec(3, 12, false, 1);
    spec.pageHeight = 200;
    CHECK_THROWS_AS(generate(spec), LayoutError);
    spec.nTables = 3;
    CHECK_THROWS_AS(generate(spec), ConfigError);
  }

  TEST_CASE("ruled 3x3 tables have a detectable line between every row pair") {
    ExtractConfig cfg;
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      const auto page = generate(fixedSpec(3, 3, true, seed));
      REQUIRE(page.truth.size() == 1);
      const auto g = gray(page.sample.image);
      const auto& grid = page.truth[0];
      for (const auto& col : grid.columns) {
        std::vector<WordBox> inCol;
        for (const auto& w : page.sample.words)
          if (containmentFraction(w.box, col) >= 0.5) inCol.push_back(w);
        const auto lines = groupTextLines(inCol);
        REQUIRE(lines.size() == 3);
        for (std::size_t l = 0; l + 1 < lines.size(); ++l) {
          int bottom = 0, top = page.sample.image.rows;
          for (auto i : lines[l]) bottom = std::max(bottom, inCol[i].box.y1);
          for (auto i : lines[l + 1]) top = std::min(top, inCol[i].box.y0);
          REQUIRE(top > bottom);
          const cv::Mat strip = g(cv::Range(bottom, top), cv::Range(col.x0, col.x1));
          CHECK(detectRuleLine(strip, cfg));
        }
      }
    }
  }

  TEST_CASE("generated pages satisfy the core-model invariants") {
    for (int i = 0; i < 24; ++i) {
      const auto kind = static_cast<SynthKind>(i % 4);
      const auto page = generateFitting(corpusSpec(kind, 7, i));
      CHECK_NOTHROW(validateSample(page.sample));
      CHECK(page.sample.image.cols == 1024);
      CHECK(page.sample.image.rows == 1280);
      REQUIRE(page.truth.size() == page.sample.tables.size());
      for (std::size_t a = 0; a < page.sample.tables.size(); ++a) {
        for (std::size_t b = a + 1; b < page.sample.tables.size(); ++b)
          CHECK(intersectionArea(page.sample.tables[a], page.sample.tables[b]) == 0);
      }
      for (const auto& grid : page.truth) {
        CHECK_NOTHROW(validateGrid(grid));
        for (const auto& col : grid.columns) {
          bool found = false;
          for (const auto& c : page.sample.columns) found = found || c == col;
          CHECK(found);
        }
      }
      for (const auto& w : page.sample.words) {
        bool inTable = false;
        for (const auto& t : page.sample.tables) inTable = inTable || containmentFraction(w.box, t) > 0.0;
        if (inTable) CHECK(wordInsideSomeCell(w, page.truth));
      }
    }
  }

  TEST_CASE("extract on ground-truth masks recovers the cell matrix") {
    ExtractConfig cfg;
    int checked = 0;
    for (int i = 0; i < 30; ++i) {
      const bool ruled = i % 2 == 0;
      SynthSpec spec = corpusSpec(ruled ? SynthKind::Ruled : SynthKind::UnruledFilled, 11, i);
      const auto page = generateFitting(spec);
      const auto [tableMask, columnMask] = rasterizeMasks(page.sample, page.sample.image.rows, page.sample.image.cols);
      const auto grids = extractTables(tableMask, columnMask, page.sample.words, gray(page.sample.image), cfg);
      REQUIRE(grids.size() == page.truth.size());
      for (std::size_t t = 0; t < grids.size(); ++t) {
        CHECK(grids[t].cells == page.truth[t].cells);
        ++checked;
      }
    }
    CHECK(checked >= 30);
  }

  TEST_CASE("corpus bundles load back through the manifest") {
    testutil::TempDir dir;
    const auto manifest = writeCorpus(dir.path(), 4, 3, SynthKind::Mixed, 1);
    REQUIRE(manifest.entries.size() == 4);
    CHECK(manifest.select(Split::Val).size() == 1);
    const auto reloaded = loadManifest(dir / "manifest.json");
    REQUIRE(reloaded.entries.size() == 4);
    const auto sample = loadSample(reloaded.entries[0]);
    const auto page = generateFitting(corpusSpec(SynthKind::Mixed, 3, 0));
    CHECK(sample.tables == page.sample.tables);
    CHECK(sample.columns == page.sample.columns);
    CHECK(sample.words.size() == page.sample.words.size());
    CHECK(cv::norm(sample.image, page.sample.image, cv::NORM_INF) == 0.0);
    CHECK(std::filesystem::exists(dir / (reloaded.entries[0].id + ".grid.json")));
  }
}

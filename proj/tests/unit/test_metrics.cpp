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

#include <algorithm>
#include <random>

#include "oracles.hpp"
#include "tablenet/metrics.hpp"

using namespace tablenet;

using namespace testoracle;

TEST_SUITE("metrics") {
  TEST_CASE("normalizeContent fixtures") {
    CHECK(normalizeContent("Net Total") == "NETTOTAL");
    CHECK(normalizeContent("") == "");
    CHECK(normalizeContent("a-b 1.5%") == "A_B1_5_");
    CHECK(normalizeContent("café €5") == "CAF__5");
    CHECK(walkNormalize("Net Total") == "NETTOTAL");
    CHECK(walkNormalize("a-b 1.5%") == "A_B1_5_");
  }

  TEST_CASE("normalizeContent agrees with the character walk and is idempotent") {
    const std::vector<std::string> alphabet = {"a", "Z", "q", "7", "0", " ", "\t", "-", ".", "%", "$", "é",
                                               "€", " ", "_", "\U0001F600", "M", "x", "/", ","};
    std::mt19937 rng(12);
    for (int i = 0; i < 100; ++i) {
      std::string s;
      const int len = static_cast<int>(rng() % 16);
      for (int k = 0; k < len; ++k) s += alphabet[rng() % alphabet.size()];
      const auto n = normalizeContent(s);
      CHECK(n == walkNormalize(s));
      CHECK(normalizeContent(n) == n);
    }
  }

  TEST_CASE("charBoxesFromWords subdivides uniformly") {
    const auto chars = charBoxesFromWords({{"abcd", {0, 0, 40, 10}, DataType::Other}, {"", {0, 0, 5, 5}, DataType::Other}});
    REQUIRE(chars.size() == 4);
    CHECK(chars[0].x == doctest::Approx(5.0));
    CHECK(chars[3].x == doctest::Approx(35.0));
    CHECK(chars[2].y == doctest::Approx(5.0));
  }

  TEST_CASE("charLevelPR fixtures") {
    // 80 table characters on 4 lines and a 20-character caption below.
    std::vector<CharPoint> chars;
    for (int l = 0; l < 4; ++l) chars = concat(chars, charRow(20, 0, 20 * l));
    const Rect truth{0, 0, 200, 80};
    chars = concat(chars, charRow(20, 0, 90));
    const Rect withCaption{0, 0, 200, 100};

    const auto exact = charLevelPR({truth}, {truth}, chars);
    CHECK(exact.score.recall == 1.0);
    CHECK(exact.score.precision == 1.0);
    CHECK(exact.score.f1 == 1.0);

    const auto caption = charLevelPR({withCaption}, {truth}, chars);
    CHECK(caption.score.recall == 1.0);
    CHECK(caption.score.precision == doctest::Approx(80.0 / 100.0).epsilon(1e-15));

    // 100 characters, the first 10 form a header line the prediction misses.
    std::vector<CharPoint> table = concat(charRow(10, 0, 0), charRow(30, 0, 20));
    table = concat(table, charRow(30, 0, 40));
    table = concat(table, charRow(30, 0, 60));
    const auto missed = charLevelPR({{0, 15, 300, 80}}, {{0, 0, 300, 80}}, table);
    CHECK(missed.score.recall == doctest::Approx(0.9).epsilon(1e-15));
    CHECK(missed.score.precision == 1.0);
  }

  TEST_CASE("charLevelPR empty-document conventions") {
    const auto chars = charRow(10, 0, 0);
    const auto none = charLevelPR({}, {}, chars);
    CHECK(none.score.recall == 1.0);
    CHECK(none.score.precision == 1.0);
    CHECK(none.score.f1 == 1.0);

    const auto falsePositive = charLevelPR({{0, 0, 50, 10}}, {}, chars);
    CHECK(falsePositive.score.recall == 1.0);
    CHECK(falsePositive.score.precision == 0.0);
    CHECK(falsePositive.score.f1 == 0.0);

    const auto missedAll = charLevelPR({}, {{0, 0, 100, 10}}, chars);
    CHECK(missedAll.score.recall == 0.0);
    CHECK(missedAll.score.precision == 1.0);
  }

  TEST_CASE("charLevelPR flags a truth region split over two predictions") {
    const auto chars = charRow(20, 0, 0);
    const auto r = charLevelPR({{0, 0, 100, 10}, {100, 0, 200, 10}}, {{0, 0, 200, 10}}, chars);
    CHECK(r.splitTruthRegions == 1);
    CHECK(r.score.recall == doctest::Approx(0.5));
    CHECK(r.score.precision == 1.0);
  }

  TEST_CASE("charLevelPR recall never drops when a prediction grows") {
    std::mt19937 rng(5);
    for (int trial = 0; trial < 200; ++trial) {
      std::vector<CharPoint> chars;
      for (int i = 0; i < 60; ++i) chars.push_back({static_cast<double>(rng() % 200) + 0.5, static_cast<double>(rng() % 200) + 0.5});
      auto randRect = [&] {
        const int x = static_cast<int>(rng() % 150), y = static_cast<int>(rng() % 150);
        return Rect{x, y, x + 10 + static_cast<int>(rng() % 50), y + 10 + static_cast<int>(rng() % 50)};
      };
      const std::vector<Rect> truth = {randRect(), randRect()};
      const std::vector<Rect> base = {randRect(), randRect()};
      std::vector<Rect> bigger = base;
      const std::size_t k = rng() % 2;
      bigger[k] = Rect{base[k].x0 - static_cast<int>(rng() % 20), base[k].y0 - static_cast<int>(rng() % 20),
                       base[k].x1 + static_cast<int>(rng() % 20), base[k].y1 + static_cast<int>(rng() % 20)};
      CHECK(charLevelPR(bigger, truth, chars).score.recall >= charLevelPR(base, truth, chars).score.recall);
    }
  }

  TEST_CASE("charLevelPR precision never drops when a prediction sheds caption lines") {
    std::vector<CharPoint> chars;
    for (int l = 0; l < 4; ++l) chars = concat(chars, charRow(20, 0, 20 * l));
    for (int l = 0; l < 5; ++l) chars = concat(chars, charRow(5 + l, 0, 80 + 20 * l));
    const Rect truth{0, 0, 200, 80};
    double previous = 0.0;
    for (int extra = 5; extra >= 0; --extra) {
      const double p = charLevelPR({{0, 0, 200, 80 + 20 * extra}}, {truth}, chars).score.precision;
      CHECK(p >= previous);
      previous = p;
    }
    CHECK(previous == 1.0);
  }

  TEST_CASE("cellAdjacencyRelations fixtures") {
    const auto two = cellAdjacencyRelations(gridOf({{"A", "B"}, {"C", "D"}}));
    std::vector<AdjacencyRelation> expected = {{"A", "B", Direction::Horizontal},
                                               {"C", "D", Direction::Horizontal},
                                               {"A", "C", Direction::Vertical},
                                               {"B", "D", Direction::Vertical}};
    std::sort(expected.begin(), expected.end());
    CHECK(two == expected);
    CHECK(cellAdjacencyRelations(gridOf({{"A"}})).empty());

    const std::vector<std::vector<std::string>> sparse = {{"A", "", "B"}, {"C", "D", ""}};
    const auto got = cellAdjacencyRelations(gridOf(sparse));
    CHECK(got == bruteForceRelations(sparse));
    std::vector<AdjacencyRelation> sparseExpected = {{"A", "B", Direction::Horizontal},
                                                     {"C", "D", Direction::Horizontal},
                                                     {"A", "C", Direction::Vertical}};
    std::sort(sparseExpected.begin(), sparseExpected.end());
    // B has only an empty cell below it, so it gets no vertical relation.
    CHECK(got == sparseExpected);
  }

  TEST_CASE("cellAdjacencyRelations agrees with a brute-force scan") {
    std::mt19937 rng(21);
    const std::vector<std::string> texts = {"", "", "a", "b", "1.5", "Net Total", "x-y"};
    for (int trial = 0; trial < 200; ++trial) {
      const int rows = 1 + static_cast<int>(rng() % 5), cols = 1 + static_cast<int>(rng() % 5);
      std::vector<std::vector<std::string>> cells(static_cast<std::size_t>(rows));
      for (auto& row : cells)
        for (int c = 0; c < cols; ++c) row.push_back(texts[rng() % texts.size()]);
      CHECK(cellAdjacencyRelations(gridOf(cells)) == bruteForceRelations(cells));
    }
  }

  TEST_CASE("extractionPR fixtures") {
    const auto truth = gridOf({{"A", "B"}, {"C", "D"}});
    const auto same = extractionPR({truth}, {truth});
    CHECK(same.recall == 1.0);
    CHECK(same.precision == 1.0);
    CHECK(same.f1 == 1.0);

    const auto inserted = extractionPR({gridOf({{"A", "B"}, {"", ""}, {"C", "D"}})}, {truth});
    CHECK(inserted.recall == 1.0);
    CHECK(inserted.precision == 1.0);
    CHECK(inserted.f1 == 1.0);

    const auto empty = extractionPR({}, {});
    CHECK(empty.recall == 1.0);
    CHECK(empty.precision == 1.0);
  }

  TEST_CASE("extractionPR one wrong relation out of four") {
    // Predicted relations: (A,B,H) (A,C,V) (B,D,V) from the first grid and
    // (C,E,H) from the second, against truth (A,B,H) (C,D,H) (A,C,V) (B,D,V).
    const auto truth = gridOf({{"A", "B"}, {"C", "D"}});
    const std::vector<TableGrid> pred = {gridOf({{"A", "B"}, {"C", ""}, {"", "D"}}), gridOf({{"C", "E"}})};
    std::size_t predCount = 0;
    for (const auto& g : pred) predCount += cellAdjacencyRelations(g).size();
    REQUIRE(predCount == 4);
    const auto p = extractionPR(pred, {truth});
    CHECK(p.recall == 0.75);
    CHECK(p.precision == 0.75);
    CHECK(p.f1 == doctest::Approx(0.75));

    // duplicate texts are matched as a multiset
    const auto dup = extractionPR({gridOf({{"A", "A"}}), gridOf({{"A", "A"}})}, {gridOf({{"A", "A"}})});
    CHECK(dup.recall == 1.0);
    CHECK(dup.precision == 0.5);
  }

  TEST_CASE("extractionPR is symmetric with recall and precision exchanged") {
    std::mt19937 rng(3);
    const std::vector<std::string> texts = {"", "a", "b", "c", "1"};
    auto randomGrid = [&] {
      const int rows = 1 + static_cast<int>(rng() % 4), cols = 1 + static_cast<int>(rng() % 4);
      std::vector<std::vector<std::string>> cells(static_cast<std::size_t>(rows));
      for (auto& row : cells)
        for (int c = 0; c < cols; ++c) row.push_back(texts[rng() % texts.size()]);
      return gridOf(cells);
    };
    for (int trial = 0; trial < 200; ++trial) {
      std::vector<TableGrid> a, b;
      for (int i = static_cast<int>(rng() % 3); i > 0; --i) a.push_back(randomGrid());
      for (int i = static_cast<int>(rng() % 3); i > 0; --i) b.push_back(randomGrid());
      const auto ab = extractionPR(a, b), ba = extractionPR(b, a);
      CHECK(ab.recall == ba.precision);
      CHECK(ab.precision == ba.recall);
      CHECK(ab.f1 == doctest::Approx(ba.f1));
    }
  }

  TEST_CASE("extractionPR agrees with the multiset counting oracle") {
    std::mt19937 rng(17);
    const std::vector<std::string> texts = {"", "a", "b", "a b", "1"};
    auto randomGrid = [&] {
      const int rows = 1 + static_cast<int>(rng() % 4), cols = 1 + static_cast<int>(rng() % 4);
      std::vector<std::vector<std::string>> cells(static_cast<std::size_t>(rows));
      for (auto& row : cells)
        for (int c = 0; c < cols; ++c) row.push_back(texts[rng() % texts.size()]);
      return gridOf(cells);
    };
    for (int trial = 0; trial < 200; ++trial) {
      std::vector<TableGrid> a, b;
      for (int i = static_cast<int>(rng() % 3); i > 0; --i) a.push_back(randomGrid());
      for (int i = static_cast<int>(rng() % 3); i > 0; --i) b.push_back(randomGrid());
      const auto got = extractionPR(a, b), want = relationPR(a, b);
      CHECK(got.recall == want.recall);
      CHECK(got.precision == want.precision);
    }
  }

  TEST_CASE("EvalReport aggregation") {
    EvalReport report;
    report.perDocument.push_back({"a", "detection", makePRF(1.0, 0.5), 0});
    report.perDocument.push_back({"b", "detection", makePRF(0.5, 0.5), 1});
    report.perDocument.push_back({"a", "extraction", makePRF(0.0, 0.0), 0});
    const auto macro = report.macro("detection");
    CHECK(macro.recall == doctest::Approx(0.75));
    CHECK(macro.precision == doctest::Approx(0.5));
    CHECK(macro.f1 == doctest::Approx((2.0 / 3.0 + 0.5) / 2.0));
    CHECK(report.macro("extraction").f1 == 0.0);
    const auto j = report.toJson();
    CHECK(j["per_document"].size() == 3);
    CHECK(j["macro"]["detection"]["recall"].get<double>() == doctest::Approx(0.75));
    CHECK(j["per_document"][1]["split_truth_regions"] == 1);
    const auto csv = report.toCsv();
    CHECK(csv.rfind("document,task,precision,recall,f1\n", 0) == 0);
    CHECK(csv.find("b,detection,0.500000,0.500000,0.500000") != std::string::npos);
  }
}

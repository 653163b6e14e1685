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

#include <cmath>
#include <random>

#include <opencv2/core.hpp>

#include "tablenet/errors.hpp"
#include "tablenet/preprocess.hpp"

using namespace tablenet;

namespace {

// Textbook global equalization: v -> round((cdf(v) - cdf_min) / (N - cdf_min) * 255).
cv::Mat cdfEqualizeOracle(const cv::Mat& gray) {
  std::array<long, 256> hist{};
  for (int y = 0; y < gray.rows; ++y)
    for (int x = 0; x < gray.cols; ++x) ++hist[gray.at<uchar>(y, x)];
  std::array<long, 256> cdf{};
  long run = 0, cdfMin = -1;
  for (int v = 0; v < 256; ++v) {
    run += hist[static_cast<std::size_t>(v)];
    cdf[static_cast<std::size_t>(v)] = run;
    if (cdfMin < 0 && run > 0) cdfMin = run;
  }
  const long n = static_cast<long>(gray.total());
  cv::Mat out = gray.clone();
  if (n == cdfMin) return out;
  for (int y = 0; y < gray.rows; ++y) {
    for (int x = 0; x < gray.cols; ++x) {
      const long c = cdf[gray.at<uchar>(y, x)];
      out.at<uchar>(y, x) = static_cast<uchar>(std::lround(255.0 * (c - cdfMin) / (n - cdfMin)));
    }
  }
  return out;
}

double maxAbsDiff(const cv::Mat& a, const cv::Mat& b) {
  cv::Mat d;
  cv::absdiff(a, b, d);
  double mx = 0;
  cv::minMaxLoc(d.reshape(1), nullptr, &mx);
  return mx;
}

}  // namespace

TEST_SUITE("preprocess") {
  TEST_CASE("equalizeHistogram degenerate and two-level images") {
    cv::Mat flat(40, 40, CV_8UC1, cv::Scalar(128));
    const cv::Mat eqFlat = equalizeHistogram(flat);
    double mn = 0, mx = 0;
    cv::minMaxLoc(eqFlat, &mn, &mx);
    CHECK(mn == mx);

    cv::Mat two(40, 40, CV_8UC1, cv::Scalar(0));
    two(cv::Range(0, 20), cv::Range::all()).setTo(255);
    CHECK(maxAbsDiff(equalizeHistogram(two), two) == 0.0);
  }

  TEST_CASE("equalizeHistogram matches the CDF oracle") {
    cv::Mat ramp(16, 256, CV_8UC1);
    for (int y = 0; y < ramp.rows; ++y)
      for (int x = 0; x < 256; ++x) ramp.at<uchar>(y, x) = static_cast<uchar>(x);
    const cv::Mat oracle = cdfEqualizeOracle(ramp);
    CHECK(maxAbsDiff(oracle, ramp) <= 1.0);
    CHECK(maxAbsDiff(equalizeHistogram(ramp), oracle) <= 1.0);

    std::mt19937 rng(3);
    cv::Mat noisy(50, 70, CV_8UC1);
    for (int y = 0; y < noisy.rows; ++y)
      for (int x = 0; x < noisy.cols; ++x) noisy.at<uchar>(y, x) = static_cast<uchar>(40 + rng() % 120);
    CHECK(maxAbsDiff(equalizeHistogram(noisy), cdfEqualizeOracle(noisy)) <= 1.0);
  }

  TEST_CASE("equalizeHistogram works per channel") {
    std::mt19937 rng(9);
    std::vector<cv::Mat> planes;
    for (int c = 0; c < 3; ++c) {
      cv::Mat p(30, 30, CV_8UC1);
      for (int y = 0; y < 30; ++y)
        for (int x = 0; x < 30; ++x) p.at<uchar>(y, x) = static_cast<uchar>(rng() % (60 + 60 * c));
      planes.push_back(p);
    }
    cv::Mat rgb;
    cv::merge(planes, rgb);
    const cv::Mat out = equalizeHistogram(rgb);
    REQUIRE(out.type() == CV_8UC3);
    std::vector<cv::Mat> outPlanes;
    cv::split(out, outPlanes);
    for (int c = 0; c < 3; ++c) CHECK(maxAbsDiff(outPlanes[c], cdfEqualizeOracle(planes[c])) <= 1.0);
  }

  TEST_CASE("resizeSample scales boxes with the image") {
    DocumentSample s;
    s.image = cv::Mat(1024, 1024, CV_8UC3, cv::Scalar::all(200));
    s.words = {{"x", {100, 100, 200, 200}, DataType::Other}};
    s.tables = {{100, 100, 200, 200}};
    auto same = resizeSample(s, 1024, 1024);
    CHECK(same.words[0].box == Rect{100, 100, 200, 200});
    CHECK(same.tables[0] == Rect{100, 100, 200, 200});

    s.image = cv::Mat(2048, 2048, CV_8UC3, cv::Scalar::all(200));
    auto half = resizeSample(s, 1024, 1024);
    CHECK(half.words[0].box == Rect{50, 50, 100, 100});
    CHECK(half.image.size() == cv::Size(1024, 1024));

    s.image = cv::Mat(1024, 512, CV_8UC1, cv::Scalar(200));  // 512 wide, 1024 tall
    auto wide = resizeSample(s, 1024, 1024);
    CHECK(wide.words[0].box == Rect{200, 100, 400, 200});
    CHECK(wide.image.type() == CV_8UC3);
  }

  TEST_CASE("resizeSample keeps column containment") {
    std::mt19937 rng(21);
    for (int i = 0; i < 200; ++i) {
      const int w = 300 + static_cast<int>(rng() % 1500), h = 300 + static_cast<int>(rng() % 1500);
      DocumentSample s;
      s.image = cv::Mat(h, w, CV_8UC1, cv::Scalar(255));
      const Rect t{static_cast<int>(rng() % (w / 3)), static_cast<int>(rng() % (h / 3)), w - static_cast<int>(rng() % (w / 3)),
                   h - static_cast<int>(rng() % (h / 3))};
      const int cw = 20 + static_cast<int>(rng() % (t.width() / 2));
      const int overhang = static_cast<int>(rng() % std::max(1, cw / 12));
      const Rect c{t.x0 - std::min(overhang, t.x0), t.y0, t.x0 + cw, t.y1};
      s.tables = {t};
      s.columns = {c};
      if (containmentFraction(c, t) < 0.9) continue;
      const auto r = resizeSample(s, 1024, 1024);
      CHECK(containmentFraction(r.columns[0], r.tables[0]) >= 0.89);
    }
  }

  TEST_CASE("classifyDataType on a labelled word list") {
    const std::vector<std::pair<std::string, DataType>> labelled = {
        {"1,234.50", DataType::Numeric},   {"42", DataType::Numeric},          {"-7", DataType::Numeric},
        {"3.14", DataType::Numeric},       {"12%", DataType::Numeric},         {"+0.5%", DataType::Numeric},
        {"1,000,000", DataType::Numeric},  {".75", DataType::Numeric},         {"0", DataType::Numeric},
        {"99.9", DataType::Numeric},       {"Invoice", DataType::Alphabetic},  {"Total", DataType::Alphabetic},
        {"net", DataType::Alphabetic},     {"O'Neil", DataType::Alphabetic},   {"well-known", DataType::Alphabetic},
        {"May", DataType::Alphabetic},     {"Qty", DataType::Alphabetic},      {"ABC", DataType::Alphabetic},
        {"x", DataType::Alphabetic},       {"Revenue", DataType::Alphabetic},  {"$42.00", DataType::Currency},
        {"$1,234.50", DataType::Currency}, {"€5", DataType::Currency},         {"£12.30", DataType::Currency},
        {"₹1,00", DataType::Other},        {"-$3.00", DataType::Currency},     {"$7", DataType::Currency},
        {"₹250", DataType::Currency},      {"2013-04-17", DataType::Date},     {"17/04/2013", DataType::Date},
        {"4/7/13", DataType::Date},        {"17.04.2013", DataType::Date},     {"17-Apr-2013", DataType::Date},
        {"Apr-2013", DataType::Date},      {"April-17", DataType::Date},       {"3Jan2020", DataType::Date},
        {"Sept-2019", DataType::Date},     {"2020-1-5", DataType::Date},       {"A12b", DataType::Alphanumeric},
        {"INV0042", DataType::Alphanumeric}, {"SKU-123", DataType::Alphanumeric}, {"X7", DataType::Alphanumeric},
        {"3rd", DataType::Alphanumeric},   {"B2B", DataType::Alphanumeric},    {"v1.2", DataType::Alphanumeric},
        {"---", DataType::Other},          {"(12)", DataType::Other},          {"Total:", DataType::Other},
        {"&", DataType::Other},            {"1.2.3", DataType::Other}};
    REQUIRE(labelled.size() == 50);
    for (const auto& [word, expected] : labelled) {
      INFO(word);
      CHECK(classifyDataType(word) == expected);
      CHECK(classifyDataType(word) == classifyDataType(word));
    }
  }

  TEST_CASE("palette defaults and hex colours") {
    HighlightPalette p;
    CHECK_NOTHROW(p.validate());
    CHECK(p.color(DataType::Numeric) == cv::Vec3b(255, 0, 0));
    CHECK(toHexColor(p.color(DataType::Alphabetic)) == "#0000ff");
    CHECK(parseHexColor("#FF8000") == cv::Vec3b(255, 128, 0));
    CHECK_THROWS_AS(parseHexColor("FF8000"), ConfigError);
    CHECK_THROWS_AS(p.setColor(DataType::Other, {255, 255, 255}), ConfigError);
    CHECK_THROWS_AS(p.setColor(DataType::Other, {255, 0, 0}), ConfigError);
    CHECK(p.color(DataType::Other) == cv::Vec3b(0, 255, 255));
  }

  TEST_CASE("highlightWords fixtures") {
    HighlightPalette palette;
    cv::Mat page(64, 64, CV_8UC3, cv::Scalar::all(128));
    CHECK(maxAbsDiff(highlightWords(page, {}, palette, 0.0, 1), page) == 0.0);

    std::vector<WordBox> words = {{"12", {10, 10, 30, 20}, DataType::Numeric}};
    const cv::Mat dropped = highlightWords(page, words, palette, 1.0 - 1e-12, 1);
    CHECK(maxAbsDiff(dropped, page) == 0.0);

    const cv::Mat out = highlightWords(page, words, palette, 0.0, 1);
    for (int y = 0; y < 64; ++y) {
      for (int x = 0; x < 64; ++x) {
        const bool inside = x >= 10 && x < 30 && y >= 10 && y < 20;
        const cv::Vec3b expected = inside ? cv::Vec3b(255, 128, 128) : cv::Vec3b(128, 128, 128);
        REQUIRE(out.at<cv::Vec3b>(y, x) == expected);
      }
    }
    // boxes running off the page are clipped
    words.push_back({"Edge", {50, 50, 90, 90}, DataType::Alphabetic});
    CHECK_NOTHROW(highlightWords(page, words, palette, 0.0, 1));
    CHECK_THROWS_AS(highlightWords(page, words, palette, 1.0, 1), ConfigError);
  }

  TEST_CASE("highlightWords never darkens and is reproducible") {
    std::mt19937 rng(17);
    HighlightPalette palette;
    for (int i = 0; i < 20; ++i) {
      cv::Mat page(48, 48, CV_8UC3);
      cv::randu(page, 0, 256);
      std::vector<WordBox> words;
      for (int k = 0; k < 12; ++k) {
        const int x = static_cast<int>(rng() % 40), y = static_cast<int>(rng() % 40);
        words.push_back({"w", {x, y, x + 1 + static_cast<int>(rng() % 10), y + 1 + static_cast<int>(rng() % 10)},
                         kAllDataTypes[rng() % kAllDataTypes.size()]});
      }
      const cv::Mat a = highlightWords(page, words, palette, 0.3, 99);
      const cv::Mat b = highlightWords(page, words, palette, 0.3, 99);
      CHECK(maxAbsDiff(a, b) == 0.0);
      cv::Mat darker;
      cv::compare(a, page, darker, cv::CMP_LT);
      CHECK(cv::countNonZero(darker.reshape(1)) == 0);
    }
  }

  TEST_CASE("prepareSample produces network-ready tensors") {
    DocumentSample s;
    s.image = cv::Mat(200, 100, CV_8UC1, cv::Scalar(255));
    s.words = {{"$4.00", {10, 10, 40, 20}, DataType::Other}};
    s.tables = {{5, 5, 95, 100}};
    s.columns = {{5, 5, 50, 100}};
    PreprocessConfig cfg;
    cfg.targetSize = 64;
    cfg.dropProb = 0.0;
    const auto p = prepareSample(s, cfg, 1);
    CHECK(p.image.size() == cv::Size(64, 64));
    CHECK(p.image.type() == CV_8UC3);
    CHECK(p.words[0].dtype == DataType::Currency);
    CHECK(p.tableMask.size() == cv::Size(64, 64));
    CHECK(cv::countNonZero(p.columnMask) > 0);
    CHECK(cv::countNonZero(p.columnMask) < cv::countNonZero(p.tableMask));
  }
}

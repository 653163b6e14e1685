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

#include "tablenet/extract.hpp"

#include <algorithm>
#include <numeric>

#include <opencv2/imgproc.hpp>

#include "tablenet/errors.hpp"

namespace tablenet {
namespace {

struct WordRef {
  const WordBox* word;
  std::size_t column;
};

cv::Mat toGray(const cv::Mat& page) {
  if (page.empty() || page.channels() == 1) return page;
  cv::Mat gray;
  cv::cvtColor(page, gray, page.channels() == 4 ? cv::COLOR_RGBA2GRAY : cv::COLOR_RGB2GRAY);
  return gray;
}

// Tight vertical extent of each group, with overlaps between neighbours
// resolved by a cut just below the upper group's lowest center row. Groups
// must be ordered so that every center of group r is above every center of
// group r+1.
std::vector<RowSpan> spansFromGroups(const std::vector<std::vector<const WordBox*>>& groups) {
  std::vector<RowSpan> spans;
  std::vector<int> maxCenter;
  for (const auto& g : groups) {
    RowSpan s{g.front()->box.y0, g.front()->box.y1};
    int mc = wordCenterRow(*g.front());
    for (const auto* w : g) {
      s.y0 = std::min(s.y0, w->box.y0);
      s.y1 = std::max(s.y1, w->box.y1);
      mc = std::max(mc, wordCenterRow(*w));
    }
    spans.push_back(s);
    maxCenter.push_back(mc);
  }
  for (std::size_t r = 0; r + 1 < spans.size(); ++r) {
    if (spans[r].y1 > spans[r + 1].y0) {
      const int cut = maxCenter[r] + 1;
      spans[r].y1 = cut;
      spans[r + 1].y0 = cut;
    }
  }
  return spans;
}

}  // namespace

void ExtractConfig::validate() const {
  if (!(pixelThreshold > 0.5 && pixelThreshold < 1.0)) throw ConfigError("extract.pixel_threshold must lie in (0.5, 1)");
  for (double f : {minRegionAreaFrac, columnOverlapMin, radonPeakFrac, tableOverlapMin, textLineOverlapMin, ruledGapFrac}) {
    if (!(f > 0.0 && f <= 1.0)) throw ConfigError("extract fractions must lie in (0, 1]");
  }
  if (lineDarknessThreshold < 1 || lineDarknessThreshold > 255) {
    throw ConfigError("extract.line_darkness_threshold must lie in [1, 255]");
  }
}

cv::Mat thresholdMask(const cv::Mat& prob, double threshold) {
  CV_Assert(prob.type() == CV_32FC1);
  cv::Mat out(prob.size(), CV_8UC1);
  for (int y = 0; y < prob.rows; ++y) {
    const float* p = prob.ptr<float>(y);
    uchar* o = out.ptr<uchar>(y);
    for (int x = 0; x < prob.cols; ++x) o[x] = static_cast<double>(p[x]) >= threshold ? 1 : 0;
  }
  return out;
}

std::vector<Rect> extractRegions(const cv::Mat& binary, const ExtractConfig& config) {
  std::vector<Rect> out;
  if (binary.empty()) return out;
  cv::Mat bin;
  cv::compare(binary, 0, bin, cv::CMP_NE);
  cv::Mat labels, stats, centroids;
  const int n = cv::connectedComponentsWithStats(bin, labels, stats, centroids, 4, CV_32S);
  const double minArea = config.minRegionAreaFrac * static_cast<double>(binary.total());
  for (int i = 1; i < n; ++i) {
    if (stats.at<int>(i, cv::CC_STAT_AREA) < minArea) continue;
    const int x = stats.at<int>(i, cv::CC_STAT_LEFT), y = stats.at<int>(i, cv::CC_STAT_TOP);
    out.push_back({x, y, x + stats.at<int>(i, cv::CC_STAT_WIDTH), y + stats.at<int>(i, cv::CC_STAT_HEIGHT)});
  }
  std::sort(out.begin(), out.end(), [](const Rect& a, const Rect& b) {
    return std::tie(a.y0, a.x0, a.y1, a.x1) < std::tie(b.y0, b.x0, b.y1, b.x1);
  });
  return out;
}

std::vector<std::vector<std::size_t>> groupTextLines(const std::vector<WordBox>& words, double overlapMin) {
  std::vector<std::size_t> order(words.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return std::pair(wordCenterRow(words[a]), words[a].box.x0) < std::pair(wordCenterRow(words[b]), words[b].box.x0);
  });

  struct Line {
    std::vector<std::size_t> members;
    int y0, y1, lastCenter;
  };
  std::vector<Line> lines;
  for (auto idx : order) {
    const auto& b = words[idx].box;
    const int center = wordCenterRow(words[idx]);
    if (!lines.empty()) {
      auto& line = lines.back();
      const int overlap = intervalOverlap(b.y0, b.y1, line.y0, line.y1);
      const int shorter = std::min(b.height(), line.y1 - line.y0);
      if (center == line.lastCenter || overlap >= overlapMin * shorter) {
        line.members.push_back(idx);
        line.y0 = std::min(line.y0, b.y0);
        line.y1 = std::max(line.y1, b.y1);
        line.lastCenter = center;
        continue;
      }
    }
    lines.push_back({{idx}, b.y0, b.y1, center});
  }

  std::vector<std::vector<std::size_t>> out;
  out.reserve(lines.size());
  for (auto& line : lines) {
    std::stable_sort(line.members.begin(), line.members.end(),
                     [&](std::size_t a, std::size_t b) { return words[a].box.x0 < words[b].box.x0; });
    out.push_back(std::move(line.members));
  }
  return out;
}

std::vector<std::vector<WordBox>> assignWords(const std::vector<WordBox>& words, const Rect& tableRect,
                                              const std::vector<Rect>& columnRects, const ExtractConfig& config) {
  std::vector<std::vector<WordBox>> perColumn(columnRects.size());
  for (const auto& w : words) {
    if (containmentFraction(w.box, tableRect) < config.tableOverlapMin) continue;
    std::optional<std::size_t> best;
    double bestFrac = 0.0;
    for (std::size_t c = 0; c < columnRects.size(); ++c) {
      const double f = containmentFraction(w.box, columnRects[c]);
      if (f < config.columnOverlapMin) continue;
      if (!best || f > bestFrac || (f == bestFrac && columnRects[c].x0 < columnRects[*best].x0)) {
        best = c;
        bestFrac = f;
      }
    }
    if (best) perColumn[*best].push_back(w);
  }
  for (auto& col : perColumn) {
    std::stable_sort(col.begin(), col.end(), [](const WordBox& a, const WordBox& b) {
      return std::pair(a.box.y0, a.box.x0) < std::pair(b.box.y0, b.box.x0);
    });
  }
  return perColumn;
}

bool detectRuleLine(const cv::Mat& strip, const ExtractConfig& config, int* peakRow) {
  if (strip.empty() || strip.cols == 0 || strip.rows == 0) return false;
  const cv::Mat gray = toGray(strip);
  int bestRow = 0, bestInk = -1;
  for (int y = 0; y < gray.rows; ++y) {
    const uchar* p = gray.ptr<uchar>(y);
    int ink = 0;
    for (int x = 0; x < gray.cols; ++x) ink += p[x] < config.lineDarknessThreshold ? 1 : 0;
    if (ink > bestInk) {
      bestInk = ink;
      bestRow = y;
    }
  }
  if (peakRow) *peakRow = bestRow;
  return bestInk >= config.radonPeakFrac * gray.cols;
}

RowSegmentation segmentRows(const std::vector<std::vector<WordBox>>& perColumnWords,
                            const std::vector<Rect>& columnRects, const cv::Mat& page, const ExtractConfig& config) {
  std::vector<WordBox> all;
  for (const auto& col : perColumnWords) all.insert(all.end(), col.begin(), col.end());
  if (all.empty()) return {};

  // Rule 1: horizontal rulings between vertically adjacent words.
  const cv::Mat gray = toGray(page);
  if (!gray.empty()) {
    const Rect pageRect{0, 0, gray.cols, gray.rows};
    std::vector<int> cuts;
    bool ruled = false;
    for (std::size_t c = 0; c < perColumnWords.size() && c < columnRects.size(); ++c) {
      const auto& words = perColumnWords[c];
      const auto lines = groupTextLines(words, config.textLineOverlapMin);
      int pairs = 0, ruledPairs = 0;
      for (std::size_t i = 0; i + 1 < lines.size(); ++i) {
        ++pairs;
        int top = 0, bottom = gray.rows;
        for (auto k : lines[i]) top = std::max(top, words[k].box.y1);
        for (auto k : lines[i + 1]) bottom = std::min(bottom, words[k].box.y0);
        const auto clip = intersect({columnRects[c].x0, top, columnRects[c].x1, bottom}, pageRect);
        if (!clip) continue;
        const cv::Mat strip = gray(cv::Range(clip->y0, clip->y1), cv::Range(clip->x0, clip->x1));
        int peak = 0;
        if (detectRuleLine(strip, config, &peak)) {
          ++ruledPairs;
          cuts.push_back(clip->y0 + peak);
        }
      }
      if (pairs > 0 && ruledPairs >= config.ruledGapFrac * pairs) ruled = true;
    }
    if (ruled) {
      std::sort(cuts.begin(), cuts.end());
      cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
      std::vector<std::vector<const WordBox*>> bins(cuts.size() + 1);
      for (const auto& w : all) {
        const auto bin = std::upper_bound(cuts.begin(), cuts.end(), wordCenterRow(w)) - cuts.begin();
        bins[static_cast<std::size_t>(bin)].push_back(&w);
      }
      std::erase_if(bins, [](const auto& b) { return b.empty(); });
      return {RowRule::RuledLines, spansFromGroups(bins)};
    }
  }

  // Rules 2 and 3 work on table-wide text lines.
  std::vector<std::size_t> columnOf;
  for (std::size_t c = 0; c < perColumnWords.size(); ++c) columnOf.insert(columnOf.end(), perColumnWords[c].size(), c);
  const auto lines = groupTextLines(all, config.textLineOverlapMin);
  std::vector<std::size_t> filled;
  for (const auto& line : lines) {
    std::vector<bool> seen(perColumnWords.size(), false);
    for (auto k : line) seen[columnOf[k]] = true;
    filled.push_back(static_cast<std::size_t>(std::count(seen.begin(), seen.end(), true)));
  }
  const bool everyLineFull =
      std::all_of(filled.begin(), filled.end(), [&](std::size_t n) { return n == perColumnWords.size(); });
  const std::size_t maxFilled = *std::max_element(filled.begin(), filled.end());

  std::vector<std::vector<const WordBox*>> groups;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (groups.empty() || everyLineFull || filled[i] == maxFilled) groups.emplace_back();
    for (auto k : lines[i]) groups.back().push_back(&all[k]);
  }
  return {everyLineFull ? RowRule::FilledLines : RowRule::MaxFilledStart, spansFromGroups(groups)};
}

TableGrid buildTableGrid(const Rect& tableRect, const std::vector<Rect>& columnRects,
                         const std::vector<RowSpan>& rowSpans,
                         const std::vector<std::vector<WordBox>>& perColumnWords) {
  TableGrid grid;
  grid.region = tableRect;
  grid.columns = columnRects;
  grid.rows = rowSpans;
  grid.cells.assign(rowSpans.size(), std::vector<std::string>(columnRects.size()));
  for (std::size_t c = 0; c < columnRects.size() && c < perColumnWords.size(); ++c) {
    std::vector<std::vector<WordBox>> buckets(rowSpans.size());
    for (const auto& w : perColumnWords[c]) {
      const int center = wordCenterRow(w);
      for (std::size_t r = 0; r < rowSpans.size(); ++r) {
        if (rowSpans[r].contains(center)) {
          buckets[r].push_back(w);
          break;
        }
      }
    }
    for (std::size_t r = 0; r < rowSpans.size(); ++r) {
      std::string text;
      for (const auto& line : groupTextLines(buckets[r])) {
        for (auto k : line) {
          if (!text.empty()) text += ' ';
          text += buckets[r][k].text;
        }
      }
      grid.cells[r][c] = std::move(text);
    }
  }
  return grid;
}

std::vector<Rect> columnsForTable(const Rect& table, const std::vector<Rect>& columnRegions) {
  std::vector<Rect> cols;
  for (const auto& c : columnRegions) {
    const auto clipped = intersect(c, table);
    if (clipped && containmentFraction(c, table) >= 0.5) cols.push_back(*clipped);
  }
  std::sort(cols.begin(), cols.end(), [](const Rect& a, const Rect& b) { return a.x0 < b.x0; });
  std::vector<Rect> merged;
  for (const auto& c : cols) {
    if (!merged.empty()) {
      auto& prev = merged.back();
      const int overlap = intervalOverlap(prev.x0, prev.x1, c.x0, c.x1);
      if (overlap > 0.1 * std::min(prev.width(), c.width())) {
        prev = unite(prev, c);
        continue;
      }
    }
    merged.push_back(c);
  }
  return merged;
}

std::vector<TableGrid> extractTables(const cv::Mat& tableBinary, const cv::Mat& columnBinary,
                                     const std::vector<WordBox>& words, const cv::Mat& page,
                                     const ExtractConfig& config) {
  std::vector<TableGrid> grids;
  const auto columnRegions = extractRegions(columnBinary, config);
  for (const auto& table : extractRegions(tableBinary, config)) {
    auto cols = columnsForTable(table, columnRegions);
    if (cols.empty()) cols.push_back(table);
    const auto perColumn = assignWords(words, table, cols, config);
    const auto rows = segmentRows(perColumn, cols, page, config);
    grids.push_back(buildTableGrid(table, cols, rows.rows, perColumn));
  }
  return grids;
}

std::vector<TableGrid> extractTables(const MaskPair& masks, const std::vector<WordBox>& words, const cv::Mat& page,
                                     const ExtractConfig& config) {
  auto toPage = [&](const cv::Mat& prob) {
    if (prob.size() == page.size()) return prob;
    cv::Mat resized;
    cv::resize(prob, resized, page.size(), 0, 0, cv::INTER_LINEAR);
    return resized;
  };
  return extractTables(thresholdMask(toPage(masks.tableProb), config.pixelThreshold),
                       thresholdMask(toPage(masks.columnProb), config.pixelThreshold), words, page, config);
}

}  // namespace tablenet

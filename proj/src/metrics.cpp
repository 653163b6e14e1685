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

#include "tablenet/metrics.hpp"

#include <algorithm>
#include <cstdio>
#include <map>

namespace tablenet {
namespace {

// Decodes one UTF-8 code point starting at text[i]; returns its byte length.
// Invalid lead bytes count as a single byte.
std::size_t codePointLength(std::string_view text, std::size_t i) {
  const auto c = static_cast<unsigned char>(text[i]);
  std::size_t n = 1;
  if ((c & 0xE0) == 0xC0) n = 2;
  else if ((c & 0xF0) == 0xE0) n = 3;
  else if ((c & 0xF8) == 0xF0) n = 4;
  if (i + n > text.size()) return 1;
  for (std::size_t k = 1; k < n; ++k) {
    if ((static_cast<unsigned char>(text[i + k]) & 0xC0) != 0x80) return 1;
  }
  return n;
}

bool isSpace(std::string_view cp) {
  if (cp.size() == 1) {
    const char c = cp[0];
    return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\v' || c == '\f';
  }
  return cp == "\xC2\xA0";  // no-break space
}

std::size_t countCodePoints(std::string_view text) {
  std::size_t n = 0;
  for (std::size_t i = 0; i < text.size(); i += codePointLength(text, i)) ++n;
  return n;
}

double ratio(std::size_t num, std::size_t den) {
  return den == 0 ? 1.0 : static_cast<double>(num) / static_cast<double>(den);
}

}  // namespace

std::string normalizeContent(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  for (std::size_t i = 0; i < text.size();) {
    const auto n = codePointLength(text, i);
    const auto cp = text.substr(i, n);
    i += n;
    if (isSpace(cp)) continue;
    if (n == 1) {
      const char c = cp[0];
      if (c >= 'a' && c <= 'z') out += static_cast<char>(c - 'a' + 'A');
      else if ((c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9')) out += c;
      else out += '_';
    } else {
      out += '_';
    }
  }
  return out;
}

std::vector<CharPoint> charBoxesFromWords(const std::vector<WordBox>& words) {
  std::vector<CharPoint> chars;
  for (const auto& w : words) {
    const auto n = countCodePoints(w.text);
    if (n == 0) continue;
    const double step = static_cast<double>(w.box.width()) / static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) {
      chars.push_back({w.box.x0 + (static_cast<double>(i) + 0.5) * step, w.box.centerY()});
    }
  }
  return chars;
}

PRF makePRF(double recall, double precision) {
  const double sum = recall + precision;
  return {recall, precision, sum > 0.0 ? 2.0 * recall * precision / sum : 0.0};
}

CharLevelResult charLevelPR(const std::vector<Rect>& predicted, const std::vector<Rect>& truth,
                            const std::vector<CharPoint>& chars) {
  if (predicted.empty() && truth.empty()) return {{1.0, 1.0, 1.0}, 0};

  // shared[t][p] = characters inside both truth t and prediction p.
  std::vector<std::size_t> truthCount(truth.size(), 0), predCount(predicted.size(), 0);
  std::vector<std::vector<std::size_t>> shared(truth.size(), std::vector<std::size_t>(predicted.size(), 0));
  for (const auto& ch : chars) {
    std::vector<std::size_t> inPred;
    for (std::size_t p = 0; p < predicted.size(); ++p) {
      if (predicted[p].contains(ch.x, ch.y)) {
        ++predCount[p];
        inPred.push_back(p);
      }
    }
    for (std::size_t t = 0; t < truth.size(); ++t) {
      if (!truth[t].contains(ch.x, ch.y)) continue;
      ++truthCount[t];
      for (auto p : inPred) ++shared[t][p];
    }
  }

  CharLevelResult result;
  double recallSum = 0.0;
  std::size_t recallRegions = 0;
  for (std::size_t t = 0; t < truth.size(); ++t) {
    if (truthCount[t] == 0) continue;
    std::size_t best = 0;
    int touched = 0;
    for (std::size_t p = 0; p < predicted.size(); ++p) {
      best = std::max(best, shared[t][p]);
      touched += shared[t][p] > 0 ? 1 : 0;
    }
    if (touched > 1) ++result.splitTruthRegions;
    recallSum += ratio(best, truthCount[t]);
    ++recallRegions;
  }
  double precisionSum = 0.0;
  std::size_t precisionRegions = 0;
  for (std::size_t p = 0; p < predicted.size(); ++p) {
    if (predCount[p] == 0) continue;
    std::size_t best = 0;
    for (std::size_t t = 0; t < truth.size(); ++t) best = std::max(best, shared[t][p]);
    precisionSum += ratio(best, predCount[p]);
    ++precisionRegions;
  }
  const double recall = recallRegions ? recallSum / static_cast<double>(recallRegions) : 1.0;
  const double precision = precisionRegions ? precisionSum / static_cast<double>(precisionRegions) : 1.0;
  result.score = makePRF(recall, precision);
  return result;
}

std::vector<AdjacencyRelation> cellAdjacencyRelations(const TableGrid& grid) {
  const std::size_t rows = grid.cells.size();
  std::vector<std::vector<std::string>> norm(rows);
  for (std::size_t r = 0; r < rows; ++r) {
    for (const auto& cell : grid.cells[r]) norm[r].push_back(normalizeContent(cell));
  }
  std::vector<AdjacencyRelation> out;
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < norm[r].size(); ++c) {
      if (norm[r][c].empty()) continue;
      for (std::size_t k = c + 1; k < norm[r].size(); ++k) {
        if (!norm[r][k].empty()) {
          out.emplace_back(norm[r][c], norm[r][k], Direction::Horizontal);
          break;
        }
      }
      for (std::size_t k = r + 1; k < rows; ++k) {
        if (c < norm[k].size() && !norm[k][c].empty()) {
          out.emplace_back(norm[r][c], norm[k][c], Direction::Vertical);
          break;
        }
      }
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

PRF extractionPR(const std::vector<TableGrid>& predicted, const std::vector<TableGrid>& truth) {
  std::map<AdjacencyRelation, std::size_t> truthCounts;
  std::size_t truthTotal = 0, predTotal = 0, matched = 0;
  for (const auto& g : truth) {
    for (auto& rel : cellAdjacencyRelations(g)) {
      ++truthCounts[rel];
      ++truthTotal;
    }
  }
  for (const auto& g : predicted) {
    for (const auto& rel : cellAdjacencyRelations(g)) {
      ++predTotal;
      auto it = truthCounts.find(rel);
      if (it != truthCounts.end() && it->second > 0) {
        --it->second;
        ++matched;
      }
    }
  }
  return makePRF(ratio(matched, truthTotal), ratio(matched, predTotal));
}

PRF EvalReport::macro(std::string_view task) const {
  PRF sum;
  std::size_t n = 0;
  for (const auto& d : perDocument) {
    if (d.task != task) continue;
    sum.recall += d.score.recall;
    sum.precision += d.score.precision;
    sum.f1 += d.score.f1;
    ++n;
  }
  if (n == 0) return {};
  const double k = static_cast<double>(n);
  return {sum.recall / k, sum.precision / k, sum.f1 / k};
}

Json EvalReport::toJson() const {
  Json docs = Json::array();
  std::vector<std::string> tasks;
  for (const auto& d : perDocument) {
    Json j = {{"document", d.document},
              {"task", d.task},
              {"recall", d.score.recall},
              {"precision", d.score.precision},
              {"f1", d.score.f1}};
    if (d.task == "detection") j["split_truth_regions"] = d.splitTruthRegions;
    docs.push_back(std::move(j));
    if (std::find(tasks.begin(), tasks.end(), d.task) == tasks.end()) tasks.push_back(d.task);
  }
  Json macroJson = Json::object();
  for (const auto& t : tasks) {
    const auto m = macro(t);
    macroJson[t] = {{"recall", m.recall}, {"precision", m.precision}, {"f1", m.f1}};
  }
  return {{"per_document", docs}, {"macro", macroJson}};
}

std::string EvalReport::toCsv() const {
  std::string out = "document,task,precision,recall,f1\n";
  char buf[96];
  for (const auto& d : perDocument) {
    std::snprintf(buf, sizeof buf, ",%.6f,%.6f,%.6f\n", d.score.precision, d.score.recall, d.score.f1);
    out += d.document + "," + d.task + buf;
  }
  return out;
}

}  // namespace tablenet

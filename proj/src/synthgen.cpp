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

#include "tablenet/synthgen.hpp"

#include <algorithm>
#include <array>
#include <cstdio>
#include <random>

#include <opencv2/imgproc.hpp>

#include "tablenet/errors.hpp"
#include "tablenet/font.hpp"
#include "tablenet/serialize.hpp"

namespace tablenet {
namespace {

constexpr std::array kWords = {
    "Invoice", "Total",  "Amount", "Widget", "Service", "Region",  "North",  "South",  "Revenue", "Cost",
    "Margin",  "Delta",  "Alpha",  "Beta",   "Gamma",   "Steel",   "Copper", "Paper",  "Office",  "Travel",
    "Hotel",   "Fuel",   "Salary", "Rent",   "Tax",     "Net",     "Gross",  "Item",   "Unit",    "Price",
    "Name",    "Status", "Active", "Closed", "Pending", "Review",  "Market", "Sector", "Energy",  "Health",
    "Retail",  "Mining", "Cargo",  "Bonds",  "Equity",  "Freight", "Labour", "Rental", "Parts",   "Repair"};

constexpr std::array kHeaders = {"Item", "Qty",    "Price",  "Date",   "Code",  "Amount", "Region", "Status",
                                 "Name", "Value",  "Change", "Issued", "Due",   "Ref",    "Total",  "Units",
                                 "Rate", "Sector", "Share",  "Period", "Class", "Owner"};

constexpr std::array kProse = {"the",    "report",  "shows",  "annual", "results", "for",   "each",   "division",
                               "and",    "summary", "figures", "are",   "listed",  "below", "as",     "of",
                               "period", "with",    "notes",  "on",     "changes", "in",    "budget", "terms"};

constexpr std::array kMonths = {"Jan", "Feb", "Mar", "Apr", "May", "Jun", "Jul", "Aug", "Sep", "Oct", "Nov", "Dec"};

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}
  // Own mapping from raw bits keeps corpora identical across standard libraries.
  int uniformInt(int lo, int hi) {
    const auto span = static_cast<std::uint64_t>(hi - lo + 1);
    return lo + static_cast<int>(gen_() % span);
  }
  double uniform01() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }
  bool chance(double p) { return uniform01() < p; }
  template <typename C>
  auto pick(const C& c) {
    return c[static_cast<std::size_t>(uniformInt(0, static_cast<int>(c.size()) - 1))];
  }

 private:
  std::mt19937_64 gen_;
};

std::string grouped(long long v) {
  std::string digits = std::to_string(v);
  std::string out;
  const int n = static_cast<int>(digits.size());
  for (int i = 0; i < n; ++i) {
    if (i > 0 && (n - i) % 3 == 0) out += ',';
    out += digits[static_cast<std::size_t>(i)];
  }
  return out;
}

std::string numericText(Rng& rng) {
  char buf[32];
  switch (rng.uniformInt(0, 3)) {
    case 0: return std::to_string(rng.uniformInt(1, 999));
    case 1: return grouped(rng.uniformInt(1000, 99999));
    case 2:
      std::snprintf(buf, sizeof buf, "%s.%02d", grouped(rng.uniformInt(0, 9999)).c_str(), rng.uniformInt(0, 99));
      return buf;
    default:
      std::snprintf(buf, sizeof buf, "%d.%d%%", rng.uniformInt(0, 99), rng.uniformInt(0, 9));
      return buf;
  }
}

std::string currencyText(Rng& rng) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "$%s.%02d", grouped(rng.uniformInt(1, 99999)).c_str(), rng.uniformInt(0, 99));
  return buf;
}

std::string dateText(Rng& rng) {
  char buf[32];
  const int y = rng.uniformInt(2000, 2020), m = rng.uniformInt(1, 12), d = rng.uniformInt(1, 28);
  switch (rng.uniformInt(0, 2)) {
    case 0: std::snprintf(buf, sizeof buf, "%04d-%02d-%02d", y, m, d); break;
    case 1: std::snprintf(buf, sizeof buf, "%02d/%02d/%04d", d, m, y); break;
    default: std::snprintf(buf, sizeof buf, "%02d-%s-%04d", d, kMonths[static_cast<std::size_t>(m - 1)], y); break;
  }
  return buf;
}

std::string alphanumericText(Rng& rng) {
  static constexpr std::array prefixes = {"A", "B", "X", "INV", "SKU", "PO", "K"};
  std::string s = rng.pick(prefixes);
  s += std::to_string(rng.uniformInt(1, 9999));
  if (rng.chance(0.3)) s += static_cast<char>('a' + rng.uniformInt(0, 25));
  return s;
}

// One text line of a cell: its words.
using CellLine = std::vector<std::pair<std::string, DataType>>;

std::vector<CellLine> cellContent(Rng& rng, DataType type, bool multiLine) {
  switch (type) {
    case DataType::Numeric: return {{{numericText(rng), type}}};
    case DataType::Currency: return {{{currencyText(rng), type}}};
    case DataType::Date: return {{{dateText(rng), type}}};
    case DataType::Alphanumeric: return {{{alphanumericText(rng), type}}};
    default: break;
  }
  const int lines = multiLine ? rng.uniformInt(2, 3) : 1;
  std::vector<CellLine> out;
  for (int l = 0; l < lines; ++l) {
    CellLine line{{rng.pick(kWords), DataType::Alphabetic}};
    if (rng.chance(0.3)) line.emplace_back(rng.pick(kWords), DataType::Alphabetic);
    out.push_back(std::move(line));
  }
  return out;
}

int lineChars(const CellLine& line) {
  int n = 0;
  for (const auto& [w, t] : line) n += static_cast<int>(w.size());
  return n + static_cast<int>(line.size()) - 1;
}

struct Page {
  cv::Mat image;
  std::vector<WordBox> words;
  std::vector<Rect> tables, columns;
  std::vector<TableGrid> truth;
};

void placeLine(Page& page, const MonoFont& font, const CellLine& line, int x, int top) {
  for (const auto& [text, type] : line) {
    page.words.push_back({text, font.textBox(text, x, top), type});
    font.draw(page.image, text, x, top, cv::Scalar(0, 0, 0));
    x += (static_cast<int>(text.size()) + 1) * font.advance();
  }
}

int placeParagraph(Page& page, const MonoFont& font, Rng& rng, const SynthSpec& spec, int y, int lines,
                   int margin) {
  const int lineGap = font.lineHeight() / 2;
  for (int l = 0; l < lines; ++l) {
    const int maxChars = (spec.pageWidth - 2 * margin) / font.advance();
    const int target = static_cast<int>(maxChars * (0.55 + 0.45 * rng.uniform01()));
    CellLine line;
    int used = 0;
    while (true) {
      std::string w = rng.pick(kProse);
      const int extra = static_cast<int>(w.size()) + (line.empty() ? 0 : 1);
      if (used + extra > target) break;
      used += extra;
      line.emplace_back(std::move(w), DataType::Alphabetic);
    }
    if (!line.empty()) placeLine(page, font, line, margin, y);
    y += font.lineHeight() + lineGap;
  }
  return y;
}

}  // namespace

void SynthSpec::validate() const {
  if (pageWidth < 64 || pageHeight < 64) throw ConfigError("synth page must be at least 64x64");
  if (nTables < 0 || nTables > 2) throw ConfigError("synth nTables must be 0, 1 or 2");
  if (minColumns < 1 || maxColumns < minColumns) throw ConfigError("synth column range is invalid");
  if (minRows < 1 || maxRows < minRows) throw ConfigError("synth row range is invalid");
  if (multiLineCellProb < 0.0 || multiLineCellProb > 1.0) throw ConfigError("multiLineCellProb must lie in [0,1]");
  if (fontSize < 6) throw ConfigError("synth font size must be at least 6");
}

SynthPage generate(const SynthSpec& spec) {
  spec.validate();
  Rng rng(spec.seed);
  const MonoFont font(spec.fontSize);
  const int adv = font.advance();
  const int lh = font.lineHeight();
  const int margin = std::max(8, spec.pageWidth / 25);
  const int padX = adv, padY = std::max(3, lh / 3), textLineGap = 2;
  const int gap = spec.columnGapChars * adv;

  Page page;
  page.image = cv::Mat(spec.pageHeight, spec.pageWidth, CV_8UC3, cv::Scalar(255, 255, 255));
  int y = margin;
  if (spec.bodyText) y = placeParagraph(page, font, rng, spec, y, rng.uniformInt(2, 4), margin) + lh;

  for (int t = 0; t < spec.nTables; ++t) {
    const int ncols = rng.uniformInt(spec.minColumns, spec.maxColumns);
    const int nrows = rng.uniformInt(spec.minRows, spec.maxRows);
    std::vector<DataType> types(static_cast<std::size_t>(ncols));
    for (int c = 0; c < ncols; ++c) {
      if (!spec.columnTypes.empty()) {
        types[static_cast<std::size_t>(c)] = spec.columnTypes[static_cast<std::size_t>(c) % spec.columnTypes.size()];
      } else if (c == 0) {
        types[0] = DataType::Alphabetic;
      } else {
        static constexpr std::array mix = {DataType::Numeric, DataType::Currency, DataType::Date,
                                           DataType::Alphanumeric, DataType::Alphabetic};
        types[static_cast<std::size_t>(c)] = rng.pick(mix);
      }
    }

    // content[r][c] = lines of the cell; row 0 is the header.
    std::vector<std::vector<std::vector<CellLine>>> content(static_cast<std::size_t>(nrows));
    for (int r = 0; r < nrows; ++r) {
      for (int c = 0; c < ncols; ++c) {
        if (r == 0) {
          content[0].push_back({CellLine{{rng.pick(kHeaders), DataType::Alphabetic}}});
        } else {
          const bool multi = c == 0 && rng.chance(spec.multiLineCellProb);
          content[static_cast<std::size_t>(r)].push_back(cellContent(rng, types[static_cast<std::size_t>(c)], multi));
        }
      }
    }

    std::vector<int> colChars(static_cast<std::size_t>(ncols), 1);
    for (const auto& row : content) {
      for (int c = 0; c < ncols; ++c) {
        for (const auto& line : row[static_cast<std::size_t>(c)]) {
          colChars[static_cast<std::size_t>(c)] = std::max(colChars[static_cast<std::size_t>(c)], lineChars(line));
        }
      }
    }
    int tableWidth = 2 * padX + gap * (ncols - 1);
    for (int w : colChars) tableWidth += w * adv;
    if (tableWidth > spec.pageWidth - 2 * margin) throw LayoutError("table too wide for the page");

    std::vector<int> rowHeights;
    int tableHeight = 0;
    for (const auto& row : content) {
      std::size_t lines = 1;
      for (const auto& cell : row) lines = std::max(lines, cell.size());
      const int h = static_cast<int>(lines) * lh + static_cast<int>(lines - 1) * textLineGap + 2 * padY;
      rowHeights.push_back(h);
      tableHeight += h;
    }
    if (y + tableHeight > spec.pageHeight - margin) throw LayoutError("too many rows for the page");

    const int slack = spec.pageWidth - 2 * margin - tableWidth;
    const int tx0 = margin + rng.uniformInt(0, slack);
    const int ty0 = y;
    const Rect tableRect{tx0, ty0, tx0 + tableWidth, ty0 + tableHeight};

    TableGrid grid;
    grid.region = tableRect;
    std::vector<int> colX;
    int x = tx0 + padX;
    for (int c = 0; c < ncols; ++c) {
      colX.push_back(x);
      const int w = colChars[static_cast<std::size_t>(c)] * adv;
      grid.columns.push_back({x - adv / 2, ty0, x + w + adv / 2, ty0 + tableHeight});
      x += w + gap;
    }
    int rowTop = ty0;
    for (int r = 0; r < nrows; ++r) {
      grid.rows.push_back({rowTop, rowTop + rowHeights[static_cast<std::size_t>(r)]});
      std::vector<std::string> cells;
      for (int c = 0; c < ncols; ++c) {
        const auto& cell = content[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)];
        const bool rightAlign = r > 0 && (types[static_cast<std::size_t>(c)] == DataType::Numeric ||
                                          types[static_cast<std::size_t>(c)] == DataType::Currency);
        std::string text;
        for (std::size_t l = 0; l < cell.size(); ++l) {
          const int top = rowTop + padY + static_cast<int>(l) * (lh + textLineGap);
          const int shift = rightAlign ? (colChars[static_cast<std::size_t>(c)] - lineChars(cell[l])) * adv : 0;
          placeLine(page, font, cell[l], colX[static_cast<std::size_t>(c)] + shift, top);
          for (const auto& [w, type] : cell[l]) text += (text.empty() ? "" : " ") + w;
        }
        cells.push_back(std::move(text));
      }
      grid.cells.push_back(std::move(cells));
      rowTop += rowHeights[static_cast<std::size_t>(r)];
    }

    if (spec.ruled) {
      const cv::Scalar ink(0, 0, 0);
      const int right = tableRect.x1 - 1, bottom = tableRect.y1 - 1;
      for (const auto& row : grid.rows) cv::line(page.image, {tx0, row.y0}, {right, row.y0}, ink, 1, cv::LINE_8);
      cv::line(page.image, {tx0, bottom}, {right, bottom}, ink, 1, cv::LINE_8);
      cv::line(page.image, {tx0, ty0}, {tx0, bottom}, ink, 1, cv::LINE_8);
      cv::line(page.image, {right, ty0}, {right, bottom}, ink, 1, cv::LINE_8);
      for (int c = 0; c + 1 < ncols; ++c) {
        const int vx = (grid.columns[static_cast<std::size_t>(c)].x1 + grid.columns[static_cast<std::size_t>(c) + 1].x0) / 2;
        cv::line(page.image, {vx, ty0}, {vx, bottom}, ink, 1, cv::LINE_8);
      }
    }

    page.tables.push_back(tableRect);
    page.columns.insert(page.columns.end(), grid.columns.begin(), grid.columns.end());
    page.truth.push_back(std::move(grid));
    y = tableRect.y1 + 2 * lh;
    if (spec.bodyText) {
      const int lines = rng.uniformInt(1, 3);
      const int needed = lines * (lh + lh / 2);
      if (y + needed <= spec.pageHeight - margin) y = placeParagraph(page, font, rng, spec, y, lines, margin) + lh;
    }
  }

  SynthPage out;
  out.sample.id = "synth-" + std::to_string(spec.seed);
  out.sample.image = std::move(page.image);
  out.sample.words = std::move(page.words);
  out.sample.tables = std::move(page.tables);
  out.sample.columns = std::move(page.columns);
  out.truth = std::move(page.truth);
  return out;
}

SynthSpec corpusSpec(SynthKind kind, std::uint64_t seed, int index) {
  // splitmix-style derivation so neighbouring pages get unrelated streams
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * static_cast<std::uint64_t>(index + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  z ^= z >> 31;
  Rng rng(z);

  SynthSpec spec;
  spec.seed = z;
  if (kind == SynthKind::Mixed) {
    static constexpr std::array kinds = {SynthKind::Ruled, SynthKind::UnruledFilled, SynthKind::UnruledMultiLine};
    kind = kinds[static_cast<std::size_t>(index % 3)];
  }
  spec.nTables = rng.chance(0.25) ? 2 : 1;
  spec.maxRows = spec.nTables == 2 ? 8 : 12;
  switch (kind) {
    case SynthKind::Ruled: spec.ruled = true; break;
    case SynthKind::UnruledFilled: break;
    case SynthKind::UnruledMultiLine:
      spec.multiLineCellProb = 0.5;
      spec.maxRows = spec.nTables == 2 ? 5 : 8;
      break;
    case SynthKind::Mixed: break;
  }
  return spec;
}

SynthPage generateFitting(SynthSpec spec, int attempts) {
  for (int i = 0;; ++i) {
    try {
      return generate(spec);
    } catch (const LayoutError&) {
      if (i + 1 >= attempts) throw;
      spec.seed = spec.seed * 6364136223846793005ULL + 1442695040888963407ULL;
    }
  }
}

SynthBundlePaths writePageBundle(const SynthPage& page, const std::filesystem::path& dir, const std::string& stem) {
  std::filesystem::create_directories(dir);
  SynthBundlePaths p{dir / (stem + ".png"), dir / (stem + ".words.tsv"), dir / (stem + ".json"),
                     dir / (stem + ".grid.json")};
  writeImageRgb(p.image, page.sample.image);
  writeFileAtomic(p.words, wordBoxesToTsv(page.sample.words));
  Annotations ann{page.sample.width(), page.sample.height(), page.sample.tables, page.sample.columns};
  writeJsonFile(p.annotation, annotationsToJson(ann));
  DocumentResult doc{stem, page.sample.width(), page.sample.height(), p.words.filename().string(), page.truth};
  writeJsonFile(p.grid, documentsToJson({doc}));
  return p;
}

DatasetManifest writeCorpus(const std::filesystem::path& dir, int n, std::uint64_t seed, SynthKind kind,
                            int valCount) {
  DatasetManifest manifest;
  for (int i = 0; i < n; ++i) {
    char stem[32];
    std::snprintf(stem, sizeof stem, "page_%04d", i);
    const auto page = generateFitting(corpusSpec(kind, seed, i));
    const auto paths = writePageBundle(page, dir, stem);
    manifest.entries.push_back({stem, paths.image, paths.words, paths.annotation,
                                i >= n - valCount ? Split::Val : Split::Train});
  }
  writeJsonFile(dir / "manifest.json", manifestToJson(manifest, dir));
  return manifest;
}

}  // namespace tablenet

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

#include "tablenet/serialize.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "tablenet/errors.hpp"

namespace tablenet {
namespace {

// nlohmann reports byte offsets; convert to a 1-based line number.
std::size_t lineOfOffset(const std::string& text, std::size_t offset) {
  offset = std::min(offset, text.size());
  return 1 + static_cast<std::size_t>(std::count(text.begin(), text.begin() + offset, '\n'));
}

std::string csvQuote(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

}  // namespace

Json rectToJson(const Rect& r) { return Json::array({r.x0, r.y0, r.x1, r.y1}); }

Rect rectFromJson(const Json& j, const std::string& field) {
  if (!j.is_array() || j.size() != 4) throw ParseError(field, 0, "expected [x0,y0,x1,y1]");
  for (const auto& v : j) {
    if (!v.is_number_integer()) throw ParseError(field, 0, "rect coordinates must be integers");
  }
  return {j[0].get<int>(), j[1].get<int>(), j[2].get<int>(), j[3].get<int>()};
}

Json gridToJson(const TableGrid& grid) {
  Json cols = Json::array();
  for (const auto& c : grid.columns) cols.push_back(rectToJson(c));
  Json rows = Json::array();
  for (const auto& r : grid.rows) rows.push_back(Json::array({r.y0, r.y1}));
  return {{"region", rectToJson(grid.region)}, {"columns", cols}, {"rows", rows}, {"cells", grid.cells}};
}

TableGrid gridFromJson(const Json& j) {
  if (!j.is_object()) throw ParseError("grid", 0, "expected a TableGrid object");
  TableGrid g;
  g.region = rectFromJson(j.at("region"), "region");
  for (std::size_t i = 0; i < j.at("columns").size(); ++i) {
    g.columns.push_back(rectFromJson(j["columns"][i], "columns[" + std::to_string(i) + "]"));
  }
  for (std::size_t i = 0; i < j.at("rows").size(); ++i) {
    const auto& r = j["rows"][i];
    if (!r.is_array() || r.size() != 2) throw ParseError("rows[" + std::to_string(i) + "]", 0, "expected [y0,y1]");
    g.rows.push_back({r[0].get<int>(), r[1].get<int>()});
  }
  g.cells = j.at("cells").get<std::vector<std::vector<std::string>>>();
  validateGrid(g);
  return g;
}

std::vector<DocumentResult> documentsFromJson(const Json& j) {
  std::vector<DocumentResult> docs;
  try {
    if (j.is_object() && j.contains("documents")) {
      for (const auto& d : j.at("documents")) {
        DocumentResult doc;
        doc.id = d.value("id", std::string{});
        if (d.contains("image_size")) {
          doc.imageWidth = d["image_size"].at(0).get<int>();
          doc.imageHeight = d["image_size"].at(1).get<int>();
        }
        doc.wordsPath = d.value("words", std::string{});
        for (const auto& g : d.at("tables")) doc.tables.push_back(gridFromJson(g));
        docs.push_back(std::move(doc));
      }
    } else if (j.is_object()) {
      docs.push_back({"document", 0, 0, "", {gridFromJson(j)}});
    } else if (j.is_array()) {
      DocumentResult doc{"document", 0, 0, "", {}};
      for (const auto& g : j) doc.tables.push_back(gridFromJson(g));
      docs.push_back(std::move(doc));
    } else {
      throw ParseError("documents", 0, "expected an object or array");
    }
  } catch (const Json::exception& e) {
    throw ParseError("documents", 0, e.what());
  }
  return docs;
}

Json documentsToJson(const std::vector<DocumentResult>& docs) {
  Json arr = Json::array();
  for (const auto& d : docs) {
    Json tables = Json::array();
    for (const auto& g : d.tables) tables.push_back(gridToJson(g));
    Json doc = {{"id", d.id}, {"image_size", {d.imageWidth, d.imageHeight}}, {"tables", tables}};
    if (!d.wordsPath.empty()) doc["words"] = d.wordsPath;
    arr.push_back(std::move(doc));
  }
  return {{"documents", arr}};
}

Json readJsonFile(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError(path.string(), 0, "cannot open file");
  std::stringstream ss;
  ss << in.rdbuf();
  const std::string text = ss.str();
  try {
    return Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw ParseError(path.string(), lineOfOffset(text, e.byte), e.what());
  }
}

void writeFileAtomic(const std::filesystem::path& path, const std::string& contents) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + tmp.string());
    out << contents;
    if (!out) throw Error("write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

void writeJsonFile(const std::filesystem::path& path, const Json& j) { writeFileAtomic(path, j.dump(2) + "\n"); }

std::string gridToCsv(const TableGrid& grid) {
  std::string out;
  for (const auto& row : grid.cells) {
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (c) out += ',';
      out += csvQuote(row[c]);
    }
    out += '\n';
  }
  return out;
}

}  // namespace tablenet

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

#include "tablenet/ingestion.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <set>
#include <sstream>

#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

#include "tablenet/errors.hpp"

namespace tablenet {
namespace {

std::string readText(const std::filesystem::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw ParseError(file.string(), 0, "cannot open file");
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n\v\f");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n\v\f");
  return s.substr(first, last - first + 1);
}

std::vector<std::string_view> splitTabs(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find('\t', start);
    if (pos == std::string_view::npos) {
      out.push_back(line.substr(start));
      break;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
  return out;
}

bool parseInt(std::string_view s, int& out) {
  s = trim(s);
  if (s.empty()) return false;
  const auto* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, out);
  return ec == std::errc{} && ptr == end;
}

std::vector<Rect> parseRectList(const Json& root, const char* key, const std::string& source,
                                const std::string& text) {
  std::vector<Rect> out;
  if (!root.contains(key)) return out;
  const auto& arr = root[key];
  if (!arr.is_array()) throw ParseError(source, 1, std::string("field '") + key + "' must be an array");
  for (std::size_t i = 0; i < arr.size(); ++i) {
    const std::string field = std::string(key) + "[" + std::to_string(i) + "]";
    Rect r;
    try {
      r = rectFromJson(arr[i], field);
    } catch (const ParseError& e) {
      // Report the field together with the line it appears on.
      const auto needle = std::string("\"") + key + "\"";
      const auto pos = text.find(needle);
      const std::size_t line =
          pos == std::string::npos ? 0 : 1 + std::count(text.begin(), text.begin() + pos, '\n');
      throw ParseError(source, line, field + ": expected [x0,y0,x1,y1] of integers");
    }
    if (!r.valid()) {
      std::ostringstream os;
      os << field << " " << r << " is not a valid rectangle";
      throw ValidationError(os.str());
    }
    out.push_back(r);
  }
  return out;
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  if (p.empty()) return {};
  std::filesystem::path path(p);
  return path.is_absolute() ? path : (base / path).lexically_normal();
}

}  // namespace

Annotations parseAnnotationsText(std::string_view textView, const std::string& source) {
  const std::string text(textView);
  Json root;
  try {
    root = Json::parse(text);
  } catch (const Json::parse_error& e) {
    const auto offset = std::min<std::size_t>(e.byte, text.size());
    throw ParseError(source, 1 + std::count(text.begin(), text.begin() + offset, '\n'), e.what());
  }
  if (!root.is_object()) throw ParseError(source, 1, "annotation root must be an object");

  Annotations a;
  if (root.contains("image_size")) {
    const auto& sz = root["image_size"];
    if (!sz.is_array() || sz.size() != 2 || !sz[0].is_number_integer() || !sz[1].is_number_integer()) {
      throw ParseError(source, 1, "field 'image_size' must be [W,H]");
    }
    a.imageWidth = sz[0].get<int>();
    a.imageHeight = sz[1].get<int>();
  }
  a.tables = parseRectList(root, "tables", source, text);
  a.columns = parseRectList(root, "columns", source, text);
  for (std::size_t i = 0; i < a.columns.size(); ++i) {
    const auto& c = a.columns[i];
    const bool ok = std::any_of(a.tables.begin(), a.tables.end(),
                                [&](const Rect& t) { return containmentFraction(c, t) >= kColumnInTableMin; });
    if (!ok) {
      std::ostringstream os;
      os << source << ": columns[" << i << "] " << c << " is not contained in any table";
      throw ValidationError(os.str());
    }
  }
  return a;
}

Annotations parseAnnotations(const std::filesystem::path& file) {
  return parseAnnotationsText(readText(file), file.string());
}

Json annotationsToJson(const Annotations& a) {
  Json tables = Json::array();
  for (const auto& t : a.tables) tables.push_back(rectToJson(t));
  Json columns = Json::array();
  for (const auto& c : a.columns) columns.push_back(rectToJson(c));
  return {{"image_size", {a.imageWidth, a.imageHeight}}, {"tables", tables}, {"columns", columns}};
}

std::vector<WordBox> parseWordBoxesText(std::string_view text, const std::string& source) {
  std::vector<WordBox> words;
  bool tesseract = false;
  std::size_t lineNo = 0;
  std::istringstream in{std::string(text)};
  std::string raw;
  while (std::getline(in, raw)) {
    ++lineNo;
    std::string_view line = raw;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (trim(line).empty() || line.front() == '#') continue;
    auto fields = splitTabs(line);
    if (lineNo == 1 && fields.size() >= 12 && fields[0] == "level" && fields[1] == "page_num") {
      tesseract = true;
      continue;
    }

    std::string_view wordText;
    int x0 = 0, y0 = 0, x1 = 0, y1 = 0;
    if (tesseract) {
      // level page block par line word left top width height conf text
      if (fields.size() < 11) throw ParseError(source, lineNo, "expected 12 tesseract TSV fields");
      int level = 0, w = 0, h = 0;
      if (!parseInt(fields[0], level) || !parseInt(fields[6], x0) || !parseInt(fields[7], y0) ||
          !parseInt(fields[8], w) || !parseInt(fields[9], h)) {
        throw ParseError(source, lineNo, "non-integer geometry in tesseract TSV row");
      }
      if (level != 5) continue;
      wordText = fields.size() > 11 ? fields[11] : std::string_view{};
      x1 = x0 + w;
      y1 = y0 + h;
    } else {
      if (fields.size() != 5) {
        throw ParseError(source, lineNo, "expected 5 tab-separated fields, got " + std::to_string(fields.size()));
      }
      if (!parseInt(fields[1], x0) || !parseInt(fields[2], y0) || !parseInt(fields[3], x1) ||
          !parseInt(fields[4], y1)) {
        throw ParseError(source, lineNo, "coordinates must be integers");
      }
      wordText = fields[0];
    }
    wordText = trim(wordText);
    if (wordText.empty()) continue;
    if (x0 < 0 || y0 < 0 || x1 < 0 || y1 < 0) {
      throw ValidationError(source + ":" + std::to_string(lineNo) + ": negative coordinates");
    }
    Rect box{x0, y0, x1, y1};
    if (!box.valid()) throw ValidationError(source + ":" + std::to_string(lineNo) + ": empty word box");
    words.push_back({std::string(wordText), box, DataType::Other});
  }
  return words;
}

std::vector<WordBox> parseWordBoxes(const std::filesystem::path& file) {
  return parseWordBoxesText(readText(file), file.string());
}

std::string wordBoxesToTsv(const std::vector<WordBox>& words) {
  std::string out;
  for (const auto& w : words) {
    std::string text = w.text;
    std::replace_if(text.begin(), text.end(), [](char c) { return c == '\t' || c == '\n' || c == '\r'; }, ' ');
    out += text + '\t' + std::to_string(w.box.x0) + '\t' + std::to_string(w.box.y0) + '\t' +
           std::to_string(w.box.x1) + '\t' + std::to_string(w.box.y1) + '\n';
  }
  return out;
}

Rect scaleRect(const Rect& r, int srcW, int srcH, int outW, int outH) {
  auto scale = [](int v, int src, int out) {
    const std::int64_t num = 2LL * v * out + src;
    return static_cast<int>(num / (2LL * src));
  };
  return {scale(r.x0, srcW, outW), scale(r.y0, srcH, outH), scale(r.x1, srcW, outW), scale(r.y1, srcH, outH)};
}

std::pair<cv::Mat, cv::Mat> rasterizeMasks(const DocumentSample& sample, int outH, int outW) {
  if (outH <= 0 || outW <= 0) throw ValidationError("mask size must be positive");
  const int srcW = sample.width() > 0 ? sample.width() : outW;
  const int srcH = sample.height() > 0 ? sample.height() : outH;
  cv::Mat table = cv::Mat::zeros(outH, outW, CV_8UC1);
  cv::Mat column = cv::Mat::zeros(outH, outW, CV_8UC1);
  auto fill = [&](cv::Mat& m, const Rect& r) {
    const Rect s = scaleRect(r, srcW, srcH, outW, outH);
    const int x0 = std::clamp(s.x0, 0, outW), x1 = std::clamp(s.x1, 0, outW);
    const int y0 = std::clamp(s.y0, 0, outH), y1 = std::clamp(s.y1, 0, outH);
    if (x1 > x0 && y1 > y0) m(cv::Range(y0, y1), cv::Range(x0, x1)).setTo(1);
  };
  for (const auto& t : sample.tables) fill(table, t);
  for (const auto& c : sample.columns) fill(column, c);
  cv::bitwise_and(column, table, column);
  return {table, column};
}

std::string_view splitName(Split s) {
  switch (s) {
    case Split::Train: return "TRAIN";
    case Split::Val: return "VAL";
    case Split::Test: return "TEST";
  }
  return "TRAIN";
}

std::vector<ManifestEntry> DatasetManifest::select(Split split) const {
  std::vector<ManifestEntry> out;
  std::copy_if(entries.begin(), entries.end(), std::back_inserter(out),
               [&](const ManifestEntry& e) { return e.split == split; });
  return out;
}

DatasetManifest loadManifest(const std::filesystem::path& file) {
  const Json root = readJsonFile(file);
  const Json& list = root.is_object() && root.contains("entries") ? root["entries"] : root;
  if (!list.is_array()) throw ParseError(file.string(), 1, "manifest must be a JSON list of entries");
  const auto base = file.has_parent_path() ? file.parent_path() : std::filesystem::path(".");
  DatasetManifest m;
  std::set<std::string> seen;
  for (std::size_t i = 0; i < list.size(); ++i) {
    const auto& e = list[i];
    const std::string where = "entries[" + std::to_string(i) + "]";
    if (!e.is_object() || !e.contains("image_path") || !e.contains("annotation_path")) {
      throw ParseError(file.string(), 0, where + ": image_path and annotation_path are required");
    }
    ManifestEntry entry;
    entry.imagePath = resolve(base, e["image_path"].get<std::string>());
    entry.annotationPath = resolve(base, e["annotation_path"].get<std::string>());
    entry.wordsPath = resolve(base, e.value("words_path", std::string{}));
    entry.id = e.value("id", entry.imagePath.stem().string());
    const std::string split = e.value("split", std::string("TRAIN"));
    if (split == "TRAIN") entry.split = Split::Train;
    else if (split == "VAL") entry.split = Split::Val;
    else if (split == "TEST") entry.split = Split::Test;
    else throw ValidationError(where + ": unknown split '" + split + "'");
    for (const auto& p : {entry.imagePath, entry.annotationPath, entry.wordsPath}) {
      if (!p.empty() && !std::filesystem::exists(p)) {
        throw ValidationError(where + ": missing file " + p.string());
      }
    }
    if (!seen.insert(entry.imagePath.string()).second) {
      throw ValidationError(where + ": duplicate image path " + entry.imagePath.string());
    }
    m.entries.push_back(std::move(entry));
  }
  return m;
}

Json manifestToJson(const DatasetManifest& manifest, const std::filesystem::path& baseDir) {
  auto rel = [&](const std::filesystem::path& p) -> std::string {
    if (p.empty()) return {};
    auto r = p.lexically_relative(baseDir);
    return (r.empty() || *r.begin() == "..") ? p.string() : r.string();
  };
  Json list = Json::array();
  for (const auto& e : manifest.entries) {
    Json j = {{"id", e.id},
              {"image_path", rel(e.imagePath)},
              {"annotation_path", rel(e.annotationPath)},
              {"split", std::string(splitName(e.split))}};
    if (!e.wordsPath.empty()) j["words_path"] = rel(e.wordsPath);
    list.push_back(std::move(j));
  }
  return list;
}

cv::Mat readImageRgb(const std::filesystem::path& path) {
  cv::Mat bgr = cv::imread(path.string(), cv::IMREAD_COLOR);
  if (bgr.empty()) throw ParseError(path.string(), 0, "cannot decode image");
  cv::Mat rgb;
  cv::cvtColor(bgr, rgb, cv::COLOR_BGR2RGB);
  return rgb;
}

void writeImageRgb(const std::filesystem::path& path, const cv::Mat& image) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  cv::Mat out = image;
  if (image.channels() == 3) cv::cvtColor(image, out, cv::COLOR_RGB2BGR);
  if (!cv::imwrite(path.string(), out)) throw Error("cannot write image " + path.string());
}

DocumentSample loadSample(const ManifestEntry& entry) {
  DocumentSample s;
  s.id = entry.id;
  s.image = readImageRgb(entry.imagePath);
  const auto ann = parseAnnotations(entry.annotationPath);
  if ((ann.imageWidth > 0 && ann.imageWidth != s.width()) || (ann.imageHeight > 0 && ann.imageHeight != s.height())) {
    throw ValidationError(entry.annotationPath.string() + ": image_size does not match " + entry.imagePath.string());
  }
  s.tables = ann.tables;
  s.columns = ann.columns;
  if (!entry.wordsPath.empty()) s.words = parseWordBoxes(entry.wordsPath);
  validateSample(s);
  return s;
}

}  // namespace tablenet

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

#include <filesystem>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <opencv2/core.hpp>

#include "tablenet/serialize.hpp"
#include "tablenet/types.hpp"

namespace tablenet {

/// Table and column boxes of one page, in page pixels.
struct Annotations {
  int imageWidth = 0;
  int imageHeight = 0;
  std::vector<Rect> tables;
  std::vector<Rect> columns;
};

/// Parses `{"image_size":[W,H],"tables":[[x0,y0,x1,y1],...],"columns":[...]}`.
/// Malformed input raises ParseError; a column that is not at least 90%
/// inside some table raises ValidationError.
Annotations parseAnnotations(const std::filesystem::path& file);
Annotations parseAnnotationsText(std::string_view text, const std::string& source = "<annotations>");
Json annotationsToJson(const Annotations& a);

/// Reads `text<TAB>x0<TAB>y0<TAB>x1<TAB>y1` lines. Tesseract's TSV output
/// (detected by its header row) is accepted as well. Blank-text words are
/// dropped; dtype is left as OTHER.
std::vector<WordBox> parseWordBoxes(const std::filesystem::path& file);
std::vector<WordBox> parseWordBoxesText(std::string_view text, const std::string& source = "<words>");
std::string wordBoxesToTsv(const std::vector<WordBox>& words);

/// Scales `r` from a W x H page to outW x outH with round-half-up.
Rect scaleRect(const Rect& r, int srcW, int srcH, int outW, int outH);

/// Binary {0,1} CV_8UC1 masks at outH x outW. The column mask is clipped to
/// the table mask.
std::pair<cv::Mat, cv::Mat> rasterizeMasks(const DocumentSample& sample, int outH, int outW);

enum class Split { Train, Val, Test };
std::string_view splitName(Split s);

struct ManifestEntry {
  std::string id;
  std::filesystem::path imagePath;
  std::filesystem::path wordsPath;  // may be empty
  std::filesystem::path annotationPath;
  Split split = Split::Train;
};

struct DatasetManifest {
  std::vector<ManifestEntry> entries;

  std::vector<ManifestEntry> select(Split split) const;
};

/// Relative paths are resolved against the manifest's directory. Every
/// referenced file must exist and image paths must be unique.
DatasetManifest loadManifest(const std::filesystem::path& file);
/// Paths are written relative to `baseDir` when they lie below it.
Json manifestToJson(const DatasetManifest& manifest, const std::filesystem::path& baseDir);

cv::Mat readImageRgb(const std::filesystem::path& path);
void writeImageRgb(const std::filesystem::path& path, const cv::Mat& image);

DocumentSample loadSample(const ManifestEntry& entry);

}  // namespace tablenet

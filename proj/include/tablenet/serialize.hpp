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
#include <vector>

#include <json.hpp>

#include "tablenet/types.hpp"

namespace tablenet {

using Json = nlohmann::json;

Json rectToJson(const Rect& r);
/// Throws ParseError naming `field` when `j` is not a 4-integer array.
Rect rectFromJson(const Json& j, const std::string& field);

Json gridToJson(const TableGrid& grid);
TableGrid gridFromJson(const Json& j);

/// Tables extracted from (or annotated on) one page.
struct DocumentResult {
  std::string id;
  int imageWidth = 0;
  int imageHeight = 0;
  std::string wordsPath;  // optional word-box file, used for character-level scoring
  std::vector<TableGrid> tables;
};

/// Accepts a document-set object {"documents":[...]}, a single TableGrid
/// object, or an array of TableGrids (the latter two form one document).
std::vector<DocumentResult> documentsFromJson(const Json& j);
Json documentsToJson(const std::vector<DocumentResult>& docs);

Json readJsonFile(const std::filesystem::path& path);
/// Writes to a temporary sibling and renames it into place.
void writeFileAtomic(const std::filesystem::path& path, const std::string& contents);
void writeJsonFile(const std::filesystem::path& path, const Json& j);

/// Emits one CSV record per grid row (RFC 4180 quoting).
std::string gridToCsv(const TableGrid& grid);

}  // namespace tablenet

// Copyright 2026 The Propminer Authors.
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

#ifndef PROPMINER_RECORDS_IO_H_
#define PROPMINER_RECORDS_IO_H_

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "propminer/corpus.h"
#include "propminer/engine.h"

// Line-delimited JSON persistence for corpora and record streams. See
// docs/SCHEMAS.md for the formats.
namespace propminer::io {

inline constexpr std::string_view kCorpusFormat = "propminer.corpus/1";
inline constexpr std::string_view kRecordsFormat = "propminer.records/1";

std::string document_to_json(const corpus::Document& doc);
corpus::Document document_from_json(std::string_view line);

void write_corpus(const std::string& path,
                  const std::vector<corpus::Document>& docs);
std::vector<corpus::Document> read_corpus(const std::string& path);

std::string record_to_json(const engine::ExtractionRecord& r);
engine::ExtractionRecord record_from_json(std::string_view line);

struct RecordsHeader {
  std::string config_hash;
  std::string pack_version;
  std::string tier = "raw";

  bool operator==(const RecordsHeader&) const = default;
};

std::string header_to_json(const RecordsHeader& h);

// The whole file is rendered in memory and replaced atomically.
void write_records(const std::string& path, const RecordsHeader& header,
                   const std::vector<engine::ExtractionRecord>& records);

struct RecordsFile {
  std::optional<RecordsHeader> header;
  std::vector<engine::ExtractionRecord> records;
};

// Header line is optional so hand-written fixtures stay simple.
RecordsFile read_records(const std::string& path);

std::string unit_error_to_json(const engine::UnitError& e);
engine::UnitError unit_error_from_json(std::string_view line);
std::string figure_to_json(const engine::FigureFlag& f);
engine::FigureFlag figure_from_json(std::string_view line);

// Writes data to path via a temporary file and rename.
void write_file_atomic(const std::string& path, std::string_view data);
std::string read_file(const std::string& path);

}  // namespace propminer::io

#endif  // PROPMINER_RECORDS_IO_H_

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

#include "propminer/records_io.h"

#include <filesystem>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "propminer/error.h"
#include "propminer/text.h"

namespace propminer::io {
namespace {

using json = nlohmann::ordered_json;

json parse_line(std::string_view line, std::string_view what) {
  try {
    return json::parse(line);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kInvalidInput,
                std::string(what) + ": " + e.what());
  }
}

template <typename T>
T get(const json& j, const char* key) {
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kInvalidInput,
                std::string("field ") + key + ": " + e.what());
  }
}

json record_json(const engine::ExtractionRecord& r) {
  json j;
  j["kind"] = "record";
  j["doc_id"] = r.doc_id;
  j["source"] = engine::source_name(r.source);
  if (r.sentence_index) j["sentence_index"] = *r.sentence_index;
  if (r.table_index) j["table_index"] = *r.table_index;
  j["row"] = r.row;
  j["branch"] = engine::branch_name(r.branch);
  j["material"] = r.triplet.material;
  j["value"] = r.triplet.value;
  j["unit"] = r.triplet.unit;
  j["transcript_id"] = r.transcript_id;
  j["pack"] = r.pack_version;
  return j;
}

engine::ExtractionRecord record_from(const json& j) {
  engine::ExtractionRecord r;
  r.doc_id = get<std::string>(j, "doc_id");
  auto source = engine::source_from_name(get<std::string>(j, "source"));
  auto branch = engine::branch_from_name(get<std::string>(j, "branch"));
  if (!source || !branch) {
    throw Error(ErrorCode::kInvalidInput, "unknown source or branch");
  }
  r.source = *source;
  r.branch = *branch;
  if (j.contains("sentence_index")) r.sentence_index = get<int>(j, "sentence_index");
  if (j.contains("table_index")) r.table_index = get<int>(j, "table_index");
  r.row = j.value("row", 0);
  r.triplet.material = get<std::string>(j, "material");
  r.triplet.value = get<std::string>(j, "value");
  r.triplet.unit = get<std::string>(j, "unit");
  r.transcript_id = j.value("transcript_id", "");
  r.pack_version = j.value("pack", "");
  if (r.source == engine::Source::kText && !r.sentence_index) {
    throw Error(ErrorCode::kInvalidInput,
                "text record without sentence_index in " + r.doc_id);
  }
  return r;
}

}  // namespace

std::string document_to_json(const corpus::Document& doc) {
  json j;
  j["doc_id"] = doc.doc_id;
  j["title"] = doc.title;
  j["sentences"] = doc.sentences;
  j["tables"] = json::array();
  for (const corpus::TableEntry& t : doc.tables) {
    j["tables"].push_back(
        {{"table_index", t.table_index}, {"caption", t.caption}, {"text", t.text}});
  }
  j["figures"] = json::array();
  for (const corpus::FigureCaption& f : doc.figure_captions) {
    j["figures"].push_back(
        {{"figure_index", f.figure_index}, {"caption", f.caption}});
  }
  return j.dump();
}

corpus::Document document_from_json(std::string_view line) {
  json j = parse_line(line, "corpus line");
  corpus::Document doc;
  doc.doc_id = get<std::string>(j, "doc_id");
  doc.title = get<std::string>(j, "title");
  doc.sentences = get<std::vector<std::string>>(j, "sentences");
  for (const json& t : j.value("tables", json::array())) {
    doc.tables.push_back({get<std::string>(t, "text"), t.value("caption", ""),
                          get<int>(t, "table_index")});
  }
  for (const json& f : j.value("figures", json::array())) {
    doc.figure_captions.push_back(
        {get<std::string>(f, "caption"), get<int>(f, "figure_index")});
  }
  return doc;
}

void write_corpus(const std::string& path,
                  const std::vector<corpus::Document>& docs) {
  std::string out;
  json header;
  header["kind"] = "header";
  header["format"] = kCorpusFormat;
  out += header.dump() + "\n";
  for (const corpus::Document& d : docs) out += document_to_json(d) + "\n";
  write_file_atomic(path, out);
}

std::vector<corpus::Document> read_corpus(const std::string& path) {
  std::vector<corpus::Document> docs;
  std::istringstream in(read_file(path));
  std::string line;
  while (std::getline(in, line)) {
    if (text::trim(line).empty()) continue;
    json j = parse_line(line, path);
    if (j.value("kind", "") == "header") continue;
    docs.push_back(document_from_json(line));
  }
  return docs;
}

std::string record_to_json(const engine::ExtractionRecord& r) {
  return record_json(r).dump();
}

engine::ExtractionRecord record_from_json(std::string_view line) {
  return record_from(parse_line(line, "record"));
}

std::string header_to_json(const RecordsHeader& h) {
  json j;
  j["kind"] = "header";
  j["format"] = kRecordsFormat;
  j["tier"] = h.tier;
  j["config_hash"] = h.config_hash;
  j["pack"] = h.pack_version;
  return j.dump();
}

void write_records(const std::string& path, const RecordsHeader& header,
                   const std::vector<engine::ExtractionRecord>& records) {
  std::string out = header_to_json(header) + "\n";
  for (const engine::ExtractionRecord& r : records) {
    out += record_to_json(r) + "\n";
  }
  write_file_atomic(path, out);
}

RecordsFile read_records(const std::string& path) {
  RecordsFile file;
  std::istringstream in(read_file(path));
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (text::trim(line).empty()) continue;
    json j = parse_line(line, path + ":" + std::to_string(line_no));
    if (j.value("kind", "record") == "header") {
      RecordsHeader h;
      h.config_hash = j.value("config_hash", "");
      h.pack_version = j.value("pack", "");
      h.tier = j.value("tier", "raw");
      file.header = h;
      continue;
    }
    file.records.push_back(record_from(j));
  }
  return file;
}

std::string unit_error_to_json(const engine::UnitError& e) {
  json j;
  j["kind"] = "error";
  j["unit"] = e.unit_key;
  j["doc_id"] = e.doc_id;
  j["code"] = error_code_name(e.code);
  j["message"] = e.message;
  j["transcript_id"] = e.transcript_id;
  return j.dump();
}

engine::UnitError unit_error_from_json(std::string_view line) {
  json j = parse_line(line, "error line");
  engine::UnitError e;
  e.unit_key = get<std::string>(j, "unit");
  e.doc_id = get<std::string>(j, "doc_id");
  std::string code = get<std::string>(j, "code");
  bool found = false;
  for (int c = 0; c <= static_cast<int>(ErrorCode::kIo); ++c) {
    if (error_code_name(static_cast<ErrorCode>(c)) == code) {
      e.code = static_cast<ErrorCode>(c);
      found = true;
    }
  }
  if (!found) throw Error(ErrorCode::kInvalidInput, "unknown error code " + code);
  e.message = j.value("message", "");
  e.transcript_id = j.value("transcript_id", "");
  return e;
}

std::string figure_to_json(const engine::FigureFlag& f) {
  json j;
  j["kind"] = "figure";
  j["doc_id"] = f.doc_id;
  j["figure_index"] = f.figure_index;
  j["caption"] = f.caption;
  j["relevant"] = f.relevant;
  j["transcript_id"] = f.transcript_id;
  return j.dump();
}

engine::FigureFlag figure_from_json(std::string_view line) {
  json j = parse_line(line, "figure line");
  return {get<std::string>(j, "doc_id"), get<int>(j, "figure_index"),
          get<std::string>(j, "caption"), get<bool>(j, "relevant"),
          j.value("transcript_id", "")};
}

void write_file_atomic(const std::string& path, std::string_view data) {
  std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::kIo, "cannot write " + tmp);
    out.write(data.data(), static_cast<std::streamsize>(data.size()));
    if (!out) throw Error(ErrorCode::kIo, "short write to " + tmp);
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw Error(ErrorCode::kIo, "cannot rename " + tmp + ": " + ec.message());
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace propminer::io

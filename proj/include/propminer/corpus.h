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

#ifndef PROPMINER_CORPUS_H_
#define PROPMINER_CORPUS_H_

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace propminer::corpus {

struct TableEntry {
  // Row-major linearization: cells joined by " | ", rows by '\n'.
  std::string text;
  std::string caption;
  int table_index = 0;  // 1-based, document order

  bool operator==(const TableEntry&) const = default;
};

struct FigureCaption {
  std::string caption;
  int figure_index = 0;  // 1-based, document order

  bool operator==(const FigureCaption&) const = default;
};

// One paper. Sentences keep source order; section headers are kept as
// sentences of their own.
struct Document {
  std::string doc_id;
  std::string title;
  std::vector<std::string> sentences;
  std::vector<TableEntry> tables;
  std::vector<FigureCaption> figure_captions;

  bool operator==(const Document&) const = default;
};

// Sentence index used when the screened text is the title itself.
inline constexpr int kTitleIndex = -1;

// The three-part text unit handed to extraction prompts.
struct Passage {
  std::string doc_id;
  int target_index = 0;
  std::string title;
  std::optional<std::string> preceding;
  std::string target;

  // Title, preceding sentence and target sentence, one per line. A
  // title-only passage renders as the title alone.
  std::string flatten() const;

  bool operator==(const Passage&) const = default;
};

enum class Format { kXml, kHtml, kPlain };

std::optional<Format> format_from_name(std::string_view name);
std::string_view format_name(Format format);

struct ParseOptions {
  // Used when the markup carries no title.
  std::optional<std::string> fallback_title;
};

// Throws Error(kUnparsableMarkup) for input that cannot be recovered and
// Error(kMissingTitle) when no title is found and no fallback is given.
Document parse_document(std::string_view raw, Format format,
                        std::string_view doc_id,
                        const ParseOptions& options = {});

// Rule-based splitter with an abbreviation whitelist. Never yields empty
// sentences; joining the output with single spaces reproduces the
// whitespace-collapsed input.
std::vector<std::string> segment_sentences(std::string_view body);

// target_index may be kTitleIndex for a title-only passage.
// Throws Error(kIndexOutOfRange).
Passage build_passage(const Document& doc, int target_index);

struct ManifestEntry {
  std::string doc_id;
  std::string path;
  Format format = Format::kPlain;
};

// One record per line: doc_id, path, format separated by tabs (or runs of
// whitespace). Blank lines and lines starting with '#' are skipped.
// Relative paths resolve against the manifest's directory.
std::vector<ManifestEntry> read_manifest(const std::string& manifest_path);

}  // namespace propminer::corpus

#endif  // PROPMINER_CORPUS_H_

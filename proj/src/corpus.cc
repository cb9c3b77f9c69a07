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

#include "propminer/corpus.h"

#include <filesystem>
#include <fstream>
#include <span>
#include <sstream>

#include "markup.h"
#include "propminer/error.h"
#include "propminer/text.h"

namespace propminer::corpus {
namespace {

using markup::Node;

// Tokens that end in '.' without ending a sentence. Case-sensitive: "Ca."
// and "Co." are elements and may close a sentence.
constexpr std::string_view kAbbreviations[] = {
    "Fig",   "Figs",   "fig",    "figs",  "FIG",   "Eq",    "Eqs",
    "eq",    "eqs",    "Eqn",    "Eqns",  "Ref",   "Refs",  "ref",
    "refs",  "Tab",    "Tabs",   "Sec",   "Secs",  "Sect",  "Ch",
    "Chap",  "No",     "Nos",    "no",    "Vol",   "Vols",  "vol",
    "pp",    "al",     "e.g",    "i.e",   "cf",    "Cf",    "vs",
    "viz",   "approx", "Approx", "ca",    "resp",  "Dr",    "Prof",
    "Mr",    "Mrs",    "Ms",     "Jr",    "Suppl", "Supp",  "Expt",
    "Calc",  "Theor"};

// Container elements whose text never becomes body sentences.
constexpr std::string_view kSkippedElements[] = {
    "head",          "script",       "style",      "journal-meta",
    "contrib-group", "aff",          "author-notes", "permissions",
    "history",       "pub-date",     "article-categories", "kwd-group",
    "article-id",    "funding-group", "math",      "tex-math",
    "object-id"};

constexpr std::string_view kTitleBarriers[] = {
    "sec",      "section",  "table-wrap", "table", "fig",  "figure",
    "caption",  "ref-list", "ref",        "app",   "back", "abstract"};

bool in(std::span<const std::string_view> set, std::string_view v) {
  for (std::string_view s : set) {
    if (s == v) return true;
  }
  return false;
}

bool is_abbreviation(std::string_view word) {
  while (!word.empty() && (word.front() == '(' || word.front() == '[')) {
    word.remove_prefix(1);
  }
  return in(kAbbreviations, word);
}

bool is_closer(std::string_view s, std::size_t i, std::size_t* len) {
  char c = s[i];
  if (c == '"' || c == '\'' || c == ')' || c == ']' || c == '}') {
    *len = 1;
    return true;
  }
  for (std::string_view q : {"”", "’", "»"}) {
    if (s.substr(i, q.size()) == q) {
      *len = q.size();
      return true;
    }
  }
  return false;
}

bool is_sentence_starter(char c) {
  return text::is_ascii_upper(c) || text::is_ascii_digit(c) || c == '"' ||
         c == '\'' || c == '(' || c == '[' ||
         (static_cast<unsigned char>(c) >= 0x80);
}

// Enumerators such as "1." or "2.3." at the start of a block.
bool is_enumerator(std::string_view word) {
  if (word.empty()) return false;
  for (char c : word) {
    if (!text::is_ascii_digit(c) && c != '.') return false;
  }
  return true;
}

const Node* find_title_node(const Node& root, bool html) {
  if (const Node* n = markup::find_first(root, "article-title")) return n;
  if (html) {
    if (const Node* head = markup::find_first(root, "head")) {
      if (const Node* t = markup::find_first(*head, "title")) return t;
    }
  }
  struct Finder {
    const Node* operator()(const Node& n) const {
      for (const Node& child : n.children) {
        if (child.is_text) continue;
        if (child.name == "title") return &child;
        if (in(kTitleBarriers, child.name)) continue;
        if (const Node* found = (*this)(child)) return found;
      }
      return nullptr;
    }
  };
  if (const Node* t = Finder{}(root)) return t;
  return markup::find_first(root, "h1");
}

bool has_descendant(const Node& n, std::string_view name) {
  return markup::find_first(n, name) != nullptr;
}

std::string caption_of(const Node& n) {
  const Node* cap = markup::find_first(n, "caption");
  if (cap == nullptr) cap = markup::find_first(n, "figcaption");
  return cap == nullptr ? std::string() : markup::inline_text(*cap);
}

void collect_rows(const Node& n, std::vector<const Node*>& rows) {
  for (const Node& c : n.children) {
    if (c.is_text) continue;
    if (c.name == "tr" || c.name == "row") {
      rows.push_back(&c);
    } else {
      collect_rows(c, rows);
    }
  }
}

std::string linearize_table(const Node& table) {
  std::vector<const Node*> rows;
  collect_rows(table, rows);
  std::vector<std::string> lines;
  for (const Node* row : rows) {
    std::vector<std::string> cells;
    for (const Node& cell : row->children) {
      if (cell.is_text) continue;
      if (cell.name == "td" || cell.name == "th" || cell.name == "entry") {
        cells.push_back(markup::inline_text(cell));
      }
    }
    if (!cells.empty()) lines.push_back(text::join(cells, " | "));
  }
  return text::join(lines, "\n");
}

class Extractor {
 public:
  Extractor(Document& doc, const Node* title_node)
      : doc_(doc), title_node_(title_node) {}

  void walk(const Node& node) {
    for (const Node& child : node.children) {
      if (child.is_text) {
        run_ += child.text;
        continue;
      }
      if (&child == title_node_ || in(kSkippedElements, child.name)) {
        flush();
        continue;
      }
      if (child.name == "table-wrap" || child.name == "table") {
        flush();
        add_table(child);
        continue;
      }
      if (child.name == "fig" || child.name == "figure") {
        flush();
        if (has_descendant(child, "table")) {
          add_table(child);
        } else {
          doc_.figure_captions.push_back(
              {caption_of(child),
               static_cast<int>(doc_.figure_captions.size()) + 1});
        }
        continue;
      }
      if (markup::is_inline_element(child.name)) {
        markup::append_flat(child, run_);
        continue;
      }
      flush();
      walk(child);
      flush();
    }
  }

  void flush() {
    for (std::string& s : segment_sentences(run_)) {
      doc_.sentences.push_back(std::move(s));
    }
    run_.clear();
  }

 private:
  void add_table(const Node& node) {
    const Node* table = node.name == "table" ? &node : markup::find_first(node, "table");
    TableEntry entry;
    entry.caption = caption_of(node);
    entry.text = linearize_table(table != nullptr ? *table : node);
    entry.table_index = static_cast<int>(doc_.tables.size()) + 1;
    doc_.tables.push_back(std::move(entry));
  }

  Document& doc_;
  const Node* title_node_;
  std::string run_;
};

Document parse_plain(std::string_view raw, Document doc,
                     const ParseOptions& options) {
  std::vector<std::vector<std::string>> paragraphs(1);
  for (const std::string& line : text::split_lines(raw)) {
    if (text::trim(line).empty()) {
      if (!paragraphs.back().empty()) paragraphs.emplace_back();
    } else {
      paragraphs.back().push_back(line);
    }
  }
  if (paragraphs.back().empty()) paragraphs.pop_back();

  std::size_t first_body = 0;
  if (paragraphs.size() >= 2 && paragraphs[0].size() == 1) {
    doc.title = text::collapse_whitespace(paragraphs[0][0]);
    first_body = 1;
  } else if (options.fallback_title) {
    doc.title = *options.fallback_title;
  } else {
    throw Error(ErrorCode::kMissingTitle,
                "plain document " + doc.doc_id +
                    " has no title paragraph and no fallback title");
  }
  for (std::size_t p = first_body; p < paragraphs.size(); ++p) {
    for (std::string& s : segment_sentences(text::join(paragraphs[p], " "))) {
      doc.sentences.push_back(std::move(s));
    }
  }
  return doc;
}

}  // namespace

std::string Passage::flatten() const {
  if (target_index == kTitleIndex) return title;
  std::string out = title;
  out += '\n';
  if (preceding) {
    out += *preceding;
    out += '\n';
  }
  out += target;
  return out;
}

std::optional<Format> format_from_name(std::string_view name) {
  std::string lower = text::to_lower_ascii(name);
  if (lower == "xml") return Format::kXml;
  if (lower == "html" || lower == "htm") return Format::kHtml;
  if (lower == "plain" || lower == "txt" || lower == "text") return Format::kPlain;
  return std::nullopt;
}

std::string_view format_name(Format format) {
  switch (format) {
    case Format::kXml: return "xml";
    case Format::kHtml: return "html";
    case Format::kPlain: return "plain";
  }
  return "plain";
}

Document parse_document(std::string_view raw, Format format,
                        std::string_view doc_id, const ParseOptions& options) {
  if (doc_id.empty()) throw Error(ErrorCode::kInvalidInput, "empty doc_id");
  if (text::trim(raw).empty()) {
    throw Error(ErrorCode::kUnparsableMarkup,
                "empty input for " + std::string(doc_id));
  }
  Document doc;
  doc.doc_id = std::string(doc_id);
  if (format == Format::kPlain) return parse_plain(raw, std::move(doc), options);

  bool html = format == Format::kHtml;
  Node root = markup::parse(raw, html);
  const Node* title_node = find_title_node(root, html);
  if (title_node != nullptr) doc.title = markup::inline_text(*title_node);
  if (doc.title.empty()) {
    if (!options.fallback_title) {
      throw Error(ErrorCode::kMissingTitle,
                  "no title element in " + doc.doc_id);
    }
    doc.title = *options.fallback_title;
  }
  Extractor extractor(doc, title_node);
  extractor.walk(root);
  extractor.flush();
  return doc;
}

std::vector<std::string> segment_sentences(std::string_view body) {
  std::string s = text::collapse_whitespace(body);
  std::vector<std::string> out;
  std::size_t start = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    char c = s[i];
    if (c != '.' && c != '!' && c != '?') continue;
    std::size_t j = i + 1;
    while (j < s.size() && (s[j] == '.' || s[j] == '!' || s[j] == '?')) ++j;
    std::size_t len = 0;
    while (j < s.size() && is_closer(s, j, &len)) j += len;
    if (j + 1 >= s.size() || s[j] != ' ') continue;
    if (!is_sentence_starter(s[j + 1])) continue;
    if (c == '.') {
      std::size_t word_start = s.rfind(' ', i);
      word_start = word_start == std::string::npos || word_start < start
                       ? start
                       : word_start + 1;
      std::string_view word(s.data() + word_start, i - word_start);
      if (is_abbreviation(word)) continue;
      if (word_start == start && is_enumerator(word)) continue;
    }
    out.push_back(s.substr(start, j - start));
    start = j + 1;
    i = j;
  }
  if (start < s.size()) out.push_back(s.substr(start));
  return out;
}

Passage build_passage(const Document& doc, int target_index) {
  Passage p;
  p.doc_id = doc.doc_id;
  p.title = doc.title;
  p.target_index = target_index;
  if (target_index == kTitleIndex) {
    p.preceding = doc.title;
    p.target = doc.title;
    return p;
  }
  if (target_index < 0 ||
      static_cast<std::size_t>(target_index) >= doc.sentences.size()) {
    throw Error(ErrorCode::kIndexOutOfRange,
                "sentence " + std::to_string(target_index) + " of " +
                    doc.doc_id + " (" + std::to_string(doc.sentences.size()) +
                    " sentences)");
  }
  if (target_index > 0) p.preceding = doc.sentences[target_index - 1];
  p.target = doc.sentences[target_index];
  return p;
}

std::vector<ManifestEntry> read_manifest(const std::string& manifest_path) {
  std::ifstream in(manifest_path);
  if (!in) throw Error(ErrorCode::kIo, "cannot read manifest " + manifest_path);
  std::filesystem::path base = std::filesystem::path(manifest_path).parent_path();
  std::vector<ManifestEntry> entries;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view t = text::trim(line);
    if (t.empty() || t.front() == '#') continue;
    std::vector<std::string> fields;
    if (t.find('\t') != std::string_view::npos) {
      for (std::string& f : text::split(t, '\t')) {
        fields.emplace_back(text::trim(f));
      }
    } else {
      std::istringstream ss{std::string(t)};
      std::string f;
      while (ss >> f) fields.push_back(f);
    }
    if (fields.size() != 3) {
      throw Error(ErrorCode::kInvalidInput,
                  manifest_path + ":" + std::to_string(line_no) +
                      ": expected doc_id, path, format");
    }
    auto format = format_from_name(fields[2]);
    if (!format) {
      throw Error(ErrorCode::kInvalidInput,
                  manifest_path + ":" + std::to_string(line_no) +
                      ": unknown format '" + fields[2] + "'");
    }
    std::filesystem::path p(fields[1]);
    if (p.is_relative()) p = base / p;
    entries.push_back({fields[0], p.string(), *format});
  }
  return entries;
}

}  // namespace propminer::corpus

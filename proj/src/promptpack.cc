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

#include "propminer/promptpack.h"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "propminer/error.h"
#include "propminer/text.h"

namespace propminer::prompts {
namespace {

bool is_slot_name(std::string_view name) {
  return std::find(std::begin(kSlots), std::end(kSlots), name) != std::end(kSlots);
}

bool looks_like_slot(std::string_view name) {
  if (name.empty()) return false;
  for (char c : name) {
    if (!text::is_ascii_lower(c) && c != '_') return false;
  }
  return true;
}

// Calls on_literal / on_slot for consecutive pieces of the template.
template <typename Literal, typename Slot>
void scan_template(const PromptTemplate& tmpl, Literal on_literal, Slot on_slot) {
  std::string_view s = tmpl.text;
  std::size_t literal_start = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] != '[') continue;
    std::size_t close = s.find(']', i);
    if (close == std::string_view::npos) break;
    std::string_view name = s.substr(i + 1, close - i - 1);
    if (!looks_like_slot(name)) continue;
    if (!is_slot_name(name)) {
      throw Error(ErrorCode::kInvalidTemplate,
                  tmpl.node_id + ": unknown slot [" + std::string(name) + "]");
    }
    on_literal(s.substr(literal_start, i - literal_start));
    on_slot(name);
    literal_start = close + 1;
    i = close;
  }
  on_literal(s.substr(literal_start));
}

bool is_punct_or_space(char c) {
  return std::ispunct(static_cast<unsigned char>(c)) ||
         std::isspace(static_cast<unsigned char>(c));
}

std::string strip_trailing_period(std::string_view s) {
  if (!s.empty() && s.back() == '.') s.remove_suffix(1);
  return std::string(text::trim(s));
}

std::string_view strip_quotes(std::string_view s) {
  while (s.size() >= 2 && ((s.front() == '"' && s.back() == '"') ||
                           (s.front() == '\'' && s.back() == '\'') ||
                           (s.front() == '`' && s.back() == '`'))) {
    s = text::trim(s.substr(1, s.size() - 2));
  }
  return s;
}

bool is_none_marker(std::string_view cell) {
  std::string c = text::to_lower_ascii(strip_trailing_period(strip_quotes(cell)));
  return c.empty() || c == "none" || c == "n/a" || c == "na" || c == "-" ||
         c == "--" || c == "—" || c == "–" || c == "null";
}

bool is_divider(const std::vector<std::string>& cells) {
  bool saw_dash = false;
  for (const std::string& cell : cells) {
    for (char c : cell) {
      if (c == '-' || c == '=') {
        saw_dash = true;
      } else if (c != ':' && c != '+' && c != ' ') {
        return false;
      }
    }
  }
  return saw_dash;
}

bool is_header(const std::vector<std::string>& cells) {
  std::string first = text::to_lower_ascii(cells[0]);
  if (first == "material" || first == "materials" || first == "material name") {
    return true;
  }
  return cells.size() >= 3 && text::iequals(cells[1], "value") &&
         text::iequals(cells[2], "unit");
}

}  // namespace

std::vector<std::string> PromptTemplate::slots() const {
  std::vector<std::string> out;
  scan_template(*this, [](std::string_view) {}, [&](std::string_view name) {
    if (std::find(out.begin(), out.end(), name) == out.end()) {
      out.emplace_back(name);
    }
  });
  return out;
}

std::string render(const PromptTemplate& tmpl, const Bindings& bindings) {
  std::string out;
  scan_template(
      tmpl, [&](std::string_view literal) { out.append(literal); },
      [&](std::string_view name) {
        auto it = bindings.find(name);
        if (it == bindings.end()) {
          throw Error(ErrorCode::kUnboundSlot,
                      tmpl.node_id + ": [" + std::string(name) + "]");
        }
        out.append(it->second);
      });
  return out;
}

PromptPack PromptPack::parse(std::string_view json) {
  PromptPack pack;
  try {
    auto doc = nlohmann::json::parse(json);
    pack.name_ = doc.at("name").get<std::string>();
    pack.version_ = doc.at("version").get<std::string>();
    for (const auto& entry : doc.at("prompts")) {
      PromptTemplate t;
      t.node_id = entry.at("node_id").get<std::string>();
      t.text = entry.at("template").get<std::string>();
      if (pack.templates_.count(t.node_id) > 0) {
        throw Error(ErrorCode::kInvalidTemplate, "duplicate node " + t.node_id);
      }
      t.slots();  // validates
      pack.templates_.emplace(t.node_id, std::move(t));
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kInvalidTemplate, std::string("prompt pack: ") + e.what());
  }
  for (std::string_view node : kRequiredNodes) {
    if (pack.templates_.find(node) == pack.templates_.end()) {
      throw Error(ErrorCode::kInvalidTemplate,
                  "prompt pack lacks node " + std::string(node));
    }
  }
  return pack;
}

PromptPack PromptPack::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot read prompt pack " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

std::string PromptPack::default_path() {
  return std::string(PROPMINER_DATA_DIR) + "/prompt_packs/default.json";
}

PromptPack PromptPack::load_default() { return load(default_path()); }

const PromptTemplate& PromptPack::at(std::string_view node_id) const {
  auto it = templates_.find(node_id);
  if (it == templates_.end()) {
    throw Error(ErrorCode::kInvalidTemplate,
                "no template for node " + std::string(node_id));
  }
  return it->second;
}

std::string PromptPack::render(std::string_view node_id,
                               const Bindings& bindings) const {
  return prompts::render(at(node_id), bindings);
}

std::vector<std::string> PromptPack::node_ids() const {
  std::vector<std::string> ids;
  for (const auto& [id, t] : templates_) ids.push_back(id);
  return ids;
}

YesNo parse_yes_no(std::string_view response) {
  std::string_view s = text::trim(response);
  while (!s.empty() && is_punct_or_space(s.front())) s.remove_prefix(1);
  std::size_t end = 0;
  while (end < s.size() && std::isalpha(static_cast<unsigned char>(s[end]))) ++end;
  std::string token = text::to_lower_ascii(s.substr(0, end));
  if (token == "yes") return YesNo::kYes;
  if (token == "no") return YesNo::kNo;
  return YesNo::kMalformed;
}

std::optional<std::string> parse_scalar(std::string_view response) {
  std::string_view s = strip_quotes(text::trim(response));
  if (s.empty()) throw Error(ErrorCode::kMalformedScalar, "empty reply");
  if (s.find('\n') != std::string_view::npos) {
    throw Error(ErrorCode::kMalformedScalar, "multi-line reply");
  }
  std::string bare = strip_trailing_period(s);
  if (text::iequals(bare, "none")) return std::nullopt;

  std::istringstream tokens{std::string(s)};
  std::size_t count = 0;
  for (std::string tok; tokens >> tok;) ++count;
  char last = s.back();
  bool terminal = last == '.' || last == '!' || last == '?';
  bool inner_boundary = false;
  for (std::size_t i = 0; i + 2 < s.size(); ++i) {
    if ((s[i] == '.' || s[i] == '!' || s[i] == '?') && s[i + 1] == ' ' &&
        text::is_ascii_upper(s[i + 2])) {
      inner_boundary = true;
    }
  }
  if (inner_boundary || (terminal && count >= 3) || count > 12) {
    throw Error(ErrorCode::kMalformedScalar,
                "full-sentence reply: " + std::string(s.substr(0, 80)));
  }
  return bare;
}

std::vector<TableRow> parse_table(std::string_view response) {
  std::string_view trimmed = strip_quotes(text::trim(response));
  if (text::iequals(strip_trailing_period(trimmed), "none")) return {};

  std::vector<TableRow> rows;
  bool saw_structure = false;
  for (const std::string& raw_line : text::split_lines(trimmed)) {
    std::string_view line = text::trim(raw_line);
    if (line.empty()) continue;
    char delim = 0;
    if (line.find('|') != std::string_view::npos) {
      delim = '|';
    } else if (line.find('\t') != std::string_view::npos) {
      delim = '\t';
    } else {
      continue;
    }
    std::vector<std::string> cells;
    for (const std::string& c : text::split(line, delim)) {
      cells.emplace_back(text::trim(c));
    }
    if (delim == '|') {
      if (!cells.empty() && line.front() == '|' && cells.front().empty()) {
        cells.erase(cells.begin());
      }
      if (!cells.empty() && line.back() == '|' && cells.back().empty()) {
        cells.pop_back();
      }
    }
    if (cells.empty()) continue;
    if (is_divider(cells)) {
      saw_structure = true;
      continue;
    }
    if (is_header(cells)) {
      saw_structure = true;
      continue;
    }
    if (cells.size() < 3) continue;
    TableRow row;
    row.material = is_none_marker(cells[0]) ? "" : cells[0];
    row.value = is_none_marker(cells[1]) ? "" : cells[1];
    row.unit = is_none_marker(cells[2]) ? "" : cells[2];
    rows.push_back(std::move(row));
  }
  if (rows.empty() && !saw_structure) {
    throw Error(ErrorCode::kMalformedTable,
                "no table rows in reply: " + std::string(trimmed.substr(0, 80)));
  }
  return rows;
}

}  // namespace propminer::prompts

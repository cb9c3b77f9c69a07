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

#include "markup.h"

#include <array>
#include <cctype>
#include <cstdint>
#include <span>
#include <unordered_map>

#include "propminer/error.h"
#include "propminer/text.h"

namespace propminer::markup {
namespace {

constexpr std::array<std::string_view, 11> kVoidElements = {
    "br", "img", "hr", "meta", "link", "input", "col", "wbr", "source",
    "area", "base"};

constexpr std::array<std::string_view, 37> kInlineElements = {
    "i",          "b",           "em",          "strong",     "sub",
    "sup",        "span",        "a",           "italic",     "bold",
    "sc",         "inf",         "u",           "small",      "font",
    "xref",       "ext-link",    "named-content", "monospace", "underline",
    "inline-formula", "br",      "cross-ref",   "cross-refs", "hsp",
    "vsp",        "abbr",        "code",        "tt",         "big",
    "mark",       "s",           "strike",      "var",        "cite",
    "styled-content", "roman"};

bool contains(std::span<const std::string_view> set, std::string_view name) {
  for (std::string_view s : set) {
    if (s == name) return true;
  }
  return false;
}

std::string normalize_name(std::string_view raw) {
  std::size_t colon = raw.rfind(':');
  if (colon != std::string_view::npos) raw = raw.substr(colon + 1);
  return text::to_lower_ascii(raw);
}

void append_utf8(std::string& out, std::uint32_t cp) {
  if (cp < 0x80) {
    out.push_back(static_cast<char>(cp));
  } else if (cp < 0x800) {
    out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else if (cp < 0x10000) {
    out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else if (cp < 0x110000) {
    out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  }
}

const std::unordered_map<std::string_view, std::uint32_t>& named_entities() {
  static const std::unordered_map<std::string_view, std::uint32_t> kMap = {
      {"amp", '&'},      {"lt", '<'},        {"gt", '>'},
      {"quot", '"'},     {"apos", '\''},     {"nbsp", 0xA0},
      {"minus", 0x2212}, {"times", 0xD7},    {"middot", 0xB7},
      {"deg", 0xB0},     {"plusmn", 0xB1},   {"le", 0x2264},
      {"ge", 0x2265},    {"ndash", 0x2013},  {"mdash", 0x2014},
      {"micro", 0xB5},   {"alpha", 0x3B1},   {"beta", 0x3B2},
      {"gamma", 0x3B3},  {"delta", 0x3B4},   {"Delta", 0x394},
      {"sim", 0x223C},   {"asymp", 0x2248},  {"thinsp", 0x2009},
      {"prime", 0x2032}, {"sup2", 0xB2},     {"sup3", 0xB3},
      {"Aring", 0xC5},   {"ohm", 0x3A9},     {"hellip", 0x2026},
      {"rsquo", 0x2019}, {"lsquo", 0x2018},  {"rdquo", 0x201D},
      {"ldquo", 0x201C}, {"sigma", 0x3C3},   {"mu", 0x3BC}};
  return kMap;
}

class Parser {
 public:
  Parser(std::string_view raw, bool html) : raw_(raw), html_(html) {}

  Node run() {
    Node root;
    stack_.push_back(&root);
    bool saw_element = false;
    while (pos_ < raw_.size()) {
      if (raw_[pos_] != '<') {
        read_text();
        continue;
      }
      if (starts_with("<!--")) {
        skip_past("-->", "unterminated comment");
      } else if (starts_with("<![CDATA[")) {
        std::size_t end = raw_.find("]]>", pos_);
        if (end == std::string_view::npos) fail("unterminated CDATA section");
        add_text(std::string(raw_.substr(pos_ + 9, end - pos_ - 9)));
        pos_ = end + 3;
      } else if (starts_with("<!") || starts_with("<?")) {
        skip_past(">", "unterminated declaration");
      } else if (starts_with("</")) {
        read_end_tag();
      } else if (pos_ + 1 < raw_.size() &&
                 (std::isalpha(static_cast<unsigned char>(raw_[pos_ + 1])) ||
                  raw_[pos_ + 1] == '_')) {
        read_start_tag();
        saw_element = true;
      } else {
        // A bare '<' in character data ("< 0.1").
        add_text("<");
        ++pos_;
      }
    }
    if (stack_.size() > 1 && !html_) {
      fail("unclosed element <" + stack_.back()->name + ">");
    }
    if (!saw_element && !html_) fail("no elements found");
    return root;
  }

 private:
  [[noreturn]] void fail(const std::string& what) const {
    throw Error(ErrorCode::kUnparsableMarkup,
                what + " (byte " + std::to_string(pos_) + ")");
  }

  bool starts_with(std::string_view prefix) const {
    return raw_.substr(pos_, prefix.size()) == prefix;
  }

  void skip_past(std::string_view terminator, const char* error) {
    std::size_t end = raw_.find(terminator, pos_);
    if (end == std::string_view::npos) fail(error);
    pos_ = end + terminator.size();
  }

  void add_text(std::string data) {
    if (data.empty()) return;
    Node& top = *stack_.back();
    if (!top.children.empty() && top.children.back().is_text) {
      top.children.back().text += data;
      return;
    }
    Node node;
    node.is_text = true;
    node.text = std::move(data);
    top.children.push_back(std::move(node));
  }

  void read_text() {
    std::size_t end = raw_.find('<', pos_);
    if (end == std::string_view::npos) end = raw_.size();
    add_text(decode_entities(raw_.substr(pos_, end - pos_)));
    pos_ = end;
  }

  std::string read_name() {
    std::size_t start = pos_;
    while (pos_ < raw_.size()) {
      char c = raw_[pos_];
      if (std::isalnum(static_cast<unsigned char>(c)) || c == ':' || c == '_' ||
          c == '-' || c == '.') {
        ++pos_;
      } else {
        break;
      }
    }
    return normalize_name(raw_.substr(start, pos_ - start));
  }

  void read_start_tag() {
    ++pos_;  // '<'
    std::string name = read_name();
    bool self_closing = false;
    char quote = 0;
    while (true) {
      if (pos_ >= raw_.size()) fail("unterminated tag <" + name);
      char c = raw_[pos_];
      if (quote != 0) {
        if (c == quote) quote = 0;
      } else if (c == '"' || c == '\'') {
        quote = c;
      } else if (c == '>') {
        self_closing = pos_ > 0 && raw_[pos_ - 1] == '/';
        ++pos_;
        break;
      }
      ++pos_;
    }
    if (html_) {
      implicit_close(name);
      if (contains(kVoidElements, name)) self_closing = true;
    }
    Node element;
    element.name = name;
    Node& top = *stack_.back();
    top.children.push_back(std::move(element));
    Node* added = &top.children.back();
    if (self_closing) return;
    if (html_ && (name == "script" || name == "style")) {
      std::string close = "</" + name;
      std::size_t end = pos_;
      while (true) {
        end = raw_.find('<', end);
        if (end == std::string_view::npos) {
          pos_ = raw_.size();
          return;
        }
        if (text::iequals(raw_.substr(end, close.size()), close)) break;
        ++end;
      }
      pos_ = end;
      std::size_t gt = raw_.find('>', pos_);
      pos_ = gt == std::string_view::npos ? raw_.size() : gt + 1;
      return;
    }
    stack_.push_back(added);
  }

  void implicit_close(const std::string& name) {
    auto top_is = [&](std::string_view n) {
      return stack_.size() > 1 && stack_.back()->name == n;
    };
    static constexpr std::array<std::string_view, 16> kClosesParagraph = {
        "p", "div", "table", "h1", "h2", "h3", "h4", "h5", "h6", "ul", "ol",
        "li", "figure", "section", "blockquote", "pre"};
    if (top_is("p") && contains(kClosesParagraph, name)) stack_.pop_back();
    if (name == "li" && top_is("li")) stack_.pop_back();
    if (name == "td" || name == "th" || name == "tr") {
      if (top_is("td") || top_is("th")) stack_.pop_back();
    }
    if (name == "tr" && top_is("tr")) stack_.pop_back();
  }

  void read_end_tag() {
    pos_ += 2;
    std::string name = read_name();
    std::size_t gt = raw_.find('>', pos_);
    if (gt == std::string_view::npos) fail("unterminated end tag </" + name);
    pos_ = gt + 1;
    if (!html_) {
      if (stack_.size() <= 1 || stack_.back()->name != name) {
        fail("mismatched end tag </" + name + ">");
      }
      stack_.pop_back();
      return;
    }
    for (std::size_t i = stack_.size(); i-- > 1;) {
      if (stack_[i]->name == name) {
        stack_.resize(i);
        return;
      }
    }
  }

  std::string_view raw_;
  bool html_;
  std::size_t pos_ = 0;
  std::vector<Node*> stack_;
};

void flatten_into(const Node& node, std::string& out) {
  if (node.is_text) {
    out += node.text;
    return;
  }
  if (node.name == "br") {
    out += ' ';
    return;
  }
  bool inline_el = node.name.empty() || is_inline_element(node.name);
  if (node.name == "sup") out += '^';
  if (!inline_el) out += ' ';
  for (const Node& child : node.children) flatten_into(child, out);
  if (!inline_el) out += ' ';
}

}  // namespace

std::string decode_entities(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] != '&') {
      out.push_back(s[i]);
      continue;
    }
    std::size_t semi = s.find(';', i);
    if (semi == std::string_view::npos || semi - i > 10) {
      out.push_back('&');
      continue;
    }
    std::string_view entity = s.substr(i + 1, semi - i - 1);
    if (!entity.empty() && entity[0] == '#') {
      std::uint32_t cp = 0;
      bool ok = entity.size() > 1;
      bool hex = ok && (entity[1] == 'x' || entity[1] == 'X');
      for (std::size_t k = hex ? 2 : 1; ok && k < entity.size(); ++k) {
        char c = entity[k];
        int digit = -1;
        if (c >= '0' && c <= '9') digit = c - '0';
        if (hex && c >= 'a' && c <= 'f') digit = c - 'a' + 10;
        if (hex && c >= 'A' && c <= 'F') digit = c - 'A' + 10;
        if (digit < 0) ok = false;
        cp = cp * (hex ? 16 : 10) + static_cast<std::uint32_t>(digit);
        if (cp > 0x10FFFF) ok = false;
      }
      if (ok && entity.size() > (hex ? 2u : 1u)) {
        append_utf8(out, cp);
        i = semi;
        continue;
      }
    } else {
      auto it = named_entities().find(entity);
      if (it != named_entities().end()) {
        append_utf8(out, it->second);
        i = semi;
        continue;
      }
    }
    out.push_back('&');
  }
  return out;
}

bool is_inline_element(std::string_view name) {
  return contains(kInlineElements, name);
}

std::string inline_text(const Node& node) {
  std::string out;
  if (node.is_text) {
    out = node.text;
  } else {
    for (const Node& child : node.children) flatten_into(child, out);
  }
  return text::collapse_whitespace(out);
}

void append_flat(const Node& node, std::string& out) { flatten_into(node, out); }

Node parse(std::string_view raw, bool html) { return Parser(raw, html).run(); }

const Node* find_first(const Node& root, std::string_view name) {
  for (const Node& child : root.children) {
    if (child.is_text) continue;
    if (child.name == name) return &child;
    if (const Node* found = find_first(child, name)) return found;
  }
  return nullptr;
}

void find_all(const Node& root, std::string_view name,
              std::vector<const Node*>& out) {
  for (const Node& child : root.children) {
    if (child.is_text) continue;
    if (child.name == name) out.push_back(&child);
    find_all(child, name, out);
  }
}

}  // namespace propminer::markup

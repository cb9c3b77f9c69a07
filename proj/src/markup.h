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

#ifndef PROPMINER_SRC_MARKUP_H_
#define PROPMINER_SRC_MARKUP_H_

#include <string>
#include <string_view>
#include <vector>

namespace propminer::markup {

// Minimal DOM for tag soup. Element names are lowercased with any namespace
// prefix removed ("ce:para" -> "para"); attributes are dropped.
struct Node {
  bool is_text = false;
  std::string name;  // element name; empty for text nodes and the root
  std::string text;  // decoded character data for text nodes
  std::vector<Node> children;
};

// XML mode is strict about nesting; HTML mode auto-closes and ignores stray
// end tags. Throws Error(kUnparsableMarkup).
Node parse(std::string_view raw, bool html);

std::string decode_entities(std::string_view s);

bool is_inline_element(std::string_view name);

// Character data of a subtree with inline flattening: subscripts are
// appended directly, superscripts are prefixed with '^', block children are
// separated by spaces. Whitespace is collapsed.
std::string inline_text(const Node& node);

// Appends the uncollapsed flattened text of node (same rules as
// inline_text) to out.
void append_flat(const Node& node, std::string& out);

// Depth-first search in document order.
const Node* find_first(const Node& root, std::string_view name);
void find_all(const Node& root, std::string_view name,
              std::vector<const Node*>& out);

}  // namespace propminer::markup

#endif  // PROPMINER_SRC_MARKUP_H_

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

#ifndef PROPMINER_TEXT_H_
#define PROPMINER_TEXT_H_

#include <string>
#include <string_view>
#include <vector>

// Small UTF-8 aware string helpers shared by the pipeline stages.
namespace propminer::text {

std::string_view trim(std::string_view s);

// Trims and collapses every run of whitespace (ASCII and the common Unicode
// spaces) into a single ASCII space.
std::string collapse_whitespace(std::string_view s);

std::string to_lower_ascii(std::string_view s);
bool iequals(std::string_view a, std::string_view b);

std::vector<std::string> split_lines(std::string_view s);
std::vector<std::string> split(std::string_view s, char sep);
std::string join(const std::vector<std::string>& parts, std::string_view sep);

bool is_ascii_digit(char c);
bool is_ascii_upper(char c);
bool is_ascii_lower(char c);

// Rewrites Unicode minus signs and dashes to '-', superscript digits/signs
// to a caret-prefixed ASCII run ("10⁻³" -> "10^-3"), subscript digits to
// ASCII digits, and non-breaking/thin spaces to ASCII spaces.
std::string fold_symbols(std::string_view s);

// Returns the number of bytes in the UTF-8 sequence starting at s[i]
// (1 for invalid lead bytes).
std::size_t utf8_length(std::string_view s, std::size_t i);

// Lowercase hex SHA-256 of the input bytes.
std::string sha256_hex(std::string_view data);

}  // namespace propminer::text

#endif  // PROPMINER_TEXT_H_

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

#include "propminer/text.h"

#include <openssl/evp.h>

#include <array>
#include <cstdio>

#include "propminer/error.h"

namespace propminer {

std::string_view error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::kUnparsableMarkup: return "UnparsableMarkup";
    case ErrorCode::kMissingTitle: return "MissingTitle";
    case ErrorCode::kIndexOutOfRange: return "IndexOutOfRange";
    case ErrorCode::kBackendUnavailable: return "BackendUnavailable";
    case ErrorCode::kBackendTimeout: return "BackendTimeout";
    case ErrorCode::kMalformedBackendReply: return "MalformedBackendReply";
    case ErrorCode::kRetriesExhausted: return "RetriesExhausted";
    case ErrorCode::kContextOverflow: return "ContextOverflow";
    case ErrorCode::kUnboundSlot: return "UnboundSlot";
    case ErrorCode::kInvalidTemplate: return "InvalidTemplate";
    case ErrorCode::kMalformedAnswer: return "MalformedAnswer";
    case ErrorCode::kMalformedScalar: return "MalformedScalar";
    case ErrorCode::kMalformedTable: return "MalformedTable";
    case ErrorCode::kNotUniquelyIdentifiable: return "NotUniquelyIdentifiable";
    case ErrorCode::kNonDiscreteValue: return "NonDiscreteValue";
    case ErrorCode::kUnknownUnit: return "UnknownUnit";
    case ErrorCode::kUnresolvedProvenance: return "UnresolvedProvenance";
    case ErrorCode::kInvalidInput: return "InvalidInput";
    case ErrorCode::kIo: return "Io";
  }
  return "Unknown";
}

namespace text {
namespace {

// Byte length of a Unicode space sequence at s[i], or 0.
std::size_t unicode_space_at(std::string_view s, std::size_t i) {
  auto b = [&](std::size_t k) {
    return i + k < s.size() ? static_cast<unsigned char>(s[i + k]) : 0u;
  };
  if (b(0) == 0xC2 && b(1) == 0xA0) return 2;  // U+00A0
  if (b(0) == 0xE2 && b(1) == 0x80 && b(2) >= 0x80 && b(2) <= 0x8B) return 3;
  if (b(0) == 0xE2 && b(1) == 0x80 && b(2) == 0xAF) return 3;  // U+202F
  if (b(0) == 0xE2 && b(1) == 0x81 && b(2) == 0x9F) return 3;  // U+205F
  if (b(0) == 0xE3 && b(1) == 0x80 && b(2) == 0x80) return 3;  // U+3000
  return 0;
}

bool is_ascii_space(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' ||
         c == '\v';
}

}  // namespace

std::string_view trim(std::string_view s) {
  std::size_t begin = 0;
  while (begin < s.size()) {
    if (is_ascii_space(s[begin])) {
      ++begin;
    } else if (std::size_t n = unicode_space_at(s, begin)) {
      begin += n;
    } else {
      break;
    }
  }
  std::size_t end = s.size();
  while (end > begin) {
    if (is_ascii_space(s[end - 1])) {
      --end;
      continue;
    }
    bool stripped = false;
    for (std::size_t n : {2u, 3u}) {
      if (end >= begin + n && unicode_space_at(s, end - n) == n) {
        end -= n;
        stripped = true;
        break;
      }
    }
    if (!stripped) break;
  }
  return s.substr(begin, end - begin);
}

std::string collapse_whitespace(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  bool pending_space = false;
  for (std::size_t i = 0; i < s.size();) {
    std::size_t n = 0;
    if (is_ascii_space(s[i])) {
      n = 1;
    } else {
      n = unicode_space_at(s, i);
    }
    if (n > 0) {
      pending_space = !out.empty();
      i += n;
      continue;
    }
    if (pending_space) out.push_back(' ');
    pending_space = false;
    out.push_back(s[i]);
    ++i;
  }
  return out;
}

std::string to_lower_ascii(std::string_view s) {
  std::string out(s);
  for (char& c : out) {
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
  }
  return out;
}

bool iequals(std::string_view a, std::string_view b) {
  return a.size() == b.size() && to_lower_ascii(a) == to_lower_ascii(b);
}

std::vector<std::string> split_lines(std::string_view s) {
  std::vector<std::string> lines;
  std::size_t start = 0;
  while (start <= s.size()) {
    std::size_t nl = s.find('\n', start);
    if (nl == std::string_view::npos) nl = s.size();
    std::string_view line = s.substr(start, nl - start);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    lines.emplace_back(line);
    start = nl + 1;
  }
  if (!lines.empty() && lines.back().empty() && !s.empty() && s.back() == '\n') {
    lines.pop_back();
  }
  return lines;
}

std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> parts;
  std::size_t start = 0;
  while (true) {
    std::size_t pos = s.find(sep, start);
    if (pos == std::string_view::npos) {
      parts.emplace_back(s.substr(start));
      break;
    }
    parts.emplace_back(s.substr(start, pos - start));
    start = pos + 1;
  }
  return parts;
}

std::string join(const std::vector<std::string>& parts, std::string_view sep) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i > 0) out.append(sep);
    out.append(parts[i]);
  }
  return out;
}

bool is_ascii_digit(char c) { return c >= '0' && c <= '9'; }
bool is_ascii_upper(char c) { return c >= 'A' && c <= 'Z'; }
bool is_ascii_lower(char c) { return c >= 'a' && c <= 'z'; }

std::size_t utf8_length(std::string_view s, std::size_t i) {
  auto c = static_cast<unsigned char>(s[i]);
  std::size_t n = 1;
  if (c >= 0xF0) {
    n = 4;
  } else if (c >= 0xE0) {
    n = 3;
  } else if (c >= 0xC0) {
    n = 2;
  }
  return i + n <= s.size() ? n : 1;
}

std::string fold_symbols(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  bool in_superscript = false;
  for (std::size_t i = 0; i < s.size();) {
    std::size_t n = utf8_length(s, i);
    std::string_view ch = s.substr(i, n);
    i += n;

    char sup = 0;
    if (ch == "⁰") sup = '0';
    else if (ch == "¹") sup = '1';
    else if (ch == "²") sup = '2';
    else if (ch == "³") sup = '3';
    else if (ch.size() == 3 && static_cast<unsigned char>(ch[0]) == 0xE2 &&
             static_cast<unsigned char>(ch[1]) == 0x81) {
      auto last = static_cast<unsigned char>(ch[2]);
      if (last >= 0xB4 && last <= 0xB9) sup = static_cast<char>('4' + (last - 0xB4));
      if (last == 0xBA) sup = '+';
      if (last == 0xBB) sup = '-';
    }
    if (sup != 0) {
      if (!in_superscript) out.push_back('^');
      in_superscript = true;
      out.push_back(sup);
      continue;
    }
    in_superscript = false;

    if (ch.size() == 3 && static_cast<unsigned char>(ch[0]) == 0xE2 &&
        static_cast<unsigned char>(ch[1]) == 0x82) {
      auto last = static_cast<unsigned char>(ch[2]);
      if (last >= 0x80 && last <= 0x89) {
        out.push_back(static_cast<char>('0' + (last - 0x80)));
        continue;
      }
      if (last == 0x8A) { out.push_back('+'); continue; }
      if (last == 0x8B) { out.push_back('-'); continue; }
    }
    if (ch == "−" || ch == "–" || ch == "—" || ch == "‐" ||
        ch == "‑" || ch == "‒") {
      out.push_back('-');
      continue;
    }
    if (unicode_space_at(ch, 0) == ch.size()) {
      out.push_back(' ');
      continue;
    }
    out.append(ch);
  }
  return out;
}

std::string sha256_hex(std::string_view data) {
  std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
  unsigned int length = 0;
  if (EVP_Digest(data.data(), data.size(), digest.data(), &length, EVP_sha256(),
                 nullptr) != 1) {
    throw Error(ErrorCode::kIo, "sha256 digest failed");
  }
  std::string hex;
  hex.reserve(length * 2);
  char buf[3];
  for (unsigned int i = 0; i < length; ++i) {
    std::snprintf(buf, sizeof(buf), "%02x", digest[i]);
    hex.append(buf, 2);
  }
  return hex;
}

}  // namespace text
}  // namespace propminer

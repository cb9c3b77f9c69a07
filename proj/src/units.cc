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

#include "propminer/units.h"

#include <cmath>
#include <fstream>
#include <regex>
#include <sstream>

#include "json.hpp"
#include "propminer/error.h"
#include "propminer/text.h"

namespace propminer::dbbuild {
namespace {

constexpr std::string_view kMiddleDot = "\xC2\xB7";   // ·
constexpr std::string_view kTimes = "\xC3\x97";       // ×
constexpr std::string_view kDotOperator = "\xE2\x8B\x85";  // ⋅
constexpr std::string_view kPlusMinus = "\xC2\xB1";   // ±

std::string replace_all(std::string s, std::string_view from, std::string_view to) {
  for (std::size_t at = s.find(from); at != std::string::npos;
       at = s.find(from, at + to.size())) {
    s.replace(at, from.size(), to);
  }
  return s;
}

bool is_letter(char c) { return text::is_ascii_lower(c) || text::is_ascii_upper(c); }

[[noreturn]] void non_discrete(std::string_view value, std::string_view why) {
  throw Error(ErrorCode::kNonDiscreteValue,
              std::string(why) + ": " + std::string(value));
}

Factor parse_factor(const nlohmann::json& j) {
  if (j.is_number()) return {j.get<double>(), 1.0};
  std::string s = j.get<std::string>();
  std::size_t slash = s.find('/');
  try {
    if (slash == std::string::npos) return {std::stod(s), 1.0};
    return {std::stod(s.substr(0, slash)), std::stod(s.substr(slash + 1))};
  } catch (const std::exception&) {
    throw Error(ErrorCode::kInvalidInput, "bad unit factor " + s);
  }
}

// Reads digits with optional thousands separators; returns false if a comma
// is not followed by exactly three digits.
bool read_integer_part(std::string_view s, std::size_t& i, std::string& out) {
  std::size_t start = i;
  while (i < s.size() && text::is_ascii_digit(s[i])) out += s[i++];
  if (i == start) return true;
  while (i < s.size() && s[i] == ',') {
    std::size_t j = i + 1;
    std::size_t n = 0;
    while (j < s.size() && text::is_ascii_digit(s[j])) ++j, ++n;
    if (n != 3) return false;
    out.append(s.substr(i + 1, 3));
    i = j;
  }
  return true;
}

bool skip(std::string_view s, std::size_t& i, std::string_view token) {
  if (s.substr(i, token.size()) == token) {
    i += token.size();
    return true;
  }
  return false;
}

void skip_spaces(std::string_view s, std::size_t& i) {
  while (i < s.size() && s[i] == ' ') ++i;
}

bool read_signed_int(std::string_view s, std::size_t& i, std::string& out) {
  if (i < s.size() && (s[i] == '+' || s[i] == '-')) out += s[i++];
  std::size_t start = i;
  while (i < s.size() && text::is_ascii_digit(s[i])) out += s[i++];
  return i > start;
}

}  // namespace

std::string normalize_unit_key(std::string_view unit) {
  std::string s = text::fold_symbols(unit);
  s = replace_all(s, "\xE2\x84\x83", "\xC2\xB0" "C");  // ℃
  s = replace_all(s, "\xC2\xBA", "\xC2\xB0");           // º
  s = replace_all(s, "\xCB\x9A", "\xC2\xB0");           // ˚
  for (std::string_view dot : {kMiddleDot, kDotOperator}) {
    s = replace_all(s, dot, "");
  }
  std::string compact;
  for (char c : s) {
    if (!std::isspace(static_cast<unsigned char>(c)) && c != '*') compact += c;
  }
  static const std::regex braced(R"(\^[\(\{]([+-]?[0-9]+)[\)\}])");
  compact = std::regex_replace(compact, braced, "^$1");
  std::string out;
  for (std::size_t i = 0; i < compact.size(); ++i) {
    char c = compact[i];
    bool exponent_start =
        (text::is_ascii_digit(c) ||
         (c == '-' && i + 1 < compact.size() && text::is_ascii_digit(compact[i + 1]))) &&
        !out.empty() && is_letter(out.back());
    if (exponent_start) out += '^';
    out += c;
  }
  return out;
}

UnitTable UnitTable::parse(std::string_view json) {
  UnitTable table;
  try {
    auto doc = nlohmann::json::parse(json);
    table.property_ = doc.at("property").get<std::string>();
    table.canonical_unit_ = doc.at("canonical_unit").get<std::string>();
    table.add(table.canonical_unit_, Factor{});
    for (const auto& u : doc.at("units")) {
      table.add(u.at("spelling").get<std::string>(), parse_factor(u.at("factor")));
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kInvalidInput, std::string("unit table: ") + e.what());
  }
  return table;
}

UnitTable UnitTable::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot read unit table " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

std::string UnitTable::default_path(std::string_view property) {
  std::string name = text::to_lower_ascii(text::collapse_whitespace(property));
  for (char& c : name) {
    if (c == ' ' || c == '-') c = '_';
  }
  return std::string(PROPMINER_DATA_DIR) + "/units/" + name + ".json";
}

void UnitTable::add(std::string_view spelling, Factor factor) {
  factors_[normalize_unit_key(spelling)] = factor;
}

Factor UnitTable::factor(std::string_view unit) const {
  auto it = factors_.find(normalize_unit_key(unit));
  if (it == factors_.end()) {
    throw Error(ErrorCode::kUnknownUnit,
                "'" + std::string(unit) + "' for " + property_);
  }
  return it->second;
}

std::optional<double> parse_number(std::string_view s) {
  std::size_t i = 0;
  std::string mantissa;
  if (i < s.size() && (s[i] == '+' || s[i] == '-')) mantissa += s[i++];
  std::size_t digits_start = i;
  if (!read_integer_part(s, i, mantissa)) return std::nullopt;
  bool int_digits = i > digits_start;
  bool frac_digits = false;
  if (i < s.size() && s[i] == '.') {
    mantissa += s[i++];
    while (i < s.size() && text::is_ascii_digit(s[i])) {
      mantissa += s[i++];
      frac_digits = true;
    }
  }
  if (!int_digits && !frac_digits) return std::nullopt;

  std::string exponent;
  if (i < s.size() && s[i] == '^' && s.substr(digits_start, i - digits_start) == "10") {
    // Bare power of ten: "10^-3".
    ++i;
    mantissa = mantissa.substr(0, mantissa.size() - 2) + "1";
    if (!read_signed_int(s, i, exponent)) return std::nullopt;
  } else if (i < s.size() && (s[i] == 'e' || s[i] == 'E')) {
    ++i;
    if (!read_signed_int(s, i, exponent)) return std::nullopt;
  } else {
    std::size_t j = i;
    skip_spaces(s, j);
    if (skip(s, j, kMiddleDot) || skip(s, j, kTimes) || skip(s, j, kDotOperator) ||
        skip(s, j, "x") || skip(s, j, "X") || skip(s, j, "*")) {
      skip_spaces(s, j);
      if (!skip(s, j, "10^")) return std::nullopt;
      if (!read_signed_int(s, j, exponent)) return std::nullopt;
      i = j;
    }
  }
  if (i != s.size()) return std::nullopt;
  try {
    double v = std::stod(exponent.empty() ? mantissa : mantissa + "e" + exponent);
    if (!std::isfinite(v)) return std::nullopt;
    return v;
  } catch (const std::exception&) {
    return std::nullopt;
  }
}

DiscreteValue parse_discrete_value(std::string_view value) {
  std::string s = text::collapse_whitespace(text::fold_symbols(value));
  if (s.empty()) non_discrete(value, "empty value");
  // <, >, ~, ≤, ≥, ≈, ≲, ≳, ∼, ⩽, ⩾
  constexpr std::string_view kLimitMarkers[] = {
      "<", ">", "~", "\xE2\x89\xA4", "\xE2\x89\xA5", "\xE2\x89\x88",
      "\xE2\x89\xB2", "\xE2\x89\xB3", "\xE2\x88\xBC", "\xE2\xA9\xBD",
      "\xE2\xA9\xBE"};
  for (std::string_view marker : kLimitMarkers) {
    if (s.find(marker) != std::string::npos) {
      non_discrete(value, "limit or approximate value");
    }
  }
  static const std::regex range(R"([0-9.]\s*(-|to|and|or|/)\s*[-+]?[0-9.])",
                                std::regex::icase);
  static const std::regex words(R"([A-Za-z]{2,})");
  if (s.back() == '+') non_discrete(value, "open-ended value");

  DiscreteValue out;
  std::string central = s;
  std::optional<std::string> unc;
  if (std::size_t pm = s.find(kPlusMinus); pm != std::string::npos) {
    central = s.substr(0, pm);
    unc = s.substr(pm + kPlusMinus.size());
  } else if (std::size_t pm2 = s.find("+/-"); pm2 != std::string::npos) {
    central = s.substr(0, pm2);
    unc = s.substr(pm2 + 3);
  }
  central = std::string(text::trim(central));
  if (unc) {
    auto c = parse_number(central);
    auto u = parse_number(text::trim(*unc));
    if (!c || !u) non_discrete(value, "unparsable uncertainty");
    out.value = *c;
    out.uncertainty = std::fabs(*u);
    return out;
  }

  static const std::regex paren_unc(R"(^([-+]?[0-9]*\.?([0-9]*)) ?\(([0-9]+)\)$)");
  std::smatch m;
  if (std::regex_match(central, m, paren_unc)) {
    auto c = parse_number(m.str(1));
    if (!c) non_discrete(value, "unparsable value");
    out.value = *c;
    int decimals = m.str(1).find('.') == std::string::npos
                       ? 0
                       : static_cast<int>(m.str(2).size());
    out.uncertainty = std::stod(m.str(3)) * std::pow(10.0, -decimals);
    return out;
  }

  auto c = parse_number(central);
  if (!c) {
    if (std::regex_search(central, range)) non_discrete(value, "range");
    if (std::regex_search(central, words)) non_discrete(value, "qualitative value");
    non_discrete(value, "not a single number");
  }
  out.value = *c;
  return out;
}

NormalizedValue normalize_value_unit(std::string_view value,
                                     std::string_view unit,
                                     const UnitTable& table) {
  DiscreteValue dv = parse_discrete_value(value);
  Factor f = table.factor(unit);
  NormalizedValue out;
  out.canonical_value = f.apply(dv.value);
  out.canonical_unit = table.canonical_unit();
  if (dv.uncertainty) out.uncertainty = f.apply(*dv.uncertainty);
  return out;
}

}  // namespace propminer::dbbuild

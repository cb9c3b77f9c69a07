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

#ifndef PROPMINER_UNITS_H_
#define PROPMINER_UNITS_H_

#include <map>
#include <optional>
#include <string>
#include <string_view>

namespace propminer::dbbuild {

// Multiplicative conversion factor kept as a ratio so that factors such as
// 1/60 are applied as value * num / den.
struct Factor {
  double num = 1.0;
  double den = 1.0;

  double value() const { return num / den; }
  double apply(double v) const { return v * num / den; }
};

// Canonical spelling used for unit lookups: symbols folded, spaces and
// multiplication dots removed, exponents written "^-1" ("K s−1" -> "Ks^-1").
std::string normalize_unit_key(std::string_view unit);

// Per-property unit configuration. JSON file:
//   {"property": ..., "canonical_unit": ...,
//    "units": [{"spelling": "K/min", "factor": "1/60"}, ...]}
// A factor is a number or a "num/den" string.
class UnitTable {
 public:
  static UnitTable parse(std::string_view json);
  static UnitTable load(const std::string& path);
  // data/units/<property with spaces as underscores>.json
  static std::string default_path(std::string_view property);

  const std::string& property() const { return property_; }
  const std::string& canonical_unit() const { return canonical_unit_; }

  void add(std::string_view spelling, Factor factor);
  // Throws Error(kUnknownUnit).
  Factor factor(std::string_view unit) const;

 private:
  std::string property_;
  std::string canonical_unit_;
  std::map<std::string, Factor> factors_;
};

// Strict numeric literal: optional sign, digits with optional thousands
// commas, decimals, and an exponent written e-notation, "·10^n", "×10^n",
// "x10^n" or a bare "10^n". nullopt if s is anything else.
std::optional<double> parse_number(std::string_view s);

struct DiscreteValue {
  double value = 0.0;
  std::optional<double> uncertainty;
};

// Accepts a single number with an optional "± u" or "(u)" uncertainty.
// Ranges, limits, approximate markers and words throw
// Error(kNonDiscreteValue).
DiscreteValue parse_discrete_value(std::string_view value);

struct NormalizedValue {
  double canonical_value = 0.0;
  std::string canonical_unit;
  std::optional<double> uncertainty;  // in the canonical unit
};

NormalizedValue normalize_value_unit(std::string_view value,
                                     std::string_view unit,
                                     const UnitTable& table);

}  // namespace propminer::dbbuild

#endif  // PROPMINER_UNITS_H_

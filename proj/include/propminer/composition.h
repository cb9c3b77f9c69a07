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

#ifndef PROPMINER_COMPOSITION_H_
#define PROPMINER_COMPOSITION_H_

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace propminer::dbbuild {

bool is_element_symbol(std::string_view symbol);

// Element amounts in order of first appearance, as written (before
// normalization). Zero amounts are dropped at parse time.
class Composition {
 public:
  Composition() = default;
  explicit Composition(std::vector<std::pair<std::string, double>> amounts);

  const std::vector<std::pair<std::string, double>>& amounts() const {
    return amounts_;
  }
  std::size_t size() const { return amounts_.size(); }
  bool contains(std::string_view symbol) const;

  // Amounts scaled to sum to 100.
  std::vector<std::pair<std::string, double>> normalized() const;

  // Same element set and normalized fractions within relative tolerance.
  bool equals(const Composition& other, double rel_tol = 1e-6) const;

  // AXBYCZ form of the normalized fractions, e.g. "Cu33.33333333Zr66.66666667".
  std::string formula() const;

 private:
  std::vector<std::pair<std::string, double>> amounts_;
};

// Human-supplied material text -> formula mappings, consulted before the
// parser. File format: one "material<TAB>formula" pair per line, '#' starts
// a comment.
class CompositionOverrides {
 public:
  CompositionOverrides() = default;
  static CompositionOverrides load(const std::string& path);

  void add(std::string_view material, std::string_view formula);
  std::optional<std::string> lookup(std::string_view material) const;
  bool empty() const { return map_.empty(); }

 private:
  std::map<std::string, std::string> map_;
};

// Element+subscript sequences with decimal subscripts, implicit 1, nested
// (), [] groups with multipliers, and subscript expressions over variables
// x, y, z, δ bound in the text ("(x=15)", "with x = 0.5"). An "at.%" note is
// accepted. Family names, prose, unbound variables and unknown symbols throw
// Error(kNotUniquelyIdentifiable).
Composition parse_composition(std::string_view material,
                              const CompositionOverrides* overrides = nullptr);

}  // namespace propminer::dbbuild

#endif  // PROPMINER_COMPOSITION_H_

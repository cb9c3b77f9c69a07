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

#include "propminer/composition.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <regex>

#include "propminer/error.h"
#include "propminer/text.h"

namespace propminer::dbbuild {
namespace {

constexpr std::string_view kElements[] = {
    "H",  "He", "Li", "Be", "B",  "C",  "N",  "O",  "F",  "Ne", "Na", "Mg",
    "Al", "Si", "P",  "S",  "Cl", "Ar", "K",  "Ca", "Sc", "Ti", "V",  "Cr",
    "Mn", "Fe", "Co", "Ni", "Cu", "Zn", "Ga", "Ge", "As", "Se", "Br", "Kr",
    "Rb", "Sr", "Y",  "Zr", "Nb", "Mo", "Tc", "Ru", "Rh", "Pd", "Ag", "Cd",
    "In", "Sn", "Sb", "Te", "I",  "Xe", "Cs", "Ba", "La", "Ce", "Pr", "Nd",
    "Pm", "Sm", "Eu", "Gd", "Tb", "Dy", "Ho", "Er", "Tm", "Yb", "Lu", "Hf",
    "Ta", "W",  "Re", "Os", "Ir", "Pt", "Au", "Hg", "Tl", "Pb", "Bi", "Po",
    "At", "Rn", "Fr", "Ra", "Ac", "Th", "Pa", "U",  "Np", "Pu", "Am", "Cm",
    "Bk", "Cf", "Es", "Fm", "Md", "No", "Lr", "Rf", "Db", "Sg", "Bh", "Hs",
    "Mt", "Ds", "Rg", "Cn", "Nh", "Fl", "Mc", "Lv", "Ts", "Og"};

using Amounts = std::vector<std::pair<std::string, double>>;

[[noreturn]] void reject(std::string_view material, std::string_view why) {
  throw Error(ErrorCode::kNotUniquelyIdentifiable,
              std::string(why) + ": " + std::string(material));
}

bool is_variable(char c) { return c == 'x' || c == 'y' || c == 'z' || c == 'd'; }

void merge(Amounts& into, const std::string& symbol, double amount) {
  for (auto& [s, v] : into) {
    if (s == symbol) {
      v += amount;
      return;
    }
  }
  into.emplace_back(symbol, amount);
}

class Parser {
 public:
  Parser(std::string_view original, std::string s, std::map<char, double> vars)
      : original_(original), s_(std::move(s)), vars_(std::move(vars)) {}

  Amounts parse() {
    Amounts out = sequence('\0');
    if (pos_ != s_.size()) fail("trailing text");
    return out;
  }

 private:
  [[noreturn]] void fail(std::string_view why) { reject(original_, why); }

  bool at(char c) const { return pos_ < s_.size() && s_[pos_] == c; }
  char peek(std::size_t ahead = 0) const {
    return pos_ + ahead < s_.size() ? s_[pos_ + ahead] : '\0';
  }

  static char closer(char open) {
    return open == '(' ? ')' : open == '[' ? ']' : '}';
  }

  Amounts sequence(char close) {
    Amounts out;
    while (pos_ < s_.size() && s_[pos_] != close) {
      char c = s_[pos_];
      if (c == '(' || c == '[' || c == '{') {
        ++pos_;
        Amounts inner = sequence(closer(c));
        if (!at(closer(c))) fail("unbalanced bracket");
        ++pos_;
        double mult = subscript();
        for (auto& [sym, v] : inner) merge(out, sym, v * mult);
      } else if (text::is_ascii_upper(c)) {
        std::string symbol = element();
        merge(out, symbol, subscript());
      } else {
        fail("not a formula");
      }
    }
    if (out.empty()) fail("empty formula");
    return out;
  }

  std::string element() {
    if (text::is_ascii_lower(peek(1))) {
      std::string two = s_.substr(pos_, 2);
      if (is_element_symbol(two)) {
        pos_ += 2;
        return two;
      }
    }
    std::string one = s_.substr(pos_, 1);
    if (!is_element_symbol(one)) fail("unknown element");
    ++pos_;
    return one;
  }

  bool starts_number() const {
    return text::is_ascii_digit(peek()) ||
           (peek() == '.' && text::is_ascii_digit(peek(1)));
  }

  // A bracket right after an element is a subscript expression when it
  // holds no element symbols, e.g. Si(4-x).
  bool paren_subscript() const {
    if (!at('(')) return false;
    std::size_t close = s_.find(')', pos_);
    if (close == std::string::npos || close == pos_ + 1) return false;
    for (std::size_t i = pos_ + 1; i < close; ++i) {
      if (text::is_ascii_upper(s_[i]) || s_[i] == '(') return false;
    }
    return true;
  }

  double subscript() {
    double v = 1.0;
    if (paren_subscript()) {
      ++pos_;
      v = expr(true);
      if (!at(')')) fail("bad subscript");
      ++pos_;
    } else if (starts_number() || is_variable(peek())) {
      v = expr(false);
    }
    if (!std::isfinite(v) || v < 0) fail("negative amount");
    return v;
  }

  double number() {
    std::size_t start = pos_;
    while (text::is_ascii_digit(peek())) ++pos_;
    if (at('.')) {
      ++pos_;
      while (text::is_ascii_digit(peek())) ++pos_;
    }
    return std::stod(s_.substr(start, pos_ - start));
  }

  double variable() {
    char name = s_[pos_++];
    auto it = vars_.find(name);
    if (it == vars_.end()) fail(std::string("unbound variable ") + name);
    return it->second;
  }

  double factor(bool nested) {
    if (starts_number()) return number();
    if (is_variable(peek())) return variable();
    if (nested && at('(')) {
      ++pos_;
      double v = expr(true);
      if (!at(')')) fail("bad subscript");
      ++pos_;
      return v;
    }
    fail("bad subscript");
  }

  double term(bool nested) {
    double v = factor(nested);
    while (true) {
      if (is_variable(peek()) || (nested && at('('))) {
        v *= factor(nested);
      } else if (nested && (at('*') || at('/'))) {
        char op = s_[pos_++];
        double rhs = factor(nested);
        v = op == '*' ? v * rhs : v / rhs;
      } else {
        return v;
      }
    }
  }

  double expr(bool nested) {
    double v = term(nested);
    while (at('+') || at('-')) {
      char next = peek(1);
      bool operand = text::is_ascii_digit(next) || next == '.' ||
                     is_variable(next) || (nested && next == '(');
      if (!operand) break;
      char op = s_[pos_++];
      double rhs = term(nested);
      v = op == '+' ? v + rhs : v - rhs;
    }
    return v;
  }

  std::string_view original_;
  std::string s_;
  std::map<char, double> vars_;
  std::size_t pos_ = 0;
};

std::string replace_all(std::string s, std::string_view from, std::string_view to) {
  for (std::size_t at = s.find(from); at != std::string::npos;
       at = s.find(from, at + to.size())) {
    s.replace(at, from.size(), to);
  }
  return s;
}

std::string format_amount(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  std::string out = buf;
  if (out.find('e') == std::string::npos) return out;
  std::snprintf(buf, sizeof buf, "%.15f", v);
  out = buf;
  while (!out.empty() && out.back() == '0') out.pop_back();
  if (!out.empty() && out.back() == '.') out.pop_back();
  return out;
}

}  // namespace

bool is_element_symbol(std::string_view symbol) {
  return std::find(std::begin(kElements), std::end(kElements), symbol) !=
         std::end(kElements);
}

Composition::Composition(std::vector<std::pair<std::string, double>> amounts)
    : amounts_(std::move(amounts)) {}

bool Composition::contains(std::string_view symbol) const {
  return std::any_of(amounts_.begin(), amounts_.end(),
                     [&](const auto& p) { return p.first == symbol; });
}

std::vector<std::pair<std::string, double>> Composition::normalized() const {
  double total = 0;
  for (const auto& [s, v] : amounts_) total += v;
  std::vector<std::pair<std::string, double>> out;
  for (const auto& [s, v] : amounts_) out.emplace_back(s, v * 100.0 / total);
  return out;
}

bool Composition::equals(const Composition& other, double rel_tol) const {
  if (size() != other.size()) return false;
  auto b = other.normalized();
  for (const auto& [sym, va] : normalized()) {
    auto it = std::find_if(b.begin(), b.end(),
                           [&](const auto& p) { return p.first == sym; });
    if (it == b.end()) return false;
    double vb = it->second;
    if (std::fabs(va - vb) > rel_tol * std::max(std::fabs(va), std::fabs(vb))) {
      return false;
    }
  }
  return true;
}

std::string Composition::formula() const {
  std::string out;
  for (const auto& [s, v] : normalized()) out += s + format_amount(v);
  return out;
}

CompositionOverrides CompositionOverrides::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot read overrides " + path);
  CompositionOverrides o;
  std::string line;
  while (std::getline(in, line)) {
    if (text::trim(line).empty() || text::trim(line)[0] == '#') continue;
    std::size_t tab = line.find('\t');
    if (tab == std::string::npos) {
      throw Error(ErrorCode::kInvalidInput, "override line without tab: " + line);
    }
    o.add(line.substr(0, tab), line.substr(tab + 1));
  }
  return o;
}

void CompositionOverrides::add(std::string_view material, std::string_view formula) {
  map_[text::collapse_whitespace(material)] = std::string(text::trim(formula));
}

std::optional<std::string> CompositionOverrides::lookup(
    std::string_view material) const {
  auto it = map_.find(text::collapse_whitespace(material));
  if (it == map_.end()) return std::nullopt;
  return it->second;
}

Composition parse_composition(std::string_view material,
                              const CompositionOverrides* overrides) {
  if (overrides != nullptr) {
    if (auto formula = overrides->lookup(material)) {
      return parse_composition(*formula, nullptr);
    }
  }
  std::string s = replace_all(text::fold_symbols(material), "δ", "d");

  static const std::regex binding(R"(([xyzd])\s*=\s*([0-9]+(?:\.[0-9]+)?|\.[0-9]+))");
  static const std::regex empty_group(R"([\(\[]\s*(?:[,;]|and|\s)*[\)\]])");
  static const std::regex connective(R"((^|[\s,;])(with|where|and)(?=[\s,;]|$))");
  static const std::regex atomic_note(R"([\(\[]?\s*at\s*\.?\s*%\s*[\)\]]?)",
                                      std::regex::icase);
  std::map<char, double> vars;
  for (std::smatch m; std::regex_search(s, m, binding);) {
    vars[m.str(1)[0]] = std::stod(m.str(2));
    s = m.prefix().str() + " " + m.suffix().str();
  }
  s = std::regex_replace(s, atomic_note, " ");
  if (!vars.empty()) {
    s = std::regex_replace(s, connective, "$1 ");
    for (std::string prev; prev != s;) {
      prev = s;
      s = std::regex_replace(s, empty_group, " ");
    }
  }
  // Spaces may only separate formula pieces ("Fe80 B20"), never words.
  std::string trimmed(text::trim(s));
  std::string compact;
  for (std::size_t i = 0; i < trimmed.size(); ++i) {
    if (!std::isspace(static_cast<unsigned char>(trimmed[i]))) {
      compact += trimmed[i];
      continue;
    }
    std::size_t next = i;
    while (next < trimmed.size() &&
           std::isspace(static_cast<unsigned char>(trimmed[next]))) {
      ++next;
    }
    char before = compact.empty() ? '\0' : compact.back();
    char after = next < trimmed.size() ? trimmed[next] : '\0';
    bool joint = (text::is_ascii_digit(before) || before == ')' ||
                  before == ']' || is_variable(before)) &&
                 (text::is_ascii_upper(after) || after == '(' || after == '[');
    if (!joint && after != '\0' && after != ',' && after != ';') {
      reject(material, "not a single formula");
    }
    i = next - 1;
  }
  while (!compact.empty() &&
         (compact.back() == ',' || compact.back() == ';' || compact.back() == ':')) {
    compact.pop_back();
  }
  if (compact.empty()) reject(material, "empty material");

  Amounts amounts = Parser(material, compact, vars).parse();
  std::erase_if(amounts, [](const auto& p) { return p.second == 0.0; });
  if (amounts.empty()) reject(material, "all amounts are zero");
  return Composition(std::move(amounts));
}

}  // namespace propminer::dbbuild

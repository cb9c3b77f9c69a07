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

#include "propminer/evalkit.h"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>

#include "json.hpp"
#include "propminer/error.h"
#include "propminer/records_io.h"
#include "propminer/text.h"
#include "propminer/units.h"

namespace propminer::evalkit {
namespace {

using json = nlohmann::ordered_json;

constexpr std::string_view kPlusMinus = "\xC2\xB1";

std::string strip_spaces(std::string_view s) {
  std::string out;
  for (char c : s) {
    if (!std::isspace(static_cast<unsigned char>(c))) out += c;
  }
  return out;
}

struct ValueParts {
  std::string marker;
  std::string core;
  std::optional<std::string> uncertainty;
};

ValueParts split_value(std::string_view raw) {
  std::string s = strip_spaces(text::fold_symbols(raw));
  ValueParts p;
  // Inequality and approximation markers stay part of the identity.
  constexpr std::pair<std::string_view, std::string_view> kMarkers[] = {
      {"<=", "\xE2\x89\xA4"}, {">=", "\xE2\x89\xA5"}, {"\xE2\x89\xA4", "\xE2\x89\xA4"},
      {"\xE2\x89\xA5", "\xE2\x89\xA5"}, {"\xE2\x89\x88", "~"}, {"\xE2\x88\xBC", "~"},
      {"<", "<"}, {">", ">"}, {"~", "~"}};
  bool found = true;
  while (found) {
    found = false;
    for (const auto& [spelling, canonical] : kMarkers) {
      if (s.compare(0, spelling.size(), spelling) == 0) {
        p.marker += canonical;
        s.erase(0, spelling.size());
        found = true;
        break;
      }
    }
  }
  std::size_t pm = s.find(kPlusMinus);
  std::size_t width = kPlusMinus.size();
  if (pm == std::string::npos) {
    pm = s.find("+/-");
    width = 3;
  }
  if (pm != std::string::npos) {
    p.uncertainty = s.substr(pm + width);
    s.erase(pm);
  }
  p.core = s;
  return p;
}

bool same_quantity(const std::string& a, const std::string& b) {
  if (a == b) return true;
  auto x = dbbuild::parse_number(a);
  auto y = dbbuild::parse_number(b);
  if (!x || !y) return false;
  return std::fabs(*x - *y) <= 1e-9 * std::max(std::fabs(*x), std::fabs(*y));
}

std::string material_text_key(std::string_view s) {
  return text::collapse_whitespace(text::fold_symbols(s));
}

std::optional<dbbuild::Composition> try_composition(std::string_view material) {
  try {
    return dbbuild::parse_composition(material);
  } catch (const Error&) {
    return std::nullopt;
  }
}

std::string fraction_text(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f%%", v * 100.0);
  return buf;
}

json score_json(const Score& s) {
  json j;
  j["tp"] = s.counts.tp;
  j["fp"] = s.counts.fp;
  j["fn"] = s.counts.fn;
  j["precision"] = s.precision;
  j["recall"] = s.recall;
  j["precision_undefined"] = s.precision_undefined;
  j["recall_undefined"] = s.recall_undefined;
  return j;
}

json triplet_json(const Triplet& t) {
  return json{{"material", t.material}, {"value", t.value}, {"unit", t.unit}};
}

}  // namespace

std::string_view category_name(Category c) {
  switch (c) {
    case Category::kSingle: return "single";
    case Category::kMulti: return "multi";
    case Category::kNone: return "none";
  }
  return "";
}

std::optional<Category> category_from_name(std::string_view name) {
  for (Category c : {Category::kSingle, Category::kMulti, Category::kNone}) {
    if (category_name(c) == name) return c;
  }
  return std::nullopt;
}

std::vector<GroundTruthPassage> read_ground_truth(const std::string& path) {
  std::vector<GroundTruthPassage> out;
  std::istringstream in(io::read_file(path));
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (text::trim(line).empty()) continue;
    std::string where = path + ":" + std::to_string(line_no);
    try {
      json j = json::parse(line);
      GroundTruthPassage p;
      p.doc_id = j.at("doc_id").get<std::string>();
      p.sentence_index = j.at("sentence_index").get<int>();
      auto category = category_from_name(j.at("category").get<std::string>());
      if (!category) throw Error(ErrorCode::kInvalidInput, where + ": bad category");
      p.category = *category;
      for (const json& t : j.at("triplets")) {
        p.triplets.push_back({t.at("material").get<std::string>(),
                              t.at("value").get<std::string>(),
                              t.at("unit").get<std::string>()});
      }
      if ((p.category == Category::kNone) != p.triplets.empty()) {
        throw Error(ErrorCode::kInvalidInput,
                    where + ": category none iff no triplets");
      }
      out.push_back(std::move(p));
    } catch (const json::exception& e) {
      throw Error(ErrorCode::kInvalidInput, where + ": " + e.what());
    }
  }
  return out;
}

void write_ground_truth(const std::string& path,
                        const std::vector<GroundTruthPassage>& gt) {
  std::string out;
  for (const GroundTruthPassage& p : gt) {
    json j;
    j["doc_id"] = p.doc_id;
    j["sentence_index"] = p.sentence_index;
    j["category"] = category_name(p.category);
    j["triplets"] = json::array();
    for (const Triplet& t : p.triplets) j["triplets"].push_back(triplet_json(t));
    out += j.dump() + "\n";
  }
  io::write_file_atomic(path, out);
}

MaterialOverrides MaterialOverrides::load(const std::string& path) {
  MaterialOverrides o;
  std::istringstream in(io::read_file(path));
  std::string line;
  while (std::getline(in, line)) {
    std::string_view t = text::trim(line);
    if (t.empty() || t[0] == '#') continue;
    std::size_t tab = line.find('\t');
    if (tab == std::string::npos) {
      throw Error(ErrorCode::kInvalidInput, "override pair without tab: " + line);
    }
    o.add_pair(line.substr(0, tab), line.substr(tab + 1));
  }
  return o;
}

std::string MaterialOverrides::find(const std::string& name) const {
  std::string cur = name;
  for (auto it = parent_.find(cur); it != parent_.end() && it->second != cur;
       it = parent_.find(cur)) {
    cur = it->second;
  }
  return cur;
}

void MaterialOverrides::add_pair(std::string_view a, std::string_view b) {
  std::string ka = material_text_key(a);
  std::string kb = material_text_key(b);
  parent_.emplace(ka, ka);
  parent_.emplace(kb, kb);
  std::string ra = find(ka);
  std::string rb = find(kb);
  if (ra != rb) parent_[std::max(ra, rb)] = std::min(ra, rb);
}

bool MaterialOverrides::equivalent(std::string_view a, std::string_view b) const {
  std::string ka = material_text_key(a);
  std::string kb = material_text_key(b);
  if (!parent_.count(ka) || !parent_.count(kb)) return false;
  return find(ka) == find(kb);
}

bool materials_equivalent(std::string_view a, std::string_view b,
                          const MaterialOverrides* overrides) {
  if (material_text_key(a) == material_text_key(b)) return true;
  if (overrides != nullptr && overrides->equivalent(a, b)) return true;
  auto ca = try_composition(a);
  if (!ca) return false;
  auto cb = try_composition(b);
  return cb && ca->equals(*cb);
}

bool values_equivalent(std::string_view a, std::string_view b) {
  ValueParts x = split_value(a);
  ValueParts y = split_value(b);
  if (x.marker != y.marker) return false;
  if (!same_quantity(x.core, y.core)) return false;
  if (x.uncertainty && y.uncertainty) {
    return same_quantity(*x.uncertainty, *y.uncertainty);
  }
  return true;
}

bool units_equivalent(std::string_view a, std::string_view b) {
  return text::to_lower_ascii(strip_spaces(text::fold_symbols(a))) ==
         text::to_lower_ascii(strip_spaces(text::fold_symbols(b)));
}

bool triplets_equivalent(const Triplet& a, const Triplet& b,
                         const MaterialOverrides* overrides) {
  return units_equivalent(a.unit, b.unit) && values_equivalent(a.value, b.value) &&
         materials_equivalent(a.material, b.material, overrides);
}

PassageMatch match_passage(const std::vector<Triplet>& ground,
                           const std::vector<Triplet>& extracted,
                           const MaterialOverrides* overrides) {
  PassageMatch m;
  std::vector<bool> used(ground.size(), false);
  for (const Triplet& e : extracted) {
    std::optional<std::size_t> hit;
    for (std::size_t g = 0; g < ground.size(); ++g) {
      if (!used[g] && triplets_equivalent(e, ground[g], overrides)) {
        hit = g;
        used[g] = true;
        break;
      }
    }
    m.matched_ground.push_back(hit);
    if (hit) {
      ++m.counts.tp;
    } else {
      ++m.counts.fp;
    }
  }
  m.counts.fn = ground.size() - m.counts.tp;
  return m;
}

std::size_t optimal_tp(const std::vector<Triplet>& ground,
                       const std::vector<Triplet>& extracted,
                       const MaterialOverrides* overrides) {
  std::vector<std::vector<bool>> adj(extracted.size(),
                                     std::vector<bool>(ground.size()));
  for (std::size_t e = 0; e < extracted.size(); ++e) {
    for (std::size_t g = 0; g < ground.size(); ++g) {
      adj[e][g] = triplets_equivalent(extracted[e], ground[g], overrides);
    }
  }
  std::vector<int> owner(ground.size(), -1);
  std::function<bool(std::size_t, std::vector<bool>&)> augment =
      [&](std::size_t e, std::vector<bool>& seen) {
        for (std::size_t g = 0; g < ground.size(); ++g) {
          if (!adj[e][g] || seen[g]) continue;
          seen[g] = true;
          if (owner[g] < 0 || augment(static_cast<std::size_t>(owner[g]), seen)) {
            owner[g] = static_cast<int>(e);
            return true;
          }
        }
        return false;
      };
  std::size_t matched = 0;
  for (std::size_t e = 0; e < extracted.size(); ++e) {
    std::vector<bool> seen(ground.size(), false);
    if (augment(e, seen)) ++matched;
  }
  return matched;
}

Score score(const Counts& c) {
  Score s;
  s.counts = c;
  if (c.tp + c.fp == 0) {
    s.precision_undefined = true;
  } else {
    s.precision = static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fp);
  }
  if (c.tp + c.fn == 0) {
    s.recall_undefined = true;
  } else {
    s.recall = static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn);
  }
  return s;
}

MatchReport evaluate(const std::vector<GroundTruthPassage>& gt,
                     const std::vector<engine::ExtractionRecord>& records,
                     const EvalOptions& options) {
  std::map<std::pair<std::string, int>, std::size_t> index;
  for (std::size_t i = 0; i < gt.size(); ++i) {
    auto [it, inserted] = index.emplace(std::make_pair(gt[i].doc_id, gt[i].sentence_index), i);
    if (!inserted) {
      throw Error(ErrorCode::kInvalidInput,
                  "duplicate ground-truth passage " + gt[i].doc_id + " " +
                      std::to_string(gt[i].sentence_index));
    }
  }

  MatchReport report;
  std::vector<std::vector<Triplet>> extracted(gt.size());
  std::set<std::string> unresolved;
  for (const engine::ExtractionRecord& r : records) {
    if (r.source != engine::Source::kText || !r.sentence_index) {
      ++report.skipped_non_text;
      continue;
    }
    auto it = index.find({r.doc_id, *r.sentence_index});
    if (it == index.end()) {
      std::string key = r.doc_id + "\t" + std::to_string(*r.sentence_index);
      if (options.strict) throw Error(ErrorCode::kUnresolvedProvenance, key);
      unresolved.insert(key);
      continue;
    }
    extracted[it->second].push_back(r.triplet);
  }
  report.unresolved.assign(unresolved.begin(), unresolved.end());

  Counts single, multi, overall;
  for (std::size_t i = 0; i < gt.size(); ++i) {
    LedgerEntry entry;
    entry.doc_id = gt[i].doc_id;
    entry.sentence_index = gt[i].sentence_index;
    entry.category = gt[i].category;
    entry.ground = gt[i].triplets;
    entry.extracted = extracted[i];
    entry.match = match_passage(entry.ground, entry.extracted, options.overrides);
    entry.suboptimal =
        optimal_tp(entry.ground, entry.extracted, options.overrides) > entry.match.counts.tp;
    overall += entry.match.counts;
    if (entry.category == Category::kSingle) single += entry.match.counts;
    if (entry.category == Category::kMulti) multi += entry.match.counts;
    report.ledger.push_back(std::move(entry));
  }
  report.single = score(single);
  report.multi = score(multi);
  report.overall = score(overall);
  return report;
}

std::string format_report(const MatchReport& report) {
  std::string out;
  char line[160];
  std::snprintf(line, sizeof line, "%-9s %10s %10s %6s %6s %6s\n", "category",
                "precision", "recall", "TP", "FP", "FN");
  out += line;
  auto row = [&](const char* name, const Score& s) {
    std::string p = fraction_text(s.precision) + (s.precision_undefined ? "*" : "");
    std::string r = fraction_text(s.recall) + (s.recall_undefined ? "*" : "");
    std::snprintf(line, sizeof line, "%-9s %10s %10s %6zu %6zu %6zu\n", name,
                  p.c_str(), r.c_str(), s.counts.tp, s.counts.fp, s.counts.fn);
    out += line;
  };
  row("single", report.single);
  row("multi", report.multi);
  row("overall", report.overall);
  bool undefined = false;
  for (const Score* s : {&report.single, &report.multi, &report.overall}) {
    undefined = undefined || s->precision_undefined || s->recall_undefined;
  }
  if (undefined) out += "* undefined (zero denominator), reported as 0\n";
  std::size_t suboptimal = 0;
  for (const LedgerEntry& e : report.ledger) suboptimal += e.suboptimal ? 1 : 0;
  if (suboptimal > 0) {
    out += "passages where greedy matching is below the optimum: " +
           std::to_string(suboptimal) + "\n";
  }
  if (!report.unresolved.empty()) {
    out += "unresolved provenance (" + std::to_string(report.unresolved.size()) + "):\n";
    for (const std::string& u : report.unresolved) out += "  " + u + "\n";
  }
  if (report.skipped_non_text > 0) {
    out += "non-text records skipped: " + std::to_string(report.skipped_non_text) + "\n";
  }
  return out;
}

std::string report_to_json(const MatchReport& report) {
  json j;
  j["single"] = score_json(report.single);
  j["multi"] = score_json(report.multi);
  j["overall"] = score_json(report.overall);
  j["unresolved"] = report.unresolved;
  j["skipped_non_text"] = report.skipped_non_text;
  j["ledger"] = json::array();
  for (const LedgerEntry& e : report.ledger) {
    json le;
    le["doc_id"] = e.doc_id;
    le["sentence_index"] = e.sentence_index;
    le["category"] = category_name(e.category);
    le["tp"] = e.match.counts.tp;
    le["fp"] = e.match.counts.fp;
    le["fn"] = e.match.counts.fn;
    le["suboptimal"] = e.suboptimal;
    le["extracted"] = json::array();
    for (std::size_t k = 0; k < e.extracted.size(); ++k) {
      json d = triplet_json(e.extracted[k]);
      d["matched_ground"] = e.match.matched_ground[k]
                                ? json(*e.match.matched_ground[k])
                                : json(nullptr);
      le["extracted"].push_back(d);
    }
    le["ground"] = json::array();
    for (const Triplet& t : e.ground) le["ground"].push_back(triplet_json(t));
    j["ledger"].push_back(le);
  }
  return j.dump(1) + "\n";
}

}  // namespace propminer::evalkit

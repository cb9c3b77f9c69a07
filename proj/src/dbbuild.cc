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

#include "propminer/dbbuild.h"

#include <algorithm>
#include <cstdio>
#include <map>
#include <tuple>

#include "propminer/text.h"

namespace propminer::dbbuild {
namespace {

using engine::ExtractionRecord;
using engine::Source;

// Sort key for "earliest": text records by sentence index, then tables.
std::tuple<int, int, int> position(const ExtractionRecord& r) {
  if (r.source == Source::kText) {
    return {0, r.sentence_index.value_or(0), r.row};
  }
  return {1, r.table_index.value_or(0), r.row};
}

std::string tsv_cell(std::string_view s) {
  std::string out;
  for (char c : s) out += (c == '\t' || c == '\n' || c == '\r') ? ' ' : c;
  return out;
}

std::string number_text(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

std::string index_text(const ExtractionRecord& r) {
  if (r.source == Source::kText && r.sentence_index) {
    return std::to_string(*r.sentence_index);
  }
  if (r.table_index) return "table" + std::to_string(*r.table_index);
  return "";
}

}  // namespace

std::string provenance_key(const ExtractionRecord& r) {
  int index = r.source == Source::kTable ? r.table_index.value_or(0)
                                         : r.sentence_index.value_or(0);
  return r.doc_id + "\t" + std::string(engine::source_name(r.source)) + "\t" +
         std::to_string(index) + "\t" + std::to_string(r.row);
}

std::vector<ExtractionRecord> clean(const std::vector<ExtractionRecord>& raw) {
  // Duplicate group -> index of the earliest member.
  std::map<std::tuple<std::string, std::string, std::string, std::string>,
           std::size_t>
      keep;
  for (std::size_t i = 0; i < raw.size(); ++i) {
    const ExtractionRecord& r = raw[i];
    auto key = std::make_tuple(r.doc_id, text::collapse_whitespace(r.triplet.material),
                               text::collapse_whitespace(r.triplet.value),
                               text::collapse_whitespace(r.triplet.unit));
    auto [it, inserted] = keep.emplace(key, i);
    if (!inserted && position(r) < position(raw[it->second])) it->second = i;
  }
  std::vector<bool> kept(raw.size(), false);
  for (const auto& [key, index] : keep) kept[index] = true;
  std::vector<ExtractionRecord> out;
  for (std::size_t i = 0; i < raw.size(); ++i) {
    if (kept[i]) out.push_back(raw[i]);
  }
  return out;
}

StandardizeResult standardize(const std::vector<ExtractionRecord>& cleaned,
                              const UnitTable& units,
                              const CompositionOverrides* overrides) {
  StandardizeResult result;
  for (const ExtractionRecord& r : cleaned) {
    try {
      StandardEntry e;
      e.record = r;
      e.composition = parse_composition(r.triplet.material, overrides);
      NormalizedValue v = normalize_value_unit(r.triplet.value, r.triplet.unit, units);
      e.canonical_value = v.canonical_value;
      e.canonical_unit = v.canonical_unit;
      e.uncertainty = v.uncertainty;
      result.entries.push_back(std::move(e));
    } catch (const Error& err) {
      result.exclusions.push_back({r, err.code(), err.what()});
    }
  }
  return result;
}

std::vector<StandardEntry> filter_domain(const std::vector<StandardEntry>& db,
                                         const DomainRule& rule) {
  std::vector<StandardEntry> out;
  for (const StandardEntry& e : db) {
    if (rule.min_elements && e.composition.size() < *rule.min_elements) continue;
    bool excluded = std::any_of(
        rule.exclude_elements.begin(), rule.exclude_elements.end(),
        [&](const std::string& sym) { return e.composition.contains(sym); });
    if (!excluded) out.push_back(e);
  }
  return out;
}

DbSummary summarize(const std::vector<StandardEntry>& db) {
  DbSummary s;
  s.entries = db.size();
  std::vector<const StandardEntry*> datapoints;
  std::vector<const Composition*> compositions;
  for (const StandardEntry& e : db) {
    bool seen_comp = std::any_of(compositions.begin(), compositions.end(),
                                 [&](const Composition* c) { return c->equals(e.composition); });
    if (!seen_comp) compositions.push_back(&e.composition);
    bool seen_point = std::any_of(datapoints.begin(), datapoints.end(), [&](const StandardEntry* d) {
      return d->composition.equals(e.composition) &&
             d->canonical_value == e.canonical_value;
    });
    if (!seen_point) datapoints.push_back(&e);
  }
  s.unique_datapoints = datapoints.size();
  s.unique_compositions = compositions.size();
  return s;
}

std::string standardized_to_tsv(const std::vector<StandardEntry>& db,
                                 const std::string& config_hash,
                                 const std::string& pack_version) {
  std::string out = "# config_hash=" + config_hash + " pack=" + pack_version + "\n";
  out += "doc_id\tsentence_index\tmaterial_text\tcomposition\tvalue\tunit\t"
         "canonical_value\tcanonical_unit\tuncertainty\n";
  for (const StandardEntry& e : db) {
    const ExtractionRecord& r = e.record;
    out += tsv_cell(r.doc_id) + "\t" + index_text(r) + "\t" +
           tsv_cell(r.triplet.material) + "\t" + e.composition.formula() + "\t" +
           tsv_cell(r.triplet.value) + "\t" + tsv_cell(r.triplet.unit) + "\t" +
           number_text(e.canonical_value) + "\t" + e.canonical_unit + "\t" +
           (e.uncertainty ? number_text(*e.uncertainty) : "") + "\n";
  }
  return out;
}

std::string exclusions_to_tsv(const std::vector<Exclusion>& exclusions) {
  std::string out = "doc_id\tsource\tindex\trow\tmaterial_text\tvalue\tunit\treason\tdetail\n";
  for (const Exclusion& x : exclusions) {
    const ExtractionRecord& r = x.record;
    out += tsv_cell(r.doc_id) + "\t" + std::string(engine::source_name(r.source)) +
           "\t" + index_text(r) + "\t" + std::to_string(r.row) + "\t" +
           tsv_cell(r.triplet.material) + "\t" + tsv_cell(r.triplet.value) + "\t" +
           tsv_cell(r.triplet.unit) + "\t" + std::string(error_code_name(x.reason)) +
           "\t" + tsv_cell(x.detail) + "\n";
  }
  return out;
}

}  // namespace propminer::dbbuild

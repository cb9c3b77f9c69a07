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

#ifndef PROPMINER_DBBUILD_H_
#define PROPMINER_DBBUILD_H_

#include <optional>
#include <set>
#include <string>
#include <vector>

#include "propminer/composition.h"
#include "propminer/engine.h"
#include "propminer/error.h"
#include "propminer/units.h"

namespace propminer::dbbuild {

// Identity of a record across tiers: doc_id, source, index and row.
std::string provenance_key(const engine::ExtractionRecord& r);

// Within each doc_id, records whose material, value and unit agree after
// whitespace normalization collapse to the earliest one (lowest sentence
// index, text before tables, then input order). Survivors keep input order.
std::vector<engine::ExtractionRecord> clean(
    const std::vector<engine::ExtractionRecord>& raw);

struct StandardEntry {
  engine::ExtractionRecord record;
  Composition composition;
  double canonical_value = 0.0;
  std::string canonical_unit;
  std::optional<double> uncertainty;
};

struct Exclusion {
  engine::ExtractionRecord record;
  ErrorCode reason = ErrorCode::kInvalidInput;
  std::string detail;
};

struct StandardizeResult {
  std::vector<StandardEntry> entries;
  std::vector<Exclusion> exclusions;
};

// Keeps records with a parsable composition and a discrete value in a known
// unit. Checks run composition, value, unit; the first failure is the
// exclusion reason.
StandardizeResult standardize(const std::vector<engine::ExtractionRecord>& cleaned,
                              const UnitTable& units,
                              const CompositionOverrides* overrides = nullptr);

struct DomainRule {
  std::optional<std::size_t> min_elements;
  std::set<std::string> exclude_elements;
};

std::vector<StandardEntry> filter_domain(const std::vector<StandardEntry>& db,
                                         const DomainRule& rule);

struct DbSummary {
  std::size_t entries = 0;
  // Distinct (composition, canonical value) pairs.
  std::size_t unique_datapoints = 0;
  std::size_t unique_compositions = 0;
};

DbSummary summarize(const std::vector<StandardEntry>& db);

// Tab-separated table with a "# config_hash=..." comment line and a header
// row: doc_id, sentence_index, material_text, composition, value, unit,
// canonical_value, canonical_unit, uncertainty.
std::string standardized_to_tsv(const std::vector<StandardEntry>& db,
                                 const std::string& config_hash,
                                 const std::string& pack_version);
std::string exclusions_to_tsv(const std::vector<Exclusion>& exclusions);

}  // namespace propminer::dbbuild

#endif  // PROPMINER_DBBUILD_H_

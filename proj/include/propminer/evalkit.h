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

#ifndef PROPMINER_EVALKIT_H_
#define PROPMINER_EVALKIT_H_

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "propminer/composition.h"
#include "propminer/engine.h"

namespace propminer::evalkit {

using engine::Triplet;

enum class Category { kSingle, kMulti, kNone };

std::string_view category_name(Category c);
std::optional<Category> category_from_name(std::string_view name);

// Hand-extracted triplets of one passage, keyed by its target sentence.
struct GroundTruthPassage {
  std::string doc_id;
  int sentence_index = 0;
  Category category = Category::kNone;
  std::vector<Triplet> triplets;
};

// One JSON object per line: doc_id, sentence_index, category, triplets
// ([{material, value, unit}]). Category "none" must have no triplets.
std::vector<GroundTruthPassage> read_ground_truth(const std::string& path);
void write_ground_truth(const std::string& path,
                        const std::vector<GroundTruthPassage>& gt);

// Human-asserted equivalent material names. File: one "name<TAB>name" pair
// per line; the relation is closed under symmetry and transitivity.
class MaterialOverrides {
 public:
  MaterialOverrides() = default;
  static MaterialOverrides load(const std::string& path);

  void add_pair(std::string_view a, std::string_view b);
  bool equivalent(std::string_view a, std::string_view b) const;

 private:
  std::string find(const std::string& name) const;
  std::map<std::string, std::string> parent_;
};

bool materials_equivalent(std::string_view a, std::string_view b,
                          const MaterialOverrides* overrides = nullptr);
bool values_equivalent(std::string_view a, std::string_view b);
bool units_equivalent(std::string_view a, std::string_view b);

bool triplets_equivalent(const Triplet& a, const Triplet& b,
                         const MaterialOverrides* overrides = nullptr);

struct Counts {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;

  bool operator==(const Counts&) const = default;
  Counts& operator+=(const Counts& o) {
    tp += o.tp;
    fp += o.fp;
    fn += o.fn;
    return *this;
  }
};

struct PassageMatch {
  Counts counts;
  // For each extracted triplet, the ground triplet it consumed, if any.
  std::vector<std::optional<std::size_t>> matched_ground;
};

// Greedy in extracted order: each extracted triplet consumes the first
// unconsumed equivalent ground triplet.
PassageMatch match_passage(const std::vector<Triplet>& ground,
                           const std::vector<Triplet>& extracted,
                           const MaterialOverrides* overrides = nullptr);

// Size of a maximum matching in the equivalence bipartite graph.
std::size_t optimal_tp(const std::vector<Triplet>& ground,
                       const std::vector<Triplet>& extracted,
                       const MaterialOverrides* overrides = nullptr);

struct Score {
  Counts counts;
  double precision = 0.0;
  double recall = 0.0;
  bool precision_undefined = false;  // TP+FP == 0, reported as 0
  bool recall_undefined = false;     // TP+FN == 0, reported as 0
};

Score score(const Counts& c);

struct LedgerEntry {
  std::string doc_id;
  int sentence_index = 0;
  Category category = Category::kNone;
  std::vector<Triplet> ground;
  std::vector<Triplet> extracted;
  PassageMatch match;
  // Greedy TP fell short of the optimal matching on this passage.
  bool suboptimal = false;
};

struct MatchReport {
  Score single;
  Score multi;
  Score overall;
  std::vector<LedgerEntry> ledger;
  // "doc_id<TAB>sentence_index" of text records with no ground-truth passage.
  std::vector<std::string> unresolved;
  std::size_t skipped_non_text = 0;
};

struct EvalOptions {
  const MaterialOverrides* overrides = nullptr;
  // Throw Error(kUnresolvedProvenance) instead of listing.
  bool strict = false;
};

MatchReport evaluate(const std::vector<GroundTruthPassage>& gt,
                     const std::vector<engine::ExtractionRecord>& records,
                     const EvalOptions& options = {});

// Table layout: rows single, multi, overall; columns P, R and counts.
std::string format_report(const MatchReport& report);
std::string report_to_json(const MatchReport& report);

}  // namespace propminer::evalkit

#endif  // PROPMINER_EVALKIT_H_

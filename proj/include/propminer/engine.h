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

#ifndef PROPMINER_ENGINE_H_
#define PROPMINER_ENGINE_H_

#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "propminer/conversation.h"
#include "propminer/corpus.h"
#include "propminer/error.h"
#include "propminer/promptpack.h"

namespace propminer::engine {

struct Triplet {
  std::string material;
  std::string value;
  std::string unit;

  bool operator==(const Triplet&) const = default;
  auto operator<=>(const Triplet&) const = default;
};

// Material and unit nonempty, value holds a numeral.
bool is_valid_triplet(const Triplet& t);

enum class Source { kText, kTable, kFigureCandidate };
enum class Branch { kSingle, kMulti, kTable };

std::string_view source_name(Source s);
std::string_view branch_name(Branch b);
std::optional<Source> source_from_name(std::string_view name);
std::optional<Branch> branch_from_name(std::string_view name);

struct ExtractionRecord {
  Triplet triplet;
  std::string doc_id;
  std::optional<int> sentence_index;  // set for Source::kText
  std::optional<int> table_index;     // set for Source::kTable
  int row = 0;                        // position within the passage/table
  Source source = Source::kText;
  Branch branch = Branch::kSingle;
  std::string transcript_id;
  std::string pack_version;  // "name@version"

  bool operator==(const ExtractionRecord&) const = default;
};

// Order of the record stream: doc_id, then text before tables, then index,
// then row.
bool record_order_less(const ExtractionRecord& a, const ExtractionRecord& b);

struct EngineMode {
  bool follow_up = true;
  bool chat_retention = true;

  bool operator==(const EngineMode&) const = default;
};

// A passage-level dialog. With retention every prompt goes to one
// conversation; without it each prompt gets a fresh fork, and log() still
// collects every exchange in order.
class Dialog {
 public:
  Dialog(conversation::Conversation base, bool retain);

  std::string send(std::string_view prompt);
  const conversation::Transcript& log() const { return log_; }
  bool retains() const { return retain_; }

 private:
  conversation::Conversation conv_;
  bool retain_;
  conversation::Transcript log_;
};

// Yes/No question with one verbatim re-ask on a malformed reply. Throws
// Error(kMalformedAnswer) if the re-ask is malformed too.
bool ask_yes_no(Dialog& dialog, const std::string& prompt);

// Scalar question with one verbatim re-ask on a full-sentence reply.
std::optional<std::string> ask_scalar(Dialog& dialog, const std::string& prompt);

bool classify_sentence(Dialog& dialog, const prompts::PromptPack& pack,
                       std::string_view sentence, std::string_view property);
bool detect_multi_valued(Dialog& dialog, const prompts::PromptPack& pack,
                         const corpus::Passage& passage,
                         std::string_view property);
// Value, unit, material in that order; any "None" ends the branch with no
// triplet and skips the remaining questions.
std::optional<Triplet> extract_single(Dialog& dialog,
                                      const prompts::PromptPack& pack,
                                      const corpus::Passage& passage,
                                      std::string_view property);
// Table prompt, then three Yes/No checks per row when mode.follow_up. Rows
// with missing cells are dropped before any check.
std::vector<Triplet> extract_multi(Dialog& dialog,
                                   const prompts::PromptPack& pack,
                                   const corpus::Passage& passage,
                                   std::string_view property, EngineMode mode);

struct StoredTranscript {
  std::string transcript_id;
  std::string kind;  // classify, passage, table, figure
  bool chat_retention = true;
  std::string pack_version;
  conversation::Transcript turns;

  bool operator==(const StoredTranscript&) const = default;
};

// Per-run transcript store. In-memory by default; with a directory every
// transcript is also written as <dir>/<sanitized id>.json.
class TranscriptStore {
 public:
  TranscriptStore() = default;
  explicit TranscriptStore(std::string directory);

  void put(StoredTranscript t);
  // Falls back to the directory for transcripts from earlier runs.
  std::optional<StoredTranscript> get(const std::string& transcript_id) const;
  bool contains(const std::string& transcript_id) const;
  std::vector<std::string> ids() const;

  static std::string file_name(const std::string& transcript_id);

 private:
  std::string directory_;
  mutable std::mutex mu_;
  std::map<std::string, StoredTranscript> transcripts_;
};

struct EngineContext {
  std::shared_ptr<conversation::Backend> backend;
  conversation::BackendParams params;
  conversation::RetryPolicy retry;
  std::shared_ptr<const prompts::PromptPack> pack;
  std::string property;
  EngineMode mode;
  TranscriptStore* store = nullptr;  // optional
  int concurrency = 1;
};

struct UnitError {
  std::string unit_key;
  std::string doc_id;
  ErrorCode code = ErrorCode::kInvalidInput;
  std::string message;
  std::string transcript_id;

  bool operator==(const UnitError&) const = default;
};

struct FigureFlag {
  std::string doc_id;
  int figure_index = 0;
  std::string caption;
  bool relevant = false;
  std::string transcript_id;

  bool operator==(const FigureFlag&) const = default;
};

// One independent piece of work: a prefiltered sentence (or the title, at
// corpus::kTitleIndex), a table, or a figure caption.
struct WorkUnit {
  enum class Kind { kSentence, kTable, kFigure };
  Kind kind = Kind::kSentence;
  const corpus::Document* doc = nullptr;
  int index = 0;  // sentence index, 1-based table index, 1-based figure index

  // Stable identifier used by checkpoints, e.g. "text\tdoc7\t12".
  std::string key() const;
};

struct UnitOutcome {
  std::string key;
  std::vector<ExtractionRecord> records;
  std::vector<UnitError> errors;
  std::optional<FigureFlag> figure;

  bool operator==(const UnitOutcome&) const = default;
};

struct PlanOptions {
  bool text = true;
  bool tables = false;
  bool figures = false;
};

// Units for doc in provenance order. Text units come from the prefilter;
// the title is screened too when it contains a number.
std::vector<WorkUnit> plan_units(const corpus::Document& doc,
                                 const PlanOptions& options);

// Runs one unit. Errors from the backend or answer parsing are captured in
// the outcome, never thrown.
UnitOutcome run_unit(const EngineContext& ctx, const WorkUnit& unit);

// Runs units on up to ctx.concurrency threads. on_done is called once per
// unit, serialized, in completion order. Outcomes come back in unit order.
std::vector<UnitOutcome> run_units(
    const EngineContext& ctx, const std::vector<WorkUnit>& units,
    const std::function<void(std::size_t, const UnitOutcome&)>& on_done = {});

struct WorkflowResult {
  std::vector<ExtractionRecord> records;
  std::vector<UnitError> errors;
};

WorkflowResult run_text_workflow(const EngineContext& ctx,
                                 const corpus::Document& doc);
WorkflowResult run_table_workflow(const EngineContext& ctx,
                                  const corpus::Document& doc);
std::vector<FigureFlag> run_figure_workflow(const EngineContext& ctx,
                                            const corpus::Document& doc,
                                            std::vector<UnitError>* errors = nullptr);

// Calls fn(i) for i in [0, n) on up to `workers` threads.
void parallel_for(std::size_t n, int workers,
                  const std::function<void(std::size_t)>& fn);

}  // namespace propminer::engine

#endif  // PROPMINER_ENGINE_H_

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

#ifndef PROPMINER_RUN_H_
#define PROPMINER_RUN_H_

#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "propminer/conversation.h"
#include "propminer/corpus.h"
#include "propminer/engine.h"
#include "propminer/promptpack.h"

namespace propminer::run {

struct RunConfig {
  std::string property;
  std::string backend = "mock";  // mock, remote, record
  std::string model_name = "gpt-4";
  std::string prompt_pack;  // empty: bundled default pack
  engine::EngineMode mode;
  int concurrency = 1;
  int max_retries = 2;
  double rate_limit_rpm = 0.0;  // 0: unlimited
  std::string unit_table;       // empty: data/units/<property>.json
  std::string overrides;
  std::string output_dir = "out";

  std::string script;  // mock: replay script; record: script to write
  std::string endpoint = "https://api.openai.com";
  std::string api_key_env = "PROPMINER_API_KEY";

  bool text = true;
  bool tables = false;
  bool figures = false;
};

// Throws Error(kInvalidInput) on violated invariants.
void validate(const RunConfig& config);

// SHA-256 (first 16 hex digits) of the settings that change extraction
// output: property, model, pack, mode and enabled workflows. Paths,
// concurrency and rate limits are excluded so resumed or re-tuned runs
// keep the same hash.
std::string config_hash(const RunConfig& config,
                        const prompts::PromptPack& pack);

std::shared_ptr<const prompts::PromptPack> load_pack(const RunConfig& config);

// Backend for config.backend. Record mode wraps the remote backend; the
// caller saves the script after the run.
std::shared_ptr<conversation::Backend> make_backend(const RunConfig& config);

struct ExtractOutcome {
  std::vector<engine::ExtractionRecord> records;
  std::vector<engine::UnitError> errors;
  std::vector<engine::FigureFlag> figures;
  std::size_t units_total = 0;
  std::size_t units_resumed = 0;
  std::size_t units_run = 0;
  bool complete = false;
  std::string config_hash;
};

struct ExtractOptions {
  // Stop after this many newly completed units (used to exercise resume).
  std::optional<std::size_t> stop_after;
  conversation::RetryPolicy retry;  // max_retries is taken from the config
};

// Runs the enabled workflows over the corpus, journaling each completed
// unit to <output_dir>/checkpoint.jsonl. A later call with the same config
// skips journaled units. On completion writes records.jsonl, errors.jsonl
// and, when figures are enabled, figures.jsonl; transcripts go to
// <output_dir>/transcripts/.
ExtractOutcome run_extract(const RunConfig& config,
                           const std::vector<corpus::Document>& docs,
                           std::shared_ptr<conversation::Backend> backend,
                           const ExtractOptions& options = {},
                           std::ostream* log = nullptr);

}  // namespace propminer::run

#endif  // PROPMINER_RUN_H_

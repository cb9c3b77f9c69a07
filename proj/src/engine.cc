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

#include "propminer/engine.h"

#include <algorithm>
#include <atomic>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <thread>

#include "json.hpp"
#include "propminer/prefilter.h"
#include "propminer/text.h"

namespace propminer::engine {
namespace {

using conversation::Role;
using prompts::Bindings;
using prompts::PromptPack;
using prompts::YesNo;

std::string unit_tag(const WorkUnit& unit) {
  switch (unit.kind) {
    case WorkUnit::Kind::kSentence:
      return unit.index == corpus::kTitleIndex ? "title"
                                               : "s" + std::to_string(unit.index);
    case WorkUnit::Kind::kTable:
      return "t" + std::to_string(unit.index);
    case WorkUnit::Kind::kFigure:
      return "f" + std::to_string(unit.index);
  }
  return "";
}

std::string transcript_id(const WorkUnit& unit, std::string_view kind) {
  return unit.doc->doc_id + "/" + unit_tag(unit) + "/" + std::string(kind);
}

Dialog open_dialog(const EngineContext& ctx, bool retain) {
  return Dialog(conversation::Conversation(ctx.backend, ctx.params, ctx.retry),
                retain);
}

void save(const EngineContext& ctx, const std::string& id, std::string_view kind,
          const Dialog& dialog) {
  if (ctx.store == nullptr) return;
  StoredTranscript t;
  t.transcript_id = id;
  t.kind = std::string(kind);
  t.chat_retention = dialog.retains();
  t.pack_version = ctx.pack->label();
  t.turns = dialog.log();
  ctx.store->put(std::move(t));
}

bool has_missing_cell(const prompts::TableRow& row) {
  return row.material.empty() || row.value.empty() || row.unit.empty();
}

UnitError make_error(const WorkUnit& unit, const Error& e, std::string id) {
  return UnitError{unit.key(), unit.doc->doc_id, e.code(), e.what(),
                   std::move(id)};
}

void run_sentence(const EngineContext& ctx, const WorkUnit& unit,
                  UnitOutcome& out) {
  const corpus::Document& doc = *unit.doc;
  const PromptPack& pack = *ctx.pack;
  const std::string& sentence =
      unit.index == corpus::kTitleIndex ? doc.title : doc.sentences.at(unit.index);

  std::string classify_id = transcript_id(unit, "classify");
  Dialog screen = open_dialog(ctx, true);
  bool relevant = false;
  try {
    relevant = classify_sentence(screen, pack, sentence, ctx.property);
  } catch (const Error& e) {
    save(ctx, classify_id, "classify", screen);
    out.errors.push_back(make_error(unit, e, classify_id));
    return;
  }
  save(ctx, classify_id, "classify", screen);
  if (!relevant) return;

  corpus::Passage passage = corpus::build_passage(doc, unit.index);
  std::string passage_id = transcript_id(unit, "passage");
  Dialog dialog = open_dialog(ctx, ctx.mode.chat_retention);
  try {
    std::vector<Triplet> triplets;
    Branch branch = Branch::kSingle;
    if (detect_multi_valued(dialog, pack, passage, ctx.property)) {
      branch = Branch::kMulti;
      triplets = extract_multi(dialog, pack, passage, ctx.property, ctx.mode);
    } else if (auto t = extract_single(dialog, pack, passage, ctx.property)) {
      triplets.push_back(*t);
    }
    for (std::size_t row = 0; row < triplets.size(); ++row) {
      ExtractionRecord r;
      r.triplet = triplets[row];
      r.doc_id = doc.doc_id;
      r.sentence_index = unit.index;
      r.row = static_cast<int>(row);
      r.source = Source::kText;
      r.branch = branch;
      r.transcript_id = passage_id;
      r.pack_version = pack.label();
      out.records.push_back(std::move(r));
    }
  } catch (const Error& e) {
    out.records.clear();
    out.errors.push_back(make_error(unit, e, passage_id));
  }
  save(ctx, passage_id, "passage", dialog);
}

std::string table_text(const corpus::TableEntry& table) {
  if (table.caption.empty()) return table.text;
  return table.caption + "\n" + table.text;
}

void run_table(const EngineContext& ctx, const WorkUnit& unit, UnitOutcome& out) {
  const corpus::TableEntry& table = unit.doc->tables.at(unit.index - 1);
  const PromptPack& pack = *ctx.pack;
  std::string id = transcript_id(unit, "table");
  Dialog dialog = open_dialog(ctx, true);
  Bindings b{{"property", ctx.property}, {"text", table_text(table)}};
  try {
    if (ask_yes_no(dialog, pack.render(prompts::kTableClassify, b))) {
      std::vector<prompts::TableRow> rows =
          prompts::parse_table(dialog.send(pack.render(prompts::kTableExtract, b)));
      int row_index = 0;
      for (const prompts::TableRow& row : rows) {
        Triplet t{row.material, row.value, row.unit};
        if (has_missing_cell(row) || !is_valid_triplet(t)) continue;
        ExtractionRecord r;
        r.triplet = std::move(t);
        r.doc_id = unit.doc->doc_id;
        r.table_index = unit.index;
        r.row = row_index++;
        r.source = Source::kTable;
        r.branch = Branch::kTable;
        r.transcript_id = id;
        r.pack_version = pack.label();
        out.records.push_back(std::move(r));
      }
    }
  } catch (const Error& e) {
    out.records.clear();
    out.errors.push_back(make_error(unit, e, id));
  }
  save(ctx, id, "table", dialog);
}

void run_figure(const EngineContext& ctx, const WorkUnit& unit,
                UnitOutcome& out) {
  const corpus::FigureCaption& fig = unit.doc->figure_captions.at(unit.index - 1);
  std::string id = transcript_id(unit, "figure");
  Dialog dialog = open_dialog(ctx, true);
  try {
    Bindings b{{"property", ctx.property}, {"text", fig.caption}};
    bool relevant = ask_yes_no(dialog, ctx.pack->render(prompts::kFigureClassify, b));
    out.figure = FigureFlag{unit.doc->doc_id, fig.figure_index, fig.caption,
                            relevant, id};
  } catch (const Error& e) {
    out.errors.push_back(make_error(unit, e, id));
  }
  save(ctx, id, "figure", dialog);
}

nlohmann::json transcript_to_json(const StoredTranscript& t) {
  nlohmann::ordered_json j;
  j["transcript_id"] = t.transcript_id;
  j["kind"] = t.kind;
  j["chat_retention"] = t.chat_retention;
  j["pack"] = t.pack_version;
  j["turns"] = nlohmann::ordered_json::array();
  for (const conversation::Turn& turn : t.turns) {
    j["turns"].push_back({{"role", turn.role == Role::kPrompt ? "prompt" : "response"},
                          {"text", turn.text},
                          {"timestamp_ms", turn.timestamp_ms}});
  }
  return j;
}

StoredTranscript transcript_from_json(const nlohmann::json& j) {
  StoredTranscript t;
  t.transcript_id = j.at("transcript_id").get<std::string>();
  t.kind = j.at("kind").get<std::string>();
  t.chat_retention = j.at("chat_retention").get<bool>();
  t.pack_version = j.at("pack").get<std::string>();
  for (const auto& turn : j.at("turns")) {
    t.turns.push_back({turn.at("role").get<std::string>() == "prompt"
                           ? Role::kPrompt
                           : Role::kResponse,
                       turn.at("text").get<std::string>(),
                       turn.at("timestamp_ms").get<std::int64_t>()});
  }
  return t;
}

}  // namespace

bool is_valid_triplet(const Triplet& t) {
  auto blank = [](const std::string& s) { return text::trim(s).empty(); };
  if (blank(t.material) || blank(t.unit) || blank(t.value)) return false;
  return std::any_of(t.value.begin(), t.value.end(), text::is_ascii_digit) ||
         prefilter::contains_number(t.value);
}

std::string_view source_name(Source s) {
  switch (s) {
    case Source::kText: return "text";
    case Source::kTable: return "table";
    case Source::kFigureCandidate: return "figure-candidate";
  }
  return "";
}

std::string_view branch_name(Branch b) {
  switch (b) {
    case Branch::kSingle: return "single";
    case Branch::kMulti: return "multi";
    case Branch::kTable: return "table";
  }
  return "";
}

std::optional<Source> source_from_name(std::string_view name) {
  for (Source s : {Source::kText, Source::kTable, Source::kFigureCandidate}) {
    if (source_name(s) == name) return s;
  }
  return std::nullopt;
}

std::optional<Branch> branch_from_name(std::string_view name) {
  for (Branch b : {Branch::kSingle, Branch::kMulti, Branch::kTable}) {
    if (branch_name(b) == name) return b;
  }
  return std::nullopt;
}

bool record_order_less(const ExtractionRecord& a, const ExtractionRecord& b) {
  auto key = [](const ExtractionRecord& r) {
    int index = r.source == Source::kTable ? r.table_index.value_or(0)
                                           : r.sentence_index.value_or(0);
    return std::make_tuple(std::cref(r.doc_id), static_cast<int>(r.source),
                           index, r.row);
  };
  return key(a) < key(b);
}

Dialog::Dialog(conversation::Conversation base, bool retain)
    : conv_(std::move(base)), retain_(retain) {}

std::string Dialog::send(std::string_view prompt) {
  if (retain_) {
    std::string reply = conv_.send(prompt);
    const auto& t = conv_.transcript();
    log_.assign(t.begin(), t.end());
    return reply;
  }
  conversation::Conversation fresh = conv_.fork_stateless();
  std::string reply = fresh.send(prompt);
  log_.insert(log_.end(), fresh.transcript().begin(), fresh.transcript().end());
  return reply;
}

bool ask_yes_no(Dialog& dialog, const std::string& prompt) {
  for (int attempt = 0; attempt < 2; ++attempt) {
    std::string reply = dialog.send(prompt);
    switch (prompts::parse_yes_no(reply)) {
      case YesNo::kYes: return true;
      case YesNo::kNo: return false;
      case YesNo::kMalformed:
        if (attempt == 1) {
          throw Error(ErrorCode::kMalformedAnswer,
                      "expected Yes/No, got: " + reply.substr(0, 80));
        }
    }
  }
  return false;
}

std::optional<std::string> ask_scalar(Dialog& dialog, const std::string& prompt) {
  try {
    return prompts::parse_scalar(dialog.send(prompt));
  } catch (const Error& e) {
    if (e.code() != ErrorCode::kMalformedScalar) throw;
  }
  return prompts::parse_scalar(dialog.send(prompt));
}

bool classify_sentence(Dialog& dialog, const PromptPack& pack,
                       std::string_view sentence, std::string_view property) {
  Bindings b{{"property", std::string(property)}, {"sentence", std::string(sentence)}};
  return ask_yes_no(dialog, pack.render(prompts::kStageAClassify, b));
}

bool detect_multi_valued(Dialog& dialog, const PromptPack& pack,
                         const corpus::Passage& passage,
                         std::string_view property) {
  Bindings b{{"property", std::string(property)}, {"text", passage.flatten()}};
  return ask_yes_no(dialog, pack.render(prompts::kMultiDetect, b));
}

std::optional<Triplet> extract_single(Dialog& dialog, const PromptPack& pack,
                                      const corpus::Passage& passage,
                                      std::string_view property) {
  Bindings b{{"property", std::string(property)}, {"text", passage.flatten()}};
  auto value = ask_scalar(dialog, pack.render(prompts::kSingleValue, b));
  if (!value) return std::nullopt;
  auto unit = ask_scalar(dialog, pack.render(prompts::kSingleUnit, b));
  if (!unit) return std::nullopt;
  auto material = ask_scalar(dialog, pack.render(prompts::kSingleMaterial, b));
  if (!material) return std::nullopt;
  Triplet t{*material, *value, *unit};
  if (!is_valid_triplet(t)) return std::nullopt;
  return t;
}

std::vector<Triplet> extract_multi(Dialog& dialog, const PromptPack& pack,
                                   const corpus::Passage& passage,
                                   std::string_view property, EngineMode mode) {
  std::string text = passage.flatten();
  Bindings b{{"property", std::string(property)}, {"text", text}};
  std::vector<prompts::TableRow> rows =
      prompts::parse_table(dialog.send(pack.render(prompts::kMultiTable, b)));
  std::vector<Triplet> out;
  for (const prompts::TableRow& row : rows) {
    Triplet t{row.material, row.value, row.unit};
    if (has_missing_cell(row) || !is_valid_triplet(t)) continue;
    if (mode.follow_up) {
      Bindings fb = b;
      fb["material"] = t.material;
      fb["value"] = t.value;
      fb["unit"] = t.unit;
      if (!ask_yes_no(dialog, pack.render(prompts::kFollowupValue, fb))) continue;
      if (!ask_yes_no(dialog, pack.render(prompts::kFollowupUnit, fb))) continue;
      if (!ask_yes_no(dialog, pack.render(prompts::kFollowupMaterial, fb))) continue;
    }
    out.push_back(std::move(t));
  }
  return out;
}

TranscriptStore::TranscriptStore(std::string directory)
    : directory_(std::move(directory)) {
  std::filesystem::create_directories(directory_);
}

std::string TranscriptStore::file_name(const std::string& transcript_id) {
  std::string name;
  for (char c : transcript_id) {
    bool keep = std::isalnum(static_cast<unsigned char>(c)) || c == '-' ||
                c == '_' || c == '.';
    name += keep ? c : '~';
  }
  return name + ".json";
}

void TranscriptStore::put(StoredTranscript t) {
  if (!directory_.empty()) {
    std::string path = directory_ + "/" + file_name(t.transcript_id);
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw Error(ErrorCode::kIo, "cannot write transcript " + path);
    out << transcript_to_json(t).dump(1) << '\n';
  }
  std::lock_guard<std::mutex> lock(mu_);
  transcripts_[t.transcript_id] = std::move(t);
}

std::optional<StoredTranscript> TranscriptStore::get(
    const std::string& transcript_id) const {
  {
    std::lock_guard<std::mutex> lock(mu_);
    auto it = transcripts_.find(transcript_id);
    if (it != transcripts_.end()) return it->second;
  }
  if (directory_.empty()) return std::nullopt;
  std::ifstream in(directory_ + "/" + file_name(transcript_id));
  if (!in) return std::nullopt;
  try {
    StoredTranscript t = transcript_from_json(nlohmann::json::parse(in));
    if (t.transcript_id != transcript_id) return std::nullopt;
    return t;
  } catch (const nlohmann::json::exception&) {
    return std::nullopt;
  }
}

bool TranscriptStore::contains(const std::string& transcript_id) const {
  return get(transcript_id).has_value();
}

std::vector<std::string> TranscriptStore::ids() const {
  std::lock_guard<std::mutex> lock(mu_);
  std::vector<std::string> out;
  for (const auto& [id, t] : transcripts_) out.push_back(id);
  return out;
}

std::string WorkUnit::key() const {
  std::string_view kind_name = kind == Kind::kSentence ? "text"
                               : kind == Kind::kTable  ? "table"
                                                       : "figure";
  return std::string(kind_name) + "\t" + doc->doc_id + "\t" +
         std::to_string(index);
}

std::vector<WorkUnit> plan_units(const corpus::Document& doc,
                                 const PlanOptions& options) {
  std::vector<WorkUnit> units;
  if (options.text) {
    if (prefilter::contains_number(doc.title)) {
      units.push_back({WorkUnit::Kind::kSentence, &doc, corpus::kTitleIndex});
    }
    for (const prefilter::CandidateSentence& c : prefilter::prefilter_stream(doc)) {
      units.push_back({WorkUnit::Kind::kSentence, &doc, c.sentence_index});
    }
  }
  if (options.tables) {
    for (const corpus::TableEntry& t : doc.tables) {
      units.push_back({WorkUnit::Kind::kTable, &doc, t.table_index});
    }
  }
  if (options.figures) {
    for (const corpus::FigureCaption& f : doc.figure_captions) {
      units.push_back({WorkUnit::Kind::kFigure, &doc, f.figure_index});
    }
  }
  return units;
}

UnitOutcome run_unit(const EngineContext& ctx, const WorkUnit& unit) {
  UnitOutcome out;
  out.key = unit.key();
  switch (unit.kind) {
    case WorkUnit::Kind::kSentence: run_sentence(ctx, unit, out); break;
    case WorkUnit::Kind::kTable: run_table(ctx, unit, out); break;
    case WorkUnit::Kind::kFigure: run_figure(ctx, unit, out); break;
  }
  return out;
}

void parallel_for(std::size_t n, int workers,
                  const std::function<void(std::size_t)>& fn) {
  std::size_t threads = std::min<std::size_t>(n, std::max(1, workers));
  if (threads <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mu;
  std::vector<std::thread> pool;
  for (std::size_t t = 0; t < threads; ++t) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(failure_mu);
          if (!failure) failure = std::current_exception();
        }
      }
    });
  }
  for (std::thread& th : pool) th.join();
  if (failure) std::rethrow_exception(failure);
}

std::vector<UnitOutcome> run_units(
    const EngineContext& ctx, const std::vector<WorkUnit>& units,
    const std::function<void(std::size_t, const UnitOutcome&)>& on_done) {
  std::vector<UnitOutcome> outcomes(units.size());
  std::mutex done_mu;
  parallel_for(units.size(), ctx.concurrency, [&](std::size_t i) {
    outcomes[i] = run_unit(ctx, units[i]);
    if (on_done) {
      std::lock_guard<std::mutex> lock(done_mu);
      on_done(i, outcomes[i]);
    }
  });
  return outcomes;
}

namespace {

WorkflowResult collect(const std::vector<UnitOutcome>& outcomes) {
  WorkflowResult result;
  for (const UnitOutcome& o : outcomes) {
    result.records.insert(result.records.end(), o.records.begin(), o.records.end());
    result.errors.insert(result.errors.end(), o.errors.begin(), o.errors.end());
  }
  std::stable_sort(result.records.begin(), result.records.end(),
                   record_order_less);
  return result;
}

}  // namespace

WorkflowResult run_text_workflow(const EngineContext& ctx,
                                 const corpus::Document& doc) {
  return collect(run_units(ctx, plan_units(doc, {true, false, false})));
}

WorkflowResult run_table_workflow(const EngineContext& ctx,
                                  const corpus::Document& doc) {
  return collect(run_units(ctx, plan_units(doc, {false, true, false})));
}

std::vector<FigureFlag> run_figure_workflow(const EngineContext& ctx,
                                            const corpus::Document& doc,
                                            std::vector<UnitError>* errors) {
  std::vector<FigureFlag> flags;
  for (const UnitOutcome& o : run_units(ctx, plan_units(doc, {false, false, true}))) {
    if (o.figure) flags.push_back(*o.figure);
    if (errors != nullptr) {
      errors->insert(errors->end(), o.errors.begin(), o.errors.end());
    }
  }
  return flags;
}

}  // namespace propminer::engine

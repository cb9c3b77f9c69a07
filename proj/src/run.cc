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

#include "propminer/run.h"

#include <algorithm>
#include <atomic>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <ostream>
#include <sstream>

#include "json.hpp"
#include "propminer/error.h"
#include "propminer/records_io.h"
#include "propminer/remote_backend.h"
#include "propminer/text.h"

namespace propminer::run {
namespace {

using json = nlohmann::ordered_json;
using engine::UnitOutcome;

constexpr std::string_view kCheckpointFile = "checkpoint.jsonl";

json unit_line(const UnitOutcome& o) {
  json j;
  j["kind"] = "unit";
  j["key"] = o.key;
  j["records"] = json::array();
  for (const auto& r : o.records) j["records"].push_back(json::parse(io::record_to_json(r)));
  j["errors"] = json::array();
  for (const auto& e : o.errors) j["errors"].push_back(json::parse(io::unit_error_to_json(e)));
  j["figure"] = o.figure ? json::parse(io::figure_to_json(*o.figure)) : json(nullptr);
  return j;
}

UnitOutcome unit_from_line(const json& j) {
  UnitOutcome o;
  o.key = j.at("key").get<std::string>();
  for (const json& r : j.at("records")) o.records.push_back(io::record_from_json(r.dump()));
  for (const json& e : j.at("errors")) o.errors.push_back(io::unit_error_from_json(e.dump()));
  if (!j.at("figure").is_null()) o.figure = io::figure_from_json(j.at("figure").dump());
  return o;
}

std::string header_line(std::string_view format, const std::string& hash,
                        const std::string& pack) {
  json j;
  j["kind"] = "header";
  j["format"] = format;
  j["config_hash"] = hash;
  j["pack"] = pack;
  return j.dump();
}

// Loads journaled units and rewrites the journal without a torn last line.
std::map<std::string, UnitOutcome> load_checkpoint(const std::string& path,
                                                   const std::string& hash,
                                                   const std::string& pack) {
  std::map<std::string, UnitOutcome> done;
  std::string kept = header_line("propminer.checkpoint/1", hash, pack) + "\n";
  if (std::filesystem::exists(path)) {
    std::istringstream in(io::read_file(path));
    std::string line;
    bool first = true;
    while (std::getline(in, line)) {
      if (text::trim(line).empty()) continue;
      json j;
      try {
        j = json::parse(line);
      } catch (const json::exception&) {
        break;  // interrupted write
      }
      if (first) {
        first = false;
        if (j.value("config_hash", "") != hash) {
          throw Error(ErrorCode::kInvalidInput,
                      "checkpoint " + path + " was written with config " +
                          j.value("config_hash", "?") + ", current config is " + hash);
        }
        continue;
      }
      UnitOutcome o = unit_from_line(j);
      kept += line + "\n";
      done[o.key] = std::move(o);
    }
  }
  io::write_file_atomic(path, kept);
  return done;
}

}  // namespace

void validate(const RunConfig& c) {
  if (text::trim(c.property).empty()) {
    throw Error(ErrorCode::kInvalidInput, "property must be nonempty");
  }
  if (c.concurrency < 1) throw Error(ErrorCode::kInvalidInput, "concurrency must be >= 1");
  if (c.max_retries < 0) throw Error(ErrorCode::kInvalidInput, "max retries must be >= 0");
  if (c.rate_limit_rpm < 0) throw Error(ErrorCode::kInvalidInput, "rate limit must be >= 0");
  if (c.backend != "mock" && c.backend != "remote" && c.backend != "record") {
    throw Error(ErrorCode::kInvalidInput, "unknown backend " + c.backend);
  }
  if ((c.backend == "mock" || c.backend == "record") && c.script.empty()) {
    throw Error(ErrorCode::kInvalidInput, c.backend + " backend needs a script path");
  }
  if (!c.text && !c.tables && !c.figures) {
    throw Error(ErrorCode::kInvalidInput, "no workflow enabled");
  }
}

std::string config_hash(const RunConfig& c, const prompts::PromptPack& pack) {
  json j;
  j["property"] = c.property;
  j["model"] = c.model_name;
  j["pack"] = pack.label();
  j["follow_up"] = c.mode.follow_up;
  j["chat_retention"] = c.mode.chat_retention;
  j["text"] = c.text;
  j["tables"] = c.tables;
  j["figures"] = c.figures;
  return text::sha256_hex(j.dump()).substr(0, 16);
}

std::shared_ptr<const prompts::PromptPack> load_pack(const RunConfig& c) {
  return std::make_shared<const prompts::PromptPack>(
      c.prompt_pack.empty() ? prompts::PromptPack::load_default()
                            : prompts::PromptPack::load(c.prompt_pack));
}

std::shared_ptr<conversation::Backend> make_backend(const RunConfig& c) {
  std::shared_ptr<conversation::Backend> backend;
  if (c.backend == "mock") {
    backend = conversation::ScriptedBackend::from_file(c.script);
  } else {
    conversation::RemoteOptions opts;
    opts.endpoint = c.endpoint;
    opts.api_key_env = c.api_key_env;
    backend = std::make_shared<conversation::RemoteBackend>(opts);
    if (c.backend == "record") {
      backend = std::make_shared<conversation::RecordingBackend>(backend);
    }
  }
  if (c.rate_limit_rpm > 0) {
    backend->set_rate_limiter(
        std::make_shared<conversation::RateLimiter>(c.rate_limit_rpm));
  }
  return backend;
}

ExtractOutcome run_extract(const RunConfig& config,
                           const std::vector<corpus::Document>& docs,
                           std::shared_ptr<conversation::Backend> backend,
                           const ExtractOptions& options, std::ostream* log) {
  validate(config);
  backend->check_available();
  auto pack = load_pack(config);
  ExtractOutcome result;
  result.config_hash = config_hash(config, *pack);

  std::filesystem::create_directories(config.output_dir);
  engine::TranscriptStore store(config.output_dir + "/transcripts");

  engine::EngineContext ctx;
  ctx.backend = std::move(backend);
  ctx.params.model_name = config.model_name;
  ctx.retry = options.retry;
  ctx.retry.max_retries = config.max_retries;
  ctx.pack = pack;
  ctx.property = config.property;
  ctx.mode = config.mode;
  ctx.store = &store;
  ctx.concurrency = config.concurrency;

  std::vector<engine::WorkUnit> units;
  for (const corpus::Document& d : docs) {
    for (engine::WorkUnit& u :
         engine::plan_units(d, {config.text, config.tables, config.figures})) {
      units.push_back(u);
    }
  }
  result.units_total = units.size();

  std::string checkpoint_path = config.output_dir + "/" + std::string(kCheckpointFile);
  std::map<std::string, UnitOutcome> done =
      load_checkpoint(checkpoint_path, result.config_hash, pack->label());

  std::vector<std::size_t> pending;
  for (std::size_t i = 0; i < units.size(); ++i) {
    if (done.count(units[i].key()) == 0) pending.push_back(i);
  }
  result.units_resumed = units.size() - pending.size();
  if (log != nullptr && result.units_resumed > 0) {
    *log << "resuming: " << result.units_resumed << " of " << units.size()
         << " units already done\n";
  }

  std::ofstream journal(checkpoint_path, std::ios::app);
  if (!journal) throw Error(ErrorCode::kIo, "cannot append to " + checkpoint_path);
  std::mutex mu;
  std::atomic<bool> stop{false};
  std::size_t newly_done = 0;
  engine::parallel_for(pending.size(), config.concurrency, [&](std::size_t k) {
    if (stop) return;
    const engine::WorkUnit& unit = units[pending[k]];
    UnitOutcome o = engine::run_unit(ctx, unit);
    std::lock_guard<std::mutex> lock(mu);
    if (stop) return;
    journal << unit_line(o).dump() << '\n';
    journal.flush();
    if (log != nullptr) {
      for (const engine::UnitError& e : o.errors) {
        *log << "error\t" << e.doc_id << "\t" << error_code_name(e.code) << "\t"
             << e.transcript_id << "\t" << e.message << "\n";
      }
    }
    done[o.key] = std::move(o);
    ++newly_done;
    if (options.stop_after && newly_done >= *options.stop_after) stop = true;
  });
  result.units_run = newly_done;
  if (newly_done < pending.size()) return result;

  for (const engine::WorkUnit& u : units) {
    const UnitOutcome& o = done.at(u.key());
    result.records.insert(result.records.end(), o.records.begin(), o.records.end());
    result.errors.insert(result.errors.end(), o.errors.begin(), o.errors.end());
    if (o.figure) result.figures.push_back(*o.figure);
  }
  std::stable_sort(result.records.begin(), result.records.end(),
                   engine::record_order_less);
  result.complete = true;

  io::RecordsHeader header{result.config_hash, pack->label(), "raw"};
  io::write_records(config.output_dir + "/records.jsonl", header, result.records);
  std::string errors =
      header_line("propminer.errors/1", result.config_hash, pack->label()) + "\n";
  for (const engine::UnitError& e : result.errors) errors += io::unit_error_to_json(e) + "\n";
  io::write_file_atomic(config.output_dir + "/errors.jsonl", errors);
  if (config.figures) {
    std::string figs =
        header_line("propminer.figures/1", result.config_hash, pack->label()) + "\n";
    for (const engine::FigureFlag& f : result.figures) figs += io::figure_to_json(f) + "\n";
    io::write_file_atomic(config.output_dir + "/figures.jsonl", figs);
  }
  return result;
}

}  // namespace propminer::run

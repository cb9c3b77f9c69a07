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

#include "propminer/conversation.h"

#include <algorithm>
#include <fstream>
#include <thread>

#include "json.hpp"
#include "propminer/error.h"
#include "propminer/text.h"

namespace propminer::conversation {
namespace {

double steady_seconds() {
  return std::chrono::duration<double>(
             std::chrono::steady_clock::now().time_since_epoch())
      .count();
}

}  // namespace

RateLimiter::RateLimiter(double requests_per_minute, double burst, Clock clock,
                         Sleeper sleeper)
    : rate_per_second_(requests_per_minute / 60.0),
      capacity_(std::max(1.0, burst)),
      tokens_(std::max(1.0, burst)),
      clock_(clock ? std::move(clock) : Clock(steady_seconds)),
      sleeper_(sleeper ? std::move(sleeper) : Sleeper([](auto d) {
        std::this_thread::sleep_for(d);
      })) {
  last_ = clock_();
}

void RateLimiter::acquire() {
  if (rate_per_second_ <= 0) return;
  std::lock_guard<std::mutex> lock(mu_);
  while (true) {
    double now = clock_();
    tokens_ = std::min(capacity_, tokens_ + (now - last_) * rate_per_second_);
    last_ = now;
    if (tokens_ >= 1.0) {
      tokens_ -= 1.0;
      return;
    }
    sleeper_(std::chrono::duration<double>((1.0 - tokens_) / rate_per_second_));
  }
}

std::int64_t Backend::now_ms() const {
  return std::chrono::duration_cast<std::chrono::milliseconds>(
             std::chrono::system_clock::now().time_since_epoch())
      .count();
}

std::string script_key(std::span<const std::string> prompts) {
  std::string joined;
  for (const std::string& p : prompts) {
    joined += text::collapse_whitespace(p);
    joined += '\x1f';
  }
  return text::sha256_hex(joined);
}

std::string context_key(std::span<const Turn> context) {
  std::vector<std::string> prompts;
  for (const Turn& t : context) {
    if (t.role == Role::kPrompt) prompts.push_back(t.text);
  }
  return script_key(prompts);
}

std::vector<ScriptEntry> read_script(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot read script " + path);
  std::vector<ScriptEntry> entries;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (text::trim(line).empty()) continue;
    try {
      auto j = nlohmann::json::parse(line);
      ScriptEntry e;
      e.context_hash = j.at("context_hash").get<std::string>();
      e.response = j.at("response").get<std::string>();
      e.prompt = j.value("prompt", "");
      entries.push_back(std::move(e));
    } catch (const nlohmann::json::exception& ex) {
      throw Error(ErrorCode::kInvalidInput,
                  path + ":" + std::to_string(line_no) + ": " + ex.what());
    }
  }
  return entries;
}

void write_script(const std::string& path, std::vector<ScriptEntry> entries) {
  std::sort(entries.begin(), entries.end(),
            [](const ScriptEntry& a, const ScriptEntry& b) {
              return a.context_hash < b.context_hash;
            });
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIo, "cannot write script " + path);
  for (const ScriptEntry& e : entries) {
    nlohmann::ordered_json j;
    j["context_hash"] = e.context_hash;
    j["response"] = e.response;
    if (!e.prompt.empty()) j["prompt"] = e.prompt;
    out << j.dump() << '\n';
  }
}

ScriptedBackend::ScriptedBackend(const std::vector<ScriptEntry>& entries) {
  for (const ScriptEntry& e : entries) script_[e.context_hash] = e.response;
}

std::shared_ptr<ScriptedBackend> ScriptedBackend::from_file(
    const std::string& path) {
  return std::make_shared<ScriptedBackend>(read_script(path));
}

void ScriptedBackend::add(const std::string& context_hash,
                          std::string response) {
  std::lock_guard<std::mutex> lock(mu_);
  script_[context_hash] = std::move(response);
}

void ScriptedBackend::add_for(const std::vector<std::string>& prompts,
                              std::string response) {
  add(script_key(prompts), std::move(response));
}

std::string ScriptedBackend::complete(std::span<const Turn> context,
                                      const BackendParams&) {
  std::string key = context_key(context);
  std::lock_guard<std::mutex> lock(mu_);
  std::size_t prompts = 0;
  for (std::size_t i = 0; i < context.size(); ++i) {
    Role expected = i % 2 == 0 ? Role::kPrompt : Role::kResponse;
    if (context[i].role != expected) well_formed_ = false;
    if (context[i].role == Role::kPrompt) ++prompts;
  }
  if (context.empty() || context.back().role != Role::kPrompt) {
    well_formed_ = false;
  }
  delivered_.push_back(prompts);
  auto it = script_.find(key);
  if (it == script_.end()) {
    std::string last = context.empty() ? "" : context.back().text;
    throw Error(ErrorCode::kMalformedBackendReply,
                "unscripted context " + key.substr(0, 12) + " for prompt: " +
                    last.substr(0, 80));
  }
  return it->second;
}

std::vector<std::size_t> ScriptedBackend::delivered_prompt_counts() const {
  std::lock_guard<std::mutex> lock(mu_);
  return delivered_;
}

bool ScriptedBackend::contexts_well_formed() const {
  std::lock_guard<std::mutex> lock(mu_);
  return well_formed_;
}

std::string RecordingBackend::complete(std::span<const Turn> context,
                                       const BackendParams& params) {
  std::string response = inner_->complete(context, params);
  ScriptEntry e;
  e.context_hash = context_key(context);
  e.response = response;
  e.prompt = context.empty() ? "" : context.back().text;
  std::lock_guard<std::mutex> lock(mu_);
  recorded_.emplace(e.context_hash, std::move(e));
  return response;
}

std::vector<ScriptEntry> RecordingBackend::entries() const {
  std::lock_guard<std::mutex> lock(mu_);
  std::vector<ScriptEntry> out;
  for (const auto& [key, e] : recorded_) out.push_back(e);
  return out;
}

void RecordingBackend::save(const std::string& path) const {
  std::map<std::string, ScriptEntry> merged;
  if (std::ifstream(path).good()) {
    for (ScriptEntry& e : read_script(path)) {
      merged.emplace(e.context_hash, std::move(e));
    }
  }
  for (ScriptEntry& e : entries()) merged[e.context_hash] = std::move(e);
  std::vector<ScriptEntry> all;
  for (auto& [key, e] : merged) all.push_back(std::move(e));
  write_script(path, std::move(all));
}

Conversation::Conversation(std::shared_ptr<Backend> backend,
                           BackendParams params, RetryPolicy retry)
    : backend_(std::move(backend)),
      params_(std::move(params)),
      retry_(std::move(retry)) {
  if (!retry_.sleep) {
    retry_.sleep = [](std::chrono::milliseconds d) {
      std::this_thread::sleep_for(d);
    };
  }
}

std::string Conversation::send(std::string_view prompt) {
  if (text::trim(prompt).empty()) {
    throw Error(ErrorCode::kInvalidInput, "empty prompt");
  }
  Transcript context = transcript_;
  context.push_back({Role::kPrompt, std::string(prompt), backend_->now_ms()});
  if (params_.max_context_bytes) {
    std::size_t bytes = 0;
    for (const Turn& t : context) bytes += t.text.size();
    if (params_.system_prompt) bytes += params_.system_prompt->size();
    if (bytes > *params_.max_context_bytes) {
      throw Error(ErrorCode::kContextOverflow,
                  std::to_string(bytes) + " bytes exceed the limit of " +
                      std::to_string(*params_.max_context_bytes));
    }
  }

  std::chrono::milliseconds backoff = retry_.initial_backoff;
  for (int attempt = 0;; ++attempt) {
    try {
      backend_->acquire_slot();
      std::string response = backend_->complete(context, params_);
      transcript_.push_back(std::move(context.back()));
      transcript_.push_back({Role::kResponse, std::move(response),
                             backend_->now_ms()});
      return transcript_.back().text;
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kBackendTimeout) throw;
      if (attempt >= retry_.max_retries) {
        throw Error(ErrorCode::kRetriesExhausted,
                    std::to_string(attempt + 1) + " attempts: " + e.what());
      }
      retry_.sleep(backoff);
      backoff *= 2;
    }
  }
}

Conversation Conversation::fork_stateless() const {
  return Conversation(backend_, params_, retry_);
}

Conversation start_conversation(std::shared_ptr<Backend> backend,
                                BackendParams params, RetryPolicy retry) {
  if (!backend) throw Error(ErrorCode::kBackendUnavailable, "no backend");
  backend->check_available();
  return Conversation(std::move(backend), std::move(params), std::move(retry));
}

}  // namespace propminer::conversation

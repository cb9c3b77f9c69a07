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

#ifndef PROPMINER_CONVERSATION_H_
#define PROPMINER_CONVERSATION_H_

#include <chrono>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace propminer::conversation {

// Decoding parameters. The defaults are the deterministic settings used for
// extraction runs: greedy decoding and no system prompt.
struct BackendParams {
  double temperature = 0.0;
  double top_p = 1.0;
  double frequency_penalty = 0.0;
  double presence_penalty = 0.0;
  std::string model_name;
  std::optional<std::string> system_prompt;
  // Sends whose context would exceed this many bytes fail with
  // kContextOverflow instead of being truncated.
  std::optional<std::size_t> max_context_bytes;

  bool operator==(const BackendParams&) const = default;
};

enum class Role { kPrompt, kResponse };

struct Turn {
  Role role = Role::kPrompt;
  std::string text;
  std::int64_t timestamp_ms = 0;

  bool operator==(const Turn&) const = default;
};

using Transcript = std::vector<Turn>;

// Token bucket shared by every conversation on one backend.
class RateLimiter {
 public:
  using Clock = std::function<double()>;  // seconds, monotonic
  using Sleeper = std::function<void(std::chrono::duration<double>)>;

  // requests_per_minute <= 0 disables limiting.
  explicit RateLimiter(double requests_per_minute, double burst = 1.0,
                       Clock clock = {}, Sleeper sleeper = {});

  // Blocks until a request slot is available.
  void acquire();

 private:
  double rate_per_second_;
  double capacity_;
  double tokens_;
  double last_;
  Clock clock_;
  Sleeper sleeper_;
  std::mutex mu_;
};

// A chat-completion provider. Implementations must be safe to call from many
// threads; each call receives the complete context for one request, ending
// with the new prompt.
class Backend {
 public:
  virtual ~Backend() = default;

  virtual std::string name() const = 0;

  // Throws Error(kBackendUnavailable) when the backend cannot serve requests.
  virtual void check_available() const {}

  // Transient failures throw Error(kBackendTimeout); replies that cannot be
  // interpreted throw Error(kMalformedBackendReply).
  virtual std::string complete(std::span<const Turn> context,
                               const BackendParams& params) = 0;

  // Timestamp source for transcript turns.
  virtual std::int64_t now_ms() const;

  void set_rate_limiter(std::shared_ptr<RateLimiter> limiter) {
    limiter_ = std::move(limiter);
  }
  void acquire_slot() {
    if (limiter_) limiter_->acquire();
  }

 private:
  std::shared_ptr<RateLimiter> limiter_;
};

// Key of a request in a mock script: SHA-256 over the whitespace-normalized
// prompts of the context in order. Responses are not part of the key.
std::string script_key(std::span<const std::string> prompts);
std::string context_key(std::span<const Turn> context);

struct ScriptEntry {
  std::string context_hash;
  std::string response;
  std::string prompt;  // last prompt, informational only

  bool operator==(const ScriptEntry&) const = default;
};

// Reads a script file: one JSON object per line with context_hash and
// response (and an optional prompt).
std::vector<ScriptEntry> read_script(const std::string& path);
void write_script(const std::string& path, std::vector<ScriptEntry> entries);

// Deterministic replay backend. Unscripted contexts are malformed replies.
class ScriptedBackend : public Backend {
 public:
  ScriptedBackend() = default;
  explicit ScriptedBackend(const std::vector<ScriptEntry>& entries);
  static std::shared_ptr<ScriptedBackend> from_file(const std::string& path);

  void add(const std::string& context_hash, std::string response);
  void add_for(const std::vector<std::string>& prompts, std::string response);

  std::string name() const override { return "mock"; }
  std::string complete(std::span<const Turn> context,
                       const BackendParams& params) override;
  // Logical time: replayed transcripts carry zero timestamps.
  std::int64_t now_ms() const override { return 0; }

  // Number of prompts carried by each delivered context, in call order.
  std::vector<std::size_t> delivered_prompt_counts() const;
  // Whether every delivered context alternated prompt/response and ended
  // with a prompt.
  bool contexts_well_formed() const;

 private:
  mutable std::mutex mu_;
  std::map<std::string, std::string> script_;
  std::vector<std::size_t> delivered_;
  bool well_formed_ = true;
};

// Wraps a live backend and keeps every exchange as a script entry so the run
// can be replayed later with ScriptedBackend.
class RecordingBackend : public Backend {
 public:
  explicit RecordingBackend(std::shared_ptr<Backend> inner)
      : inner_(std::move(inner)) {}

  std::string name() const override { return "record:" + inner_->name(); }
  void check_available() const override { inner_->check_available(); }
  std::string complete(std::span<const Turn> context,
                       const BackendParams& params) override;
  std::int64_t now_ms() const override { return inner_->now_ms(); }

  std::vector<ScriptEntry> entries() const;
  // Merges with entries already present in the file, sorted by hash.
  void save(const std::string& path) const;

 private:
  std::shared_ptr<Backend> inner_;
  mutable std::mutex mu_;
  std::map<std::string, ScriptEntry> recorded_;
};

struct RetryPolicy {
  // Retries after the first attempt, for transient failures only.
  int max_retries = 2;
  std::chrono::milliseconds initial_backoff{2000};
  // Defaults to std::this_thread::sleep_for.
  std::function<void(std::chrono::milliseconds)> sleep;
};

// One sequential dialog. The transcript is append-only and alternates
// prompt/response; every send delivers the whole transcript plus the new
// prompt.
class Conversation {
 public:
  Conversation(std::shared_ptr<Backend> backend, BackendParams params,
               RetryPolicy retry = {});

  std::string send(std::string_view prompt);

  const Transcript& transcript() const { return transcript_; }
  const BackendParams& params() const { return params_; }
  const std::shared_ptr<Backend>& backend() const { return backend_; }

  // Empty conversation on the same backend with the same settings.
  Conversation fork_stateless() const;

 private:
  std::shared_ptr<Backend> backend_;
  BackendParams params_;
  RetryPolicy retry_;
  Transcript transcript_;
};

// Throws Error(kBackendUnavailable) when the backend is not usable.
Conversation start_conversation(std::shared_ptr<Backend> backend,
                                BackendParams params, RetryPolicy retry = {});

}  // namespace propminer::conversation

#endif  // PROPMINER_CONVERSATION_H_

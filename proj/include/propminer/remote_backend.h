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

#ifndef PROPMINER_REMOTE_BACKEND_H_
#define PROPMINER_REMOTE_BACKEND_H_

#include <chrono>
#include <string>

#include "propminer/conversation.h"

namespace propminer::conversation {

struct RemoteOptions {
  // Scheme, host and optional port, e.g. "https://api.openai.com".
  std::string endpoint = "https://api.openai.com";
  std::string path = "/v1/chat/completions";
  // The credential is only ever read from this environment variable.
  std::string api_key_env = "PROPMINER_API_KEY";
  std::chrono::seconds timeout{120};
};

// Chat-completion client speaking the OpenAI-style JSON protocol. Network
// errors, 408, 429 and 5xx map to kBackendTimeout so the conversation retry
// policy applies; other HTTP errors map to kBackendUnavailable.
class RemoteBackend : public Backend {
 public:
  explicit RemoteBackend(RemoteOptions options) : options_(std::move(options)) {}

  std::string name() const override { return "remote"; }
  void check_available() const override;
  std::string complete(std::span<const Turn> context,
                       const BackendParams& params) override;

  // Request body for a context; exposed for tests.
  static std::string request_body(std::span<const Turn> context,
                                  const BackendParams& params);

 private:
  std::string api_key() const;

  RemoteOptions options_;
};

}  // namespace propminer::conversation

#endif  // PROPMINER_REMOTE_BACKEND_H_

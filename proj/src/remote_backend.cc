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

#include "propminer/remote_backend.h"

#include <cstdlib>

#include "httplib.h"
#include "json.hpp"
#include "propminer/error.h"

namespace propminer::conversation {

std::string RemoteBackend::api_key() const {
  const char* key = std::getenv(options_.api_key_env.c_str());
  return key == nullptr ? std::string() : std::string(key);
}

void RemoteBackend::check_available() const {
  if (api_key().empty()) {
    throw Error(ErrorCode::kBackendUnavailable,
                "credential variable " + options_.api_key_env + " is not set");
  }
}

std::string RemoteBackend::request_body(std::span<const Turn> context,
                                        const BackendParams& params) {
  nlohmann::ordered_json body;
  body["model"] = params.model_name;
  auto messages = nlohmann::ordered_json::array();
  if (params.system_prompt) {
    messages.push_back({{"role", "system"}, {"content", *params.system_prompt}});
  }
  for (const Turn& t : context) {
    messages.push_back({{"role", t.role == Role::kPrompt ? "user" : "assistant"},
                        {"content", t.text}});
  }
  body["messages"] = std::move(messages);
  body["temperature"] = params.temperature;
  body["top_p"] = params.top_p;
  body["frequency_penalty"] = params.frequency_penalty;
  body["presence_penalty"] = params.presence_penalty;
  body["n"] = 1;
  return body.dump();
}

std::string RemoteBackend::complete(std::span<const Turn> context,
                                    const BackendParams& params) {
  check_available();
  httplib::Client client(options_.endpoint);
  client.set_connection_timeout(options_.timeout);
  client.set_read_timeout(options_.timeout);
  client.set_write_timeout(options_.timeout);
  client.set_bearer_token_auth(api_key());

  auto result = client.Post(options_.path, request_body(context, params),
                            "application/json");
  if (!result) {
    throw Error(ErrorCode::kBackendTimeout,
                "request failed: " + httplib::to_string(result.error()));
  }
  int status = result->status;
  if (status == 408 || status == 429 || status >= 500) {
    throw Error(ErrorCode::kBackendTimeout, "HTTP " + std::to_string(status));
  }
  if (status != 200) {
    throw Error(ErrorCode::kBackendUnavailable,
                "HTTP " + std::to_string(status) + ": " + result->body.substr(0, 200));
  }
  try {
    auto reply = nlohmann::json::parse(result->body);
    const auto& content = reply.at("choices").at(0).at("message").at("content");
    if (!content.is_string()) {
      throw Error(ErrorCode::kMalformedBackendReply, "content is not a string");
    }
    return content.get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kMalformedBackendReply, e.what());
  }
}

}  // namespace propminer::conversation

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

#include <atomic>
#include <cstdlib>
#include <thread>

#include "doctest.h"
#include "httplib.h"
#include "json.hpp"
#include "propminer/conversation.h"
#include "propminer/error.h"
#include "propminer/remote_backend.h"
#include "test_util.h"

namespace pm = propminer;
using namespace pm::conversation;

namespace {

// Fails with kBackendTimeout for the first `failures` calls, then echoes.
class FlakyBackend : public Backend {
 public:
  explicit FlakyBackend(int failures) : failures_(failures) {}
  std::string name() const override { return "flaky"; }
  std::string complete(std::span<const Turn> context, const BackendParams&) override {
    ++calls;
    if (calls <= failures_) throw pm::Error(pm::ErrorCode::kBackendTimeout, "slow");
    return "echo:" + context.back().text;
  }
  int calls = 0;

 private:
  int failures_;
};

RetryPolicy recording_retry(std::vector<long>& sleeps) {
  RetryPolicy r;
  r.sleep = [&sleeps](std::chrono::milliseconds d) { sleeps.push_back(d.count()); };
  return r;
}

}  // namespace

TEST_CASE("start_conversation and scripted send") {
  auto mock = std::make_shared<ScriptedBackend>();
  mock->add_for({"Is it?"}, "Yes");
  mock->add_for({"Is it?", "And  this?"}, "No");
  auto conv = start_conversation(mock, {});
  CHECK(conv.transcript().empty());
  CHECK(conv.send("Is it?") == "Yes");
  CHECK(conv.send("And this?") == "No");  // whitespace-normalized key
  CHECK(conv.transcript().size() == 4);
  CHECK(mock->delivered_prompt_counts() == std::vector<std::size_t>{1, 2});
  CHECK(mock->contexts_well_formed());

  // Unscripted third prompt.
  try {
    conv.send("Unknown?");
    FAIL("expected MalformedBackendReply");
  } catch (const pm::Error& e) {
    CHECK(e.code() == pm::ErrorCode::kMalformedBackendReply);
  }
  CHECK(conv.transcript().size() == 4);  // failed sends leave no turns
}

TEST_CASE("retention delivers the whole transcript") {
  auto mock = std::make_shared<ScriptedBackend>();
  mock->add_for({"a"}, "1");
  mock->add_for({"a", "b"}, "2");
  auto conv = start_conversation(mock, {});
  conv.send("a");
  conv.send("b");
  // The second call carried prompt, response, prompt: context length 3.
  CHECK(mock->delivered_prompt_counts().back() == 2);
  CHECK(conv.transcript()[1].text == "1");
}

TEST_CASE("fork_stateless") {
  auto mock = std::make_shared<ScriptedBackend>();
  mock->add_for({"a"}, "1");
  mock->add_for({"b"}, "2");
  auto conv = start_conversation(mock, {});
  conv.send("a");
  auto fork = conv.fork_stateless();
  CHECK(fork.transcript().empty());
  CHECK(fork.send("b") == "2");
  CHECK(conv.transcript().size() == 2);
  CHECK(mock->delivered_prompt_counts() == std::vector<std::size_t>{1, 1});
}

TEST_CASE("transcript length after n sends is 2n and replay is deterministic") {
  auto mock = std::make_shared<ScriptedBackend>();
  std::vector<std::string> prompts;
  for (int i = 0; i < 6; ++i) {
    prompts.push_back("p" + std::to_string(i));
    mock->add_for(prompts, "r" + std::to_string(i));
  }
  auto run = [&] {
    auto conv = start_conversation(mock, {});
    for (int i = 0; i < 6; ++i) {
      conv.send(prompts[i]);
      CHECK(conv.transcript().size() == 2u * (i + 1));
    }
    return conv.transcript();
  };
  CHECK(run() == run());
}

TEST_CASE("retry policy: 3 attempts with 2 s then 4 s backoff") {
  std::vector<long> sleeps;
  auto flaky = std::make_shared<FlakyBackend>(2);
  Conversation conv(flaky, {}, recording_retry(sleeps));
  CHECK(conv.send("x") == "echo:x");
  CHECK(flaky->calls == 3);
  CHECK(sleeps == std::vector<long>{2000, 4000});

  sleeps.clear();
  auto dead = std::make_shared<FlakyBackend>(100);
  Conversation conv2(dead, {}, recording_retry(sleeps));
  try {
    conv2.send("x");
    FAIL("expected RetriesExhausted");
  } catch (const pm::Error& e) {
    CHECK(e.code() == pm::ErrorCode::kRetriesExhausted);
  }
  CHECK(dead->calls == 3);
  CHECK(conv2.transcript().empty());
}

TEST_CASE("context overflow errors out instead of truncating") {
  auto mock = std::make_shared<ScriptedBackend>();
  mock->add_for({"short"}, "ok");
  BackendParams params;
  params.max_context_bytes = 10;
  auto conv = start_conversation(mock, params);
  CHECK(conv.send("short") == "ok");
  try {
    conv.send("this prompt is too long");
    FAIL("expected ContextOverflow");
  } catch (const pm::Error& e) {
    CHECK(e.code() == pm::ErrorCode::kContextOverflow);
  }
}

TEST_CASE("rate limiter with a fake clock") {
  double now = 0.0;
  double slept = 0.0;
  RateLimiter limiter(
      60.0, 1.0, [&] { return now; },
      [&](std::chrono::duration<double> d) {
        slept += d.count();
        now += d.count();
      });
  for (int i = 0; i < 5; ++i) limiter.acquire();
  // One token up front, then one per second.
  CHECK(slept == doctest::Approx(4.0));

  RateLimiter off(0.0);
  off.acquire();  // never blocks
}

TEST_CASE("script files and recording") {
  pm::testing::TempDir dir("script");
  auto inner = std::make_shared<FlakyBackend>(0);
  auto recorder = std::make_shared<RecordingBackend>(inner);
  auto conv = start_conversation(recorder, {});
  conv.send("first");
  conv.send("second");
  recorder->save(dir.file("s.jsonl"));
  auto entries = read_script(dir.file("s.jsonl"));
  CHECK(entries.size() == 2);

  auto replay = ScriptedBackend::from_file(dir.file("s.jsonl"));
  auto again = start_conversation(replay, {});
  CHECK(again.send("first") == "echo:first");
  CHECK(again.send("second") == "echo:second");

  // Keys cover prompt order: the second prompt alone is unscripted.
  auto alone = start_conversation(replay, {});
  CHECK_THROWS_AS(alone.send("second"), pm::Error);

  std::vector<std::string> p1{"a  b", "c"};
  std::vector<std::string> p2{"a b", "c"};
  std::vector<std::string> p3{"c", "a b"};
  CHECK(script_key(p1) == script_key(p2));
  CHECK(script_key(p1) != script_key(p3));
}

TEST_CASE("remote backend needs the credential variable") {
  unsetenv("PROPMINER_TEST_MISSING_KEY");
  RemoteOptions opts;
  opts.api_key_env = "PROPMINER_TEST_MISSING_KEY";
  auto remote = std::make_shared<RemoteBackend>(opts);
  try {
    start_conversation(remote, {});
    FAIL("expected BackendUnavailable");
  } catch (const pm::Error& e) {
    CHECK(e.code() == pm::ErrorCode::kBackendUnavailable);
  }
}

TEST_CASE("remote backend against a local server") {
  httplib::Server server;
  std::atomic<int> calls{0};
  std::string seen_auth;
  nlohmann::json seen_body;
  server.Post("/v1/chat/completions", [&](const httplib::Request& req, httplib::Response& res) {
    int n = ++calls;
    if (n == 1) {
      res.status = 429;
      return;
    }
    seen_auth = req.get_header_value("Authorization");
    seen_body = nlohmann::json::parse(req.body);
    nlohmann::json reply = {{"choices", {{{"message", {{"role", "assistant"}, {"content", "Yes"}}}}}}};
    res.set_content(reply.dump(), "application/json");
  });
  int port = server.bind_to_any_port("127.0.0.1");
  std::thread thread([&] { server.listen_after_bind(); });
  server.wait_until_ready();

  setenv("PROPMINER_TEST_KEY", "sk-test", 1);
  RemoteOptions opts;
  opts.endpoint = "http://127.0.0.1:" + std::to_string(port);
  opts.api_key_env = "PROPMINER_TEST_KEY";
  std::vector<long> sleeps;
  BackendParams params;
  params.model_name = "test-model";
  auto conv = start_conversation(std::make_shared<RemoteBackend>(opts), params,
                                 recording_retry(sleeps));
  CHECK(conv.send("Is it?") == "Yes");
  CHECK(calls == 2);
  CHECK(sleeps == std::vector<long>{2000});
  CHECK(seen_auth == "Bearer sk-test");
  CHECK(seen_body["model"] == "test-model");
  CHECK(seen_body["temperature"] == 0.0);
  CHECK(seen_body["messages"].size() == 1);
  CHECK(seen_body["messages"][0]["role"] == "user");
  CHECK_FALSE(seen_body.dump().find("sk-test") != std::string::npos);

  server.stop();
  thread.join();
  unsetenv("PROPMINER_TEST_KEY");
}

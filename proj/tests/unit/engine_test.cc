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
#include <set>

#include "doctest.h"
#include "json.hpp"
#include "propminer/engine.h"
#include "propminer/error.h"
#include "propminer/prefilter.h"
#include "propminer/records_io.h"
#include "rule_backend.h"
#include "test_util.h"

namespace pm = propminer;
using namespace pm::engine;
using nlohmann::json;
using pm::conversation::Role;
using pm::conversation::Turn;

namespace {

// Delegates to RuleBackend and records each delivered context.
class Spy : public pm::conversation::Backend {
 public:
  Spy(std::shared_ptr<const pm::prompts::PromptPack> pack, json scenario)
      : rules_(std::move(pack), std::move(scenario)) {}
  std::string name() const override { return "spy"; }
  std::string complete(std::span<const Turn> context,
                       const pm::conversation::BackendParams& p) override {
    std::lock_guard<std::mutex> lock(mu_);
    std::size_t prompts = 0;
    for (const Turn& t : context) prompts += t.role == Role::kPrompt;
    prompt_counts.push_back(prompts);
    auto id = pm::testing::RuleBackend::identify(*rules_pack(), context.back().text);
    nodes.push_back(id ? id->first : "?");
    if (fail_on && context.back().text.ends_with(*fail_on)) {
      throw pm::Error(pm::ErrorCode::kBackendTimeout, "down");
    }
    return rules_.complete(context, p);
  }
  std::shared_ptr<const pm::prompts::PromptPack> rules_pack() const { return pack(); }

  std::vector<std::size_t> prompt_counts;
  std::vector<std::string> nodes;
  std::optional<std::string> fail_on;  // prompt suffix that times out

 private:
  static std::shared_ptr<const pm::prompts::PromptPack> pack() {
    static auto p = std::make_shared<const pm::prompts::PromptPack>(
        pm::prompts::PromptPack::load_default());
    return p;
  }
  std::mutex mu_;
  pm::testing::RuleBackend rules_;
};

std::shared_ptr<const pm::prompts::PromptPack> default_pack() {
  static auto p = std::make_shared<const pm::prompts::PromptPack>(
      pm::prompts::PromptPack::load_default());
  return p;
}

struct Fixture {
  explicit Fixture(json scenario, EngineMode mode = {}) {
    spy = std::make_shared<Spy>(default_pack(), std::move(scenario));
    ctx.backend = spy;
    ctx.pack = default_pack();
    ctx.property = "bulk modulus";
    ctx.mode = mode;
    ctx.store = &store;
    ctx.retry.sleep = [](std::chrono::milliseconds) {};
  }
  Dialog dialog(bool retain = true) {
    return Dialog(pm::conversation::Conversation(spy, {}, ctx.retry), retain);
  }
  std::shared_ptr<Spy> spy;
  TranscriptStore store;
  EngineContext ctx;
};

const char* kSentence = "The bulk modulus of NaCl is 167 GPa.";

json single_scenario(json single, json replies = json::object()) {
  json s = {{"text", kSentence}, {"relevant", true}, {"multi", false}, {"single", single}};
  if (!replies.empty()) s["replies"] = replies;
  return {{"sentences", {s}}};
}

pm::corpus::Passage passage_of(const std::string& target) {
  return {"d", 0, "T", std::nullopt, target};
}

std::size_t count_node(const std::vector<std::string>& nodes, std::string_view node) {
  return std::count(nodes.begin(), nodes.end(), std::string(node));
}

}  // namespace

TEST_CASE("classify_sentence and detect_multi_valued") {
  json scenario = {{"sentences",
                    {{{"text", "A 1."}, {"relevant", true}, {"multi", true}},
                     {{"text", "B 2."}, {"relevant", false}}}}};
  Fixture f(scenario);
  auto d = f.dialog();
  CHECK(classify_sentence(d, *f.ctx.pack, "A 1.", "bulk modulus"));
  auto d2 = f.dialog();
  CHECK_FALSE(classify_sentence(d2, *f.ctx.pack, "B 2.", "bulk modulus"));
  auto d3 = f.dialog();
  CHECK(detect_multi_valued(d3, *f.ctx.pack, passage_of("A 1."), "bulk modulus"));
  auto d4 = f.dialog();
  CHECK_FALSE(detect_multi_valued(d4, *f.ctx.pack, passage_of("B 2."), "bulk modulus"));
}

TEST_CASE("Yes/No re-ask") {
  json scenario = {{"sentences",
                    {{{"text", "A 1."}, {"replies", {{"stageA_classify", {"It does.", "Yes"}}}}},
                     {{"text", "B 2."}, {"replies", {{"stageA_classify", {"It does."}}}}}}}};
  Fixture f(scenario);
  auto d = f.dialog();
  CHECK(classify_sentence(d, *f.ctx.pack, "A 1.", "bulk modulus"));
  CHECK(d.log().size() == 4);
  CHECK(d.log()[0].text == d.log()[2].text);  // verbatim
  auto d2 = f.dialog();
  try {
    classify_sentence(d2, *f.ctx.pack, "B 2.", "bulk modulus");
    FAIL("expected MalformedAnswer");
  } catch (const pm::Error& e) {
    CHECK(e.code() == pm::ErrorCode::kMalformedAnswer);
  }
}

TEST_CASE("extract_single") {
  SUBCASE("all answers") {
    Fixture f(single_scenario({{"value", "167"}, {"unit", "GPa"}, {"material", "NaCl"}}));
    auto d = f.dialog();
    auto t = extract_single(d, *f.ctx.pack, passage_of(kSentence), "bulk modulus");
    CHECK(t == std::optional<Triplet>(Triplet{"NaCl", "167", "GPa"}));
    CHECK(f.spy->nodes == std::vector<std::string>{"single_value", "single_unit", "single_material"});
  }
  SUBCASE("None value discards and skips the rest") {
    Fixture f(single_scenario({{"value", "None"}, {"unit", "GPa"}, {"material", "NaCl"}}));
    auto d = f.dialog();
    CHECK_FALSE(extract_single(d, *f.ctx.pack, passage_of(kSentence), "bulk modulus"));
    CHECK(f.spy->nodes == std::vector<std::string>{"single_value"});
  }
  SUBCASE("full-sentence value is re-asked once") {
    Fixture f(single_scenario({{"value", "167"}, {"unit", "GPa"}, {"material", "NaCl"}},
                              {{"single_value", {"The value is 167 GPa.", "167"}}}));
    auto d = f.dialog();
    auto t = extract_single(d, *f.ctx.pack, passage_of(kSentence), "bulk modulus");
    CHECK(t == std::optional<Triplet>(Triplet{"NaCl", "167", "GPa"}));
    CHECK(count_node(f.spy->nodes, "single_value") == 2);
  }
  SUBCASE("repeated full sentence fails") {
    Fixture f(single_scenario({{"value", "167"}, {"unit", "GPa"}, {"material", "NaCl"}},
                              {{"single_value", {"The value is 167 GPa."}}}));
    auto d = f.dialog();
    try {
      extract_single(d, *f.ctx.pack, passage_of(kSentence), "bulk modulus");
      FAIL("expected MalformedScalar");
    } catch (const pm::Error& e) {
      CHECK(e.code() == pm::ErrorCode::kMalformedScalar);
    }
  }
}

TEST_CASE("extract_multi") {
  const char* s = "KCl and KBr have 17 GPa and 15 GPa.";
  json base = {{"text", s}, {"relevant", true}, {"multi", true},
               {"table", "Material | Value | Unit\nKCl | 17 | GPa\nKBr | 15 | GPa"}};
  SUBCASE("all follow-ups yes") {
    Fixture f(json{{"sentences", {base}}});
    auto d = f.dialog();
    auto rows = extract_multi(d, *f.ctx.pack, passage_of(s), "bulk modulus", {});
    CHECK(rows == std::vector<Triplet>{{"KCl", "17", "GPa"}, {"KBr", "15", "GPa"}});
    // Three yes answers per emitted triplet.
    CHECK(count_node(f.spy->nodes, "followup_value") == 2);
    CHECK(count_node(f.spy->nodes, "followup_unit") == 2);
    CHECK(count_node(f.spy->nodes, "followup_material") == 2);
  }
  SUBCASE("a no on row 2's material drops it") {
    json sc = base;
    sc["reject"] = {{{"field", "material"}, {"material", "KBr"}}};
    Fixture f(json{{"sentences", {sc}}});
    auto d = f.dialog();
    auto rows = extract_multi(d, *f.ctx.pack, passage_of(s), "bulk modulus", {});
    CHECK(rows == std::vector<Triplet>{{"KCl", "17", "GPa"}});
  }
  SUBCASE("a no short-circuits the remaining checks") {
    json sc = base;
    sc["reject"] = {{{"field", "value"}, {"material", "KBr"}}};
    Fixture f(json{{"sentences", {sc}}});
    auto d = f.dialog();
    extract_multi(d, *f.ctx.pack, passage_of(s), "bulk modulus", {});
    CHECK(count_node(f.spy->nodes, "followup_unit") == 1);
  }
  SUBCASE("hallucinated rows survive without follow-ups") {
    json sc = {{"text", "Films were annealed at 873 K."}, {"relevant", true}, {"multi", true},
               {"table", "Material | Value | Unit\nTiO2 | 180 | GPa"},
               {"reject", {{{"field", "value"}, {"material", "TiO2"}}}}};
    Fixture with(json{{"sentences", {sc}}}, {true, true});
    auto d = with.dialog();
    CHECK(extract_multi(d, *with.ctx.pack, passage_of(sc["text"]), "bulk modulus", {true, true})
              .empty());
    Fixture without(json{{"sentences", {sc}}}, {false, true});
    auto d2 = without.dialog();
    CHECK(extract_multi(d2, *without.ctx.pack, passage_of(sc["text"]), "bulk modulus",
                        {false, true})
              .size() == 1);
    CHECK(count_node(without.spy->nodes, "followup_value") == 0);
  }
  SUBCASE("rows with missing cells are dropped before checks") {
    json sc = base;
    sc["table"] = "Material | Value | Unit\nKCl | None | GPa\nKBr | 15 | GPa";
    Fixture f(json{{"sentences", {sc}}});
    auto d = f.dialog();
    auto rows = extract_multi(d, *f.ctx.pack, passage_of(s), "bulk modulus", {});
    CHECK(rows == std::vector<Triplet>{{"KBr", "15", "GPa"}});
    CHECK(count_node(f.spy->nodes, "followup_value") == 1);
  }
}

TEST_CASE("text workflow on a three-sentence doc") {
  pm::corpus::Document doc{"d1", "Elastic data", {"Intro text.", kSentence, "Done at 300 K."}, {}, {}};
  json scenario = single_scenario({{"value", "167"}, {"unit", "GPa"}, {"material", "NaCl"}});
  Fixture f(scenario);
  auto result = run_text_workflow(f.ctx, doc);
  REQUIRE(result.records.size() == 1);
  const auto& r = result.records[0];
  CHECK(r.branch == Branch::kSingle);
  CHECK(r.source == Source::kText);
  CHECK(r.sentence_index == std::optional<int>(1));
  CHECK(r.triplet == Triplet{"NaCl", "167", "GPa"});
  CHECK(r.transcript_id == "d1/s1/passage");
  CHECK(r.pack_version == "default@1.0.0");
  CHECK(result.errors.empty());
  // Stage A ran for both numeric sentences only; the digit-free one never
  // reached the backend.
  CHECK(count_node(f.spy->nodes, "stageA_classify") == 2);
  CHECK(f.store.contains("d1/s1/classify"));
  CHECK(f.store.contains("d1/s2/classify"));
  CHECK_FALSE(f.store.contains("d1/s2/passage"));
  auto t = f.store.get("d1/s1/passage");
  REQUIRE(t.has_value());
  CHECK(t->turns.size() == 8);  // multi-detect + value, unit, material
}

TEST_CASE("passage dialog retention") {
  const char* s = "KCl and KBr have 17 GPa and 15 GPa.";
  pm::corpus::Document doc{"d", "T", {s}, {}, {}};
  json sc = {{"text", s}, {"relevant", true}, {"multi", true},
             {"table", "Material | Value | Unit\nKCl | 17 | GPa\nKBr | 15 | GPa"},
             {"reject_without_history", {{{"field", "value"}, {"material", "KBr"}}}}};
  Fixture chat(json{{"sentences", {sc}}}, {true, true});
  auto with_chat = run_text_workflow(chat.ctx, doc);
  Fixture nochat(json{{"sentences", {sc}}}, {true, false});
  auto without_chat = run_text_workflow(nochat.ctx, doc);
  CHECK(with_chat.records.size() == 2);
  CHECK(without_chat.records.size() == 1);
  // Without retention every call carries one prompt, except the Stage A
  // dialog which is a separate conversation anyway.
  for (std::size_t n : nochat.spy->prompt_counts) CHECK(n == 1);
  // With retention the passage dialog grows by one prompt per call.
  std::vector<std::size_t> expected{1};
  for (std::size_t k = 1; k <= 1 + 1 + 6; ++k) expected.push_back(k);
  CHECK(chat.spy->prompt_counts == expected);
}

TEST_CASE("title screening") {
  pm::corpus::Document doc{"d", "Glass Zr41.2Ti13.8Cu12.5Ni10.0Be22.5", {"Plain text."}, {}, {}};
  auto units = plan_units(doc, {});
  REQUIRE(units.size() == 1);
  CHECK(units[0].index == pm::corpus::kTitleIndex);
  CHECK(units[0].key() == "text\td\t-1");
  json sc = {{"text", doc.title}, {"relevant", true}, {"multi", false},
             {"single", {{"value", "None"}}}};
  Fixture f(json{{"sentences", {sc}}});
  auto o = run_unit(f.ctx, units[0]);
  CHECK(o.records.empty());
  CHECK(f.store.contains("d/title/classify"));
  CHECK(f.store.contains("d/title/passage"));
}

TEST_CASE("table workflow") {
  pm::corpus::Document doc{"d", "T", {}, {}, {}};
  doc.tables.push_back({"A | B\nx | 1", "Table 1. Moduli.", 1});
  doc.tables.push_back({"A | B\ny | 2", "Table 2. Compositions.", 2});
  json scenario = {{"tables",
                    {{{"caption", "Table 1. Moduli."}, {"relevant", true},
                      {"reply", "Material | Value | Unit\na | 1 | GPa\nb | 2 | GPa\nc | 3 | GPa\nd | 4 | GPa"}},
                     {{"caption", "Table 2. Compositions."}, {"relevant", false}}}}};
  Fixture f(scenario);
  auto result = run_table_workflow(f.ctx, doc);
  CHECK(result.records.size() == 4);
  for (std::size_t i = 0; i < result.records.size(); ++i) {
    CHECK(result.records[i].source == Source::kTable);
    CHECK(result.records[i].branch == Branch::kTable);
    CHECK(result.records[i].table_index == std::optional<int>(1));
    CHECK(result.records[i].row == static_cast<int>(i));
  }
  CHECK(count_node(f.spy->nodes, "table_classify") == 2);
  CHECK(count_node(f.spy->nodes, "table_extract") == 1);
  CHECK(count_node(f.spy->nodes, "followup_value") == 0);
}

TEST_CASE("malformed table reply is recorded and skipped") {
  pm::corpus::Document doc{"d", "T", {}, {}, {}};
  doc.tables.push_back({"A | B", "Table 1. X.", 1});
  json scenario = {{"tables", {{{"caption", "Table 1. X."}, {"relevant", true},
                                {"reply", "I cannot do that."}}}}};
  Fixture f(scenario);
  auto result = run_table_workflow(f.ctx, doc);
  CHECK(result.records.empty());
  REQUIRE(result.errors.size() == 1);
  CHECK(result.errors[0].code == pm::ErrorCode::kMalformedTable);
  CHECK(result.errors[0].transcript_id == "d/t1/table");
}

TEST_CASE("figure workflow") {
  pm::corpus::Document doc{"d", "T", {}, {}, {{"Figure 1. Bulk modulus vs pressure.", 1},
                                              {"Figure 2. Micrograph.", 2}}};
  json scenario = {{"figures", {{{"caption", "Figure 1. Bulk modulus vs pressure."}, {"relevant", true}},
                                {{"caption", "Figure 2. Micrograph."}, {"relevant", false}}}}};
  Fixture f(scenario);
  auto flags = run_figure_workflow(f.ctx, doc);
  REQUIRE(flags.size() == 2);
  CHECK(flags[0].relevant);
  CHECK(flags[0].figure_index == 1);
  CHECK_FALSE(flags[1].relevant);
  CHECK(flags[1].transcript_id == "d/f2/figure");
}

TEST_CASE("unit errors never abort the run") {
  pm::corpus::Document doc{"d", "T", {"A 1.", kSentence}, {}, {}};
  json scenario = single_scenario({{"value", "167"}, {"unit", "GPa"}, {"material", "NaCl"}});
  scenario["sentences"].push_back({{"text", "A 1."}, {"relevant", true}});
  Fixture f(scenario);
  f.spy->fail_on = "\n\nA 1.";
  auto result = run_text_workflow(f.ctx, doc);
  CHECK(result.records.size() == 1);
  REQUIRE(result.errors.size() == 1);
  CHECK(result.errors[0].code == pm::ErrorCode::kRetriesExhausted);
  CHECK(result.errors[0].transcript_id == "d/s0/classify");
  CHECK(result.errors[0].unit_key == "text\td\t0");
}

TEST_CASE("ablation corpus: monotonicity, provenance and determinism") {
  auto docs = pm::io::read_corpus(pm::testing::fixture_path("ablation/corpus.jsonl"));
  json scenario = json::parse(pm::testing::slurp(pm::testing::fixture_path("ablation/scenario.json")));
  auto run = [&](EngineMode mode, int concurrency) {
    Fixture f(scenario, mode);
    f.ctx.concurrency = concurrency;
    std::vector<WorkUnit> units;
    for (const auto& d : docs) {
      for (auto& u : plan_units(d, {})) units.push_back(u);
    }
    std::vector<ExtractionRecord> records;
    for (const auto& o : run_units(f.ctx, units)) {
      CHECK(o.errors.empty());
      records.insert(records.end(), o.records.begin(), o.records.end());
    }
    return records;
  };
  auto with = run({true, true}, 1);
  auto without = run({false, true}, 1);
  std::map<std::pair<std::string, int>, std::multiset<Triplet>> by_passage;
  for (const auto& r : without) by_passage[{r.doc_id, *r.sentence_index}].insert(r.triplet);
  for (const auto& r : with) {
    auto& pool = by_passage[{r.doc_id, *r.sentence_index}];
    auto it = pool.find(r.triplet);
    CHECK(it != pool.end());
    if (it != pool.end()) pool.erase(it);
  }
  // Every record comes from a numeric sentence.
  for (const auto& r : without) {
    for (const auto& d : docs) {
      if (d.doc_id == r.doc_id) {
        CHECK(pm::prefilter::contains_number(d.sentences.at(*r.sentence_index)));
      }
    }
  }
  auto parallel = run({true, true}, 4);
  REQUIRE(parallel.size() == with.size());
  for (std::size_t i = 0; i < with.size(); ++i) {
    CHECK(pm::io::record_to_json(parallel[i]) == pm::io::record_to_json(with[i]));
  }
}

TEST_CASE("transcript store files") {
  pm::testing::TempDir dir("store");
  CHECK(TranscriptStore::file_name("doc 1/s3/passage") == "doc~1~s3~passage.json");
  StoredTranscript t{"doc/s3/passage", "passage", true, "default@1.0.0",
                     {{Role::kPrompt, "q", 0}, {Role::kResponse, "a", 0}}};
  {
    TranscriptStore store(dir.path());
    store.put(t);
  }
  TranscriptStore fresh(dir.path());
  CHECK(fresh.get("doc/s3/passage") == std::optional<StoredTranscript>(t));
  CHECK_FALSE(fresh.get("doc/s4/passage").has_value());
}

TEST_CASE("parallel_for runs every index once and propagates errors") {
  std::vector<std::atomic<int>> hits(100);
  parallel_for(100, 8, [&](std::size_t i) { ++hits[i]; });
  for (auto& h : hits) CHECK(h.load() == 1);
  CHECK_THROWS_AS(parallel_for(10, 3, [](std::size_t i) {
                    if (i == 5) throw std::runtime_error("boom");
                  }),
                  std::runtime_error);
}

TEST_CASE("record ordering") {
  ExtractionRecord a, b;
  a.doc_id = b.doc_id = "d";
  a.source = Source::kText;
  a.sentence_index = 9;
  b.source = Source::kTable;
  b.table_index = 1;
  CHECK(record_order_less(a, b));
  CHECK_FALSE(record_order_less(b, a));
  b = a;
  b.row = 1;
  CHECK(record_order_less(a, b));
}

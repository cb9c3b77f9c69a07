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

#include "propminer/cli.h"

#include <ostream>
#include <sstream>

#include "CLI11.hpp"
#include "propminer/corpus.h"
#include "propminer/dbbuild.h"
#include "propminer/error.h"
#include "propminer/evalkit.h"
#include "propminer/records_io.h"
#include "propminer/run.h"
#include "propminer/text.h"

namespace propminer::cli {
namespace {

struct IngestArgs {
  std::string manifest;
  std::string out;
};

struct ExtractArgs {
  run::RunConfig config;
  std::string corpus;
  bool no_follow_up = false;
  bool no_chat = false;
  std::size_t stop_after = 0;
};

struct BuildDbArgs {
  std::string records;
  std::string tier = "standardized";
  std::string out;
  std::string property;
  std::string unit_table;
  std::string overrides;
  std::size_t min_elements = 0;
  std::string exclude_elements;
};

struct EvaluateArgs {
  std::string ground_truth;
  std::string records;
  std::string overrides;
  std::string json_out;
  bool strict = false;
};

int cmd_ingest(const IngestArgs& a, std::ostream& out, std::ostream& err) {
  std::vector<corpus::Document> docs;
  std::size_t errors = 0;
  for (const corpus::ManifestEntry& e : corpus::read_manifest(a.manifest)) {
    try {
      docs.push_back(corpus::parse_document(io::read_file(e.path), e.format, e.doc_id));
    } catch (const Error& ex) {
      ++errors;
      err << "error\t" << e.doc_id << "\t" << error_code_name(ex.code()) << "\t"
          << ex.what() << "\n";
    }
  }
  io::write_corpus(a.out, docs);
  std::size_t sentences = 0, tables = 0, figures = 0;
  for (const corpus::Document& d : docs) {
    sentences += d.sentences.size();
    tables += d.tables.size();
    figures += d.figure_captions.size();
  }
  out << "documents: " << docs.size() << "\n"
      << "sentences: " << sentences << "\n"
      << "tables: " << tables << "\n"
      << "figures: " << figures << "\n"
      << "errors: " << errors << "\n";
  return kOk;
}

int cmd_extract(ExtractArgs a, std::ostream& out, std::ostream& err) {
  run::RunConfig& c = a.config;
  c.mode.follow_up = !a.no_follow_up;
  c.mode.chat_retention = !a.no_chat;
  std::vector<corpus::Document> docs = io::read_corpus(a.corpus);
  auto backend = run::make_backend(c);
  run::ExtractOptions options;
  if (a.stop_after > 0) options.stop_after = a.stop_after;
  run::ExtractOutcome r = run::run_extract(c, docs, backend, options, &err);
  if (c.backend == "record") {
    static_cast<conversation::RecordingBackend&>(*backend).save(c.script);
  }
  out << "config_hash: " << r.config_hash << "\n"
      << "units: " << r.units_total << " (resumed " << r.units_resumed << ", run "
      << r.units_run << ")\n";
  if (!r.complete) {
    out << "stopped before the end; rerun the same command to resume\n";
    return kIncomplete;
  }
  out << "records: " << r.records.size() << "\n"
      << "errors: " << r.errors.size() << "\n";
  if (c.figures) {
    std::size_t relevant = 0;
    for (const engine::FigureFlag& f : r.figures) relevant += f.relevant ? 1 : 0;
    out << "figures: " << r.figures.size() << " (relevant " << relevant << ")\n";
  }
  return kOk;
}

std::set<std::string> parse_element_list(const std::string& list) {
  std::set<std::string> out;
  for (const std::string& part : text::split(list, ',')) {
    std::string sym(text::trim(part));
    if (sym.empty()) continue;
    if (!dbbuild::is_element_symbol(sym)) {
      throw Error(ErrorCode::kInvalidInput, "not an element symbol: " + sym);
    }
    out.insert(sym);
  }
  return out;
}

int cmd_build_db(const BuildDbArgs& a, std::ostream& out) {
  io::RecordsFile in = io::read_records(a.records);
  io::RecordsHeader header = in.header.value_or(io::RecordsHeader{});
  if (a.tier == "raw" || a.tier == "cleaned") {
    std::vector<engine::ExtractionRecord> recs =
        a.tier == "raw" ? in.records : dbbuild::clean(in.records);
    header.tier = a.tier;
    io::write_records(a.out, header, recs);
    out << a.tier << ": " << recs.size() << " of " << in.records.size()
        << " records\n";
    return kOk;
  }
  if (a.tier != "standardized") {
    throw Error(ErrorCode::kInvalidInput, "unknown tier " + a.tier);
  }
  std::string table_path = a.unit_table;
  if (table_path.empty()) {
    if (a.property.empty()) {
      throw Error(ErrorCode::kInvalidInput,
                  "standardized tier needs --unit-table or --property");
    }
    table_path = dbbuild::UnitTable::default_path(a.property);
  }
  dbbuild::UnitTable units = dbbuild::UnitTable::load(table_path);
  dbbuild::CompositionOverrides overrides;
  if (!a.overrides.empty()) overrides = dbbuild::CompositionOverrides::load(a.overrides);

  std::vector<engine::ExtractionRecord> cleaned = dbbuild::clean(in.records);
  dbbuild::StandardizeResult std_db = dbbuild::standardize(cleaned, units, &overrides);
  dbbuild::DomainRule rule;
  if (a.min_elements > 0) rule.min_elements = a.min_elements;
  rule.exclude_elements = parse_element_list(a.exclude_elements);
  std::vector<dbbuild::StandardEntry> filtered = dbbuild::filter_domain(std_db.entries, rule);

  io::write_file_atomic(a.out, dbbuild::standardized_to_tsv(filtered, header.config_hash,
                                                            header.pack_version));
  io::write_file_atomic(a.out + ".exclusions.tsv",
                        dbbuild::exclusions_to_tsv(std_db.exclusions));
  dbbuild::DbSummary s = dbbuild::summarize(filtered);
  out << "raw: " << in.records.size() << "\n"
      << "cleaned: " << cleaned.size() << "\n"
      << "standardized: " << std_db.entries.size() << " (excluded "
      << std_db.exclusions.size() << ")\n"
      << "after filters: " << s.entries << "\n"
      << "unique datapoints: " << s.unique_datapoints << "\n"
      << "unique compositions: " << s.unique_compositions << "\n";
  return kOk;
}

int cmd_evaluate(const EvaluateArgs& a, std::ostream& out) {
  std::vector<evalkit::GroundTruthPassage> gt = evalkit::read_ground_truth(a.ground_truth);
  io::RecordsFile recs = io::read_records(a.records);
  evalkit::MaterialOverrides overrides;
  if (!a.overrides.empty()) overrides = evalkit::MaterialOverrides::load(a.overrides);
  evalkit::EvalOptions opts;
  opts.overrides = &overrides;
  opts.strict = a.strict;
  evalkit::MatchReport report = evalkit::evaluate(gt, recs.records, opts);
  out << evalkit::format_report(report);
  if (!a.json_out.empty()) io::write_file_atomic(a.json_out, evalkit::report_to_json(report));
  return kOk;
}

void add_run_options(CLI::App* cmd, ExtractArgs& a) {
  run::RunConfig& c = a.config;
  cmd->add_option("--corpus", a.corpus, "Corpus file written by ingest")->required();
  cmd->add_option("--property", c.property, "Property name, e.g. \"bulk modulus\"")
      ->required();
  cmd->add_option("--out", c.output_dir, "Output directory")->capture_default_str();
  cmd->add_option("--backend", c.backend, "mock, remote or record")
      ->check(CLI::IsMember({"mock", "remote", "record"}))
      ->capture_default_str();
  cmd->add_option("--script", c.script, "Mock script to replay (mock) or write (record)");
  cmd->add_option("--model", c.model_name, "Model name sent to the backend")
      ->capture_default_str();
  cmd->add_option("--endpoint", c.endpoint, "Chat-completion endpoint base URL")
      ->capture_default_str();
  cmd->add_option("--api-key-env", c.api_key_env,
                  "Environment variable holding the API key")
      ->capture_default_str();
  cmd->add_option("--pack", c.prompt_pack, "Prompt pack file (default: bundled)");
  cmd->add_flag("--no-follow-up", a.no_follow_up, "Skip follow-up verification");
  cmd->add_flag("--no-chat", a.no_chat, "Start a fresh conversation for every prompt");
  cmd->add_option("--concurrency", c.concurrency, "Parallel conversations")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  cmd->add_option("--max-retries", c.max_retries, "Retries after a transient failure")
      ->check(CLI::NonNegativeNumber)
      ->capture_default_str();
  cmd->add_option("--rate-limit", c.rate_limit_rpm, "Requests per minute (0: unlimited)")
      ->check(CLI::NonNegativeNumber)
      ->capture_default_str();
  cmd->add_option("--stop-after", a.stop_after)->group("");
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Property datapoint extraction from research papers with a chat model"};
  app.name("propminer");
  app.set_config("--config", "", "TOML/INI file with option values");
  app.require_subcommand(1);

  IngestArgs ingest;
  CLI::App* c_ingest = app.add_subcommand("ingest", "Parse documents listed in a manifest");
  c_ingest->add_option("--manifest", ingest.manifest, "doc_id, path, format per line")
      ->required();
  c_ingest->add_option("--out", ingest.out, "Corpus file to write")->required();

  ExtractArgs extract;
  CLI::App* c_extract = app.add_subcommand("extract", "Extract triplets from sentences");
  add_run_options(c_extract, extract);
  c_extract->add_flag("--with-tables", extract.config.tables, "Also run the table workflow");
  c_extract->add_flag("--with-figures", extract.config.figures,
                      "Also classify figure captions");

  ExtractArgs tables;
  CLI::App* c_tables = app.add_subcommand("tables", "Extract triplets from tables only");
  add_run_options(c_tables, tables);

  ExtractArgs figures;
  CLI::App* c_figures = app.add_subcommand("figures", "Classify figure captions only");
  add_run_options(c_figures, figures);

  BuildDbArgs db;
  CLI::App* c_db = app.add_subcommand("build-db", "Build a raw, cleaned or standardized database");
  c_db->add_option("--records", db.records, "Records file")->required();
  c_db->add_option("--tier", db.tier, "raw, cleaned or standardized")
      ->check(CLI::IsMember({"raw", "cleaned", "standardized"}))
      ->capture_default_str();
  c_db->add_option("--out", db.out, "Database file to write")->required();
  c_db->add_option("--property", db.property, "Selects the bundled unit table");
  c_db->add_option("--unit-table", db.unit_table, "Unit table file");
  c_db->add_option("--overrides", db.overrides, "material<TAB>formula overrides");
  c_db->add_option("--min-elements", db.min_elements, "Keep compositions with at least n elements");
  c_db->add_option("--exclude-elements", db.exclude_elements,
                   "Comma-separated symbols; drop compositions containing any");

  EvaluateArgs ev;
  CLI::App* c_eval = app.add_subcommand("evaluate", "Score records against ground truth");
  c_eval->add_option("--ground-truth", ev.ground_truth, "Ground-truth file")->required();
  c_eval->add_option("--records", ev.records, "Records file")->required();
  c_eval->add_option("--overrides", ev.overrides, "Equivalent material name pairs");
  c_eval->add_option("--json", ev.json_out, "Also write the report as JSON");
  c_eval->add_flag("--strict", ev.strict, "Fail on records without a ground-truth passage");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    std::ostringstream o, x;
    int code = app.exit(e, o, x);
    out << o.str();
    err << x.str();
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (c_ingest->parsed()) return cmd_ingest(ingest, out, err);
    if (c_extract->parsed()) return cmd_extract(extract, out, err);
    if (c_tables->parsed()) {
      tables.config.text = false;
      tables.config.tables = true;
      return cmd_extract(tables, out, err);
    }
    if (c_figures->parsed()) {
      figures.config.text = false;
      figures.config.figures = true;
      return cmd_extract(figures, out, err);
    }
    if (c_db->parsed()) return cmd_build_db(db, out);
    if (c_eval->parsed()) return cmd_evaluate(ev, out);
  } catch (const Error& e) {
    err << "propminer: " << e.what() << "\n";
    return kFailed;
  } catch (const std::exception& e) {
    err << "propminer: " << e.what() << "\n";
    return kFailed;
  }
  return kUsage;
}

int run_cli(const std::vector<std::string>& args, std::ostream& out,
            std::ostream& err) {
  std::vector<const char*> argv{"propminer"};
  for (const std::string& a : args) argv.push_back(a.c_str());
  return run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
}

}  // namespace propminer::cli

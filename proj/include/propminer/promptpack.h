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

#ifndef PROPMINER_PROMPTPACK_H_
#define PROPMINER_PROMPTPACK_H_

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace propminer::prompts {

// Workflow node identifiers. A pack must define a template for each.
inline constexpr std::string_view kStageAClassify = "stageA_classify";
inline constexpr std::string_view kMultiDetect = "multi_detect";
inline constexpr std::string_view kSingleValue = "single_value";
inline constexpr std::string_view kSingleUnit = "single_unit";
inline constexpr std::string_view kSingleMaterial = "single_material";
inline constexpr std::string_view kMultiTable = "multi_table";
inline constexpr std::string_view kFollowupValue = "followup_value";
inline constexpr std::string_view kFollowupUnit = "followup_unit";
inline constexpr std::string_view kFollowupMaterial = "followup_material";
inline constexpr std::string_view kTableClassify = "table_classify";
inline constexpr std::string_view kTableExtract = "table_extract";
inline constexpr std::string_view kFigureClassify = "figure_classify";

inline constexpr std::string_view kRequiredNodes[] = {
    kStageAClassify, kMultiDetect,       kSingleValue,   kSingleUnit,
    kSingleMaterial, kMultiTable,        kFollowupValue, kFollowupUnit,
    kFollowupMaterial, kTableClassify,   kTableExtract,  kFigureClassify};

// Slot names, written "[name]" inside templates.
inline constexpr std::string_view kSlots[] = {"property", "sentence", "text",
                                              "material", "value",    "unit"};

using Bindings = std::map<std::string, std::string, std::less<>>;

struct PromptTemplate {
  std::string node_id;
  std::string text;

  // Slot names referenced by the template, in order of first use. Throws
  // Error(kInvalidTemplate) for a bracketed lowercase name that is not a
  // known slot.
  std::vector<std::string> slots() const;
};

// Exact single-pass substitution; substituted values are never rescanned.
// Throws Error(kUnboundSlot).
std::string render(const PromptTemplate& tmpl, const Bindings& bindings);

class PromptPack {
 public:
  // JSON document: {"name", "version", "prompts": [{"node_id", "template"}]}.
  static PromptPack parse(std::string_view json);
  static PromptPack load(const std::string& path);
  // data/prompt_packs/default.json from the source tree.
  static PromptPack load_default();
  static std::string default_path();

  const std::string& name() const { return name_; }
  const std::string& version() const { return version_; }
  // "name@version", stamped into every record.
  std::string label() const { return name_ + "@" + version_; }

  const PromptTemplate& at(std::string_view node_id) const;
  std::string render(std::string_view node_id, const Bindings& bindings) const;
  std::vector<std::string> node_ids() const;

 private:
  std::string name_;
  std::string version_;
  std::map<std::string, PromptTemplate, std::less<>> templates_;
};

enum class YesNo { kYes, kNo, kMalformed };

// Case-insensitive match on the first token after stripping leading
// whitespace and punctuation.
YesNo parse_yes_no(std::string_view response);

// nullopt for an explicit "None". Full-sentence or multi-line replies throw
// Error(kMalformedScalar).
std::optional<std::string> parse_scalar(std::string_view response);

struct TableRow {
  std::string material;
  std::string value;
  std::string unit;

  bool operator==(const TableRow&) const = default;
};

// Pipe- or tab-delimited rows; header and divider rows are skipped and
// "None"-like cells become empty strings. An explicit "None" reply yields no
// rows. Throws Error(kMalformedTable) when nothing table-shaped is found.
std::vector<TableRow> parse_table(std::string_view response);

}  // namespace propminer::prompts

#endif  // PROPMINER_PROMPTPACK_H_

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

#ifndef PROPMINER_PREFILTER_H_
#define PROPMINER_PREFILTER_H_

#include <string>
#include <string_view>
#include <vector>

#include "propminer/corpus.h"

// Drops sentences that cannot carry a datapoint before any model call.
namespace propminer::prefilter {

struct CandidateSentence {
  std::string doc_id;
  int sentence_index = 0;
  std::string text;

  bool operator==(const CandidateSentence&) const = default;
};

// True iff the sentence holds a numeric token: an ASCII digit, a Unicode
// superscript/subscript digit, a vulgar fraction or a full-width digit.
bool contains_number(std::string_view sentence);

// The numeric sentences of doc in source order, with their indices.
std::vector<CandidateSentence> prefilter_stream(const corpus::Document& doc);

}  // namespace propminer::prefilter

#endif  // PROPMINER_PREFILTER_H_

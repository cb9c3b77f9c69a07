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

#include "propminer/prefilter.h"

#include "propminer/text.h"

namespace propminer::prefilter {

bool contains_number(std::string_view sentence) {
  for (char c : sentence) {
    if (text::is_ascii_digit(c)) return true;
  }
  for (std::size_t i = 0; i < sentence.size();) {
    std::size_t n = text::utf8_length(sentence, i);
    if (n > 1) {
      auto b0 = static_cast<unsigned char>(sentence[i]);
      auto b1 = static_cast<unsigned char>(sentence[i + 1]);
      auto b2 = n > 2 ? static_cast<unsigned char>(sentence[i + 2]) : 0;
      // U+00B2, U+00B3, U+00B9, U+00BC..U+00BE
      if (b0 == 0xC2 && (b1 == 0xB2 || b1 == 0xB3 || b1 == 0xB9 ||
                         (b1 >= 0xBC && b1 <= 0xBE))) {
        return true;
      }
      if (b0 == 0xE2 && b1 == 0x81 && (b2 == 0xB0 || (b2 >= 0xB4 && b2 <= 0xB9))) {
        return true;  // superscripts
      }
      if (b0 == 0xE2 && b1 == 0x82 && b2 >= 0x80 && b2 <= 0x89) {
        return true;  // subscripts
      }
      if (b0 == 0xE2 && b1 == 0x85 && b2 >= 0x90 && b2 <= 0x9E) {
        return true;  // vulgar fractions
      }
      if (b0 == 0xEF && b1 == 0xBC && b2 >= 0x90 && b2 <= 0x99) {
        return true;  // full-width digits
      }
    }
    i += n;
  }
  return false;
}

std::vector<CandidateSentence> prefilter_stream(const corpus::Document& doc) {
  std::vector<CandidateSentence> out;
  for (std::size_t i = 0; i < doc.sentences.size(); ++i) {
    if (contains_number(doc.sentences[i])) {
      out.push_back({doc.doc_id, static_cast<int>(i), doc.sentences[i]});
    }
  }
  return out;
}

}  // namespace propminer::prefilter

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

#ifndef PROPMINER_ERROR_H_
#define PROPMINER_ERROR_H_

#include <stdexcept>
#include <string>
#include <string_view>

namespace propminer {

// Machine-readable failure classes. Names are stable: they appear in
// error logs, exclusion logs and checkpoint journals.
enum class ErrorCode {
  kUnparsableMarkup,
  kMissingTitle,
  kIndexOutOfRange,
  kBackendUnavailable,
  kBackendTimeout,
  kMalformedBackendReply,
  kRetriesExhausted,
  kContextOverflow,
  kUnboundSlot,
  kInvalidTemplate,
  kMalformedAnswer,
  kMalformedScalar,
  kMalformedTable,
  kNotUniquelyIdentifiable,
  kNonDiscreteValue,
  kUnknownUnit,
  kUnresolvedProvenance,
  kInvalidInput,
  kIo,
};

std::string_view error_code_name(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(error_code_name(code)) + ": " + message),
        code_(code) {}

  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace propminer

#endif  // PROPMINER_ERROR_H_

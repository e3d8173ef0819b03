// aratts/error.h

// Copyright 2026  The aratts authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#ifndef ARATTS_ERROR_H_
#define ARATTS_ERROR_H_

#include <stdexcept>
#include <string>

namespace aratts {

// Error taxonomy for the whole pipeline.  kValidation kinds mean the caller's
// input was unacceptable; kRuntime kinds mean the computation itself failed.
// The CLI maps these to exit codes 1 and 2 respectively.
enum class ErrorKind {
  // validation
  kRejectedCodepoint,
  kOrphanDiacritic,
  kMalformedWav,
  kUnsupportedEncoding,
  kAllSilent,
  kShapeMismatch,
  kUnknownSymbolId,
  kEmptyManifest,
  kTooFewRecords,
  kShapeConflict,
  kBadConfig,
  // runtime
  kNonFinite,
  kSingularWeight,
  kIo,
};

inline bool IsValidationError(ErrorKind k) {
  return k != ErrorKind::kNonFinite && k != ErrorKind::kSingularWeight &&
         k != ErrorKind::kIo;
}

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string &msg)
      : std::runtime_error(msg), kind_(kind) {}
  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void Throw(ErrorKind kind, const std::string &msg) {
  throw Error(kind, msg);
}

}  // namespace aratts

#endif  // ARATTS_ERROR_H_

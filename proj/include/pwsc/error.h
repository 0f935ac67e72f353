// Copyright 2026 The pwsc Authors. All Rights Reserved.
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

#ifndef PWSC_ERROR_H_
#define PWSC_ERROR_H_

#include <stdexcept>
#include <string>

namespace pwsc {

// Broad failure classes. The CLI maps these onto process exit codes.
enum class ErrorCode {
  kInvalidArgument,  // caller broke a precondition (shapes, ranges)
  kDataError,        // unreadable input, unsupported format, leakage
  kCorruptStream,    // CRC mismatch, truncation, bad magic
  kNumeric,          // NaN/Inf produced by a forward op
  kMismatch,         // model fingerprint does not match a stream
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}
  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void Fail(ErrorCode code, const std::string& what) {
  throw Error(code, what);
}

#define PWSC_CHECK_ARG(cond, msg)                                  \
  do {                                                             \
    if (!(cond)) ::pwsc::Fail(::pwsc::ErrorCode::kInvalidArgument, \
                              (msg));                              \
  } while (0)

}  // namespace pwsc

#endif  // PWSC_ERROR_H_

/* Copyright 2026 The voxpan Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#ifndef VOXPAN_ERROR_H_
#define VOXPAN_ERROR_H_

#include <stdexcept>
#include <string>
#include <string_view>

namespace voxpan {

enum class ErrorCode {
  kInvalidArgument,
  kOutOfRange,
  kShapeMismatch,
  kFormat,
  kIo,
};

std::string_view error_code_name(ErrorCode code);

// All library failures are reported through this exception type. The code is
// what the CLI puts into its machine-readable error report.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) {
  throw Error(code, message);
}

inline void require(bool condition, ErrorCode code, std::string_view message) {
  if (!condition) fail(code, std::string(message));
}

}  // namespace voxpan

#endif  // VOXPAN_ERROR_H_

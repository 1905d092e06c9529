/*
 * Copyright 2026 The gbrtl Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */
#pragma once

#include <stdexcept>
#include <string>

namespace gbrtl {

enum class ErrorKind {
  kParse,        // malformed input text
  kUnsupported,  // well-formed but outside the supported model family
  kValidation,   // structural inconsistency in a model or quantizer
  kConfig,       // bad user-supplied parameter
  kData,         // dataset content problem
  kIo,           // file system failure
  kContract,     // caller violated a documented precondition
};

const char* to_string(ErrorKind kind) noexcept;

// Single exception type for the library; the kind drives CLI exit codes.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& message) {
  throw Error(kind, message);
}

}  // namespace gbrtl

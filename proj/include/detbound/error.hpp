// Copyright 2026 The detbound Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
#pragma once

#include <stdexcept>
#include <string>

namespace detbound {

// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed input file (not valid JSON, wrong field types, unreadable image).
class ParseError : public Error {
 public:
  using Error::Error;
};

// Well-formed input that violates a data contract (dangling ids, bad scores).
class ValidationError : public Error {
 public:
  using Error::Error;
};

// Caller violated an operation precondition.
class PreconditionError : public Error {
 public:
  using Error::Error;
};

// Filesystem failure while writing outputs.
class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace detbound

// Copyright 2026 The rageval Authors.
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

#pragma once

#include <stdexcept>
#include <string>

namespace rageval {

// Base class for every error raised by the library. The CLI maps
// BackendError to exit code 3 and everything else to 2.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad input files, malformed records, unreadable paths.
class InputError : public Error {
 public:
  using Error::Error;
};

// A contract precondition was violated by the caller.
class PreconditionError : public Error {
 public:
  using Error::Error;
};

// A model response could not be parsed into the requested layout.
class ParseError : public Error {
 public:
  using Error::Error;
};

// The language-model or adapter backend failed (after retries).
class BackendError : public Error {
 public:
  using Error::Error;
};

class AuthError : public BackendError {
 public:
  using BackendError::BackendError;
};

// Knowledge-graph element references a chunk that does not exist.
class ProvenanceError : public Error {
 public:
  using Error::Error;
};

// Sampling could not satisfy its contract (graph too small, exhausted).
class SamplingError : public Error {
 public:
  using Error::Error;
};

// Stage orchestration problems: missing prior stage, config mismatch.
class StageError : public Error {
 public:
  using Error::Error;
};

}  // namespace rageval

// Copyright 2026 The LHPO Authors
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

#ifndef LHPO_ERRORS_H_
#define LHPO_ERRORS_H_

#include <stdexcept>
#include <string>

namespace lhpo {

// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Invalid argument values (counts, rates, enum names).
class ArgumentError : public Error {
 public:
  using Error::Error;
};

// A task whose response surface is constant.
class DegenerateTaskError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

// Malformed file contents (syntax or wrong value types).
class ParseError : public Error {
 public:
  using Error::Error;
};

// Well-formed input that breaks a data-model invariant.
class InvariantError : public Error {
 public:
  using Error::Error;
};

// Config index or task id that does not exist.
class IndexError : public Error {
 public:
  using Error::Error;
};

// Violated operation precondition.
class ContractError : public Error {
 public:
  using Error::Error;
};

class ShapeError : public Error {
 public:
  using Error::Error;
};

class NonFiniteError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

// Report input missing (method, task, seed) cells.
class IncompleteDesignError : public Error {
 public:
  using Error::Error;
};

}  // namespace lhpo

#endif  // LHPO_ERRORS_H_

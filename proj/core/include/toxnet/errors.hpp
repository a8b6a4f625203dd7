/*
 *  Copyright 2026 The toxnet authors
 *
 *  Licensed under the Apache License, Version 2.0 (the "License");
 *  you may not use this file except in compliance with the License.
 *  You may obtain a copy of the License at
 *
 *      http://www.apache.org/licenses/LICENSE-2.0
 *
 *  Unless required by applicable law or agreed to in writing, software
 *  distributed under the License is distributed on an "AS IS" BASIS,
 *  WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 *  See the License for the specific language governing permissions and
 *  limitations under the License.
 */

#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace toxnet {

/// Base class for all library errors.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class SmilesErrorKind {
  EmptyInput,
  UnclosedBranch,
  UnclosedRing,
  UnknownElement,
  MalformedBracket,
};

const char* to_string(SmilesErrorKind kind);

/// SMILES parse failure. Carries the error class and the character offset
/// into the input string where the problem was detected.
class SmilesParseError : public Error {
 public:
  SmilesParseError(SmilesErrorKind kind, std::size_t offset, const std::string& detail);

  SmilesErrorKind kind() const { return kind_; }
  std::size_t offset() const { return offset_; }

 private:
  SmilesErrorKind kind_;
  std::size_t offset_;
};

/// AUC is undefined when the labels contain only one class.
class SingleClassError : public Error {
 public:
  using Error::Error;
};

}  // namespace toxnet

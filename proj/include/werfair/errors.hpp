// include/werfair/errors.hpp

// Copyright 2026  The werfair Authors
//
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

#ifndef WERFAIR_ERRORS_HPP_
#define WERFAIR_ERRORS_HPP_

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace werfair {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Problems with input data: files, records, labels, schemas.
class InputError : public Error {
 public:
  using Error::Error;
};

class FileNotFoundError : public InputError {
 public:
  explicit FileNotFoundError(const std::string &path)
      : InputError("file not found: " + path) {}
};

class ParseError : public InputError {
 public:
  using InputError::InputError;
};

class MixedSchemaError : public InputError {
 public:
  using InputError::InputError;
};

class UnknownGroupError : public InputError {
 public:
  using InputError::InputError;
};

class NonNumericCovariateError : public InputError {
 public:
  using InputError::InputError;
};

class CovariateDimensionError : public InputError {
 public:
  using InputError::InputError;
};

class SpeakerGroupConflictError : public InputError {
 public:
  using InputError::InputError;
};

class EmptyCorpusError : public InputError {
 public:
  EmptyCorpusError() : InputError("empty corpus exposure") {}
  using InputError::InputError;
};

/// Invalid arguments or incompatible models passed to an operation.
class ModelError : public Error {
 public:
  using Error::Error;
};

class NonIdentifiableError : public ModelError {
 public:
  explicit NonIdentifiableError(const std::string &detail)
      : ModelError("non-identifiable design: " + detail) {}
};

/// Ratio with a zero denominator (e.g. no control-group errors).
class InfiniteRatioError : public ModelError {
 public:
  using ModelError::ModelError;
};

/// An iterative fit stopped before meeting its tolerance. The last iterate is
/// kept so that callers can inspect or report it.
class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string &what, std::vector<double> last_iterate)
      : Error("failed to converge: " + what),
        last_iterate_(std::move(last_iterate)) {}

  const std::vector<double> &last_iterate() const { return last_iterate_; }

 private:
  std::vector<double> last_iterate_;
};

}  // namespace werfair

#endif  // WERFAIR_ERRORS_HPP_

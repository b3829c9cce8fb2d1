// Copyright (c) 2026 The h2nh-vc Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//   http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef H2NH_ERRORS_HPP_
#define H2NH_ERRORS_HPP_

#include <stdexcept>
#include <string>

namespace h2nh {

// Every error raised by the library derives from Error. The CLI maps the
// subclasses onto process exit codes (see ExitCode in config.hpp).
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

// Malformed or unreadable input data (corrupt WAV header, bad manifest).
class FormatError : public Error {
 public:
  using Error::Error;
};

class UnsupportedCodecError : public FormatError {
 public:
  using FormatError::FormatError;
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

class DomainError : public Error {
 public:
  using Error::Error;
};

class NumericError : public Error {
 public:
  using Error::Error;
};

// Model missing, untrained, or checkpoint incompatible.
class StateError : public Error {
 public:
  using Error::Error;
};

// Raised when a training step produces a non-finite loss.
class TrainingAbort : public NumericError {
 public:
  using NumericError::NumericError;
};

}  // namespace h2nh

#endif  // H2NH_ERRORS_HPP_

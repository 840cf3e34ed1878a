// Copyright 2026 The InSE-Net Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef INSE_ERRORS_HPP_
#define INSE_ERRORS_HPP_

#include <stdexcept>
#include <string>

namespace inse {

// Base class for every error raised by this library.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Caller passed an invalid value (bad range, wrong rate, too-short signal).
// Mapped to exit code 2 by the CLI.
class ArgumentError : public Error {
 public:
  using Error::Error;
};

// Operation called in the wrong state (e.g. normalizing an already
// normalized pair).
class StateError : public Error {
 public:
  using Error::Error;
};

// Tensor/feature-map dimensions do not match what a layer expects.
class ShapeError : public Error {
 public:
  using Error::Error;
};

// Two spectrograms cannot be stacked into one model input.
class PairingError : public Error {
 public:
  using Error::Error;
};

// File could not be read, written or parsed.
class IoError : public Error {
 public:
  using Error::Error;
};

// Missing or malformed tool configuration (codec/oracle executables).
class ConfigError : public Error {
 public:
  using Error::Error;
};

// An external codec run failed; carries the captured process output.
class CodecError : public Error {
 public:
  using Error::Error;
};

// No usable label source, or the oracle produced garbage.
class LabelError : public Error {
 public:
  using Error::Error;
};

// Correlation requested on degenerate (constant) data.
class UndefinedCorrelationError : public Error {
 public:
  using Error::Error;
};

}  // namespace inse

#endif  // INSE_ERRORS_HPP_

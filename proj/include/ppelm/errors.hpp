/*
 * Copyright 2026 The ppelm Authors
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace ppelm {

// Root of every error the library throws. `kind()` is a stable identifier
// used by the CLI's structured error report.
class Error : public std::runtime_error {
 public:
  Error(std::string kind, const std::string& what)
      : std::runtime_error(what), kind_(std::move(kind)) {}

  const std::string& kind() const noexcept { return kind_; }

 private:
  std::string kind_;
};

class RangeOverflow : public Error {
 public:
  explicit RangeOverflow(const std::string& what)
      : Error("RangeOverflow", what) {}
};

class DimensionMismatch : public Error {
 public:
  explicit DimensionMismatch(const std::string& what)
      : Error("DimensionMismatch", what) {}
};

class ConvergenceFailure : public Error {
 public:
  explicit ConvergenceFailure(const std::string& what)
      : Error("ConvergenceFailure", what) {}
};

class InvalidPartyCount : public Error {
 public:
  explicit InvalidPartyCount(const std::string& what)
      : Error("InvalidPartyCount", what) {}
};

class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what) : Error("ConfigError", what) {}
};

class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : Error("ParseError", "line " + std::to_string(line) + ": " + what),
        line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

class EmptyFile : public Error {
 public:
  explicit EmptyFile(const std::string& path)
      : Error("EmptyFile", "no instances in " + path) {}
};

// Low-level transport faults. The protocol layer converts these into
// TransportFailure carrying the hop at which the ring broke.
class TransportError : public Error {
 public:
  using Error::Error;
};

class Timeout : public TransportError {
 public:
  explicit Timeout(const std::string& what) : TransportError("Timeout", what) {}
};

class ConnectionLost : public TransportError {
 public:
  explicit ConnectionLost(const std::string& what)
      : TransportError("ConnectionLost", what) {}
};

class MalformedFrame : public TransportError {
 public:
  explicit MalformedFrame(const std::string& what)
      : TransportError("MalformedFrame", what) {}
};

class TransportFailure : public Error {
 public:
  TransportFailure(int hop, const std::string& what)
      : Error("TransportFailure",
              "hop " + std::to_string(hop) + ": " + what),
        hop_(hop) {}

  int hop() const noexcept { return hop_; }

 private:
  int hop_;
};

class PhaseViolation : public Error {
 public:
  explicit PhaseViolation(const std::string& what)
      : Error("PhaseViolation", what) {}
};

}  // namespace ppelm

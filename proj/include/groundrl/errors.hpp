// Copyright 2026 The groundrl Authors. All Rights Reserved.
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

#ifndef GROUNDRL_ERRORS_HPP_
#define GROUNDRL_ERRORS_HPP_

#include <stdexcept>
#include <string>

namespace groundrl {

// Base for every error raised by the library. The CLI maps subclasses onto
// exit codes (2 for input/contract errors, 3 for segmenter availability).
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define GROUNDRL_DEFINE_ERROR(Name)        \
  class Name : public Error {              \
   public:                                 \
    using Error::Error;                    \
  }

GROUNDRL_DEFINE_ERROR(InvalidGeometry);
GROUNDRL_DEFINE_ERROR(ShapeError);
GROUNDRL_DEFINE_ERROR(CorruptRle);
GROUNDRL_DEFINE_ERROR(UnknownImage);
GROUNDRL_DEFINE_ERROR(InvalidReward);
GROUNDRL_DEFINE_ERROR(EmptyEvaluation);
GROUNDRL_DEFINE_ERROR(AlignmentError);
GROUNDRL_DEFINE_ERROR(DuplicateSample);
GROUNDRL_DEFINE_ERROR(ConsistencyError);
GROUNDRL_DEFINE_ERROR(ConfigError);

#undef GROUNDRL_DEFINE_ERROR

// Transport failures, timeouts and malformed replies from a segmenter.
class SegmenterUnavailable : public Error {
 public:
  using Error::Error;
};

// Malformed input file; carries the 1-based line number when known.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, long line = 0)
      : Error(line > 0 ? what + " (line " + std::to_string(line) + ")" : what),
        line_(line) {}
  long line() const noexcept { return line_; }

 private:
  long line_;
};

// Non-finite loss during a policy update.
class TrainingDiverged : public Error {
 public:
  TrainingDiverged(const std::string& what, long step)
      : Error(what + " at step " + std::to_string(step)), step_(step) {}
  long step() const noexcept { return step_; }

 private:
  long step_;
};

}  // namespace groundrl

#endif  // GROUNDRL_ERRORS_HPP_

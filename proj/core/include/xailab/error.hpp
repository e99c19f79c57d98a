// Copyright 2026 The xailab Authors.
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
#include <string_view>

namespace xailab {

// Machine-readable failure categories. The CLI prints the category name on
// stderr so scripted callers can branch on it.
enum class ErrorClass {
  kConfiguration,
  kShape,
  kInput,
  kDivergence,
  kMetric,
  kLoad,
  kVersion,
  kExplanation,
  kRefusal,
  kSplit,
  kSampling,
  kNumeric,
  kIo,
};

std::string_view ToString(ErrorClass error_class);

class Error : public std::runtime_error {
 public:
  Error(ErrorClass error_class, const std::string& message);

  ErrorClass error_class() const { return error_class_; }

 private:
  ErrorClass error_class_;
};

// Raised when the training loss becomes non-finite.
class DivergenceError : public Error {
 public:
  DivergenceError(int epoch, const std::string& message);

  int epoch() const { return epoch_; }

 private:
  int epoch_;
};

}  // namespace xailab

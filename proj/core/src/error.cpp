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

#include "xailab/error.hpp"

#include <string>

namespace xailab {

std::string_view ToString(ErrorClass error_class) {
  switch (error_class) {
    case ErrorClass::kConfiguration: return "configuration";
    case ErrorClass::kShape: return "shape";
    case ErrorClass::kInput: return "input";
    case ErrorClass::kDivergence: return "divergence";
    case ErrorClass::kMetric: return "metric";
    case ErrorClass::kLoad: return "load";
    case ErrorClass::kVersion: return "version";
    case ErrorClass::kExplanation: return "explanation";
    case ErrorClass::kRefusal: return "refusal";
    case ErrorClass::kSplit: return "split";
    case ErrorClass::kSampling: return "sampling";
    case ErrorClass::kNumeric: return "numeric";
    case ErrorClass::kIo: return "io";
  }
  return "unknown";
}

Error::Error(ErrorClass error_class, const std::string& message)
    : std::runtime_error(message), error_class_(error_class) {}

DivergenceError::DivergenceError(int epoch, const std::string& message)
    : Error(ErrorClass::kDivergence, message), epoch_(epoch) {}

}  // namespace xailab

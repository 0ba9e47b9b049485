// Copyright 2026 The qrbg Authors. All rights reserved.
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

#include "qrbg/error.hpp"

namespace qrbg {

const char* to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::invalid_state: return "invalid-state";
    case ErrorKind::invalid_decomposition: return "invalid-decomposition";
    case ErrorKind::parameter: return "parameter";
    case ErrorKind::insufficient_data: return "insufficient-data";
    case ErrorKind::insufficient_entropy: return "insufficient-entropy";
    case ErrorKind::empty_input: return "empty-input";
    case ErrorKind::io: return "io";
    case ErrorKind::config: return "config";
  }
  return "unknown";
}

}  // namespace qrbg

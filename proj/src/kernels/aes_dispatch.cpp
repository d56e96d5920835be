// Copyright 2026 The mmill Authors
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

#include <cstdlib>
#include <string_view>

#include "mmill/kernels/aes.hpp"

namespace mmill::kernels {

const AesKernels& active_aes() {
  static const AesKernels& chosen = [&]() -> const AesKernels& {
    const char* env = std::getenv("MMILL_AES");
    if (env != nullptr && std::string_view(env) == "reference") return reference_aes();
    if (const AesKernels* ni = aesni_aes()) return *ni;
    return reference_aes();
  }();
  return chosen;
}

}  // namespace mmill::kernels

// Copyright 2026 The dpcusum Authors
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

#pragma once

#include <stdexcept>
#include <string>

namespace dpcusum {

/// Malformed or out-of-range argument (non-finite data, delta outside (0,1), ...).
class input_error : public std::invalid_argument {
 public:
  explicit input_error(const std::string& what) : std::invalid_argument(what) {}
};

/// Detector or experiment configuration that cannot be honored for the model.
class config_error : public std::invalid_argument {
 public:
  explicit config_error(const std::string& what) : std::invalid_argument(what) {}
};

/// API misuse, e.g. stepping a detector that has already stopped.
class usage_error : public std::logic_error {
 public:
  explicit usage_error(const std::string& what) : std::logic_error(what) {}
};

/// Argument outside the hypothesis of an analytical bound.
class out_of_domain_error : public std::domain_error {
 public:
  explicit out_of_domain_error(const std::string& what) : std::domain_error(what) {}
};

}  // namespace dpcusum

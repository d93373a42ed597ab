/* Copyright 2025 The pdsim Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#pragma once

#include <stdexcept>
#include <string>

namespace pdsim {

// Bad configuration: unknown parallelism degree, missing cost table entry,
// invalid plan, malformed parameter set.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

// Argument outside the operation's domain (e.g. zero-length prefill).
class DomainError : public std::invalid_argument {
 public:
  explicit DomainError(const std::string& msg) : std::invalid_argument(msg) {}
};

// Malformed or invalid input document. `where` is a field/line anchor,
// e.g. "prefill_cost[degree=4].segments[2].alpha" or "session[12]".
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& where, const std::string& msg)
      : std::runtime_error(where + ": " + msg), where_(where) {}
  const std::string& where() const { return where_; }

 private:
  std::string where_;
};

}  // namespace pdsim

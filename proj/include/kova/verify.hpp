// Copyright 2026 The KOVA Authors. All rights reserved.
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


// Self-check suites run by `kova verify`. Each check compares the library
// against an independent dense computation and reports error vs tolerance.

#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace kova {

struct CheckResult {
  std::string name;
  double error = 0.0;
  double tolerance = 0.0;
  bool passed() const { return error <= tolerance; }
};

struct SuiteResult {
  std::string suite;
  std::vector<CheckResult> checks;
  bool passed() const;
  double worst_error() const;
};

/// gain-identity, linear-gaussian, corollary1, jacobian, chain-oracle, psd
const std::vector<std::string>& verify_suite_names();

/// Throws ConfigError for an unknown suite.
SuiteResult run_verify_suite(const std::string& name, std::uint64_t seed = 0);

}  // namespace kova

// Copyright 2026 The fedselect Authors
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

#ifndef FEDSELECT_CONFIG_HPP_
#define FEDSELECT_CONFIG_HPP_

#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "fedselect/sim.hpp"

namespace fedselect::config {

// Invalid configuration input: unparsable file, unknown key, bad value, or
// violated experiment invariant. The CLI maps this to exit code 2.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Flat `key = value` map; lines starting the comment marker `#` (anywhere
// on the line) are stripped. Keys may be dotted (`cost.family`).
using KvMap = std::map<std::string, std::string>;

KvMap parse_string(const std::string& text);
KvMap parse_file(const std::string& path);

// Applies repeatable `key=value` override strings on top of a parsed map.
void apply_overrides(KvMap& kv, std::span<const std::string> overrides);

struct RunSpec {
  sim::ExperimentConfig experiment;
  std::vector<double> sweep_betas = {1.0, 2.5, 3.5};
  bool sweep_include_classical = true;
  KvMap effective;  // the validated key/value view, echoed into manifests
};

// Typed view of the map. Unknown keys, malformed values, and violated
// invariants raise ConfigError.
RunSpec to_run_spec(const KvMap& kv);

}  // namespace fedselect::config

#endif  // FEDSELECT_CONFIG_HPP_

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

#ifndef FEDSELECT_CLI_HPP_
#define FEDSELECT_CLI_HPP_

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace fedselect::cli {

// Exit codes shared by every subcommand: 0 success, 2 configuration or
// flag error, 3 runtime failure. check-dp additionally uses 1 for a failed
// statistical check.
inline constexpr int kExitOk = 0;
inline constexpr int kExitCheckFailed = 1;
inline constexpr int kExitConfigError = 2;
inline constexpr int kExitRuntimeError = 3;

struct CommonOptions {
  std::string config_path;                // --config
  std::string preset;                     // --preset
  std::vector<std::string> overrides;     // --set key=value, repeatable
  std::string out_dir = "out";            // --out
  std::optional<std::uint64_t> seed;      // --seed, overrides master_seed
};

struct CheckDpOptions {
  double sigma = 0.0;
  double beta = 1.0;
  std::uint64_t trials = 1'000'000;
  std::uint64_t seed = 12345;
};

int cmd_run(const CommonOptions& opts);
int cmd_solve(const CommonOptions& opts);
int cmd_sweep(const CommonOptions& opts);
int cmd_check_dp(const CheckDpOptions& opts);
int cmd_validate_tau(const CommonOptions& opts,
                     std::optional<double> x_floor_flag);

// Full argv interface used by the binary.
int run_main(int argc, const char* const* argv);

}  // namespace fedselect::cli

#endif  // FEDSELECT_CLI_HPP_

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

#ifndef FEDSELECT_MANIFEST_HPP_
#define FEDSELECT_MANIFEST_HPP_

#include <cstdint>
#include <string>
#include <vector>

#include "fedselect/config.hpp"

namespace fedselect::manifest {

inline constexpr const char* kVersion = "fedselect 0.1.0";

struct OutputFile {
  std::string path;      // relative to the manifest's directory
  std::string crc32;     // 8 hex digits, zero padded
  std::uint64_t bytes = 0;
};

struct RunManifest {
  std::string command;
  std::uint64_t master_seed = 0;
  std::string started_utc;
  std::string finished_utc;
  config::KvMap config_echo;
  config::KvMap resolved;  // values computed at run time (e.g. tau)
  std::vector<OutputFile> outputs;
};

// ISO-8601 UTC timestamp for the current wall clock.
std::string timestamp_utc();

// zlib CRC-32 of the file contents, formatted as 8 lowercase hex digits.
// Throws std::runtime_error when the file cannot be read.
std::string file_crc32(const std::string& path);

// Describes `path` relative to `root` (checksum and size included).
OutputFile describe_output(const std::string& root,
                           const std::string& relative_path);

// Serializes the manifest as stable-order JSON to <root>/manifest.json.
void write(const std::string& root, const RunManifest& m);

}  // namespace fedselect::manifest

#endif  // FEDSELECT_MANIFEST_HPP_

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

#include "fedselect/manifest.hpp"

#include <zlib.h>

#include <chrono>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

namespace fedselect::manifest {

std::string timestamp_utc() {
  const std::time_t now =
      std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm_utc{};
  gmtime_r(&now, &tm_utc);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm_utc);
  return buf;
}

std::string file_crc32(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw std::runtime_error("manifest: cannot open '" + path + "'");
  }
  uLong crc = crc32(0L, Z_NULL, 0);
  char buf[1 << 16];
  while (in.read(buf, sizeof(buf)) || in.gcount() > 0) {
    crc = crc32(crc, reinterpret_cast<const Bytef*>(buf),
                static_cast<uInt>(in.gcount()));
    if (!in) break;
  }
  char hex[16];
  std::snprintf(hex, sizeof(hex), "%08lx", static_cast<unsigned long>(crc));
  return hex;
}

OutputFile describe_output(const std::string& root,
                           const std::string& relative_path) {
  const std::string full = root + "/" + relative_path;
  OutputFile f;
  f.path = relative_path;
  f.crc32 = file_crc32(full);
  std::ifstream in(full, std::ios::binary | std::ios::ate);
  f.bytes = static_cast<std::uint64_t>(in.tellg());
  return f;
}

void write(const std::string& root, const RunManifest& m) {
  nlohmann::ordered_json j;
  j["version"] = kVersion;
  j["command"] = m.command;
  j["master_seed"] = m.master_seed;
  j["started_utc"] = m.started_utc;
  j["finished_utc"] = m.finished_utc;
  nlohmann::ordered_json cfg = nlohmann::ordered_json::object();
  for (const auto& [key, value] : m.config_echo) cfg[key] = value;
  j["config"] = cfg;
  nlohmann::ordered_json resolved = nlohmann::ordered_json::object();
  for (const auto& [key, value] : m.resolved) resolved[key] = value;
  j["resolved"] = resolved;
  nlohmann::ordered_json outs = nlohmann::ordered_json::array();
  for (const OutputFile& f : m.outputs) {
    outs.push_back({{"path", f.path}, {"crc32", f.crc32}, {"bytes", f.bytes}});
  }
  j["outputs"] = outs;

  const std::string path = root + "/manifest.json";
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw std::runtime_error("manifest: cannot open '" + path +
                             "' for writing");
  }
  out << j.dump(2) << '\n';
}

}  // namespace fedselect::manifest

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

#include "fedselect/config.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

namespace fedselect::config {
namespace {

const std::set<std::string>& known_keys() {
  static const std::set<std::string> keys = {
      "n_clients",     "capacity",        "steps",
      "tau",           "tau.x_floor",     "mode",
      "beta",          "master_seed",     "cost_seed",
      "theta0",        "theta_min",       "theta_max",
      "trace.thinning", "cost.family",    "cost.coef_low",
      "cost.coef_high", "baseline",       "dp.p_override",
      "sweep.betas",   "sweep.include_classical",
  };
  return keys;
}

std::string trim(const std::string& s) {
  std::size_t b = 0;
  std::size_t e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

bool valid_key(const std::string& key) {
  if (key.empty()) return false;
  for (char c : key) {
    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_' ||
          c == '.')) {
      return false;
    }
  }
  return true;
}

void insert_pair(KvMap& kv, const std::string& key, const std::string& value,
                 bool allow_replace, const std::string& where) {
  if (!valid_key(key)) {
    throw ConfigError(where + ": invalid key '" + key + "'");
  }
  if (value.empty()) {
    throw ConfigError(where + ": empty value for key '" + key + "'");
  }
  if (!allow_replace && kv.count(key) != 0) {
    throw ConfigError(where + ": duplicate key '" + key + "'");
  }
  kv[key] = value;
}

double parse_double(const std::string& key, const std::string& value) {
  const char* begin = value.c_str();
  char* end = nullptr;
  const double v = std::strtod(begin, &end);
  if (end == begin || *end != '\0') {
    throw ConfigError("config: key '" + key + "' has non-numeric value '" +
                      value + "'");
  }
  return v;
}

std::uint64_t parse_u64(const std::string& key, const std::string& value) {
  if (!value.empty() && value[0] == '-') {
    throw ConfigError("config: key '" + key + "' must be a non-negative "
                      "integer, got '" + value + "'");
  }
  const char* begin = value.c_str();
  char* end = nullptr;
  const unsigned long long v = std::strtoull(begin, &end, 10);
  if (end == begin || *end != '\0') {
    throw ConfigError("config: key '" + key + "' has non-integer value '" +
                      value + "'");
  }
  return static_cast<std::uint64_t>(v);
}

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1" || value == "yes") return true;
  if (value == "false" || value == "0" || value == "no") return false;
  throw ConfigError("config: key '" + key + "' must be a boolean, got '" +
                    value + "'");
}

std::vector<double> parse_double_list(const std::string& key,
                                      const std::string& value) {
  std::vector<double> out;
  std::stringstream ss(value);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (item.empty()) {
      throw ConfigError("config: key '" + key + "' has an empty list item");
    }
    out.push_back(parse_double(key, item));
  }
  if (out.empty()) {
    throw ConfigError("config: key '" + key + "' has an empty list");
  }
  return out;
}

class View {
 public:
  explicit View(const KvMap& kv) : kv_(kv) {}

  bool has(const std::string& key) const { return kv_.count(key) != 0; }

  std::string raw(const std::string& key, const std::string& fallback) const {
    auto it = kv_.find(key);
    return it == kv_.end() ? fallback : it->second;
  }

  double number(const std::string& key, double fallback) const {
    auto it = kv_.find(key);
    return it == kv_.end() ? fallback : parse_double(key, it->second);
  }

  std::uint64_t integer(const std::string& key, std::uint64_t fallback) const {
    auto it = kv_.find(key);
    return it == kv_.end() ? fallback : parse_u64(key, it->second);
  }

  bool boolean(const std::string& key, bool fallback) const {
    auto it = kv_.find(key);
    return it == kv_.end() ? fallback : parse_bool(key, it->second);
  }

 private:
  const KvMap& kv_;
};

}  // namespace

KvMap parse_string(const std::string& text) {
  KvMap kv;
  std::stringstream ss(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(ss, line)) {
    ++line_no;
    const std::size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const std::size_t eq = line.find('=');
    const std::string where = "config line " + std::to_string(line_no);
    if (eq == std::string::npos) {
      throw ConfigError(where + ": expected 'key = value', got '" + line +
                        "'");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    insert_pair(kv, key, value, /*allow_replace=*/false, where);
  }
  return kv;
}

KvMap parse_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw ConfigError("config: cannot open '" + path + "'");
  }
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_string(buffer.str());
}

void apply_overrides(KvMap& kv, std::span<const std::string> overrides) {
  for (const std::string& item : overrides) {
    const std::size_t eq = item.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("--set expects key=value, got '" + item + "'");
    }
    const std::string key = trim(item.substr(0, eq));
    const std::string value = trim(item.substr(eq + 1));
    insert_pair(kv, key, value, /*allow_replace=*/true, "--set");
  }
}

RunSpec to_run_spec(const KvMap& kv) {
  for (const auto& [key, value] : kv) {
    (void)value;
    if (known_keys().count(key) == 0) {
      throw ConfigError("config: unknown key '" + key + "'");
    }
  }
  const View v(kv);
  RunSpec spec;
  sim::ExperimentConfig& e = spec.experiment;

  if (!v.has("n_clients") || !v.has("capacity")) {
    throw ConfigError("config: n_clients and capacity are required");
  }
  e.n_clients = v.integer("n_clients", 0);
  e.capacity = v.number("capacity", 0.0);
  e.steps = v.integer("steps", 1000);

  const std::string tau_raw = v.raw("tau", "auto");
  if (tau_raw == "auto") {
    e.tau.reset();
  } else {
    e.tau = parse_double("tau", tau_raw);
  }
  e.tau_x_floor = v.number("tau.x_floor", 0.05);

  const std::string mode = v.raw("mode", "classical");
  if (mode == "classical") {
    e.mode = sim::Mode::classical;
  } else if (mode == "dp") {
    e.mode = sim::Mode::dp;
  } else {
    throw ConfigError("config: mode must be 'classical' or 'dp', got '" +
                      mode + "'");
  }

  e.betas = v.has("beta") ? parse_double_list("beta", kv.at("beta"))
                          : std::vector<double>{1.0};
  e.master_seed = v.integer("master_seed", 1);
  e.cost_seed = v.integer("cost_seed", 1);
  e.theta0 = v.number("theta0", 0.5);
  e.theta_min = v.number("theta_min", 1e-6);
  e.theta_max = v.number("theta_max", 1e6);
  e.trace_thinning = v.integer("trace.thinning", 0);

  const std::string family = v.raw("cost.family", "four-family");
  if (family == "four-family") {
    e.cost_family = PopulationKind::four_family;
  } else if (family == "quadratic") {
    e.cost_family = PopulationKind::quadratic;
  } else {
    throw ConfigError(
        "config: cost.family must be 'four-family' or 'quadratic', got '" +
        family + "'");
  }
  e.coef_low = v.number("cost.coef_low", 0.0);
  e.coef_high = v.number("cost.coef_high", 40.0);

  const std::string baseline = v.raw("baseline", "exact");
  if (baseline == "exact") {
    e.baseline = sim::BaselineMode::exact;
  } else if (baseline == "classical") {
    e.baseline = sim::BaselineMode::classical_run;
  } else {
    throw ConfigError(
        "config: baseline must be 'exact' or 'classical', got '" + baseline +
        "'");
  }

  if (v.has("dp.p_override")) {
    e.p_override = v.number("dp.p_override", 0.0);
  }

  if (v.has("sweep.betas")) {
    spec.sweep_betas = parse_double_list("sweep.betas", kv.at("sweep.betas"));
  }
  spec.sweep_include_classical = v.boolean("sweep.include_classical", true);
  for (double b : spec.sweep_betas) {
    if (!std::isfinite(b) || !(b > 0.0)) {
      throw ConfigError("config: sweep.betas entries must be positive");
    }
  }

  try {
    sim::validate(e);
  } catch (const std::invalid_argument& err) {
    throw ConfigError(err.what());
  }

  spec.effective = kv;
  return spec;
}

}  // namespace fedselect::config

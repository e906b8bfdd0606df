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

#include "fedselect/csv.hpp"

#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace fedselect::csv {
namespace {

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw std::runtime_error("csv: cannot open '" + path + "' for writing");
  }
  return out;
}

double parse_field_double(const std::string& field, const std::string& path) {
  const char* begin = field.c_str();
  char* end = nullptr;
  const double v = std::strtod(begin, &end);
  if (end == begin) {
    throw std::runtime_error("csv: bad numeric field '" + field + "' in " +
                             path);
  }
  return v;
}

std::uint64_t parse_field_u64(const std::string& field,
                              const std::string& path) {
  const char* begin = field.c_str();
  char* end = nullptr;
  const unsigned long long v = std::strtoull(begin, &end, 10);
  if (end == begin) {
    throw std::runtime_error("csv: bad integer field '" + field + "' in " +
                             path);
  }
  return static_cast<std::uint64_t>(v);
}

}  // namespace

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void write_trace(const std::string& path, const sim::SimTrace& trace) {
  std::ofstream out = open_out(path);
  out << "step,theta,sum_X,sum_x,avg_eps,saturation_count,cost_gap\n";
  for (const sim::StepRecord& r : trace.per_step) {
    out << r.step << ',' << format_double(r.theta) << ','
        << r.sum_participating << ',' << format_double(r.sum_avg) << ','
        << format_double(r.avg_eps) << ',' << r.saturated << ','
        << format_double(r.cost_gap) << '\n';
  }
}

void write_clients(const std::string& path, const sim::SimTrace& trace) {
  std::ofstream out = open_out(path);
  out << "client_id,beta,x_final,x_star,abs_err,eps_final,eps_mean,eps_max\n";
  for (std::size_t i = 0; i < trace.per_client_final.size(); ++i) {
    const sim::ClientRecord& r = trace.per_client_final[i];
    out << i << ',' << format_double(r.beta) << ','
        << format_double(r.x_final) << ',' << format_double(r.x_star) << ','
        << format_double(r.abs_err) << ',' << format_double(r.eps_final)
        << ',' << format_double(r.eps_mean) << ','
        << format_double(r.eps_max) << '\n';
  }
}

void write_snapshots(const std::string& path, const sim::SimTrace& trace) {
  std::ofstream out = open_out(path);
  out << "step,client_id,x,eps\n";
  for (const sim::SnapshotRecord& snap : trace.snapshots) {
    for (std::size_t i = 0; i < snap.x.size(); ++i) {
      out << snap.step << ',' << i << ',' << format_double(snap.x[i]) << ','
          << format_double(snap.eps[i]) << '\n';
    }
  }
}

void write_optimum(const std::string& path,
                   const std::vector<CostSpec>& specs,
                   const solver::AllocationResult& result) {
  if (specs.size() != result.x_star.size()) {
    throw std::invalid_argument(
        "write_optimum: specs and allocation size mismatch");
  }
  std::ofstream out = open_out(path);
  out << "client_id,x_star,f_prime_at_star,lambda_star,residual\n";
  for (std::size_t i = 0; i < specs.size(); ++i) {
    const double x = result.x_star[i];
    out << i << ',' << format_double(x) << ','
        << format_double(specs[i].derivative(x)) << ','
        << format_double(result.lambda_star) << ','
        << format_double(result.residual) << '\n';
  }
}

std::vector<sim::StepRecord> read_trace(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw std::runtime_error("csv: cannot open '" + path + "'");
  }
  std::string line;
  if (!std::getline(in, line) ||
      line != "step,theta,sum_X,sum_x,avg_eps,saturation_count,cost_gap") {
    throw std::runtime_error("csv: unexpected trace header in " + path);
  }
  std::vector<sim::StepRecord> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string field;
    std::vector<std::string> fields;
    while (std::getline(ss, field, ',')) fields.push_back(field);
    if (fields.size() != 7) {
      throw std::runtime_error("csv: malformed trace row in " + path);
    }
    sim::StepRecord r;
    r.step = parse_field_u64(fields[0], path);
    r.theta = parse_field_double(fields[1], path);
    r.sum_participating = parse_field_u64(fields[2], path);
    r.sum_avg = parse_field_double(fields[3], path);
    r.avg_eps = parse_field_double(fields[4], path);
    r.saturated = parse_field_u64(fields[5], path);
    r.cost_gap = parse_field_double(fields[6], path);
    rows.push_back(r);
  }
  return rows;
}

}  // namespace fedselect::csv

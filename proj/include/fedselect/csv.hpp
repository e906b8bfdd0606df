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

#ifndef FEDSELECT_CSV_HPP_
#define FEDSELECT_CSV_HPP_

#include <string>
#include <vector>

#include "fedselect/sim.hpp"
#include "fedselect/solver.hpp"

namespace fedselect::csv {

// Doubles are emitted with 17 significant digits ("%.17g"), enough to
// round-trip IEEE doubles exactly; infinities print as "inf".
std::string format_double(double v);

// step,theta,sum_X,sum_x,avg_eps,saturation_count,cost_gap
void write_trace(const std::string& path, const sim::SimTrace& trace);

// client_id,beta,x_final,x_star,abs_err,eps_final,eps_mean,eps_max
void write_clients(const std::string& path, const sim::SimTrace& trace);

// step,client_id,x,eps -- emitted only when snapshots were recorded
void write_snapshots(const std::string& path, const sim::SimTrace& trace);

// client_id,x_star,f_prime_at_star,lambda_star,residual
void write_optimum(const std::string& path,
                   const std::vector<CostSpec>& specs,
                   const solver::AllocationResult& result);

// Round-trip reader for trace files; used by tests and downstream tools.
// Throws std::runtime_error on malformed input.
std::vector<sim::StepRecord> read_trace(const std::string& path);

}  // namespace fedselect::csv

#endif  // FEDSELECT_CSV_HPP_

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

#ifndef FEDSELECT_SIM_HPP_
#define FEDSELECT_SIM_HPP_

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <vector>

#include "fedselect/cost.hpp"
#include "fedselect/solver.hpp"

namespace fedselect::sim {

enum class Mode { classical, dp };

// Reference allocation the cost-gap series is measured against: the exact
// solver optimum, or the terminal running averages of a classical run with
// the same seeds and population.
enum class BaselineMode { exact, classical_run };

struct ExperimentConfig {
  std::uint64_t n_clients = 0;
  double capacity = 0.0;
  std::uint64_t steps = 0;
  // Server gain; when unset it is resolved via
  // protocol::recommend_tau(specs, tau_x_floor).
  std::optional<double> tau;
  double tau_x_floor = 0.05;
  Mode mode = Mode::classical;
  // One shared value or one value per client (dp mode only).
  std::vector<double> betas = {1.0};
  std::uint64_t master_seed = 1;
  std::uint64_t cost_seed = 1;
  double theta0 = 0.5;
  double theta_min = 1e-6;
  double theta_max = 1e6;
  // 0 disables per-client snapshots; m >= 1 records every m-th step plus
  // the final step.
  std::uint64_t trace_thinning = 0;
  PopulationKind cost_family = PopulationKind::four_family;
  double coef_low = 0.0;
  double coef_high = 40.0;
  BaselineMode baseline = BaselineMode::exact;
  // Diagnostic override of the reporting-noise probability in dp mode;
  // 0 collapses the private step onto the classical one bit-for-bit.
  std::optional<double> p_override;
};

// Aggregate state of round k, captured before the transition to k+1:
// theta(k), sum of participation bits X_i(k), sum of running averages
// x_i(k), the budgets eps_i(k) spent by the k -> k+1 reports, and the cost
// gap |sum_i f_i(x_i(k)) - baseline cost|. avg_eps is the mean over finite
// budgets and +infinity when none are finite (saturated or classical
// rounds).
struct StepRecord {
  std::uint64_t step = 0;
  double theta = 0.0;
  std::uint64_t sum_participating = 0;
  double sum_avg = 0.0;
  double avg_eps = 0.0;
  std::uint64_t saturated = 0;
  double cost_gap = 0.0;
};

struct ClientRecord {
  double beta = 0.0;
  double x_final = 0.0;  // running average after the last round
  double x_star = 0.0;   // baseline allocation
  double abs_err = 0.0;  // |x_final - x_star|
  double eps_final = 0.0;
  double eps_mean = 0.0;  // mean over finite per-step budgets; +inf if none
  double eps_max = 0.0;
  std::uint64_t saturated_steps = 0;
};

// Per-client state sampled at a thinned step: x holds x_i(step), eps the
// budgets eps_i(step).
struct SnapshotRecord {
  std::uint64_t step = 0;
  std::vector<double> x;
  std::vector<double> eps;
};

struct SimTrace {
  std::vector<StepRecord> per_step;
  std::vector<ClientRecord> per_client_final;
  std::vector<SnapshotRecord> snapshots;
  std::vector<double> baseline_x;
  double baseline_cost = 0.0;
  // Dual price of the exact baseline; NaN under a classical-run baseline.
  double lambda_star = 0.0;
  double tau_resolved = 0.0;
  Mode mode = Mode::classical;

  std::size_t n_clients() const noexcept { return per_client_final.size(); }
  std::size_t steps() const noexcept { return per_step.size(); }
  std::vector<std::pair<std::uint64_t, double>> cost_gap_series() const;
};

// Throws std::invalid_argument describing the first violated constraint.
void validate(const ExperimentConfig& config);

// Deterministic cost population implied by the config.
std::vector<CostSpec> build_population(const ExperimentConfig& config);

/**
 * Runs the synchronous selection loop for config.steps rounds: broadcast
 * theta(k), step every client (classical or private per mode), then update
 * theta(k+1) = clamp(theta(k) - tau (sum_i X_i(k) - C)). Deterministic in
 * (master_seed, cost_seed, config); the FEDSELECT_THREADS worker cap never
 * changes results, only wall time.
 */
SimTrace run_experiment(const ExperimentConfig& config);

// One dp run per beta with identical seeds and population, sharing a
// single baseline computation. Throws std::invalid_argument on an empty or
// non-positive beta list.
std::vector<std::pair<double, SimTrace>> beta_sweep(
    const ExperimentConfig& base, std::span<const double> betas);

// abs_err[s][i] = |x_i(steps[s]) - result.x_star[i]| at the recorded
// snapshot steps. Throws std::invalid_argument when the client counts
// disagree.
struct ErrorSeries {
  std::vector<std::uint64_t> steps;
  std::vector<std::vector<double>> abs_err;
};
ErrorSeries error_to_optimum(const SimTrace& trace,
                             const solver::AllocationResult& result);

// Count of occurrences of each value of sum_i X_i(k) over the trailing
// `window` recorded rounds. Throws std::invalid_argument when window is 0
// or exceeds the trace length.
std::map<std::uint64_t, std::uint64_t> participation_histogram(
    const SimTrace& trace, std::uint64_t window);

// Mean of sum_i X_i(k) over the trailing `window` rounds; same window
// validation as participation_histogram.
double trailing_mean_participation(const SimTrace& trace,
                                   std::uint64_t window);

// Worker count for the client-step loop: FEDSELECT_THREADS caps it, 0 or
// unset means auto. Small populations fall back to a single worker.
std::size_t resolve_worker_count(std::uint64_t n_clients);

}  // namespace fedselect::sim

#endif  // FEDSELECT_SIM_HPP_

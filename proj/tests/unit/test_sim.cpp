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

#include "fedselect/sim.hpp"

#include <cmath>
#include <cstdlib>
#include <stdexcept>
#include <string>

#include <doctest.h>

#include "fedselect/solver.hpp"

namespace fedselect::sim {
namespace {

ExperimentConfig desk_config() {
  ExperimentConfig cfg;
  cfg.n_clients = 100;
  cfg.capacity = 50.0;
  cfg.steps = 2000;
  cfg.cost_family = PopulationKind::quadratic;
  cfg.cost_seed = 2;
  cfg.master_seed = 11;
  return cfg;
}

bool same_step(const StepRecord& a, const StepRecord& b) {
  auto eq = [](double x, double y) {
    return x == y || (std::isnan(x) && std::isnan(y));
  };
  return a.step == b.step && eq(a.theta, b.theta) &&
         a.sum_participating == b.sum_participating &&
         eq(a.sum_avg, b.sum_avg) && eq(a.avg_eps, b.avg_eps) &&
         a.saturated == b.saturated && eq(a.cost_gap, b.cost_gap);
}

bool same_client(const ClientRecord& a, const ClientRecord& b) {
  auto eq = [](double x, double y) {
    return x == y || (std::isnan(x) && std::isnan(y));
  };
  return eq(a.beta, b.beta) && eq(a.x_final, b.x_final) &&
         eq(a.x_star, b.x_star) && eq(a.abs_err, b.abs_err) &&
         eq(a.eps_final, b.eps_final) && eq(a.eps_mean, b.eps_mean) &&
         eq(a.eps_max, b.eps_max) &&
         a.saturated_steps == b.saturated_steps;
}

bool same_trace(const SimTrace& a, const SimTrace& b) {
  if (a.per_step.size() != b.per_step.size()) return false;
  for (std::size_t k = 0; k < a.per_step.size(); ++k) {
    if (!same_step(a.per_step[k], b.per_step[k])) return false;
  }
  if (a.per_client_final.size() != b.per_client_final.size()) return false;
  for (std::size_t i = 0; i < a.per_client_final.size(); ++i) {
    if (!same_client(a.per_client_final[i], b.per_client_final[i])) {
      return false;
    }
  }
  return true;
}

TEST_SUITE("sim") {

TEST_CASE("two identical clients share the capacity evenly") {
  ExperimentConfig cfg;
  cfg.n_clients = 2;
  cfg.capacity = 1.0;
  cfg.steps = 60000;
  cfg.cost_family = PopulationKind::quadratic;
  cfg.cost_seed = 4;
  cfg.master_seed = 3;
  // Identical specs need identical coefficients: shrink the range to a
  // near-point interval.
  cfg.coef_low = 4.0;
  cfg.coef_high = 4.0000000001;

  const SimTrace trace = run_experiment(cfg);
  for (const ClientRecord& c : trace.per_client_final) {
    REQUIRE(std::abs(c.x_final - 0.5) < 0.05);
  }
  const StepRecord& last = trace.per_step.back();
  CHECK(std::abs(last.sum_avg - 1.0) < 0.1);
}

TEST_CASE("trace layout matches the round structure") {
  ExperimentConfig cfg = desk_config();
  cfg.steps = 500;
  const SimTrace trace = run_experiment(cfg);
  REQUIRE(trace.steps() == 500);
  REQUIRE(trace.n_clients() == 100);
  // Row 0 is the initial state: everyone participates, all averages are 1.
  CHECK(trace.per_step[0].step == 0);
  CHECK(trace.per_step[0].theta == 0.5);
  CHECK(trace.per_step[0].sum_participating == 100);
  CHECK(trace.per_step[0].sum_avg == doctest::Approx(100.0).epsilon(1e-12));
  for (std::size_t k = 0; k < trace.per_step.size(); ++k) {
    REQUIRE(trace.per_step[k].step == k);
    REQUIRE(trace.per_step[k].sum_participating <= 100);
    REQUIRE(trace.per_step[k].sum_avg > 0.0);
    REQUIRE(trace.per_step[k].sum_avg <= 100.0 + 1e-9);
  }
  CHECK(trace.cost_gap_series().size() == 500);
  CHECK(trace.cost_gap_series()[0].second ==
        doctest::Approx(trace.per_step[0].cost_gap));
}

TEST_CASE("same config and seed reproduce the trace exactly") {
  ExperimentConfig cfg = desk_config();
  cfg.mode = Mode::dp;
  cfg.betas = {2.5};
  const SimTrace a = run_experiment(cfg);
  const SimTrace b = run_experiment(cfg);
  CHECK(same_trace(a, b));

  cfg.master_seed += 1;
  const SimTrace c = run_experiment(cfg);
  CHECK_FALSE(same_trace(a, c));
}

TEST_CASE("worker cap does not change results") {
  ExperimentConfig cfg;
  cfg.n_clients = 512;  // enough clients to engage the pool
  cfg.capacity = 200.0;
  cfg.steps = 400;
  cfg.mode = Mode::dp;
  cfg.betas = {1.0};
  cfg.cost_seed = 6;
  cfg.master_seed = 21;

  REQUIRE(setenv("FEDSELECT_THREADS", "1", 1) == 0);
  REQUIRE(resolve_worker_count(cfg.n_clients) == 1);
  const SimTrace serial = run_experiment(cfg);

  REQUIRE(setenv("FEDSELECT_THREADS", "4", 1) == 0);
  const SimTrace pooled = run_experiment(cfg);
  REQUIRE(unsetenv("FEDSELECT_THREADS") == 0);

  CHECK(same_trace(serial, pooled));
}

TEST_CASE("worker count resolution") {
  REQUIRE(setenv("FEDSELECT_THREADS", "0", 1) == 0);
  CHECK(resolve_worker_count(100000) >= 1);
  REQUIRE(setenv("FEDSELECT_THREADS", "3", 1) == 0);
  CHECK(resolve_worker_count(100000) <= 3);
  REQUIRE(unsetenv("FEDSELECT_THREADS") == 0);
  CHECK(resolve_worker_count(1) == 1);
  CHECK(resolve_worker_count(100) == 1);  // below one chunk of 128
}

TEST_CASE("forcing the flip probability to zero reproduces classical mode") {
  ExperimentConfig classical = desk_config();
  classical.steps = 3000;
  classical.betas = {3.5};  // inert in classical mode but echoed in records

  ExperimentConfig dp = classical;
  dp.mode = Mode::dp;
  dp.p_override = 0.0;

  const SimTrace a = run_experiment(classical);
  const SimTrace b = run_experiment(dp);
  CHECK(same_trace(a, b));
}

TEST_CASE("aggregate series are identical under any thinning") {
  ExperimentConfig cfg = desk_config();
  cfg.mode = Mode::dp;
  cfg.betas = {1.0};
  cfg.steps = 999;

  cfg.trace_thinning = 0;
  const SimTrace bare = run_experiment(cfg);
  CHECK(bare.snapshots.empty());

  cfg.trace_thinning = 7;
  const SimTrace thinned = run_experiment(cfg);
  CHECK(same_trace(bare, thinned));
  REQUIRE_FALSE(thinned.snapshots.empty());
  for (const SnapshotRecord& snap : thinned.snapshots) {
    REQUIRE((snap.step % 7 == 0 || snap.step == cfg.steps - 1));
    REQUIRE(snap.x.size() == cfg.n_clients);
    REQUIRE(snap.eps.size() == cfg.n_clients);
  }
  CHECK(thinned.snapshots.back().step == cfg.steps - 1);
  // Snapshot rows agree with the aggregate series where they overlap.
  for (const SnapshotRecord& snap : thinned.snapshots) {
    double sum = 0.0;
    for (double x : snap.x) sum += x;
    REQUIRE(sum ==
            doctest::Approx(thinned.per_step[snap.step].sum_avg)
                .epsilon(1e-12));
  }
}

TEST_CASE("theta never leaves its projection interval") {
  ExperimentConfig cfg = desk_config();
  cfg.steps = 5000;
  cfg.tau = 50.0;  // wildly unstable gain to slam both bounds
  cfg.theta_min = 0.01;
  cfg.theta_max = 2.0;
  cfg.theta0 = 1.0;
  const SimTrace trace = run_experiment(cfg);
  bool hit_low = false;
  bool hit_high = false;
  for (const StepRecord& r : trace.per_step) {
    REQUIRE(r.theta >= cfg.theta_min);
    REQUIRE(r.theta <= cfg.theta_max);
    hit_low = hit_low || r.theta == cfg.theta_min;
    hit_high = hit_high || r.theta == cfg.theta_max;
  }
  CHECK(hit_low);
  CHECK(hit_high);
}

TEST_CASE("classical capacity tracking at desk scale") {
  ExperimentConfig cfg = desk_config();
  cfg.steps = 20000;
  const SimTrace trace = run_experiment(cfg);
  const double mean = trailing_mean_participation(trace, cfg.steps / 2);
  // Binomial-scale band around the capacity.
  CHECK(std::abs(mean - 50.0) <= 3.0 * std::sqrt(50.0));
}

TEST_CASE("private mode still fills the capacity on average") {
  ExperimentConfig cfg = desk_config();
  cfg.steps = 20000;
  cfg.mode = Mode::dp;
  cfg.betas = {1.0};
  const SimTrace trace = run_experiment(cfg);
  const double final_sum = trace.per_step.back().sum_avg;
  CHECK(std::abs(final_sum - 50.0) <= 0.05 * 50.0);
}

TEST_CASE("per-client betas are honored") {
  ExperimentConfig cfg = desk_config();
  cfg.n_clients = 4;
  cfg.capacity = 2.0;
  cfg.steps = 50;
  cfg.mode = Mode::dp;
  cfg.betas = {1.0, 2.5, 3.5, 1.0};
  const SimTrace trace = run_experiment(cfg);
  REQUIRE(trace.per_client_final.size() == 4);
  CHECK(trace.per_client_final[0].beta == 1.0);
  CHECK(trace.per_client_final[1].beta == 2.5);
  CHECK(trace.per_client_final[2].beta == 3.5);
  CHECK(trace.per_client_final[3].beta == 1.0);
}

TEST_CASE("config validation rejects broken setups") {
  ExperimentConfig cfg = desk_config();
  cfg.n_clients = 0;
  CHECK_THROWS_AS(validate(cfg), std::invalid_argument);

  cfg = desk_config();
  cfg.capacity = 100.0;  // must be strictly below n_clients
  CHECK_THROWS_AS(validate(cfg), std::invalid_argument);

  cfg = desk_config();
  cfg.capacity = -1.0;
  CHECK_THROWS_AS(validate(cfg), std::invalid_argument);

  cfg = desk_config();
  cfg.steps = 0;
  CHECK_THROWS_AS(validate(cfg), std::invalid_argument);

  cfg = desk_config();
  cfg.tau = 0.0;
  CHECK_THROWS_AS(validate(cfg), std::invalid_argument);

  cfg = desk_config();
  cfg.mode = Mode::dp;
  cfg.betas = {1.0, -2.0};
  CHECK_THROWS_AS(validate(cfg), std::invalid_argument);

  cfg = desk_config();
  cfg.betas = {1.0, 2.0, 3.0};  // neither shared nor per-client
  CHECK_THROWS_AS(validate(cfg), std::invalid_argument);

  cfg = desk_config();
  cfg.theta0 = 1e-9;  // below theta_min
  CHECK_THROWS_AS(validate(cfg), std::invalid_argument);

  cfg = desk_config();
  cfg.p_override = 1.5;
  CHECK_THROWS_AS(validate(cfg), std::invalid_argument);

  cfg = desk_config();
  cfg.coef_low = 40.0;
  cfg.coef_high = 40.0;
  CHECK_THROWS_AS(validate(cfg), std::invalid_argument);
}

TEST_CASE("sweep entries match standalone runs") {
  ExperimentConfig cfg = desk_config();
  cfg.steps = 800;
  const std::vector<double> betas = {1.0, 2.5, 3.5};
  const auto runs = beta_sweep(cfg, betas);
  REQUIRE(runs.size() == 3);
  for (std::size_t j = 0; j < betas.size(); ++j) {
    REQUIRE(runs[j].first == betas[j]);
  }

  ExperimentConfig single = cfg;
  single.mode = Mode::dp;
  single.betas = {2.5};
  const SimTrace alone = run_experiment(single);
  CHECK(same_trace(runs[1].second, alone));

  // The baseline is shared across the sweep.
  for (const auto& [beta, trace] : runs) {
    REQUIRE(trace.baseline_x == runs[0].second.baseline_x);
    REQUIRE(trace.baseline_cost == runs[0].second.baseline_cost);
  }
  CHECK_THROWS_AS(beta_sweep(cfg, {}), std::invalid_argument);
  const std::vector<double> bad = {1.0, 0.0};
  CHECK_THROWS_AS(beta_sweep(cfg, bad), std::invalid_argument);
}

TEST_CASE("classical-run baseline uses the reference terminal averages") {
  ExperimentConfig cfg = desk_config();
  cfg.steps = 4000;
  cfg.mode = Mode::dp;
  cfg.betas = {3.5};
  cfg.baseline = BaselineMode::classical_run;
  const SimTrace trace = run_experiment(cfg);

  ExperimentConfig ref = cfg;
  ref.mode = Mode::classical;
  ref.baseline = BaselineMode::exact;
  const SimTrace classical = run_experiment(ref);
  REQUIRE(trace.baseline_x.size() == classical.per_client_final.size());
  for (std::size_t i = 0; i < trace.baseline_x.size(); ++i) {
    REQUIRE(trace.baseline_x[i] == classical.per_client_final[i].x_final);
  }
  CHECK(std::isnan(trace.lambda_star));
}

TEST_CASE("error series measures distance to a given allocation") {
  ExperimentConfig cfg = desk_config();
  cfg.steps = 300;
  cfg.trace_thinning = 100;
  const SimTrace trace = run_experiment(cfg);
  const solver::AllocationResult opt =
      solver::solve_optimal(build_population(cfg), cfg.capacity);
  const ErrorSeries series = error_to_optimum(trace, opt);
  REQUIRE(series.steps.size() == trace.snapshots.size());
  for (std::size_t s = 0; s < series.steps.size(); ++s) {
    for (std::size_t i = 0; i < cfg.n_clients; ++i) {
      REQUIRE(series.abs_err[s][i] ==
              std::abs(trace.snapshots[s].x[i] - opt.x_star[i]));
    }
  }

  solver::AllocationResult wrong = opt;
  wrong.x_star.pop_back();
  CHECK_THROWS_AS(error_to_optimum(trace, wrong), std::invalid_argument);
}

TEST_CASE("histogram of a constant-participation run has a single bin") {
  ExperimentConfig cfg;
  cfg.n_clients = 2;
  cfg.capacity = 1.0;
  cfg.steps = 100;
  cfg.cost_family = PopulationKind::quadratic;
  cfg.theta0 = 1000.0;  // saturates every response for the whole run
  cfg.tau = 1e-9;
  const SimTrace trace = run_experiment(cfg);
  const auto hist = participation_histogram(trace, 100);
  REQUIRE(hist.size() == 1);
  CHECK(hist.at(2) == 100);
  CHECK(trailing_mean_participation(trace, 100) == 2.0);

  CHECK_THROWS_AS(participation_histogram(trace, 0), std::invalid_argument);
  CHECK_THROWS_AS(participation_histogram(trace, 101), std::invalid_argument);
  CHECK_THROWS_AS(trailing_mean_participation(trace, 0),
                  std::invalid_argument);
}

TEST_CASE("saturated steps are counted for classical clients") {
  ExperimentConfig cfg;
  cfg.n_clients = 2;
  cfg.capacity = 1.0;
  cfg.steps = 50;
  cfg.cost_family = PopulationKind::quadratic;
  cfg.theta0 = 1000.0;
  cfg.tau = 1e-9;
  const SimTrace trace = run_experiment(cfg);
  for (const ClientRecord& c : trace.per_client_final) {
    REQUIRE(c.saturated_steps == 50);
    REQUIRE(std::isinf(c.eps_final));
  }
  for (const StepRecord& r : trace.per_step) {
    REQUIRE(r.saturated == 2);
    REQUIRE(std::isinf(r.avg_eps));
  }
}

}  // TEST_SUITE

}  // namespace
}  // namespace fedselect::sim

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

#include <algorithm>
#include <atomic>
#include <barrier>
#include <cmath>
#include <cstdlib>
#include <functional>
#include <limits>
#include <memory>
#include <stdexcept>
#include <thread>
#include <utility>

#include "fedselect/privacy.hpp"
#include "fedselect/protocol.hpp"
#include "fedselect/rng.hpp"

namespace fedselect::sim {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
// Cap on retained per-client snapshot entries (n_clients * snapshot count).
constexpr std::uint64_t kMaxSnapshotEntries = 50'000'000;

// Persistent thread team for the per-round client loop. Workers own fixed
// index chunks, so results never depend on the worker count; the pool only
// trades wall time.
class WorkerPool {
 public:
  explicit WorkerPool(std::size_t workers)
      : start_(static_cast<std::ptrdiff_t>(workers + 1)),
        done_(static_cast<std::ptrdiff_t>(workers + 1)) {
    threads_.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
      threads_.emplace_back([this, w] { loop(w); });
    }
  }

  WorkerPool(const WorkerPool&) = delete;
  WorkerPool& operator=(const WorkerPool&) = delete;

  ~WorkerPool() {
    stop_.store(true, std::memory_order_release);
    start_.arrive_and_wait();
    for (auto& t : threads_) t.join();
  }

  std::size_t size() const noexcept { return threads_.size(); }

  // Blocks until job(w) finished on every worker w.
  void run(const std::function<void(std::size_t)>& job) {
    job_ = &job;
    start_.arrive_and_wait();
    done_.arrive_and_wait();
    job_ = nullptr;
  }

 private:
  void loop(std::size_t index) {
    for (;;) {
      start_.arrive_and_wait();
      if (stop_.load(std::memory_order_acquire)) return;
      (*job_)(index);
      done_.arrive_and_wait();
    }
  }

  const std::function<void(std::size_t)>* job_ = nullptr;
  std::atomic<bool> stop_{false};
  std::barrier<> start_;
  std::barrier<> done_;
  std::vector<std::thread> threads_;
};

std::vector<double> expand_betas(const ExperimentConfig& cfg) {
  if (cfg.betas.size() == 1) {
    return std::vector<double>(cfg.n_clients, cfg.betas.front());
  }
  return cfg.betas;
}

// Engine shared by run_experiment and the classical-run baseline pass.
SimTrace run_rounds(const ExperimentConfig& cfg,
                    const std::vector<CostSpec>& specs, double tau,
                    std::vector<double> baseline_x, double baseline_cost,
                    double lambda_star) {
  const std::size_t n = cfg.n_clients;
  const bool dp = cfg.mode == Mode::dp;
  const std::vector<double> betas = expand_betas(cfg);

  protocol::ServerState server{cfg.theta0, tau, cfg.capacity, cfg.theta_min,
                               cfg.theta_max};
  std::vector<protocol::ClientState> clients;
  clients.reserve(n);
  std::vector<double> flip_ps(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    clients.push_back(protocol::make_client(
        betas[i], rng::SplitMix64(rng::stream_seed(cfg.master_seed, i))));
    if (dp) {
      flip_ps[i] = cfg.p_override ? *cfg.p_override
                                  : protocol::flip_probability(betas[i]);
    }
  }

  privacy::PrivacyLedger ledger(dp ? n : 0, cfg.trace_thinning);
  std::vector<std::uint64_t> classical_saturated(dp ? 0 : n, 0);

  std::vector<double> x_now(n, 0.0);
  std::vector<double> eps_now(n, 0.0);
  std::vector<unsigned char> sat_now(n, 0);

  const std::size_t workers = resolve_worker_count(n);
  std::unique_ptr<WorkerPool> pool;
  if (workers > 1) pool = std::make_unique<WorkerPool>(workers);

  double theta_now = server.theta;
  // Chunked client step; identical results for any worker count because
  // client i touches only slot i of the scratch arrays.
  auto step_chunk = [&](std::size_t w) {
    const std::size_t lo = n * w / workers;
    const std::size_t hi = n * (w + 1) / workers;
    for (std::size_t i = lo; i < hi; ++i) {
      if (dp) {
        auto [next, out] =
            protocol::dp_client_step(clients[i], theta_now, specs[i],
                                     flip_ps[i]);
        clients[i] = next;
        sat_now[i] = out.saturated ? 1 : 0;
        eps_now[i] = flip_ps[i] > 0.0
                         ? privacy::epsilon_step(out.sigma, flip_ps[i])
                         : kInf;
      } else {
        const protocol::ResponseProbability r =
            protocol::response_sigma(theta_now, clients[i].avg_participation,
                                     specs[i]);
        sat_now[i] = r.saturated ? 1 : 0;
        eps_now[i] = kInf;
        clients[i] = protocol::classical_client_step(clients[i], theta_now,
                                                     specs[i]);
      }
    }
  };

  SimTrace trace;
  trace.mode = cfg.mode;
  trace.tau_resolved = tau;
  trace.baseline_x = std::move(baseline_x);
  trace.baseline_cost = baseline_cost;
  trace.lambda_star = lambda_star;
  trace.per_step.reserve(cfg.steps);

  for (std::uint64_t k = 0; k < cfg.steps; ++k) {
    theta_now = server.theta;

    // Round-k aggregates from the pre-transition states, folded in client
    // order so floating-point sums are reproducible.
    std::uint64_t sum_participating = 0;
    double sum_avg = 0.0;
    double cost_now = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      x_now[i] = clients[i].avg_participation;
      sum_participating += clients[i].participating ? 1u : 0u;
      sum_avg += x_now[i];
      cost_now += specs[i].eval(x_now[i]);
    }

    if (pool) {
      pool->run(step_chunk);
    } else {
      step_chunk(0);
    }

    std::uint64_t saturated = 0;
    double finite_sum = 0.0;
    std::uint64_t finite_count = 0;
    for (std::size_t i = 0; i < n; ++i) {
      saturated += sat_now[i];
      if (std::isfinite(eps_now[i])) {
        finite_sum += eps_now[i];
        ++finite_count;
      }
      if (dp) {
        ledger.record(i, k, eps_now[i], sat_now[i] != 0);
      } else if (sat_now[i] != 0) {
        ++classical_saturated[i];
      }
    }
    const double avg_eps =
        finite_count > 0 ? finite_sum / static_cast<double>(finite_count)
                         : kInf;

    if (cfg.trace_thinning >= 1 &&
        (k % cfg.trace_thinning == 0 || k + 1 == cfg.steps)) {
      trace.snapshots.push_back({k, x_now, eps_now});
    }

    trace.per_step.push_back({k, theta_now, sum_participating, sum_avg,
                              avg_eps, saturated,
                              std::abs(cost_now - trace.baseline_cost)});
    server = protocol::server_update(server, sum_participating);
  }

  trace.per_client_final.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    ClientRecord rec;
    rec.beta = betas[i];
    rec.x_final = clients[i].avg_participation;
    rec.x_star = trace.baseline_x[i];
    rec.abs_err = std::abs(rec.x_final - rec.x_star);
    if (dp) {
      const privacy::ClientEpsilonSummary s = ledger.summary(i);
      rec.eps_final = s.final_eps;
      rec.eps_mean = s.mean_eps;
      rec.eps_max = s.max_eps;
      rec.saturated_steps = s.saturated_count;
    } else {
      rec.eps_final = kInf;
      rec.eps_mean = kInf;
      rec.eps_max = kInf;
      rec.saturated_steps = classical_saturated[i];
    }
    trace.per_client_final.push_back(rec);
  }
  return trace;
}

// Population, gain and baseline allocation implied by a config; computed
// once and reused across the runs of a sweep.
struct RunSetup {
  std::vector<CostSpec> specs;
  double tau = 0.0;
  std::vector<double> baseline_x;
  double baseline_cost = 0.0;
  double lambda_star = std::numeric_limits<double>::quiet_NaN();
};

RunSetup prepare_run(const ExperimentConfig& cfg) {
  validate(cfg);
  RunSetup setup;
  setup.specs = build_population(cfg);
  setup.tau = cfg.tau ? *cfg.tau
                      : protocol::recommend_tau(setup.specs, cfg.tau_x_floor);

  if (cfg.baseline == BaselineMode::exact) {
    solver::AllocationResult opt =
        solver::solve_optimal(setup.specs, cfg.capacity);
    setup.baseline_x = std::move(opt.x_star);
    setup.lambda_star = opt.lambda_star;
  } else {
    ExperimentConfig ref = cfg;
    ref.mode = Mode::classical;
    ref.baseline = BaselineMode::exact;
    ref.trace_thinning = 0;
    SimTrace ref_trace = run_rounds(
        ref, setup.specs, setup.tau,
        std::vector<double>(cfg.n_clients, 0.0), 0.0, setup.lambda_star);
    setup.baseline_x.reserve(cfg.n_clients);
    for (const ClientRecord& r : ref_trace.per_client_final) {
      setup.baseline_x.push_back(r.x_final);
    }
  }
  for (std::size_t i = 0; i < setup.specs.size(); ++i) {
    setup.baseline_cost += setup.specs[i].eval(setup.baseline_x[i]);
  }
  return setup;
}

}  // namespace

std::vector<std::pair<std::uint64_t, double>> SimTrace::cost_gap_series()
    const {
  std::vector<std::pair<std::uint64_t, double>> series;
  series.reserve(per_step.size());
  for (const StepRecord& r : per_step) {
    series.emplace_back(r.step, r.cost_gap);
  }
  return series;
}

void validate(const ExperimentConfig& cfg) {
  if (cfg.n_clients == 0) {
    throw std::invalid_argument("config: n_clients must be >= 1");
  }
  if (!std::isfinite(cfg.capacity) || !(cfg.capacity > 0.0) ||
      !(cfg.capacity < static_cast<double>(cfg.n_clients))) {
    throw std::invalid_argument(
        "config: capacity must satisfy 0 < capacity < n_clients");
  }
  if (cfg.steps == 0) {
    throw std::invalid_argument("config: steps must be >= 1");
  }
  if (cfg.tau && (!std::isfinite(*cfg.tau) || !(*cfg.tau > 0.0))) {
    throw std::invalid_argument("config: tau must be positive");
  }
  if (!(cfg.tau_x_floor > 0.0 && cfg.tau_x_floor <= 1.0)) {
    throw std::invalid_argument("config: tau.x_floor must lie in (0, 1]");
  }
  if (cfg.betas.empty() ||
      (cfg.betas.size() != 1 && cfg.betas.size() != cfg.n_clients)) {
    throw std::invalid_argument(
        "config: beta must be one shared value or one value per client");
  }
  if (cfg.mode == Mode::dp) {
    for (double b : cfg.betas) {
      if (!std::isfinite(b) || !(b > 0.0)) {
        throw std::invalid_argument(
            "config: every beta must be positive in dp mode");
      }
    }
  }
  if (!std::isfinite(cfg.theta_min) || !(cfg.theta_min > 0.0)) {
    throw std::invalid_argument("config: theta_min must be positive");
  }
  if (!(cfg.theta_max >= cfg.theta_min)) {
    throw std::invalid_argument("config: theta_max must be >= theta_min");
  }
  if (!(cfg.theta0 >= cfg.theta_min && cfg.theta0 <= cfg.theta_max)) {
    throw std::invalid_argument(
        "config: theta0 must lie in [theta_min, theta_max]");
  }
  if (!(cfg.coef_low >= 0.0) || !(cfg.coef_high > cfg.coef_low)) {
    throw std::invalid_argument(
        "config: need 0 <= cost.coef_low < cost.coef_high");
  }
  if (cfg.p_override &&
      (!std::isfinite(*cfg.p_override) || *cfg.p_override < 0.0 ||
       *cfg.p_override > 1.0)) {
    throw std::invalid_argument("config: dp.p_override must lie in [0, 1]");
  }
  if (cfg.trace_thinning >= 1) {
    const std::uint64_t snapshots =
        cfg.steps / cfg.trace_thinning + 2;
    if (snapshots * cfg.n_clients > kMaxSnapshotEntries) {
      throw std::invalid_argument(
          "config: trace.thinning would retain too many snapshot entries; "
          "raise the thinning factor");
    }
  }
}

std::vector<CostSpec> build_population(const ExperimentConfig& cfg) {
  return sample_population(cfg.n_clients, cfg.cost_seed, cfg.cost_family,
                           cfg.coef_low, cfg.coef_high);
}

SimTrace run_experiment(const ExperimentConfig& cfg) {
  RunSetup setup = prepare_run(cfg);
  return run_rounds(cfg, setup.specs, setup.tau, std::move(setup.baseline_x),
                    setup.baseline_cost, setup.lambda_star);
}

std::vector<std::pair<double, SimTrace>> beta_sweep(
    const ExperimentConfig& base, std::span<const double> betas) {
  if (betas.empty()) {
    throw std::invalid_argument("beta_sweep: betas must be non-empty");
  }
  for (double b : betas) {
    if (!std::isfinite(b) || !(b > 0.0)) {
      throw std::invalid_argument("beta_sweep: betas must be positive");
    }
  }
  ExperimentConfig cfg = base;
  cfg.mode = Mode::dp;
  cfg.betas = {betas.front()};
  const RunSetup setup = prepare_run(cfg);
  std::vector<std::pair<double, SimTrace>> out;
  out.reserve(betas.size());
  for (double b : betas) {
    cfg.betas = {b};
    out.emplace_back(b, run_rounds(cfg, setup.specs, setup.tau,
                                   setup.baseline_x, setup.baseline_cost,
                                   setup.lambda_star));
  }
  return out;
}

ErrorSeries error_to_optimum(const SimTrace& trace,
                             const solver::AllocationResult& result) {
  if (result.x_star.size() != trace.n_clients()) {
    throw std::invalid_argument(
        "error_to_optimum: allocation size does not match the trace");
  }
  ErrorSeries series;
  series.steps.reserve(trace.snapshots.size());
  series.abs_err.reserve(trace.snapshots.size());
  for (const SnapshotRecord& snap : trace.snapshots) {
    series.steps.push_back(snap.step);
    std::vector<double> row(snap.x.size(), 0.0);
    for (std::size_t i = 0; i < snap.x.size(); ++i) {
      row[i] = std::abs(snap.x[i] - result.x_star[i]);
    }
    series.abs_err.push_back(std::move(row));
  }
  return series;
}

std::map<std::uint64_t, std::uint64_t> participation_histogram(
    const SimTrace& trace, std::uint64_t window) {
  if (window == 0 || window > trace.per_step.size()) {
    throw std::invalid_argument(
        "participation_histogram: window must lie in [1, steps]");
  }
  std::map<std::uint64_t, std::uint64_t> hist;
  for (std::size_t k = trace.per_step.size() - window;
       k < trace.per_step.size(); ++k) {
    hist[trace.per_step[k].sum_participating] += 1;
  }
  return hist;
}

double trailing_mean_participation(const SimTrace& trace,
                                   std::uint64_t window) {
  if (window == 0 || window > trace.per_step.size()) {
    throw std::invalid_argument(
        "trailing_mean_participation: window must lie in [1, steps]");
  }
  double sum = 0.0;
  for (std::size_t k = trace.per_step.size() - window;
       k < trace.per_step.size(); ++k) {
    sum += static_cast<double>(trace.per_step[k].sum_participating);
  }
  return sum / static_cast<double>(window);
}

std::size_t resolve_worker_count(std::uint64_t n_clients) {
  std::size_t limit = 0;
  if (const char* env = std::getenv("FEDSELECT_THREADS")) {
    char* end = nullptr;
    const unsigned long long v = std::strtoull(env, &end, 10);
    if (end != env && *end == '\0') {
      limit = static_cast<std::size_t>(v);
    }
  }
  std::size_t hw = std::thread::hardware_concurrency();
  if (hw == 0) hw = 1;
  std::size_t workers = limit > 0 ? std::min(limit, hw) : hw;
  // One worker per 128 clients; tiny populations run inline.
  const std::size_t by_size =
      static_cast<std::size_t>(std::max<std::uint64_t>(n_clients / 128, 1));
  workers = std::min({workers, by_size, static_cast<std::size_t>(16)});
  return std::max<std::size_t>(workers, 1);
}

}  // namespace fedselect::sim

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

#include "fedselect/cli.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <stdexcept>
#include <system_error>

#include <CLI11.hpp>

#include "fedselect/config.hpp"
#include "fedselect/csv.hpp"
#include "fedselect/manifest.hpp"
#include "fedselect/privacy.hpp"
#include "fedselect/protocol.hpp"
#include "fedselect/sim.hpp"
#include "fedselect/solver.hpp"

namespace fs = std::filesystem;

namespace fedselect::cli {
namespace {

// Exclusive marker preventing two invocations from sharing an output
// directory. Removed on destruction; a stale file after a crash must be
// deleted by hand.
class DirLock {
 public:
  explicit DirLock(const std::string& dir)
      : path_(dir + "/.fedselect.lock") {
    fd_ = ::open(path_.c_str(), O_CREAT | O_EXCL | O_WRONLY, 0644);
    if (fd_ < 0) {
      throw std::runtime_error(
          "output directory '" + dir + "' is already locked by '" + path_ +
          "'; finish or clean up the other run first");
    }
    ::dprintf(fd_, "%d\n", static_cast<int>(::getpid()));
  }

  DirLock(const DirLock&) = delete;
  DirLock& operator=(const DirLock&) = delete;

  ~DirLock() {
    if (fd_ >= 0) {
      ::close(fd_);
      ::unlink(path_.c_str());
    }
  }

 private:
  std::string path_;
  int fd_ = -1;
};

fs::path executable_dir() {
  std::error_code ec;
  const fs::path exe = fs::read_symlink("/proc/self/exe", ec);
  if (ec) return {};
  return exe.parent_path();
}

std::string resolve_preset(const std::string& name) {
  std::vector<fs::path> candidates;
  if (name.find('/') != std::string::npos) {
    candidates.emplace_back(name);
  }
  const std::string file = name + ".cfg";
  if (const char* env = std::getenv("FEDSELECT_PRESET_DIR")) {
    candidates.push_back(fs::path(env) / file);
  }
  const fs::path exe_dir = executable_dir();
  if (!exe_dir.empty()) {
    candidates.push_back(exe_dir / "presets" / file);
    candidates.push_back(exe_dir / ".." / "presets" / file);
    candidates.push_back(exe_dir / ".." / ".." / "presets" / file);
  }
  candidates.push_back(fs::path("presets") / file);

  for (const fs::path& p : candidates) {
    std::error_code ec;
    if (fs::is_regular_file(p, ec)) return p.string();
  }
  std::string searched;
  for (const fs::path& p : candidates) {
    searched += "\n  " + p.string();
  }
  throw config::ConfigError("preset '" + name + "' not found; searched:" +
                            searched);
}

config::RunSpec load_spec(const CommonOptions& opts) {
  if (opts.preset.empty() && opts.config_path.empty()) {
    throw config::ConfigError("provide --config FILE or --preset NAME");
  }
  config::KvMap kv;
  if (!opts.preset.empty()) {
    kv = config::parse_file(resolve_preset(opts.preset));
  }
  if (!opts.config_path.empty()) {
    for (const auto& [key, value] :
         config::parse_file(opts.config_path)) {
      kv[key] = value;
    }
  }
  config::apply_overrides(kv, opts.overrides);
  if (opts.seed) {
    kv["master_seed"] = std::to_string(*opts.seed);
  }
  return config::to_run_spec(kv);
}

void write_run_outputs(const std::string& dir, const sim::SimTrace& trace,
                       std::vector<std::string>& rel_paths,
                       const std::string& prefix = "") {
  csv::write_trace(dir + "/trace.csv", trace);
  rel_paths.push_back(prefix + "trace.csv");
  csv::write_clients(dir + "/clients.csv", trace);
  rel_paths.push_back(prefix + "clients.csv");
  if (!trace.snapshots.empty()) {
    csv::write_snapshots(dir + "/snapshots.csv", trace);
    rel_paths.push_back(prefix + "snapshots.csv");
  }
}

void finish_manifest(const std::string& out_dir, manifest::RunManifest& m,
                     const std::vector<std::string>& rel_paths) {
  m.finished_utc = manifest::timestamp_utc();
  for (const std::string& rel : rel_paths) {
    m.outputs.push_back(manifest::describe_output(out_dir, rel));
  }
  manifest::write(out_dir, m);
}

std::string beta_label(double beta) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%g", beta);
  return std::string("beta-") + buf;
}

int dispatch(const std::function<int()>& body) {
  try {
    return body();
  } catch (const config::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfigError;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfigError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRuntimeError;
  }
}

}  // namespace

int cmd_run(const CommonOptions& opts) {
  return dispatch([&]() -> int {
    const config::RunSpec spec = load_spec(opts);
    fs::create_directories(opts.out_dir);
    DirLock lock(opts.out_dir);

    manifest::RunManifest m;
    m.command = "run";
    m.master_seed = spec.experiment.master_seed;
    m.config_echo = spec.effective;
    m.started_utc = manifest::timestamp_utc();

    const sim::SimTrace trace = sim::run_experiment(spec.experiment);

    std::vector<std::string> rel_paths;
    write_run_outputs(opts.out_dir, trace, rel_paths);
    m.resolved["tau"] = csv::format_double(trace.tau_resolved);
    if (!std::isnan(trace.lambda_star)) {
      m.resolved["lambda_star"] = csv::format_double(trace.lambda_star);
    }
    finish_manifest(opts.out_dir, m, rel_paths);

    std::cout << "run complete: clients=" << trace.n_clients()
              << " steps=" << trace.steps()
              << " tau=" << csv::format_double(trace.tau_resolved) << '\n';
    for (const std::string& rel : rel_paths) {
      std::cout << "wrote " << opts.out_dir << '/' << rel << '\n';
    }
    std::cout << "wrote " << opts.out_dir << "/manifest.json" << '\n';
    return kExitOk;
  });
}

int cmd_solve(const CommonOptions& opts) {
  return dispatch([&]() -> int {
    const config::RunSpec spec = load_spec(opts);
    const std::vector<CostSpec> specs =
        sim::build_population(spec.experiment);
    const solver::AllocationResult result =
        solver::solve_optimal(specs, spec.experiment.capacity);

    fs::create_directories(opts.out_dir);
    DirLock lock(opts.out_dir);

    manifest::RunManifest m;
    m.command = "solve";
    m.master_seed = spec.experiment.master_seed;
    m.config_echo = spec.effective;
    m.started_utc = manifest::timestamp_utc();

    csv::write_optimum(opts.out_dir + "/optimum.csv", specs, result);
    m.resolved["lambda_star"] = csv::format_double(result.lambda_star);
    m.resolved["residual"] = csv::format_double(result.residual);
    finish_manifest(opts.out_dir, m, {"optimum.csv"});

    std::cout << "solve complete: clients=" << specs.size()
              << " lambda_star=" << csv::format_double(result.lambda_star)
              << " residual=" << csv::format_double(result.residual) << '\n';
    std::cout << "wrote " << opts.out_dir << "/optimum.csv" << '\n';
    std::cout << "wrote " << opts.out_dir << "/manifest.json" << '\n';
    return kExitOk;
  });
}

int cmd_sweep(const CommonOptions& opts) {
  return dispatch([&]() -> int {
    const config::RunSpec spec = load_spec(opts);
    fs::create_directories(opts.out_dir);
    DirLock lock(opts.out_dir);

    manifest::RunManifest m;
    m.command = "sweep";
    m.master_seed = spec.experiment.master_seed;
    m.config_echo = spec.effective;
    m.started_utc = manifest::timestamp_utc();

    std::vector<std::string> rel_paths;
    auto emit = [&](const std::string& label, const sim::SimTrace& trace) {
      const std::string dir = opts.out_dir + "/" + label;
      fs::create_directories(dir);
      write_run_outputs(dir, trace, rel_paths, label + "/");
      std::cout << label << ": terminal cost_gap="
                << csv::format_double(trace.per_step.back().cost_gap)
                << '\n';
    };

    if (spec.sweep_include_classical) {
      sim::ExperimentConfig classical = spec.experiment;
      classical.mode = sim::Mode::classical;
      emit("classical", sim::run_experiment(classical));
    }
    const auto runs = sim::beta_sweep(spec.experiment, spec.sweep_betas);
    double tau_resolved = 0.0;
    for (const auto& [beta, trace] : runs) {
      emit(beta_label(beta), trace);
      tau_resolved = trace.tau_resolved;
    }
    m.resolved["tau"] = csv::format_double(tau_resolved);
    finish_manifest(opts.out_dir, m, rel_paths);
    std::cout << "wrote " << opts.out_dir << "/manifest.json" << '\n';
    return kExitOk;
  });
}

int cmd_check_dp(const CheckDpOptions& opts) {
  if (!(opts.sigma >= 0.0 && opts.sigma < 1.0)) {
    std::cerr << "config error: --sigma must lie in [0, 1)\n";
    return kExitConfigError;
  }
  if (!(opts.beta > 0.0) || !std::isfinite(opts.beta)) {
    std::cerr << "config error: --beta must be positive\n";
    return kExitConfigError;
  }
  if (opts.trials < 10000) {
    std::cerr << "config error: --trials must be >= 10000\n";
    return kExitConfigError;
  }
  try {
    const double p = protocol::flip_probability(opts.beta);
    const double closed = opts.sigma == 0.0
                              ? 0.0
                              : privacy::epsilon_step(opts.sigma, p);
    const privacy::EmpiricalEpsilon emp =
        privacy::empirical_epsilon(opts.sigma, p, opts.trials, opts.seed);
    const double diff = std::abs(emp.eps_hat - closed);
    const double z = diff == 0.0 ? 0.0 : diff / emp.std_err;
    const bool pass = diff <= 3.0 * emp.std_err;
    std::cout << "flip_p=" << csv::format_double(p) << '\n'
              << "closed_form_eps=" << csv::format_double(closed) << '\n'
              << "empirical_eps=" << csv::format_double(emp.eps_hat) << '\n'
              << "std_err=" << csv::format_double(emp.std_err) << '\n'
              << "z_score=" << csv::format_double(z) << '\n'
              << "verdict=" << (pass ? "PASS" : "FAIL") << '\n';
    return pass ? kExitOk : kExitCheckFailed;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRuntimeError;
  }
}

int cmd_validate_tau(const CommonOptions& opts,
                     std::optional<double> x_floor_flag) {
  return dispatch([&]() -> int {
    const config::RunSpec spec = load_spec(opts);
    const double x_floor =
        x_floor_flag ? *x_floor_flag : spec.experiment.tau_x_floor;
    const std::vector<CostSpec> specs =
        sim::build_population(spec.experiment);
    const double recommended = protocol::recommend_tau(specs, x_floor);

    std::cout << "recommended_tau=" << csv::format_double(recommended)
              << '\n';
    if (spec.experiment.tau) {
      const double configured = *spec.experiment.tau;
      std::cout << "configured_tau=" << csv::format_double(configured) << '\n'
                << "within_recommendation="
                << (configured <= recommended ? "yes" : "no") << '\n';
    } else {
      std::cout << "configured_tau=auto\n"
                << "within_recommendation=yes\n";
    }
    return kExitOk;
  });
}

int run_main(int argc, const char* const* argv) {
  CLI::App app{
      "fedselect: price-driven client selection with randomized-response "
      "privacy"};
  app.require_subcommand(1);

  CommonOptions run_opts;
  CommonOptions solve_opts;
  CommonOptions sweep_opts;
  CommonOptions tau_opts;
  CheckDpOptions dp_opts;
  std::optional<double> x_floor_flag;

  auto add_common = [](CLI::App* sub, CommonOptions& o) {
    sub->add_option("--config", o.config_path, "key = value config file");
    sub->add_option("--preset", o.preset, "named config shipped with the "
                                          "tool (e.g. desk-fig1)");
    sub->add_option("--set", o.overrides,
                    "override a config key, repeatable (key=value)");
    sub->add_option("--out", o.out_dir, "output directory")
        ->capture_default_str();
    sub->add_option("--seed", o.seed, "override master_seed");
  };

  CLI::App* run = app.add_subcommand(
      "run", "simulate one experiment and write trace/clients CSVs");
  add_common(run, run_opts);

  CLI::App* solve = app.add_subcommand(
      "solve", "write the exact allocation for the configured population");
  add_common(solve, solve_opts);

  CLI::App* sweep = app.add_subcommand(
      "sweep", "run the configured beta sweep plus an optional classical "
               "reference");
  add_common(sweep, sweep_opts);

  CLI::App* check = app.add_subcommand(
      "check-dp", "compare the closed-form per-step budget against a "
                  "Monte-Carlo estimate");
  check->add_option("--sigma", dp_opts.sigma, "response probability in [0,1)")
      ->required();
  check->add_option("--beta", dp_opts.beta, "privacy parameter (> 0)")
      ->required();
  check->add_option("--trials", dp_opts.trials, "Monte-Carlo trials")
      ->capture_default_str();
  check->add_option("--seed", dp_opts.seed, "Monte-Carlo seed")
      ->capture_default_str();

  CLI::App* vtau = app.add_subcommand(
      "validate-tau", "report the stable-gain recommendation for the "
                      "configured population");
  add_common(vtau, tau_opts);
  vtau->add_option("--x-floor", x_floor_flag,
                   "lower end of the gain-bound evaluation interval");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfigError;
  }

  if (run->parsed()) return cmd_run(run_opts);
  if (solve->parsed()) return cmd_solve(solve_opts);
  if (sweep->parsed()) return cmd_sweep(sweep_opts);
  if (check->parsed()) return cmd_check_dp(dp_opts);
  if (vtau->parsed()) return cmd_validate_tau(tau_opts, x_floor_flag);
  return kExitConfigError;
}

}  // namespace fedselect::cli

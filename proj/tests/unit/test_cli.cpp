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

// End-to-end tests that spawn the installed binary and inspect its files,
// stdout and exit codes.

#include <sys/wait.h>

#include <array>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>
#include <string>

#include <doctest.h>
#include <json.hpp>

#include "fedselect/manifest.hpp"
#include "fedselect/sim.hpp"
#include "fedselect/solver.hpp"

#ifndef FEDSELECT_CLI_PATH
#error "FEDSELECT_CLI_PATH must point at the fedselect binary"
#endif

namespace {

namespace fs = std::filesystem;

struct TempDir {
  TempDir() {
    std::string tmpl =
        (fs::temp_directory_path() / "fedselect-cli-XXXXXX").string();
    REQUIRE(mkdtemp(tmpl.data()) != nullptr);
    path = tmpl;
  }
  ~TempDir() { fs::remove_all(path); }
  std::string file(const std::string& name) const {
    return (fs::path(path) / name).string();
  }
  std::string path;
};

struct CliResult {
  int exit_code = -1;
  std::string out;  // stdout and stderr interleaved
};

CliResult run_cli(const std::string& args) {
  const std::string cmd =
      std::string(FEDSELECT_CLI_PATH) + " " + args + " 2>&1";
  CliResult res;
  FILE* pipe = ::popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  std::array<char, 4096> buf;
  std::size_t got = 0;
  while ((got = std::fread(buf.data(), 1, buf.size(), pipe)) > 0) {
    res.out.append(buf.data(), got);
  }
  const int status = ::pclose(pipe);
  REQUIRE(status != -1);
  res.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return res;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  return {std::istreambuf_iterator<char>(in),
          std::istreambuf_iterator<char>()};
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  REQUIRE(out.good());
  out << text;
}

std::size_t count_lines(const std::string& text) {
  std::size_t n = 0;
  for (char c : text) n += c == '\n';
  return n;
}

const std::string kSmallConfig =
    "n_clients = 12\n"
    "capacity = 5\n"
    "steps = 20\n"
    "mode = dp\n"
    "beta = 1.5\n"
    "master_seed = 5\n"
    "cost_seed = 9\n";

TEST_SUITE("cli") {

TEST_CASE("run writes the expected files and summary") {
  TempDir dir;
  write_file(dir.file("exp.cfg"), kSmallConfig);
  const std::string out = dir.file("out");
  const CliResult res =
      run_cli("run --config " + dir.file("exp.cfg") + " --out " + out);
  CHECK(res.exit_code == 0);
  CHECK(res.out.find("run complete: clients=12 steps=20") !=
        std::string::npos);
  CHECK(fs::exists(out + "/trace.csv"));
  CHECK(fs::exists(out + "/clients.csv"));
  CHECK(fs::exists(out + "/manifest.json"));
  CHECK_FALSE(fs::exists(out + "/snapshots.csv"));  // thinning disabled
  CHECK_FALSE(fs::exists(out + "/.fedselect.lock"));  // released on exit
}

TEST_CASE("one step produces one trace row") {
  TempDir dir;
  write_file(dir.file("exp.cfg"), kSmallConfig);
  const CliResult res = run_cli("run --config " + dir.file("exp.cfg") +
                                " --set steps=1 --out " + dir.file("out"));
  REQUIRE(res.exit_code == 0);
  const std::string trace = slurp(dir.file("out") + "/trace.csv");
  CHECK(count_lines(trace) == 2);  // header + one data row
}

TEST_CASE("reruns with the same seed are byte-identical") {
  TempDir dir;
  write_file(dir.file("exp.cfg"), kSmallConfig);
  REQUIRE(run_cli("run --config " + dir.file("exp.cfg") + " --out " +
                  dir.file("a"))
              .exit_code == 0);
  REQUIRE(run_cli("run --config " + dir.file("exp.cfg") + " --out " +
                  dir.file("b"))
              .exit_code == 0);
  CHECK(slurp(dir.file("a") + "/trace.csv") ==
        slurp(dir.file("b") + "/trace.csv"));
  CHECK(slurp(dir.file("a") + "/clients.csv") ==
        slurp(dir.file("b") + "/clients.csv"));

  REQUIRE(run_cli("run --config " + dir.file("exp.cfg") +
                  " --seed 99 --out " + dir.file("c"))
              .exit_code == 0);
  CHECK(slurp(dir.file("a") + "/trace.csv") !=
        slurp(dir.file("c") + "/trace.csv"));
}

TEST_CASE("configuration problems exit with code 2") {
  TempDir dir;
  write_file(dir.file("exp.cfg"), kSmallConfig);

  CliResult res = run_cli("run --config /nonexistent.cfg");
  CHECK(res.exit_code == 2);
  CHECK(res.out.find("config error:") != std::string::npos);

  res = run_cli("run --config " + dir.file("exp.cfg") +
                " --set bogus_key=1 --out " + dir.file("o1"));
  CHECK(res.exit_code == 2);
  CHECK(res.out.find("bogus_key") != std::string::npos);

  write_file(dir.file("bad.cfg"), "n_clients = 4\ncapacity = 9\n");
  res = run_cli("solve --config " + dir.file("bad.cfg") + " --out " +
                dir.file("o2"));
  CHECK(res.exit_code == 2);

  res = run_cli("run --config " + dir.file("exp.cfg") + " --no-such-flag");
  CHECK(res.exit_code == 2);

  res = run_cli("run");  // neither --config nor --preset
  CHECK(res.exit_code == 2);

  res = run_cli("");  // missing subcommand
  CHECK(res.exit_code == 2);

  CHECK(run_cli("--help").exit_code == 0);
  CHECK(run_cli("run --help").exit_code == 0);
}

TEST_CASE("an existing lock file aborts the run") {
  TempDir dir;
  write_file(dir.file("exp.cfg"), kSmallConfig);
  fs::create_directories(dir.file("busy"));
  write_file(dir.file("busy") + "/.fedselect.lock", "12345\n");
  const CliResult res = run_cli("run --config " + dir.file("exp.cfg") +
                                " --out " + dir.file("busy"));
  CHECK(res.exit_code == 3);
  CHECK(res.out.find("error:") != std::string::npos);
}

TEST_CASE("solve matches the in-process optimizer") {
  TempDir dir;
  write_file(dir.file("solve.cfg"),
             "n_clients = 9\ncapacity = 4\ncost_seed = 13\n");
  const CliResult res = run_cli("solve --config " + dir.file("solve.cfg") +
                                " --out " + dir.file("out"));
  REQUIRE(res.exit_code == 0);
  CHECK(res.out.find("solve complete: clients=9") != std::string::npos);

  fedselect::sim::ExperimentConfig cfg;
  cfg.n_clients = 9;
  cfg.capacity = 4.0;
  cfg.steps = 1;
  cfg.cost_seed = 13;
  const auto specs = fedselect::sim::build_population(cfg);
  const auto opt = fedselect::solver::solve_optimal(specs, cfg.capacity);

  std::ifstream in(dir.file("out") + "/optimum.csv");
  std::string line;
  REQUIRE(std::getline(in, line));  // header
  std::size_t i = 0;
  while (std::getline(in, line)) {
    const auto c1 = line.find(',');
    const auto c2 = line.find(',', c1 + 1);
    REQUIRE(c1 != std::string::npos);
    REQUIRE(c2 != std::string::npos);
    REQUIRE(i < opt.x_star.size());
    CHECK(std::stoull(line.substr(0, c1)) == i);
    CHECK(std::stod(line.substr(c1 + 1, c2 - c1 - 1)) == opt.x_star[i]);
    ++i;
  }
  CHECK(i == opt.x_star.size());
}

TEST_CASE("manifest describes every written file") {
  TempDir dir;
  write_file(dir.file("exp.cfg"), kSmallConfig);
  const std::string out = dir.file("out");
  REQUIRE(run_cli("run --config " + dir.file("exp.cfg") +
                  " --set trace.thinning=5 --set steps=23 --out " + out)
              .exit_code == 0);

  const nlohmann::json m = nlohmann::json::parse(slurp(out +
                                                       "/manifest.json"));
  CHECK(m.at("version").get<std::string>() == "fedselect 0.1.0");
  CHECK(m.at("command").get<std::string>() == "run");
  CHECK(m.at("master_seed").get<std::uint64_t>() == 5);
  CHECK(m.at("config").at("steps").get<std::string>() == "23");
  CHECK(m.at("resolved").contains("tau"));
  CHECK(m.at("resolved").contains("lambda_star"));

  const std::string started = m.at("started_utc").get<std::string>();
  const std::string finished = m.at("finished_utc").get<std::string>();
  REQUIRE(started.size() == 20);
  CHECK(started.back() == 'Z');
  CHECK(finished.size() == 20);

  std::set<std::string> listed;
  for (const auto& entry : m.at("outputs")) {
    const std::string rel = entry.at("path").get<std::string>();
    listed.insert(rel);
    const std::string full = out + "/" + rel;
    REQUIRE(fs::exists(full));
    CHECK(entry.at("bytes").get<std::uint64_t>() == fs::file_size(full));
    CHECK(entry.at("crc32").get<std::string>() ==
          fedselect::manifest::file_crc32(full));
  }
  const std::set<std::string> expected = {"trace.csv", "clients.csv",
                                          "snapshots.csv"};
  CHECK(listed == expected);
}

TEST_CASE("check-dp agrees with the closed form") {
  CliResult res = run_cli("check-dp --sigma 0.125 --beta 1 --trials 100000");
  CHECK(res.exit_code == 0);
  CHECK(res.out.find("flip_p=0.18393972058572117") != std::string::npos);
  CHECK(res.out.find("verdict=PASS") != std::string::npos);

  // Degenerate opt-in rate: both estimates are exactly zero.
  res = run_cli("check-dp --sigma 0 --beta 1 --trials 10000");
  CHECK(res.exit_code == 0);
  CHECK(res.out.find("closed_form_eps=0\n") != std::string::npos);
  CHECK(res.out.find("empirical_eps=0\n") != std::string::npos);
  CHECK(res.out.find("verdict=PASS") != std::string::npos);

  CHECK(run_cli("check-dp --sigma 1.0 --beta 1 --trials 10000").exit_code ==
        2);
  CHECK(run_cli("check-dp --sigma 0.5 --beta 0 --trials 10000").exit_code ==
        2);
  CHECK(run_cli("check-dp --sigma 0.5 --beta 1 --trials 100").exit_code == 2);
  CHECK(run_cli("check-dp --beta 1").exit_code == 2);  // --sigma required
}

TEST_CASE("validate-tau reports the stability recommendation") {
  TempDir dir;
  write_file(dir.file("quad.cfg"),
             "n_clients = 1\n"
             "capacity = 0.5\n"
             "cost.family = quadratic\n"
             "cost.coef_low = 0.5\n"
             "cost.coef_high = 0.50000000001\n"
             "tau = 0.5\n");
  CliResult res = run_cli("validate-tau --config " + dir.file("quad.cfg"));
  CHECK(res.exit_code == 0);
  CHECK(res.out.find("recommended_tau=0.9") != std::string::npos);
  CHECK(res.out.find("configured_tau=0.5") != std::string::npos);
  CHECK(res.out.find("within_recommendation=yes") != std::string::npos);

  res = run_cli("validate-tau --config " + dir.file("quad.cfg") +
                " --set tau=2");
  CHECK(res.exit_code == 0);
  CHECK(res.out.find("within_recommendation=no") != std::string::npos);

  res = run_cli("validate-tau --config " + dir.file("quad.cfg") +
                " --set tau=auto --x-floor 1.0");
  CHECK(res.exit_code == 0);
  CHECK(res.out.find("configured_tau=auto") != std::string::npos);
  CHECK(res.out.find("within_recommendation=yes") != std::string::npos);
}

TEST_CASE("presets resolve from the staged directory and the environment") {
  // Staged next to the binary by the build; population-only command keeps
  // this fast.
  CliResult res = run_cli("validate-tau --preset desk-fig1");
  CHECK(res.exit_code == 0);
  CHECK(res.out.find("recommended_tau=") != std::string::npos);

  res = run_cli("validate-tau --preset no-such-preset");
  CHECK(res.exit_code == 2);
  CHECK(res.out.find("no-such-preset") != std::string::npos);

  TempDir dir;
  write_file(dir.file("tiny.cfg"), kSmallConfig);
  REQUIRE(setenv("FEDSELECT_PRESET_DIR", dir.path.c_str(), 1) == 0);
  res = run_cli("run --preset tiny --out " + dir.file("out"));
  REQUIRE(unsetenv("FEDSELECT_PRESET_DIR") == 0);
  CHECK(res.exit_code == 0);
  CHECK(fs::exists(dir.file("out") + "/trace.csv"));
}

TEST_CASE("sweep lays out one directory per arm") {
  TempDir dir;
  write_file(dir.file("sweep.cfg"),
             kSmallConfig +
                 "sweep.betas = 1, 2.5\n"
                 "sweep.include_classical = true\n");
  const std::string out = dir.file("out");
  const CliResult res =
      run_cli("sweep --config " + dir.file("sweep.cfg") + " --out " + out);
  REQUIRE(res.exit_code == 0);
  CHECK(res.out.find("classical: terminal cost_gap=") != std::string::npos);
  CHECK(res.out.find("beta-1: terminal cost_gap=") != std::string::npos);
  CHECK(res.out.find("beta-2.5: terminal cost_gap=") != std::string::npos);

  for (const std::string arm : {"classical", "beta-1", "beta-2.5"}) {
    CHECK(fs::exists(out + "/" + arm + "/trace.csv"));
    CHECK(fs::exists(out + "/" + arm + "/clients.csv"));
  }
  REQUIRE(fs::exists(out + "/manifest.json"));
  const nlohmann::json m = nlohmann::json::parse(slurp(out +
                                                       "/manifest.json"));
  CHECK(m.at("command").get<std::string>() == "sweep");
  std::set<std::string> listed;
  for (const auto& entry : m.at("outputs")) {
    listed.insert(entry.at("path").get<std::string>());
  }
  CHECK(listed.count("classical/trace.csv") == 1);
  CHECK(listed.count("beta-1/trace.csv") == 1);
  CHECK(listed.count("beta-2.5/clients.csv") == 1);

  // Disabling the classical arm drops its directory.
  write_file(dir.file("dponly.cfg"),
             kSmallConfig + "sweep.betas = 2.5\n"
                            "sweep.include_classical = false\n");
  const std::string out2 = dir.file("out2");
  REQUIRE(run_cli("sweep --config " + dir.file("dponly.cfg") + " --out " +
                  out2)
              .exit_code == 0);
  CHECK_FALSE(fs::exists(out2 + "/classical"));
  CHECK(fs::exists(out2 + "/beta-2.5/trace.csv"));
}

}  // TEST_SUITE

}  // namespace

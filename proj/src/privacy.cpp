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

#include "fedselect/privacy.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "fedselect/rng.hpp"

namespace fedselect::privacy {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void check_entry(double e, const char* what) {
  if (std::isnan(e) || e < 0.0) {
    throw std::invalid_argument(std::string(what) +
                                ": budgets must be non-negative");
  }
}

}  // namespace

double epsilon_step(double sigma, double p) {
  if (std::isnan(sigma) || sigma < 0.0) {
    throw std::domain_error("epsilon_step: sigma must be >= 0");
  }
  if (std::isnan(p) || p <= 0.0 || p > 1.0) {
    throw std::domain_error("epsilon_step: p must lie in (0, 1]");
  }
  if (sigma >= 1.0) return kInf;
  return std::log1p(sigma / ((1.0 - sigma) * p));
}

double epsilon_closed_form(double theta, double x, double f_prime,
                           double beta) {
  if (std::isnan(theta) || theta < 0.0) {
    throw std::domain_error("epsilon_closed_form: theta must be >= 0");
  }
  if (!(x > 0.0 && x <= 1.0)) {
    throw std::domain_error("epsilon_closed_form: x must lie in (0, 1]");
  }
  if (!(f_prime > 0.0)) {
    throw std::domain_error("epsilon_closed_form: f_prime must be > 0");
  }
  if (!(beta > 0.0)) {
    throw std::domain_error("epsilon_closed_form: beta must be > 0");
  }
  const double tx = theta * x;
  if (f_prime <= tx) return kInf;
  const double numerator = tx * (2.0 * std::exp(beta) - beta) + beta * f_prime;
  const double denominator = (f_prime - tx) * beta;
  return std::log(numerator / denominator);
}

double compose_sequential(std::span<const double> eps) {
  double total = 0.0;
  for (double e : eps) {
    check_entry(e, "compose_sequential");
    total += e;
  }
  return total;
}

double network_average_epsilon(std::span<const double> eps) {
  if (eps.empty()) {
    throw std::invalid_argument("network_average_epsilon: empty input");
  }
  double total = 0.0;
  for (double e : eps) {
    check_entry(e, "network_average_epsilon");
    total += e;
  }
  return total / static_cast<double>(eps.size());
}

EmpiricalEpsilon empirical_epsilon(double sigma, double p,
                                   std::uint64_t trials, std::uint64_t seed) {
  if (!(sigma >= 0.0 && sigma < 1.0)) {
    throw std::invalid_argument("empirical_epsilon: sigma must lie in [0, 1)");
  }
  if (!(p > 0.0 && p < 1.0)) {
    throw std::invalid_argument("empirical_epsilon: p must lie in (0, 1)");
  }
  if (trials < 10000) {
    throw std::invalid_argument("empirical_epsilon: trials must be >= 10000");
  }
  rng::SplitMix64 gen(rng::mix64(seed));
  std::uint64_t a_count = 0;  // X = 1
  std::uint64_t b_count = 0;  // X = 1 and intent = 0
  for (std::uint64_t t = 0; t < trials; ++t) {
    const bool intent = gen.bernoulli(sigma);
    bool report = intent;
    if (!intent) report = gen.bernoulli(p);
    if (report) {
      ++a_count;
      if (!intent) ++b_count;
    }
  }
  if (b_count == 0) {
    throw std::runtime_error(
        "empirical_epsilon: event {X=1, intent=0} never observed; "
        "increase trials");
  }
  const double n = static_cast<double>(trials);
  const double a_hat = static_cast<double>(a_count) / n;
  const double b_hat = static_cast<double>(b_count) / n;
  EmpiricalEpsilon result;
  result.eps_hat = std::log(a_hat / b_hat);
  // Delta method for ln(A_hat) - ln(B_hat) with Cov(A_hat, B_hat) = B(1-A)/n
  // (the B event implies the A event).
  const double var =
      ((1.0 - b_hat) / b_hat - (1.0 - a_hat) / a_hat) / n;
  result.std_err = std::sqrt(std::max(var, 0.0));
  result.trials = trials;
  result.report_one = a_count;
  result.report_one_intent_zero = b_count;
  return result;
}

PrivacyLedger::PrivacyLedger(std::size_t n_clients,
                             std::uint64_t series_thinning)
    : clients_(n_clients), thinning_(series_thinning) {}

void PrivacyLedger::record(std::size_t client, std::uint64_t step, double eps,
                           bool saturated) {
  if (client >= clients_.size()) {
    throw std::out_of_range("PrivacyLedger::record: client index");
  }
  check_entry(eps, "PrivacyLedger::record");
  PerClient& c = clients_[client];
  if (c.has_step && step <= c.last_step) {
    throw std::invalid_argument(
        "PrivacyLedger::record: steps must strictly increase per client");
  }
  c.has_step = true;
  c.last_step = step;
  c.last = eps;
  c.total += 1;
  c.max_eps = std::max(c.max_eps, eps);
  if (std::isfinite(eps)) {
    c.sum_finite += eps;
    c.finite += 1;
  }
  if (saturated) c.saturated.push_back(step);
  if (thinning_ >= 1 && step % thinning_ == 0) {
    c.series.push_back({step, eps});
  }
}

const PrivacyLedger::PerClient& PrivacyLedger::at(std::size_t client) const {
  if (client >= clients_.size()) {
    throw std::out_of_range("PrivacyLedger: client index");
  }
  return clients_[client];
}

const std::vector<EpsilonEntry>& PrivacyLedger::series(
    std::size_t client) const {
  return at(client).series;
}

const std::vector<std::uint64_t>& PrivacyLedger::saturated_steps(
    std::size_t client) const {
  return at(client).saturated;
}

ClientEpsilonSummary PrivacyLedger::summary(std::size_t client) const {
  const PerClient& c = at(client);
  ClientEpsilonSummary s;
  s.final_eps = c.total > 0 ? c.last : kInf;
  s.mean_eps = c.finite > 0 ? c.sum_finite / static_cast<double>(c.finite)
                            : kInf;
  s.max_eps = c.total > 0 ? c.max_eps : kInf;
  s.finite_count = c.finite;
  s.saturated_count = c.saturated.size();
  s.total_count = c.total;
  return s;
}

}  // namespace fedselect::privacy

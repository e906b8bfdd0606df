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

#ifndef FEDSELECT_PRIVACY_HPP_
#define FEDSELECT_PRIVACY_HPP_

#include <cstdint>
#include <span>
#include <vector>

namespace fedselect::privacy {

/**
 * Per-step privacy budget of the randomized report.
 *
 * The report X is 1 with probability sigma + (1 - sigma) p and the worst
 * likelihood ratio between neighbouring intents is attained at
 * (X = 1, intent = 0), giving
 *
 *   eps(sigma, p) = ln((sigma + (1 - sigma) p) / ((1 - sigma) p))
 *                 = ln(1 + sigma / ((1 - sigma) p)).
 *
 * Returns +infinity when sigma >= 1 (a saturated response reveals the
 * intent with certainty). Throws std::domain_error if sigma < 0 or sigma
 * is NaN, or if p is outside (0, 1].
 */
double epsilon_step(double sigma, double p);

/**
 * Same budget expressed in protocol quantities, evaluated literally as
 *
 *   eps = ln((theta x (2 e^beta - beta) + beta f') / ((f' - theta x) beta))
 *
 * with sigma = theta x / f' and p = (beta / 2) e^{-beta}. Returns
 * +infinity when f' <= theta x. Throws std::domain_error unless
 * theta >= 0, x in (0, 1], f' > 0 and beta > 0. Agrees with
 * epsilon_step(sigma, p) to floating-point accuracy; the two forms are the
 * same expression rearranged.
 */
double epsilon_closed_form(double theta, double x, double f_prime,
                           double beta);

// Sequential composition: sum of per-step budgets. Empty input composes to
// 0; a +infinity entry absorbs the sum. Throws std::invalid_argument on a
// negative or NaN entry.
double compose_sequential(std::span<const double> eps);

// Arithmetic mean of per-client budgets (+infinity absorbs). Throws
// std::invalid_argument when the span is empty or an entry is negative or
// NaN.
double network_average_epsilon(std::span<const double> eps);

struct EmpiricalEpsilon {
  double eps_hat = 0.0;
  double std_err = 0.0;
  std::uint64_t trials = 0;
  std::uint64_t report_one = 0;           // trials with X = 1
  std::uint64_t report_one_intent_zero = 0;  // trials with X = 1 and b = 0
};

/**
 * Monte-Carlo check of epsilon_step: simulate the report channel, estimate
 * A = P(X = 1) and B = P(X = 1, intent = 0), and return
 * eps_hat = ln(A_hat / B_hat) with its delta-method standard error
 *
 *   std_err = sqrt(((1 - B_hat) / B_hat - (1 - A_hat) / A_hat) / trials).
 *
 * Deterministic in the seed. Throws std::invalid_argument if
 * sigma is outside [0, 1), p outside (0, 1), or trials < 10000; throws
 * std::runtime_error if the joint event is never observed.
 */
EmpiricalEpsilon empirical_epsilon(double sigma, double p,
                                   std::uint64_t trials, std::uint64_t seed);

struct EpsilonEntry {
  std::uint64_t step = 0;
  double eps = 0.0;
};

struct ClientEpsilonSummary {
  double final_eps = 0.0;  // last recorded budget
  double mean_eps = 0.0;   // mean over finite entries; +inf if none
  double max_eps = 0.0;    // max including +inf entries
  std::uint64_t finite_count = 0;
  std::uint64_t saturated_count = 0;
  std::uint64_t total_count = 0;
};

/**
 * Per-client accounting of the budgets spent over a run. Summaries
 * (final / mean over finite entries / max) are always maintained; the full
 * (step, eps) series is retained only when series_thinning >= 1, at steps
 * divisible by the thinning factor. Saturated steps (sigma >= 1) are
 * recorded individually: their budget is +infinity and they are excluded
 * from the finite mean.
 */
class PrivacyLedger {
 public:
  explicit PrivacyLedger(std::size_t n_clients,
                         std::uint64_t series_thinning = 0);

  // Appends one budget. Steps must be recorded in strictly increasing
  // order per client; eps must be >= 0 (possibly +infinity). Throws
  // std::out_of_range / std::invalid_argument on violations.
  void record(std::size_t client, std::uint64_t step, double eps,
              bool saturated);

  std::size_t size() const noexcept { return clients_.size(); }
  const std::vector<EpsilonEntry>& series(std::size_t client) const;
  const std::vector<std::uint64_t>& saturated_steps(std::size_t client) const;
  ClientEpsilonSummary summary(std::size_t client) const;

 private:
  struct PerClient {
    std::vector<EpsilonEntry> series;
    std::vector<std::uint64_t> saturated;
    double last = 0.0;
    double sum_finite = 0.0;
    double max_eps = 0.0;
    std::uint64_t finite = 0;
    std::uint64_t total = 0;
    bool has_step = false;
    std::uint64_t last_step = 0;
  };

  const PerClient& at(std::size_t client) const;

  std::vector<PerClient> clients_;
  std::uint64_t thinning_;
};

}  // namespace fedselect::privacy

#endif  // FEDSELECT_PRIVACY_HPP_

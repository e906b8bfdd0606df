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

#ifndef FEDSELECT_PROTOCOL_HPP_
#define FEDSELECT_PROTOCOL_HPP_

#include <cstdint>
#include <span>
#include <utility>

#include "fedselect/cost.hpp"
#include "fedselect/rng.hpp"

namespace fedselect::protocol {

/**
 * Coordinator side of the selection loop. theta is the price signal
 * broadcast each round; tau the gain of the stochastic-approximation
 * update; capacity the participation target C.
 */
struct ServerState {
  double theta = 0.5;
  double tau = 0.01;
  double capacity = 0.0;
  double theta_min = 1e-6;
  double theta_max = 1e6;
};

// One price update:
//   theta' = clamp(theta - tau * (total_participation - capacity),
//                  theta_min, theta_max)
// Within the clamp interval the map is linear in (total - capacity) and
// 1-Lipschitz in theta.
ServerState server_update(ServerState state, std::uint64_t total_participation);

/**
 * Client side. `participating` is the participation bit X(k),
 * `avg_participation` the running mean x(k) = (1/(k+1)) * sum of all
 * participation bits since the client joined, and `step` the number of
 * rounds executed since joining. Fresh clients start participating
 * (X(0) = 1, x(0) = 1, step = 0); a client constructed mid-run joins the
 * loop at whatever price signal is current.
 */
struct ClientState {
  bool participating = true;
  double avg_participation = 1.0;
  std::uint64_t step = 0;
  double beta = 1.0;
  rng::SplitMix64 rng;
};

ClientState make_client(double beta, rng::SplitMix64 stream);

struct ResponseProbability {
  double sigma = 0.0;    // clamped to [0, 1]
  bool saturated = false;  // raw theta * x / f'(x) reached or exceeded 1
};

// Response probability sigma = min(1, max(0, theta * x / f'(x))).
// Throws std::domain_error if x is outside (0, 1] (f'(0) = 0 would divide
// by zero). A non-positive derivative is reported as saturated.
ResponseProbability response_sigma(double theta, double x,
                                   const CostSpec& spec);
double response_probability(double theta, double x, const CostSpec& spec);

// Reporting-noise flip probability p = (beta / 2) * exp(-beta).
// Throws std::domain_error unless beta > 0. p lies in (0, exp(-1)/2] for
// every valid beta.
double flip_probability(double beta);

/**
 * Per-round record of a private client step. `intent` is the true draw b,
 * `flip` the secondary draw b' (false and never drawn when intent is set),
 * and `participate_next` the reported bit X(k+1).
 */
struct StepOutcome {
  double sigma = 0.0;
  double flip_p = 0.0;
  bool saturated = false;
  bool intent = false;
  bool flip = false;
  bool participate_next = false;
};

// Truthful-reporting step: draw X(k+1) ~ Bernoulli(sigma(theta, x(k))),
// then fold it into the running mean
//   x(k+1) = (x(k) * (k+1) + X(k+1)) / (k+2).
ClientState classical_client_step(ClientState client, double theta,
                                  const CostSpec& spec);

// Private step: draw intent b ~ Bernoulli(sigma); report 1 if b = 1, else
// report b' ~ Bernoulli(flip_p). The reported bit feeds the same running
// mean as the classical step. With flip_p = 0 the secondary draw is skipped
// without consuming randomness, so the stream stays aligned with
// classical_client_step.
std::pair<ClientState, StepOutcome> dp_client_step(ClientState client,
                                                   double theta,
                                                   const CostSpec& spec,
                                                   double flip_p);

// Same, with flip_p = flip_probability(client.beta).
std::pair<ClientState, StepOutcome> dp_client_step(ClientState client,
                                                   double theta,
                                                   const CostSpec& spec);

// Number of currently participating clients, sum of X_i(k).
std::uint64_t aggregate_participation(std::span<const ClientState> clients);

/**
 * Stable gain recommendation
 *
 *   tau = 0.9 / sum_i max_{x in [x_floor, 1]} x / f_i'(x)
 *
 * with the inner maximum evaluated on a fixed 1001-point grid. For a pure
 * quadratic a x^2 the ratio is constant and the term is exactly 1 / (2a).
 * Throws std::invalid_argument unless 0 < x_floor <= 1 and specs is
 * non-empty; throws std::domain_error if any derivative vanishes on the
 * grid.
 */
double recommend_tau(std::span<const CostSpec> specs, double x_floor);

}  // namespace fedselect::protocol

#endif  // FEDSELECT_PROTOCOL_HPP_

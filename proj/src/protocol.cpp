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

#include "fedselect/protocol.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace fedselect::protocol {
namespace {

// Fold the next participation bit into the running mean.
void advance(ClientState& c, bool participate_next) {
  const double k = static_cast<double>(c.step);
  c.avg_participation =
      (c.avg_participation * (k + 1.0) + (participate_next ? 1.0 : 0.0)) /
      (k + 2.0);
  c.step += 1;
  c.participating = participate_next;
}

}  // namespace

ServerState server_update(ServerState state,
                          std::uint64_t total_participation) {
  const double raw =
      state.theta -
      state.tau * (static_cast<double>(total_participation) - state.capacity);
  state.theta = std::clamp(raw, state.theta_min, state.theta_max);
  return state;
}

ClientState make_client(double beta, rng::SplitMix64 stream) {
  ClientState c;
  c.participating = true;
  c.avg_participation = 1.0;
  c.step = 0;
  c.beta = beta;
  c.rng = stream;
  return c;
}

ResponseProbability response_sigma(double theta, double x,
                                   const CostSpec& spec) {
  if (!(x > 0.0 && x <= 1.0)) {
    throw std::domain_error("response_sigma: x must lie in (0, 1]");
  }
  const double fp = spec.derivative(x);
  if (!(fp > 0.0)) {
    return {1.0, true};
  }
  const double raw = theta * x / fp;
  if (raw >= 1.0) return {1.0, true};
  if (raw <= 0.0) return {0.0, false};
  return {raw, false};
}

double response_probability(double theta, double x, const CostSpec& spec) {
  return response_sigma(theta, x, spec).sigma;
}

double flip_probability(double beta) {
  if (!(beta > 0.0) || !std::isfinite(beta)) {
    throw std::domain_error("flip_probability: beta must be positive");
  }
  return 0.5 * beta * std::exp(-beta);
}

ClientState classical_client_step(ClientState client, double theta,
                                  const CostSpec& spec) {
  const ResponseProbability r =
      response_sigma(theta, client.avg_participation, spec);
  const bool next = client.rng.bernoulli(r.sigma);
  advance(client, next);
  return client;
}

std::pair<ClientState, StepOutcome> dp_client_step(ClientState client,
                                                   double theta,
                                                   const CostSpec& spec,
                                                   double flip_p) {
  if (!(flip_p >= 0.0 && flip_p <= 1.0)) {
    throw std::domain_error("dp_client_step: flip_p must lie in [0, 1]");
  }
  const ResponseProbability r =
      response_sigma(theta, client.avg_participation, spec);
  StepOutcome out;
  out.sigma = r.sigma;
  out.flip_p = flip_p;
  out.saturated = r.saturated;
  out.intent = client.rng.bernoulli(r.sigma);
  if (out.intent) {
    out.flip = false;
    out.participate_next = true;
  } else {
    out.flip = client.rng.bernoulli(flip_p);
    out.participate_next = out.flip;
  }
  advance(client, out.participate_next);
  return {client, out};
}

std::pair<ClientState, StepOutcome> dp_client_step(ClientState client,
                                                   double theta,
                                                   const CostSpec& spec) {
  return dp_client_step(client, theta, spec, flip_probability(client.beta));
}

std::uint64_t aggregate_participation(std::span<const ClientState> clients) {
  std::uint64_t total = 0;
  for (const ClientState& c : clients) {
    total += c.participating ? 1u : 0u;
  }
  return total;
}

double recommend_tau(std::span<const CostSpec> specs, double x_floor) {
  if (specs.empty()) {
    throw std::invalid_argument("recommend_tau: specs must be non-empty");
  }
  if (!(x_floor > 0.0 && x_floor <= 1.0)) {
    throw std::invalid_argument("recommend_tau: x_floor must lie in (0, 1]");
  }
  constexpr int kGridPoints = 1001;
  double sum = 0.0;
  for (const CostSpec& spec : specs) {
    double worst = 0.0;
    for (int j = 0; j < kGridPoints; ++j) {
      const double x =
          x_floor + (1.0 - x_floor) * static_cast<double>(j) /
                        static_cast<double>(kGridPoints - 1);
      const double fp = spec.derivative(x);
      if (!(fp > 0.0)) {
        throw std::domain_error(
            "recommend_tau: derivative vanishes on the evaluation grid");
      }
      worst = std::max(worst, x / fp);
    }
    sum += worst;
  }
  return 0.9 / sum;
}

}  // namespace fedselect::protocol

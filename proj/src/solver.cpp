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

#include "fedselect/solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace fedselect::solver {
namespace {

constexpr double kSumTolerance = 1e-10;
constexpr int kOuterIterations = 200;
constexpr int kInnerIterations = 64;
constexpr std::uint64_t kMaxBruteForceCandidates = 100'000'000;

void check_feasible(std::size_t n, double capacity) {
  if (n == 0) {
    throw std::invalid_argument("solver: specs must be non-empty");
  }
  if (!std::isfinite(capacity) || !(capacity > 0.0) ||
      capacity > static_cast<double>(n)) {
    throw std::invalid_argument(
        "solver: capacity must lie in (0, n] to be feasible");
  }
}

}  // namespace

double client_allocation_at_price(const CostSpec& spec, double lambda) {
  if (!(lambda > 0.0)) return 0.0;
  if (lambda >= spec.derivative(1.0)) return 1.0;
  double lo = 0.0;
  double hi = 1.0;
  // 64 halvings bring the bracket to adjacent doubles; f' is strictly
  // increasing so the bracket always contains the root.
  for (int i = 0; i < kInnerIterations; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (spec.derivative(mid) < lambda) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

double total_allocation_at_price(std::span<const CostSpec> specs,
                                 double lambda) {
  double total = 0.0;
  for (const CostSpec& s : specs) {
    total += client_allocation_at_price(s, lambda);
  }
  return total;
}

AllocationResult solve_optimal(std::span<const CostSpec> specs,
                               double capacity) {
  check_feasible(specs.size(), capacity);
  double lambda_hi = 0.0;
  for (const CostSpec& s : specs) {
    lambda_hi = std::max(lambda_hi, s.derivative(1.0));
  }
  double lo = 0.0;
  double hi = lambda_hi;
  double best_lambda = lambda_hi;
  double best_gap = std::numeric_limits<double>::infinity();
  for (int i = 0; i < kOuterIterations; ++i) {
    const double mid = 0.5 * (lo + hi);
    const double total = total_allocation_at_price(specs, mid);
    const double gap = std::abs(total - capacity);
    if (gap < best_gap) {
      best_gap = gap;
      best_lambda = mid;
    }
    if (gap <= kSumTolerance) break;
    if (total < capacity) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  AllocationResult result;
  result.lambda_star = best_lambda;
  result.x_star.reserve(specs.size());
  double total = 0.0;
  for (const CostSpec& s : specs) {
    const double x = client_allocation_at_price(s, best_lambda);
    result.x_star.push_back(x);
    total += x;
  }
  result.residual = std::abs(total - capacity);
  return result;
}

AllocationResult brute_force_optimal(std::span<const CostSpec> specs,
                                     double capacity, std::size_t grid) {
  const std::size_t n = specs.size();
  check_feasible(n, capacity);
  if (n > 4) {
    throw std::invalid_argument("brute_force_optimal: n must be <= 4");
  }
  if (grid < 2 || grid > 201) {
    throw std::invalid_argument(
        "brute_force_optimal: grid must lie in [2, 201]");
  }
  std::uint64_t prefixes = 1;
  for (std::size_t i = 0; i + 1 < n; ++i) {
    prefixes *= grid;
    if (prefixes > kMaxBruteForceCandidates) {
      throw std::invalid_argument(
          "brute_force_optimal: search space exceeds the candidate bound");
    }
  }

  const double h = 1.0 / static_cast<double>(grid - 1);
  // Tabulated grid values and per-client costs, so the enumeration is pure
  // lookup.
  std::vector<double> xs(grid);
  for (std::size_t j = 0; j < grid; ++j) {
    xs[j] = static_cast<double>(j) * h;
  }
  xs[grid - 1] = 1.0;
  std::vector<std::vector<double>> fv(n, std::vector<double>(grid));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < grid; ++j) {
      fv[i][j] = specs[i].eval(xs[j]);
    }
  }

  std::vector<std::size_t> idx(n, 0);
  std::vector<std::size_t> best_idx;
  double best_value = std::numeric_limits<double>::infinity();
  double best_residual = std::numeric_limits<double>::infinity();
  const double slack = h + 1e-12;

  for (std::uint64_t code = 0; code < prefixes; ++code) {
    std::uint64_t c = code;
    double prefix_sum = 0.0;
    double prefix_value = 0.0;
    for (std::size_t i = 0; i + 1 < n; ++i) {
      idx[i] = static_cast<std::size_t>(c % grid);
      c /= grid;
      prefix_sum += xs[idx[i]];
      prefix_value += fv[i][idx[i]];
    }
    // Feasible values of the last coordinate lie in
    // [capacity - prefix - h, capacity - prefix + h]; at most three grid
    // points fall in that window.
    const double target = capacity - prefix_sum;
    const double k_lo_f = std::ceil((target - slack) / h);
    const double k_hi_f = std::floor((target + slack) / h);
    if (k_hi_f < 0.0 || k_lo_f > static_cast<double>(grid - 1)) continue;
    const std::size_t k_lo =
        static_cast<std::size_t>(std::max(k_lo_f, 0.0));
    const std::size_t k_hi = static_cast<std::size_t>(
        std::min(k_hi_f, static_cast<double>(grid - 1)));
    for (std::size_t k = k_lo; k <= k_hi; ++k) {
      const double residual = std::abs(prefix_sum + xs[k] - capacity);
      if (residual > slack) continue;
      const double value = prefix_value + fv[n - 1][k];
      if (value < best_value ||
          (value == best_value && residual < best_residual)) {
        best_value = value;
        best_residual = residual;
        idx[n - 1] = k;
        best_idx = idx;
      }
    }
  }
  if (best_idx.empty()) {
    throw std::runtime_error(
        "brute_force_optimal: no grid point satisfies the capacity slice");
  }

  AllocationResult result;
  result.x_star.reserve(n);
  double interior_price = 0.0;
  std::size_t interior = 0;
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double x = xs[best_idx[i]];
    result.x_star.push_back(x);
    total += x;
    if (x > 0.0 && x < 1.0) {
      interior_price += specs[i].derivative(x);
      ++interior;
    }
  }
  if (interior > 0) {
    result.lambda_star = interior_price / static_cast<double>(interior);
  } else {
    double top = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      top = std::max(top, specs[i].derivative(result.x_star[i]));
    }
    result.lambda_star = top;
  }
  result.residual = std::abs(total - capacity);
  return result;
}

}  // namespace fedselect::solver

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

#ifndef FEDSELECT_SOLVER_HPP_
#define FEDSELECT_SOLVER_HPP_

#include <cstdint>
#include <span>
#include <vector>

#include "fedselect/cost.hpp"

namespace fedselect::solver {

/**
 * Solution of
 *
 *   minimize sum_i f_i(x_i)  subject to  sum_i x_i = C,  0 <= x_i <= 1.
 *
 * lambda_star is the common marginal price: interior coordinates satisfy
 * f_i'(x_i) = lambda_star, coordinates clipped at 1 satisfy
 * f_i'(1) <= lambda_star. residual is |sum_i x_i - C|.
 */
struct AllocationResult {
  std::vector<double> x_star;
  double lambda_star = 0.0;
  double residual = 0.0;
};

// min(1, f'^{-1}(lambda)): the allocation a single client receives at a
// given marginal price. Zero for lambda <= 0; solved by bisection on [0, 1]
// otherwise (f' is strictly increasing).
double client_allocation_at_price(const CostSpec& spec, double lambda);

// sum_i of client allocations; nondecreasing in lambda.
double total_allocation_at_price(std::span<const CostSpec> specs,
                                 double lambda);

/**
 * Exact optimum by bisection on the dual price lambda over
 * [0, max_i f_i'(1)], terminating when |sum x - C| <= 1e-10 or after 200
 * iterations. Every x_i is positive; KKT residuals are at floating-point
 * scale. Throws std::invalid_argument when specs is empty or capacity is
 * outside (0, n].
 */
AllocationResult solve_optimal(std::span<const CostSpec> specs,
                               double capacity);

/**
 * Exhaustive reference optimum on the uniform grid {0, h, 2h, ..., 1},
 * h = 1/(grid - 1), over the near-feasible slice |sum x - C| <= h. The
 * last coordinate is enumerated directly from the prefix sum, so the
 * search touches grid^(n-1) prefixes. Intended as an oracle for small
 * instances: throws std::invalid_argument when n > 4, grid is outside
 * [2, 201], capacity is outside (0, n], or the search space exceeds an
 * internal candidate bound. lambda_star is reported as the mean of
 * f_i'(x_i) over interior coordinates (grid resolution only).
 */
AllocationResult brute_force_optimal(std::span<const CostSpec> specs,
                                     double capacity, std::size_t grid);

}  // namespace fedselect::solver

#endif  // FEDSELECT_SOLVER_HPP_

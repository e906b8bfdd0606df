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

#ifndef FEDSELECT_COST_HPP_
#define FEDSELECT_COST_HPP_

#include <cstdint>
#include <vector>

namespace fedselect {

// One monomial c * x^e of a cost polynomial.
struct CostTerm {
  double coefficient = 0.0;
  int exponent = 0;
};

/**
 * Client cost function on the participation domain [0, 1]:
 *
 *   f(x) = sum_j c_j x^{e_j},   c_j > 0,   e_j even,   e_j >= 2.
 *
 * The term constraints make f(0) = 0, f strictly convex, and f' strictly
 * increasing with f'(0) = 0 and f'(x) > 0 for x > 0.
 */
class CostSpec {
 public:
  // Throws std::invalid_argument if terms is empty, any coefficient is not
  // a finite positive real, or any exponent is odd or below 2.
  explicit CostSpec(std::vector<CostTerm> terms);

  // f(x). Throws std::domain_error if x is outside [0, 1].
  double eval(double x) const;

  // f'(x) = sum_j c_j e_j x^{e_j - 1}. Same domain as eval.
  double derivative(double x) const;

  // f''(x) = sum_j c_j e_j (e_j - 1) x^{e_j - 2}. Same domain as eval.
  double second_derivative(double x) const;

  const std::vector<CostTerm>& terms() const noexcept { return terms_; }

 private:
  std::vector<CostTerm> terms_;
};

enum class PopulationKind {
  four_family,  // families 0..3 below, assigned by client index mod 4
  quadratic,    // a x^2 for every client
};

// Experiment cost families, selected by population slot:
//   0: a x^2      1: (a/2) x^4      2: (a/3) x^4 + b x^6      3: b x^2
CostSpec make_family_cost(int family, double a, double b);

// Population of n cost functions with both per-client coefficients drawn
// uniformly from the open interval (coef_low, coef_high). Deterministic in
// the seed; exact-endpoint draws are rejected and redrawn.
std::vector<CostSpec> sample_population(std::size_t n, std::uint64_t seed,
                                        PopulationKind kind, double coef_low,
                                        double coef_high);

// Four-family population with coefficients uniform on (0, 40).
std::vector<CostSpec> sample_cost_population(std::size_t n,
                                             std::uint64_t seed);

}  // namespace fedselect

#endif  // FEDSELECT_COST_HPP_

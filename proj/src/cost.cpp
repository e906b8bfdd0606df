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

#include "fedselect/cost.hpp"

#include <cmath>
#include <stdexcept>
#include <string>
#include <utility>

#include "fedselect/rng.hpp"

namespace fedselect {
namespace {

// x^n for n >= 0 by squaring; integer exponents only, so results are
// deterministic across libm implementations.
double pow_uint(double x, unsigned n) {
  double result = 1.0;
  double base = x;
  while (n != 0) {
    if (n & 1u) result *= base;
    base *= base;
    n >>= 1;
  }
  return result;
}

void check_domain(double x, const char* what) {
  if (!(x >= 0.0 && x <= 1.0)) {
    throw std::domain_error(std::string(what) + ": x=" + std::to_string(x) +
                            " is outside [0, 1]");
  }
}

}  // namespace

CostSpec::CostSpec(std::vector<CostTerm> terms) : terms_(std::move(terms)) {
  if (terms_.empty()) {
    throw std::invalid_argument("CostSpec: at least one term required");
  }
  for (const CostTerm& t : terms_) {
    if (!std::isfinite(t.coefficient) || !(t.coefficient > 0.0)) {
      throw std::invalid_argument(
          "CostSpec: coefficients must be finite and positive");
    }
    if (t.exponent < 2 || t.exponent % 2 != 0) {
      throw std::invalid_argument(
          "CostSpec: exponents must be even integers >= 2");
    }
  }
}

double CostSpec::eval(double x) const {
  check_domain(x, "CostSpec::eval");
  double sum = 0.0;
  for (const CostTerm& t : terms_) {
    sum += t.coefficient * pow_uint(x, static_cast<unsigned>(t.exponent));
  }
  return sum;
}

double CostSpec::derivative(double x) const {
  check_domain(x, "CostSpec::derivative");
  double sum = 0.0;
  for (const CostTerm& t : terms_) {
    sum += t.coefficient * static_cast<double>(t.exponent) *
           pow_uint(x, static_cast<unsigned>(t.exponent - 1));
  }
  return sum;
}

double CostSpec::second_derivative(double x) const {
  check_domain(x, "CostSpec::second_derivative");
  double sum = 0.0;
  for (const CostTerm& t : terms_) {
    sum += t.coefficient * static_cast<double>(t.exponent) *
           static_cast<double>(t.exponent - 1) *
           pow_uint(x, static_cast<unsigned>(t.exponent - 2));
  }
  return sum;
}

CostSpec make_family_cost(int family, double a, double b) {
  switch (family) {
    case 0:
      return CostSpec({{a, 2}});
    case 1:
      return CostSpec({{0.5 * a, 4}});
    case 2:
      return CostSpec({{a / 3.0, 4}, {b, 6}});
    case 3:
      return CostSpec({{b, 2}});
    default:
      throw std::invalid_argument("make_family_cost: family must be 0..3");
  }
}

std::vector<CostSpec> sample_population(std::size_t n, std::uint64_t seed,
                                        PopulationKind kind, double coef_low,
                                        double coef_high) {
  if (n == 0) {
    throw std::invalid_argument("sample_population: n must be >= 1");
  }
  if (!std::isfinite(coef_low) || !std::isfinite(coef_high) ||
      !(coef_low >= 0.0) || !(coef_high > coef_low)) {
    throw std::invalid_argument(
        "sample_population: need 0 <= coef_low < coef_high, both finite");
  }
  rng::SplitMix64 gen(rng::mix64(seed));
  std::vector<CostSpec> specs;
  specs.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    // Both coefficients are drawn for every client regardless of family so
    // that a client's terms depend only on (seed, index), not on the kind.
    const double a = gen.uniform_open(coef_low, coef_high);
    const double b = gen.uniform_open(coef_low, coef_high);
    if (kind == PopulationKind::quadratic) {
      specs.push_back(CostSpec({{a, 2}}));
    } else {
      specs.push_back(make_family_cost(static_cast<int>(i % 4), a, b));
    }
  }
  return specs;
}

std::vector<CostSpec> sample_cost_population(std::size_t n,
                                             std::uint64_t seed) {
  return sample_population(n, seed, PopulationKind::four_family, 0.0, 40.0);
}

}  // namespace fedselect

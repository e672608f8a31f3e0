#pragma once

#include <vector>

#include "topocf/types.hpp"

namespace topocf {

// Standardizes to mean 0 and population standard deviation 1.
// Throws ZeroVariance on constant input; requires >= 2 values.
std::vector<double> zscore(const std::vector<double>& values);

// Element-wise base-10 logarithm; throws NonPositiveValue.
std::vector<double> log10_transform(const std::vector<double>& values);

double mean(const std::vector<double>& values);
double population_std(const std::vector<double>& values);

}  // namespace topocf

#pragma once

#include <map>
#include <string>
#include <vector>

#include "topocf/regression.hpp"
#include "topocf/types.hpp"

namespace topocf {

// Log-log scatter of a degree distribution, P(d) against d.
std::string svg_degree_distribution(const std::map<Index, double>& distribution,
                                    const std::string& title);

// Horizontal signed bar chart of regression coefficients; opacity encodes
// significance (darker = more significant).
std::string svg_coefficient_bars(const std::vector<SignificanceRow>& rows,
                                 const std::string& title);

}  // namespace topocf

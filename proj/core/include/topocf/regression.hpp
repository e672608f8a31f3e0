#pragma once

#include <string>
#include <vector>

#include "topocf/types.hpp"

namespace topocf {

// Column-standardized predictor matrix (each column mean 0, population std 1).
struct DesignMatrix {
  Mat values;                             // M x C
  std::vector<std::string> column_names;  // size C
  std::vector<std::string> dropped_columns;  // zero-variance, excluded
  std::vector<double> column_means;       // pre-standardization, kept columns
  std::vector<double> column_stds;
};

// Standardizes columns; zero-variance columns are dropped and reported.
DesignMatrix make_design_matrix(const Mat& raw,
                                const std::vector<std::string>& names);

// Pearson correlation matrix of the design columns. Requires M >= 3.
Mat pearson_corr(const DesignMatrix& x);

struct RegressionReport {
  double intercept = 0.0;
  double intercept_se = 0.0;
  double intercept_t = 0.0;
  double intercept_p = 1.0;
  std::vector<std::string> column_names;
  Vec coefficients;
  Vec standard_errors;
  Vec t_statistics;
  Vec p_values;  // two-sided
  double r_squared = 0.0;
  double adjusted_r_squared = 0.0;
  double residual_std = 0.0;
  long degrees_of_freedom = 0;
  Vec fitted;
  Vec residuals;
  double condition_number = 0.0;
  std::vector<std::string> dropped_columns;
  std::vector<std::string> warnings;
};

// OLS with intercept via column-pivoted QR. Standard errors from
// sigma^2 (X^T X)^-1 with sigma^2 = RSS / (M - C - 1); two-sided p-values
// from the Student-t survival function. Throws TooFewSamples when
// M <= C + 1 and RankDeficient on rank loss at relative tolerance 1e-10.
RegressionReport ols_fit(const DesignMatrix& x, const Vec& y);

// Two-sided p-value for a t statistic with df degrees of freedom, via the
// regularized incomplete beta function.
double student_t_two_sided_p(double t, double df);

double regularized_incomplete_beta(double a, double b, double x);

struct SignificanceRow {
  std::string name;
  double coefficient = 0.0;
  double standard_error = 0.0;
  double t_statistic = 0.0;
  double p_value = 1.0;
  std::string stars;  // "", "*", "**", "***"
  int sign = 0;       // -1, 0, +1
  double magnitude = 0.0;
  int rank_by_magnitude = 0;
};

// Annotates each coefficient with significance stars at p < .05 / .01 / .001
// and sign/magnitude columns, ordered by |coefficient| descending.
std::vector<SignificanceRow> significance_format(const RegressionReport& report);

}  // namespace topocf

#include "topocf/regression.hpp"

#include <Eigen/QR>
#include <algorithm>
#include <cmath>
#include <numeric>

#include "topocf/error.hpp"

namespace topocf {

DesignMatrix make_design_matrix(const Mat& raw,
                                const std::vector<std::string>& names) {
  if (static_cast<std::size_t>(raw.cols()) != names.size()) {
    throw Error(ErrorCode::kDimensionMismatch, "design matrix name count");
  }
  const Eigen::Index rows = raw.rows();
  if (rows < 2) throw Error(ErrorCode::kTooFewSamples, "need >= 2 samples");

  DesignMatrix out;
  std::vector<Eigen::Index> kept;
  for (Eigen::Index c = 0; c < raw.cols(); ++c) {
    const double mean = raw.col(c).mean();
    const double var = (raw.col(c).array() - mean).square().sum() /
                       static_cast<double>(rows);
    const double sd = std::sqrt(var);
    if (sd <= 1e-12 * (std::abs(mean) + 1.0)) {
      out.dropped_columns.push_back(names[static_cast<std::size_t>(c)]);
      continue;
    }
    kept.push_back(c);
    out.column_names.push_back(names[static_cast<std::size_t>(c)]);
    out.column_means.push_back(mean);
    out.column_stds.push_back(sd);
  }
  out.values.resize(rows, static_cast<Eigen::Index>(kept.size()));
  for (std::size_t k = 0; k < kept.size(); ++k) {
    out.values.col(static_cast<Eigen::Index>(k)) =
        (raw.col(kept[k]).array() - out.column_means[k]) / out.column_stds[k];
  }
  return out;
}

Mat pearson_corr(const DesignMatrix& x) {
  const Eigen::Index m = x.values.rows();
  const Eigen::Index c = x.values.cols();
  if (m < 3) throw Error(ErrorCode::kTooFewSamples, "pearson needs >= 3 rows");
  Mat corr(c, c);
  for (Eigen::Index a = 0; a < c; ++a) {
    for (Eigen::Index b = a; b < c; ++b) {
      const double ma = x.values.col(a).mean();
      const double mb = x.values.col(b).mean();
      const Eigen::ArrayXd da = x.values.col(a).array() - ma;
      const Eigen::ArrayXd db = x.values.col(b).array() - mb;
      const double va = da.square().sum();
      const double vb = db.square().sum();
      if (va == 0.0 || vb == 0.0) {
        throw Error(ErrorCode::kZeroVariance, "zero-variance column in pearson");
      }
      const double r = (da * db).sum() / std::sqrt(va * vb);
      corr(a, b) = r;
      corr(b, a) = r;
    }
    corr(a, a) = 1.0;
  }
  return corr;
}

namespace {

double beta_continued_fraction(double a, double b, double x) {
  // Lentz's algorithm for the incomplete beta continued fraction.
  constexpr int kMaxIter = 300;
  constexpr double kEps = 3e-14;
  constexpr double kTiny = 1e-300;
  const double qab = a + b;
  const double qap = a + 1.0;
  const double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::abs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIter; ++m) {
    const double m2 = 2.0 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < kEps) break;
  }
  return h;
}

}  // namespace

double regularized_incomplete_beta(double a, double b, double x) {
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  const double ln_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                          a * std::log(x) + b * std::log1p(-x);
  const double front = std::exp(ln_front);
  if (x < (a + 1.0) / (a + b + 2.0)) {
    return front * beta_continued_fraction(a, b, x) / a;
  }
  return 1.0 - front * beta_continued_fraction(b, a, 1.0 - x) / b;
}

double student_t_two_sided_p(double t, double df) {
  if (!std::isfinite(t)) return 0.0;
  if (df <= 0.0) return 1.0;
  const double x = df / (df + t * t);
  return regularized_incomplete_beta(df / 2.0, 0.5, x);
}

RegressionReport ols_fit(const DesignMatrix& x, const Vec& y) {
  const Eigen::Index m = x.values.rows();
  const Eigen::Index c = x.values.cols();
  if (y.size() != m) {
    throw Error(ErrorCode::kDimensionMismatch, "ols: response size mismatch");
  }
  if (m <= c + 1) {
    throw Error(ErrorCode::kTooFewSamples,
                "ols needs more samples than predictors + 1");
  }

  Mat design(m, c + 1);
  design.col(0).setOnes();
  design.rightCols(c) = x.values;

  Eigen::ColPivHouseholderQR<Mat> qr(design);
  qr.setThreshold(1e-10);
  if (qr.rank() < c + 1) {
    throw Error(ErrorCode::kRankDeficient,
                "design matrix is rank deficient (rank " +
                    std::to_string(qr.rank()) + " of " + std::to_string(c + 1) +
                    ")");
  }
  const Vec beta = qr.solve(y);

  RegressionReport report;
  report.column_names = x.column_names;
  report.dropped_columns = x.dropped_columns;
  report.fitted = design * beta;
  report.residuals = y - report.fitted;
  report.degrees_of_freedom = static_cast<long>(m) - static_cast<long>(c) - 1;

  const double rss = report.residuals.squaredNorm();
  const double y_mean = y.mean();
  const double tss = (y.array() - y_mean).square().sum();
  report.r_squared = tss > 0.0 ? 1.0 - rss / tss : 0.0;
  report.adjusted_r_squared =
      1.0 - (1.0 - report.r_squared) * static_cast<double>(m - 1) /
                static_cast<double>(report.degrees_of_freedom);
  const double sigma2 = rss / static_cast<double>(report.degrees_of_freedom);
  report.residual_std = std::sqrt(sigma2);

  // (X^T X)^-1 via the QR factors.
  const Mat xtx_inv = (design.transpose() * design).inverse();
  const Vec se = (sigma2 * xtx_inv.diagonal().array()).sqrt();

  report.intercept = beta[0];
  report.intercept_se = se[0];
  report.intercept_t = se[0] > 0.0 ? beta[0] / se[0] : 0.0;
  report.intercept_p = student_t_two_sided_p(
      report.intercept_t, static_cast<double>(report.degrees_of_freedom));

  report.coefficients = beta.tail(c);
  report.standard_errors = se.tail(c);
  report.t_statistics = Vec::Zero(c);
  report.p_values = Vec::Ones(c);
  for (Eigen::Index k = 0; k < c; ++k) {
    if (report.standard_errors[k] > 0.0) {
      report.t_statistics[k] = report.coefficients[k] / report.standard_errors[k];
      report.p_values[k] = student_t_two_sided_p(
          report.t_statistics[k], static_cast<double>(report.degrees_of_freedom));
    }
  }

  // Condition number of the standardized design (collinearity warning only).
  Eigen::JacobiSVD<Mat> svd(design);
  const auto& sv = svd.singularValues();
  report.condition_number =
      sv[sv.size() - 1] > 0.0 ? sv[0] / sv[sv.size() - 1] : std::numeric_limits<double>::infinity();
  if (report.condition_number > 1e4) {
    report.warnings.push_back(
        "high condition number (" + std::to_string(report.condition_number) +
        "): near-collinear predictors, interpret coefficients jointly");
  }
  return report;
}

std::vector<SignificanceRow> significance_format(const RegressionReport& report) {
  std::vector<SignificanceRow> rows;
  for (std::size_t k = 0; k < report.column_names.size(); ++k) {
    SignificanceRow row;
    row.name = report.column_names[k];
    row.coefficient = report.coefficients[static_cast<Eigen::Index>(k)];
    row.standard_error = report.standard_errors[static_cast<Eigen::Index>(k)];
    row.t_statistic = report.t_statistics[static_cast<Eigen::Index>(k)];
    row.p_value = report.p_values[static_cast<Eigen::Index>(k)];
    if (row.p_value < 0.001) {
      row.stars = "***";
    } else if (row.p_value < 0.01) {
      row.stars = "**";
    } else if (row.p_value < 0.05) {
      row.stars = "*";
    }
    row.sign = row.coefficient > 0.0 ? 1 : (row.coefficient < 0.0 ? -1 : 0);
    row.magnitude = std::abs(row.coefficient);
    rows.push_back(row);
  }
  std::vector<std::size_t> order(rows.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return rows[a].magnitude > rows[b].magnitude;
  });
  std::vector<SignificanceRow> sorted;
  sorted.reserve(rows.size());
  for (std::size_t r = 0; r < order.size(); ++r) {
    rows[order[r]].rank_by_magnitude = static_cast<int>(r) + 1;
    sorted.push_back(rows[order[r]]);
  }
  return sorted;
}

}  // namespace topocf

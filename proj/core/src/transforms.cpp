#include "topocf/transforms.hpp"

#include <cmath>

#include "topocf/error.hpp"

namespace topocf {

double mean(const std::vector<double>& values) {
  double s = 0.0;
  for (double v : values) s += v;
  return s / static_cast<double>(values.size());
}

double population_std(const std::vector<double>& values) {
  const double mu = mean(values);
  double s = 0.0;
  for (double v : values) s += (v - mu) * (v - mu);
  return std::sqrt(s / static_cast<double>(values.size()));
}

std::vector<double> zscore(const std::vector<double>& values) {
  if (values.size() < 2) {
    throw Error(ErrorCode::kTooFewSamples, "zscore needs >= 2 values");
  }
  const double mu = mean(values);
  const double sd = population_std(values);
  if (sd == 0.0) {
    throw Error(ErrorCode::kZeroVariance, "zscore on constant input");
  }
  std::vector<double> out(values.size());
  for (std::size_t k = 0; k < values.size(); ++k) out[k] = (values[k] - mu) / sd;
  return out;
}

std::vector<double> log10_transform(const std::vector<double>& values) {
  std::vector<double> out(values.size());
  for (std::size_t k = 0; k < values.size(); ++k) {
    if (!(values[k] > 0.0)) {
      throw Error(ErrorCode::kNonPositiveValue,
                  "log10 requires strictly positive values");
    }
    out[k] = std::log10(values[k]);
  }
  return out;
}

}  // namespace topocf

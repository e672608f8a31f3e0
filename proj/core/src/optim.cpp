#include "topocf/optim.hpp"

#include <cmath>

#include "topocf/error.hpp"

namespace topocf {

AdamState::AdamState(const std::vector<const Mat*>& params) {
  m_.reserve(params.size());
  v_.reserve(params.size());
  for (const Mat* p : params) {
    m_.push_back(Mat::Zero(p->rows(), p->cols()));
    v_.push_back(Mat::Zero(p->rows(), p->cols()));
  }
}

void AdamState::step(const std::vector<Mat*>& params,
                     const std::vector<const Mat*>& grads,
                     const AdamConfig& config) {
  if (params.size() != m_.size() || grads.size() != m_.size()) {
    throw Error(ErrorCode::kDimensionMismatch, "adam: tensor count mismatch");
  }
  ++t_;
  const double bc1 = 1.0 - std::pow(config.beta1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(config.beta2, static_cast<double>(t_));
  for (std::size_t p = 0; p < params.size(); ++p) {
    const Mat& g = *grads[p];
    if (!g.allFinite()) {
      throw Error(ErrorCode::kNonFiniteGradient, "adam: non-finite gradient");
    }
    Mat& m = m_[p];
    Mat& v = v_[p];
    m = config.beta1 * m + (1.0 - config.beta1) * g;
    v = config.beta2 * v.array().matrix() +
        (1.0 - config.beta2) * g.array().square().matrix();
    const Mat m_hat = m / bc1;
    const Mat v_hat = v / bc2;
    params[p]->array() -=
        config.lr * m_hat.array() / (v_hat.array().sqrt() + config.eps);
  }
}

}  // namespace topocf

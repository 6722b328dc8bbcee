#pragma once

#include <cmath>
#include <vector>

#include "depthprompt/nn/tensor.hpp"

namespace dp::nn {

// Adam over the trainable subset of a fixed parameter list. Deterministic:
// no internal randomness, parameters visited in list order.
template <typename S>
class Adam {
 public:
  explicit Adam(std::vector<Param<S>*> params, double beta1 = 0.9,
                double beta2 = 0.999, double eps = 1e-8)
      : params_(std::move(params)), beta1_(beta1), beta2_(beta2), eps_(eps) {
    for (Param<S>* p : params_) {
      m_.push_back(Mat<S>::Zero(p->value.rows(), p->value.cols()));
      v_.push_back(Mat<S>::Zero(p->value.rows(), p->value.cols()));
    }
  }

  void step(double lr) {
    ++t_;
    const double c1 = 1.0 - std::pow(beta1_, t_);
    const double c2 = 1.0 - std::pow(beta2_, t_);
    for (std::size_t i = 0; i < params_.size(); ++i) {
      Param<S>* p = params_[i];
      if (!p->trainable) continue;
      const S b1 = static_cast<S>(beta1_), b2 = static_cast<S>(beta2_);
      m_[i] = b1 * m_[i] + (S(1) - b1) * p->grad;
      v_[i].array() = b2 * v_[i].array() + (S(1) - b2) * p->grad.array().square();
      Mat<S> mhat = m_[i] / static_cast<S>(c1);
      Mat<S> vhat = v_[i] / static_cast<S>(c2);
      p->value.array() -=
          static_cast<S>(lr) * mhat.array() / (vhat.array().sqrt() + static_cast<S>(eps_));
    }
  }

 private:
  std::vector<Param<S>*> params_;
  std::vector<Mat<S>> m_, v_;
  double beta1_, beta2_, eps_;
  long t_ = 0;
};

}  // namespace dp::nn

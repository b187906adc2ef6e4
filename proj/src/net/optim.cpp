#include <cmath>

#include "peavs/error.hpp"
#include "peavs/net/training.hpp"

namespace peavs::net {

Adam::Adam(double lr, double beta1, double beta2, double eps) : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {}

void Adam::step(const std::vector<Parameter*>& params) {
  if (m_.empty()) {
    for (const Parameter* p : params) {
      m_.push_back(Mat::Zero(p->value.rows(), p->value.cols()));
      v_.push_back(Mat::Zero(p->value.rows(), p->value.cols()));
    }
  }
  if (m_.size() != params.size()) throw Error(Errc::ShapeMismatch, "optimizer bound to a different parameter set");
  ++step_;
  const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(step_));
  const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(step_));
  for (std::size_t i = 0; i < params.size(); ++i) {
    Parameter& p = *params[i];
    if (p.grad.size() != p.value.size()) continue;
    m_[i] = beta1_ * m_[i] + (1.0 - beta1_) * p.grad;
    v_[i] = beta2_ * v_[i] + (1.0 - beta2_) * p.grad.cwiseAbs2();
    p.value.array() -= lr_ * (m_[i].array() / c1) / ((v_[i].array() / c2).sqrt() + eps_);
  }
}

ReduceLROnPlateau::ReduceLROnPlateau(double factor, int patience, bool maximize, double threshold)
    : factor_(factor), patience_(patience), maximize_(maximize), threshold_(threshold) {}

bool ReduceLROnPlateau::observe(double metric) {
  const double m = maximize_ ? -metric : metric;
  if (!best_ || m < *best_ - threshold_ * std::abs(*best_)) {
    best_ = m;
    bad_ = 0;
    return false;
  }
  if (++bad_ > patience_) {
    bad_ = 0;
    return true;
  }
  return false;
}

}  // namespace peavs::net

#include "tgnn/optim.hpp"

#include <cmath>

namespace tgnn {

Adam::Adam(AdamConfig config, std::vector<Tensor> params)
    : config_(config), params_(std::move(params)) {
  m_.reserve(params_.size());
  v_.reserve(params_.size());
  for (const Tensor& p : params_) {
    m_.emplace_back(p.size(), 0.0);
    v_.emplace_back(p.size(), 0.0);
  }
}

void Adam::zero_grad() {
  for (Tensor& p : params_) p.zero_grad();
}

void Adam::step() {
  for (const Tensor& p : params_) {
    if (!p.has_grad()) {
      throw StateError("adam step: parameter of shape " + shape_string(p.shape()) +
                       " has no gradient; call backward (or zero_grad) first");
    }
  }
  ++t_;
  const double bc1 = 1.0 - std::pow(config_.beta1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(config_.beta2, static_cast<double>(t_));
  for (std::size_t k = 0; k < params_.size(); ++k) {
    Tensor& p = params_[k];
    auto& vals = p.values();
    auto& grad = p.node()->grad;
    auto& m = m_[k];
    auto& v = v_[k];
    for (std::size_t i = 0; i < vals.size(); ++i) {
      const double g = grad[i] + config_.weight_decay * vals[i];
      m[i] = config_.beta1 * m[i] + (1.0 - config_.beta1) * g;
      v[i] = config_.beta2 * v[i] + (1.0 - config_.beta2) * g * g;
      const double mhat = m[i] / bc1;
      const double vhat = v[i] / bc2;
      vals[i] -= config_.learning_rate * mhat / (std::sqrt(vhat) + config_.epsilon);
      grad[i] = 0.0;
    }
  }
}

}  // namespace tgnn

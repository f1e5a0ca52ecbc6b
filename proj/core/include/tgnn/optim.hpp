#pragma once

#include <cstdint>
#include <vector>

#include "tgnn/tensor.hpp"

namespace tgnn {

struct AdamConfig {
  double learning_rate = 2e-5;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double weight_decay = 1e-4;  // L2 penalty, added to gradients before the moments
};

// Standard Adam with decoupled state per parameter. step() consumes the
// accumulated gradients and zeroes them afterwards.
class Adam {
 public:
  Adam(AdamConfig config, std::vector<Tensor> params);

  void step();       // StateError if any parameter has no gradient buffer
  void zero_grad();  // allocates and zeroes gradient buffers for all params

  const AdamConfig& config() const { return config_; }
  std::size_t steps_taken() const { return t_; }

 private:
  AdamConfig config_;
  std::vector<Tensor> params_;
  std::vector<std::vector<double>> m_;
  std::vector<std::vector<double>> v_;
  std::size_t t_ = 0;
};

}  // namespace tgnn

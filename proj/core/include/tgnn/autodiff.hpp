#pragma once

#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "tgnn/tensor.hpp"

namespace tgnn {

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::string worst_parameter;
  bool passed = false;
};

// Compares analytic gradients of the scalar function f against central finite
// differences with the given step, entry by entry, over every listed
// parameter. f must rebuild its graph on the tape each call and be
// deterministic (dropout off); non-determinism raises VerificationError.
// Relative error per entry: |analytic - numeric| / max(|analytic|, |numeric|, 1e-8).
GradCheckResult grad_check(Tape& tape, const std::function<Tensor()>& f,
                           const std::vector<std::pair<std::string, Tensor>>& params,
                           double step = 1e-5, double tolerance = 1e-4);

}  // namespace tgnn

#include "tgnn/autodiff.hpp"

#include <algorithm>
#include <cmath>

namespace tgnn {

namespace {

double run_scalar(Tape& tape, const std::function<Tensor()>& f) {
  Tensor out = f();
  if (!out.valid() || out.size() != 1) {
    throw VerificationError("grad_check: function under test must return a scalar tensor");
  }
  double v = out.value();
  tape.clear();
  return v;
}

}  // namespace

GradCheckResult grad_check(Tape& tape, const std::function<Tensor()>& f,
                           const std::vector<std::pair<std::string, Tensor>>& params,
                           double step, double tolerance) {
  const double v1 = run_scalar(tape, f);
  const double v2 = run_scalar(tape, f);
  if (v1 != v2) {
    throw VerificationError("grad_check: function under test is not deterministic");
  }

  for (const auto& [name, p] : params) {
    (void)name;
    const_cast<Tensor&>(p).zero_grad();
  }
  Tensor loss = f();
  tape.backward(loss);
  std::vector<std::vector<double>> analytic;
  analytic.reserve(params.size());
  for (const auto& [name, p] : params) {
    (void)name;
    analytic.push_back(p.has_grad() ? p.grad() : std::vector<double>(p.size(), 0.0));
  }
  tape.clear();

  GradCheckResult result;
  for (std::size_t pi = 0; pi < params.size(); ++pi) {
    Tensor p = params[pi].second;
    auto& vals = p.values();
    for (std::size_t i = 0; i < vals.size(); ++i) {
      const double orig = vals[i];
      vals[i] = orig + step;
      const double fp = run_scalar(tape, f);
      vals[i] = orig - step;
      const double fm = run_scalar(tape, f);
      vals[i] = orig;
      const double numeric = (fp - fm) / (2.0 * step);
      const double a = analytic[pi][i];
      const double denom = std::max({std::fabs(a), std::fabs(numeric), 1e-8});
      const double rel = std::fabs(a - numeric) / denom;
      if (rel > result.max_rel_error) {
        result.max_rel_error = rel;
        result.worst_parameter = params[pi].first + "[" + std::to_string(i) + "]";
      }
    }
  }
  result.passed = result.max_rel_error <= tolerance;
  return result;
}

}  // namespace tgnn

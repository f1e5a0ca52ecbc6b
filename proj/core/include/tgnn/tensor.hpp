#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include "tgnn/errors.hpp"

namespace tgnn {

class Tape;

// Storage behind a Tensor handle. Exposed so ops and the tape can reach it;
// application code should stay on the Tensor API.
struct TensorNode {
  std::vector<std::size_t> shape;
  std::vector<double> data;   // row-major
  std::vector<double> grad;   // empty until backward (or zero_grad) touches it
  bool requires_grad = false;
  Tape* tape = nullptr;
};

// Value-semantics handle to a node on a tape; copies alias the same storage.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::shared_ptr<TensorNode> node) : node_(std::move(node)) {}

  bool valid() const { return node_ != nullptr; }

  const std::vector<std::size_t>& shape() const { return node_->shape; }
  std::size_t rank() const { return node_->shape.size(); }
  std::size_t size() const { return node_->data.size(); }
  bool is_scalar() const { return node_->data.size() == 1; }
  std::size_t rows() const;
  std::size_t cols() const;

  const std::vector<double>& values() const { return node_->data; }
  std::vector<double>& values() { return node_->data; }
  double value() const;
  double at(std::size_t i) const { return node_->data.at(i); }
  double at(std::size_t r, std::size_t c) const;

  bool requires_grad() const { return node_->requires_grad; }
  bool has_grad() const { return !node_->grad.empty(); }
  const std::vector<double>& grad() const { return node_->grad; }
  void zero_grad();

  Tape* tape() const { return node_->tape; }
  const std::shared_ptr<TensorNode>& node() const { return node_; }

 private:
  std::shared_ptr<TensorNode> node_;
};

// Records every op applied to its tensors, in execution order, so that
// backward() can replay the chain rule in reverse. One tape per model; a tape
// and its tensors belong to a single logical thread.
class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Tensor make(std::vector<std::size_t> shape, std::vector<double> data,
              bool requires_grad = false);
  Tensor zeros(std::vector<std::size_t> shape, bool requires_grad = false);
  Tensor scalar(double v, bool requires_grad = false);

  // Seeds d(loss)/d(loss) = 1 and applies recorded backward rules in reverse.
  // Gradients accumulate additively; call zero_grad between optimizer steps.
  void backward(const Tensor& loss);

  // Drops recorded operations (and with them all intermediate tensors that
  // nothing else references). Parameter tensors held elsewhere survive.
  void clear() { entries_.clear(); }
  std::size_t recorded_ops() const { return entries_.size(); }

  void record(std::vector<std::shared_ptr<TensorNode>> inputs,
              std::shared_ptr<TensorNode> output, std::function<void()> rule);

 private:
  struct Entry {
    std::vector<std::shared_ptr<TensorNode>> inputs;
    std::shared_ptr<TensorNode> output;
    std::function<void()> rule;
  };
  std::vector<Entry> entries_;
};

// Epsilon used to clamp logarithms so saturated probabilities stay finite.
inline constexpr double kLogEpsilon = 1e-12;

// ---- differentiable ops -------------------------------------------------
// Binary elementwise ops require equal shapes, except that a size-1 tensor
// broadcasts against any shape (scalar-tensor is the only broadcast).

Tensor matmul(const Tensor& a, const Tensor& b);           // [m,k]x[k,n]
Tensor matvec(const Tensor& m, const Tensor& v);           // [r,c]x[c] -> [r]
Tensor transpose(const Tensor& a);
Tensor add(const Tensor& a, const Tensor& b);
Tensor add(const Tensor& a, double s);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double s);
Tensor log_clamped(const Tensor& a);                       // ln(max(x, kLogEpsilon))
Tensor relu(const Tensor& a);
Tensor softmax(const Tensor& a);                           // 1-D whole, 2-D row-wise
Tensor sum(const Tensor& a);                               // -> scalar
Tensor dot(const Tensor& a, const Tensor& b);              // 1-D -> scalar
Tensor column(const Tensor& a, std::size_t j);             // 2-D column -> 1-D
Tensor element(const Tensor& a, std::size_t i);            // -> scalar
Tensor stack(const std::vector<Tensor>& scalars);          // scalars -> 1-D
Tensor concat_columns(const std::vector<Tensor>& parts);   // 1-D/2-D, equal rows
Tensor add_rows(const Tensor& m, const Tensor& v);         // m[i,j] + v[j]
// sum_k weights[k] * m[:, indices[k]] -> 1-D. Accumulation per coordinate is
// value-ordered, so node relabelings reproduce results exactly.
Tensor weighted_columns(const Tensor& m, const std::vector<std::size_t>& indices,
                        const Tensor& weights);
// Mean of the given table rows (1-D of table's column count). Rows are
// summed in index-sorted order; an empty row list yields the zero vector.
Tensor embedding_mean(const Tensor& table, std::vector<std::size_t> rows);
// Inverted dropout with an explicit RNG handle; identity when not training
// or rate == 0.
Tensor dropout(const Tensor& a, double rate, std::mt19937_64& rng, bool training);
// Row-wise layer normalization with trainable gain/bias (variance eps 1e-5).
Tensor layer_norm(const Tensor& a, const Tensor& gain, const Tensor& bias);

std::string shape_string(const std::vector<std::size_t>& shape);

}  // namespace tgnn

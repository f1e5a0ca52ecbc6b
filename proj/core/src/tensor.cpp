#include "tgnn/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <utility>

#include "tgnn/util.hpp"

namespace tgnn {

std::string shape_string(const std::vector<std::size_t>& shape) {
  std::ostringstream ss;
  ss << "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) ss << "x";
    ss << shape[i];
  }
  ss << "]";
  return ss.str();
}

std::size_t Tensor::rows() const {
  if (rank() != 2) throw DimensionError("rows(): tensor is not 2-D, shape " + shape_string(shape()));
  return node_->shape[0];
}

std::size_t Tensor::cols() const {
  if (rank() != 2) throw DimensionError("cols(): tensor is not 2-D, shape " + shape_string(shape()));
  return node_->shape[1];
}

double Tensor::value() const {
  if (!is_scalar()) throw DomainError("value(): tensor is not scalar, shape " + shape_string(shape()));
  return node_->data[0];
}

double Tensor::at(std::size_t r, std::size_t c) const {
  if (rank() != 2) throw DimensionError("at(r,c): tensor is not 2-D");
  return node_->data.at(r * node_->shape[1] + c);
}

void Tensor::zero_grad() {
  node_->grad.assign(node_->data.size(), 0.0);
}

namespace {

std::size_t shape_product(const std::vector<std::size_t>& shape) {
  std::size_t n = 1;
  for (std::size_t d : shape) n *= d;
  return n;
}

void check_finite(const std::vector<double>& v, const char* what) {
  for (double x : v) {
    if (!std::isfinite(x)) {
      throw NumericError(std::string(what) + ": non-finite value produced");
    }
  }
}

std::vector<double>& ensure_grad(TensorNode* n) {
  if (n->grad.empty()) n->grad.assign(n->data.size(), 0.0);
  return n->grad;
}

Tape* common_tape(std::initializer_list<const Tensor*> ts, const char* op) {
  Tape* tape = nullptr;
  for (const Tensor* t : ts) {
    if (!t->valid()) throw DomainError(std::string(op) + ": invalid tensor handle");
    Tape* tt = t->tape();
    if (tape == nullptr) tape = tt;
    if (tt != tape) throw DomainError(std::string(op) + ": tensors belong to different tapes");
  }
  if (tape == nullptr) throw DomainError(std::string(op) + ": tensors are not attached to a tape");
  return tape;
}

bool any_requires(std::initializer_list<const Tensor*> ts) {
  for (const Tensor* t : ts) {
    if (t->requires_grad()) return true;
  }
  return false;
}

}  // namespace

Tensor Tape::make(std::vector<std::size_t> shape, std::vector<double> data, bool requires_grad) {
  for (std::size_t d : shape) {
    if (d == 0) throw DimensionError("tensor dimensions must be positive, got " + shape_string(shape));
  }
  if (shape_product(shape) != data.size()) {
    throw DimensionError("shape " + shape_string(shape) + " does not match data length " +
                         std::to_string(data.size()));
  }
  check_finite(data, "make");
  auto node = std::make_shared<TensorNode>();
  node->shape = std::move(shape);
  node->data = std::move(data);
  node->requires_grad = requires_grad;
  node->tape = this;
  return Tensor(std::move(node));
}

Tensor Tape::zeros(std::vector<std::size_t> shape, bool requires_grad) {
  std::size_t n = shape_product(shape);
  return make(std::move(shape), std::vector<double>(n, 0.0), requires_grad);
}

Tensor Tape::scalar(double v, bool requires_grad) {
  return make({}, {v}, requires_grad);
}

void Tape::record(std::vector<std::shared_ptr<TensorNode>> inputs,
                  std::shared_ptr<TensorNode> output, std::function<void()> rule) {
  entries_.push_back(Entry{std::move(inputs), std::move(output), std::move(rule)});
}

void Tape::backward(const Tensor& loss) {
  if (!loss.valid()) throw DomainError("backward: invalid tensor handle");
  if (loss.size() != 1) {
    throw DomainError("backward requires a scalar loss, got shape " + shape_string(loss.shape()));
  }
  // Op outputs carry transient per-call gradients; only leaves (parameters,
  // constants) accumulate across backward calls.
  for (Entry& e : entries_) e.output->grad.clear();
  ensure_grad(loss.node().get());
  loss.node()->grad[0] += 1.0;
  for (auto it = entries_.rbegin(); it != entries_.rend(); ++it) {
    // Nodes whose grad was never seeded cannot influence the loss.
    if (!it->output->grad.empty()) it->rule();
  }
}

namespace {

// Shared builder: validates output data, attaches the node, records the rule.
Tensor emit(Tape* tape, std::vector<std::size_t> shape, std::vector<double> data,
            std::vector<std::shared_ptr<TensorNode>> inputs, bool requires_grad,
            const char* op, std::function<void(TensorNode*)> rule) {
  check_finite(data, op);
  auto node = std::make_shared<TensorNode>();
  node->shape = std::move(shape);
  node->data = std::move(data);
  node->requires_grad = requires_grad;
  node->tape = tape;
  TensorNode* out = node.get();
  tape->record(std::move(inputs), node, [out, rule = std::move(rule)] { rule(out); });
  return Tensor(node);
}

}  // namespace

Tensor matmul(const Tensor& a, const Tensor& b) {
  Tape* tape = common_tape({&a, &b}, "matmul");
  if (a.rank() != 2 || b.rank() != 2) {
    throw DimensionError("matmul expects 2-D tensors, got " + shape_string(a.shape()) + " and " +
                         shape_string(b.shape()));
  }
  std::size_t m = a.rows(), k = a.cols(), k2 = b.rows(), n = b.cols();
  if (k != k2) {
    throw DimensionError("matmul inner dimensions differ: " + shape_string(a.shape()) + " vs " +
                         shape_string(b.shape()));
  }
  std::vector<double> out(m * n, 0.0);
  const auto& av = a.values();
  const auto& bv = b.values();
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t p = 0; p < k; ++p) {
      double aip = av[i * k + p];
      for (std::size_t j = 0; j < n; ++j) out[i * n + j] += aip * bv[p * n + j];
    }
  }
  auto an = a.node(), bn = b.node();
  return emit(tape, {m, n}, std::move(out), {an, bn}, any_requires({&a, &b}), "matmul",
              [an, bn, m, k, n](TensorNode* o) {
                const auto& g = o->grad;
                auto& ga = ensure_grad(an.get());
                auto& gb = ensure_grad(bn.get());
                const auto& av = an->data;
                const auto& bv = bn->data;
                for (std::size_t i = 0; i < m; ++i) {
                  for (std::size_t p = 0; p < k; ++p) {
                    double acc = 0.0;
                    for (std::size_t j = 0; j < n; ++j) acc += g[i * n + j] * bv[p * n + j];
                    ga[i * k + p] += acc;
                  }
                }
                for (std::size_t p = 0; p < k; ++p) {
                  for (std::size_t j = 0; j < n; ++j) {
                    double acc = 0.0;
                    for (std::size_t i = 0; i < m; ++i) acc += av[i * k + p] * g[i * n + j];
                    gb[p * n + j] += acc;
                  }
                }
              });
}

Tensor matvec(const Tensor& m, const Tensor& v) {
  Tape* tape = common_tape({&m, &v}, "matvec");
  if (m.rank() != 2 || v.rank() != 1) {
    throw DimensionError("matvec expects [r,c] and [c], got " + shape_string(m.shape()) + " and " +
                         shape_string(v.shape()));
  }
  std::size_t r = m.rows(), c = m.cols();
  if (v.size() != c) {
    throw DimensionError("matvec dimensions differ: " + shape_string(m.shape()) + " vs " +
                         shape_string(v.shape()));
  }
  std::vector<double> out(r, 0.0);
  const auto& mv = m.values();
  const auto& vv = v.values();
  for (std::size_t i = 0; i < r; ++i) {
    double acc = 0.0;
    for (std::size_t j = 0; j < c; ++j) acc += mv[i * c + j] * vv[j];
    out[i] = acc;
  }
  auto mn = m.node(), vn = v.node();
  return emit(tape, {r}, std::move(out), {mn, vn}, any_requires({&m, &v}), "matvec",
              [mn, vn, r, c](TensorNode* o) {
                const auto& g = o->grad;
                auto& gm = ensure_grad(mn.get());
                auto& gv = ensure_grad(vn.get());
                for (std::size_t i = 0; i < r; ++i) {
                  for (std::size_t j = 0; j < c; ++j) {
                    gm[i * c + j] += g[i] * vn->data[j];
                    gv[j] += mn->data[i * c + j] * g[i];
                  }
                }
              });
}

Tensor transpose(const Tensor& a) {
  Tape* tape = common_tape({&a}, "transpose");
  if (a.rank() != 2) throw DimensionError("transpose expects a 2-D tensor, got " + shape_string(a.shape()));
  std::size_t m = a.rows(), n = a.cols();
  std::vector<double> out(m * n);
  const auto& av = a.values();
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) out[j * m + i] = av[i * n + j];
  }
  auto an = a.node();
  return emit(tape, {n, m}, std::move(out), {an}, a.requires_grad(), "transpose",
              [an, m, n](TensorNode* o) {
                auto& ga = ensure_grad(an.get());
                for (std::size_t i = 0; i < m; ++i) {
                  for (std::size_t j = 0; j < n; ++j) ga[i * n + j] += o->grad[j * m + i];
                }
              });
}

namespace {

enum class Broadcast { None, LeftScalar, RightScalar };

Broadcast binary_broadcast(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() == b.shape()) return Broadcast::None;
  if (b.size() == 1) return Broadcast::RightScalar;
  if (a.size() == 1) return Broadcast::LeftScalar;
  throw DimensionError(std::string(op) + ": shapes differ, " + shape_string(a.shape()) + " vs " +
                       shape_string(b.shape()));
}

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) {
  Tape* tape = common_tape({&a, &b}, "add");
  Broadcast bc = binary_broadcast(a, b, "add");
  const Tensor& big = (bc == Broadcast::LeftScalar) ? b : a;
  std::vector<double> out(big.size());
  const auto& av = a.values();
  const auto& bv = b.values();
  for (std::size_t i = 0; i < out.size(); ++i) {
    double x = (bc == Broadcast::LeftScalar) ? av[0] : av[i];
    double y = (bc == Broadcast::RightScalar) ? bv[0] : bv[i];
    out[i] = x + y;
  }
  auto an = a.node(), bn = b.node();
  return emit(tape, big.shape(), std::move(out), {an, bn}, any_requires({&a, &b}), "add",
              [an, bn, bc](TensorNode* o) {
                auto& ga = ensure_grad(an.get());
                auto& gb = ensure_grad(bn.get());
                for (std::size_t i = 0; i < o->grad.size(); ++i) {
                  ga[bc == Broadcast::LeftScalar ? 0 : i] += o->grad[i];
                  gb[bc == Broadcast::RightScalar ? 0 : i] += o->grad[i];
                }
              });
}

Tensor add(const Tensor& a, double s) {
  Tape* tape = common_tape({&a}, "add");
  std::vector<double> out = a.values();
  for (double& x : out) x += s;
  auto an = a.node();
  return emit(tape, a.shape(), std::move(out), {an}, a.requires_grad(), "add",
              [an](TensorNode* o) {
                auto& ga = ensure_grad(an.get());
                for (std::size_t i = 0; i < o->grad.size(); ++i) ga[i] += o->grad[i];
              });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  Tape* tape = common_tape({&a, &b}, "sub");
  Broadcast bc = binary_broadcast(a, b, "sub");
  const Tensor& big = (bc == Broadcast::LeftScalar) ? b : a;
  std::vector<double> out(big.size());
  const auto& av = a.values();
  const auto& bv = b.values();
  for (std::size_t i = 0; i < out.size(); ++i) {
    double x = (bc == Broadcast::LeftScalar) ? av[0] : av[i];
    double y = (bc == Broadcast::RightScalar) ? bv[0] : bv[i];
    out[i] = x - y;
  }
  auto an = a.node(), bn = b.node();
  return emit(tape, big.shape(), std::move(out), {an, bn}, any_requires({&a, &b}), "sub",
              [an, bn, bc](TensorNode* o) {
                auto& ga = ensure_grad(an.get());
                auto& gb = ensure_grad(bn.get());
                for (std::size_t i = 0; i < o->grad.size(); ++i) {
                  ga[bc == Broadcast::LeftScalar ? 0 : i] += o->grad[i];
                  gb[bc == Broadcast::RightScalar ? 0 : i] -= o->grad[i];
                }
              });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  Tape* tape = common_tape({&a, &b}, "mul");
  Broadcast bc = binary_broadcast(a, b, "mul");
  const Tensor& big = (bc == Broadcast::LeftScalar) ? b : a;
  std::vector<double> out(big.size());
  const auto& av = a.values();
  const auto& bv = b.values();
  for (std::size_t i = 0; i < out.size(); ++i) {
    double x = (bc == Broadcast::LeftScalar) ? av[0] : av[i];
    double y = (bc == Broadcast::RightScalar) ? bv[0] : bv[i];
    out[i] = x * y;
  }
  auto an = a.node(), bn = b.node();
  return emit(tape, big.shape(), std::move(out), {an, bn}, any_requires({&a, &b}), "mul",
              [an, bn, bc](TensorNode* o) {
                auto& ga = ensure_grad(an.get());
                auto& gb = ensure_grad(bn.get());
                for (std::size_t i = 0; i < o->grad.size(); ++i) {
                  double x = (bc == Broadcast::LeftScalar) ? an->data[0] : an->data[i];
                  double y = (bc == Broadcast::RightScalar) ? bn->data[0] : bn->data[i];
                  ga[bc == Broadcast::LeftScalar ? 0 : i] += o->grad[i] * y;
                  gb[bc == Broadcast::RightScalar ? 0 : i] += o->grad[i] * x;
                }
              });
}

Tensor scale(const Tensor& a, double s) {
  Tape* tape = common_tape({&a}, "scale");
  std::vector<double> out = a.values();
  for (double& x : out) x *= s;
  auto an = a.node();
  return emit(tape, a.shape(), std::move(out), {an}, a.requires_grad(), "scale",
              [an, s](TensorNode* o) {
                auto& ga = ensure_grad(an.get());
                for (std::size_t i = 0; i < o->grad.size(); ++i) ga[i] += s * o->grad[i];
              });
}

Tensor log_clamped(const Tensor& a) {
  Tape* tape = common_tape({&a}, "log");
  std::vector<double> out(a.size());
  const auto& av = a.values();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::log(std::max(av[i], kLogEpsilon));
  auto an = a.node();
  return emit(tape, a.shape(), std::move(out), {an}, a.requires_grad(), "log",
              [an](TensorNode* o) {
                auto& ga = ensure_grad(an.get());
                for (std::size_t i = 0; i < o->grad.size(); ++i) {
                  if (an->data[i] >= kLogEpsilon) ga[i] += o->grad[i] / an->data[i];
                }
              });
}

Tensor relu(const Tensor& a) {
  Tape* tape = common_tape({&a}, "relu");
  std::vector<double> out(a.size());
  const auto& av = a.values();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] > 0.0 ? av[i] : 0.0;
  auto an = a.node();
  return emit(tape, a.shape(), std::move(out), {an}, a.requires_grad(), "relu",
              [an](TensorNode* o) {
                auto& ga = ensure_grad(an.get());
                for (std::size_t i = 0; i < o->grad.size(); ++i) {
                  if (an->data[i] > 0.0) ga[i] += o->grad[i];
                }
              });
}

Tensor softmax(const Tensor& a) {
  Tape* tape = common_tape({&a}, "softmax");
  if (a.rank() != 1 && a.rank() != 2) {
    throw DimensionError("softmax expects a 1-D or 2-D tensor, got " + shape_string(a.shape()));
  }
  if (a.size() == 0) throw DomainError("softmax of empty tensor");
  std::size_t rows = (a.rank() == 2) ? a.rows() : 1;
  std::size_t n = (a.rank() == 2) ? a.cols() : a.size();
  std::vector<double> out(a.size());
  const auto& av = a.values();
  for (std::size_t r = 0; r < rows; ++r) {
    const double* x = av.data() + r * n;
    double m = x[0];
    for (std::size_t j = 1; j < n; ++j) m = std::max(m, x[j]);
    std::vector<double> e(n);
    for (std::size_t j = 0; j < n; ++j) e[j] = std::exp(x[j] - m);
    double z = ordered_sum(e);
    for (std::size_t j = 0; j < n; ++j) out[r * n + j] = e[j] / z;
  }
  auto an = a.node();
  return emit(tape, a.shape(), std::move(out), {an}, a.requires_grad(), "softmax",
              [an, rows, n](TensorNode* o) {
                auto& ga = ensure_grad(an.get());
                for (std::size_t r = 0; r < rows; ++r) {
                  const double* s = o->data.data() + r * n;
                  const double* g = o->grad.data() + r * n;
                  double inner = 0.0;
                  for (std::size_t j = 0; j < n; ++j) inner += g[j] * s[j];
                  for (std::size_t j = 0; j < n; ++j) ga[r * n + j] += s[j] * (g[j] - inner);
                }
              });
}

Tensor sum(const Tensor& a) {
  Tape* tape = common_tape({&a}, "sum");
  double acc = 0.0;
  for (double x : a.values()) acc += x;
  auto an = a.node();
  return emit(tape, {}, {acc}, {an}, a.requires_grad(), "sum",
              [an](TensorNode* o) {
                auto& ga = ensure_grad(an.get());
                for (double& g : ga) g += o->grad[0];
              });
}

Tensor dot(const Tensor& a, const Tensor& b) {
  Tape* tape = common_tape({&a, &b}, "dot");
  if (a.rank() != 1 || b.rank() != 1 || a.size() != b.size()) {
    throw DimensionError("dot expects equal-length 1-D tensors, got " + shape_string(a.shape()) +
                         " and " + shape_string(b.shape()));
  }
  double acc = 0.0;
  const auto& av = a.values();
  const auto& bv = b.values();
  for (std::size_t i = 0; i < av.size(); ++i) acc += av[i] * bv[i];
  auto an = a.node(), bn = b.node();
  return emit(tape, {}, {acc}, {an, bn}, any_requires({&a, &b}), "dot",
              [an, bn](TensorNode* o) {
                auto& ga = ensure_grad(an.get());
                auto& gb = ensure_grad(bn.get());
                double g = o->grad[0];
                for (std::size_t i = 0; i < ga.size(); ++i) {
                  ga[i] += g * bn->data[i];
                  gb[i] += g * an->data[i];
                }
              });
}

Tensor column(const Tensor& a, std::size_t j) {
  Tape* tape = common_tape({&a}, "column");
  if (a.rank() != 2) throw DimensionError("column expects a 2-D tensor, got " + shape_string(a.shape()));
  std::size_t m = a.rows(), n = a.cols();
  if (j >= n) throw DimensionError("column index " + std::to_string(j) + " out of range for " + shape_string(a.shape()));
  std::vector<double> out(m);
  for (std::size_t i = 0; i < m; ++i) out[i] = a.values()[i * n + j];
  auto an = a.node();
  return emit(tape, {m}, std::move(out), {an}, a.requires_grad(), "column",
              [an, j, m, n](TensorNode* o) {
                auto& ga = ensure_grad(an.get());
                for (std::size_t i = 0; i < m; ++i) ga[i * n + j] += o->grad[i];
              });
}

Tensor element(const Tensor& a, std::size_t i) {
  Tape* tape = common_tape({&a}, "element");
  if (i >= a.size()) {
    throw DimensionError("element index " + std::to_string(i) + " out of range for " + shape_string(a.shape()));
  }
  auto an = a.node();
  return emit(tape, {}, {a.values()[i]}, {an}, a.requires_grad(), "element",
              [an, i](TensorNode* o) { ensure_grad(an.get())[i] += o->grad[0]; });
}

Tensor stack(const std::vector<Tensor>& scalars) {
  if (scalars.empty()) throw DomainError("stack of zero tensors");
  std::vector<const Tensor*> ptrs;
  Tape* tape = nullptr;
  bool rg = false;
  std::vector<double> out;
  std::vector<std::shared_ptr<TensorNode>> inputs;
  for (const Tensor& t : scalars) {
    if (!t.valid() || t.size() != 1) throw DomainError("stack expects scalar tensors");
    if (tape == nullptr) tape = t.tape();
    if (t.tape() != tape) throw DomainError("stack: tensors belong to different tapes");
    out.push_back(t.values()[0]);
    rg = rg || t.requires_grad();
    inputs.push_back(t.node());
  }
  auto nodes = inputs;
  return emit(tape, {scalars.size()}, std::move(out), std::move(inputs), rg, "stack",
              [nodes](TensorNode* o) {
                for (std::size_t k = 0; k < nodes.size(); ++k) {
                  ensure_grad(nodes[k].get())[0] += o->grad[k];
                }
              });
}

Tensor concat_columns(const std::vector<Tensor>& parts) {
  if (parts.empty()) throw DomainError("concat_columns of zero tensors");
  Tape* tape = nullptr;
  std::size_t rows = 0;
  std::size_t total_cols = 0;
  bool rg = false;
  std::vector<std::size_t> widths;
  for (const Tensor& t : parts) {
    if (!t.valid()) throw DomainError("concat_columns: invalid tensor handle");
    if (tape == nullptr) tape = t.tape();
    if (t.tape() != tape) throw DomainError("concat_columns: tensors belong to different tapes");
    std::size_t r = (t.rank() == 1) ? t.size() : t.rows();
    std::size_t c = (t.rank() == 1) ? 1 : t.cols();
    if (t.rank() > 2) throw DimensionError("concat_columns expects 1-D or 2-D tensors");
    if (rows == 0) rows = r;
    if (r != rows) {
      throw DimensionError("concat_columns: row counts differ, " + std::to_string(rows) + " vs " +
                           std::to_string(r));
    }
    widths.push_back(c);
    total_cols += c;
    rg = rg || t.requires_grad();
  }
  std::vector<double> out(rows * total_cols);
  std::size_t col0 = 0;
  for (std::size_t k = 0; k < parts.size(); ++k) {
    const auto& v = parts[k].values();
    for (std::size_t i = 0; i < rows; ++i) {
      for (std::size_t j = 0; j < widths[k]; ++j) out[i * total_cols + col0 + j] = v[i * widths[k] + j];
    }
    col0 += widths[k];
  }
  std::vector<std::shared_ptr<TensorNode>> inputs;
  for (const Tensor& t : parts) inputs.push_back(t.node());
  auto nodes = inputs;
  return emit(tape, {rows, total_cols}, std::move(out), std::move(inputs), rg, "concat_columns",
              [nodes, widths, rows, total_cols](TensorNode* o) {
                std::size_t col0 = 0;
                for (std::size_t k = 0; k < nodes.size(); ++k) {
                  auto& g = ensure_grad(nodes[k].get());
                  for (std::size_t i = 0; i < rows; ++i) {
                    for (std::size_t j = 0; j < widths[k]; ++j) {
                      g[i * widths[k] + j] += o->grad[i * total_cols + col0 + j];
                    }
                  }
                  col0 += widths[k];
                }
              });
}

Tensor add_rows(const Tensor& m, const Tensor& v) {
  Tape* tape = common_tape({&m, &v}, "add_rows");
  if (m.rank() != 2 || v.rank() != 1 || v.size() != m.cols()) {
    throw DimensionError("add_rows expects [r,c] and [c], got " + shape_string(m.shape()) +
                         " and " + shape_string(v.shape()));
  }
  std::size_t r = m.rows(), c = m.cols();
  std::vector<double> out(m.values());
  for (std::size_t i = 0; i < r; ++i) {
    for (std::size_t j = 0; j < c; ++j) out[i * c + j] += v.values()[j];
  }
  auto mn = m.node(), vn = v.node();
  return emit(tape, {r, c}, std::move(out), {mn, vn}, any_requires({&m, &v}), "add_rows",
              [mn, vn, r, c](TensorNode* o) {
                auto& gm = ensure_grad(mn.get());
                auto& gv = ensure_grad(vn.get());
                for (std::size_t i = 0; i < r; ++i) {
                  for (std::size_t j = 0; j < c; ++j) {
                    gm[i * c + j] += o->grad[i * c + j];
                    gv[j] += o->grad[i * c + j];
                  }
                }
              });
}

Tensor weighted_columns(const Tensor& m, const std::vector<std::size_t>& indices,
                        const Tensor& weights) {
  Tape* tape = common_tape({&m, &weights}, "weighted_columns");
  if (m.rank() != 2) throw DimensionError("weighted_columns expects a 2-D tensor");
  if (weights.rank() != 1 || weights.size() != indices.size()) {
    throw DimensionError("weighted_columns: weight count " + std::to_string(weights.size()) +
                         " does not match index count " + std::to_string(indices.size()));
  }
  std::size_t d = m.rows(), n = m.cols();
  for (std::size_t j : indices) {
    if (j >= n) throw DimensionError("weighted_columns: column index out of range");
  }
  const auto& mv = m.values();
  const auto& wv = weights.values();
  std::vector<double> out(d, 0.0);
  std::vector<double> terms(indices.size());
  for (std::size_t i = 0; i < d; ++i) {
    for (std::size_t k = 0; k < indices.size(); ++k) terms[k] = wv[k] * mv[i * n + indices[k]];
    out[i] = ordered_sum(terms);
  }
  auto mn = m.node(), wn = weights.node();
  return emit(tape, {d}, std::move(out), {mn, wn}, any_requires({&m, &weights}), "weighted_columns",
              [mn, wn, indices, d, n](TensorNode* o) {
                auto& gm = ensure_grad(mn.get());
                auto& gw = ensure_grad(wn.get());
                for (std::size_t k = 0; k < indices.size(); ++k) {
                  double w = wn->data[k];
                  double acc = 0.0;
                  for (std::size_t i = 0; i < d; ++i) {
                    gm[i * n + indices[k]] += w * o->grad[i];
                    acc += mn->data[i * n + indices[k]] * o->grad[i];
                  }
                  gw[k] += acc;
                }
              });
}

Tensor embedding_mean(const Tensor& table, std::vector<std::size_t> rows) {
  Tape* tape = common_tape({&table}, "embedding_mean");
  if (table.rank() != 2) throw DimensionError("embedding_mean expects a 2-D table");
  std::size_t v = table.rows(), d = table.cols();
  for (std::size_t r : rows) {
    if (r >= v) throw DimensionError("embedding_mean: row index out of range");
  }
  if (rows.empty()) return tape->zeros({d});
  // Index-sorted accumulation: the result is a function of the row multiset.
  std::sort(rows.begin(), rows.end());
  std::vector<double> out(d, 0.0);
  const auto& tv = table.values();
  for (std::size_t r : rows) {
    for (std::size_t i = 0; i < d; ++i) out[i] += tv[r * d + i];
  }
  double inv = 1.0 / static_cast<double>(rows.size());
  for (double& x : out) x *= inv;
  auto tn = table.node();
  return emit(tape, {d}, std::move(out), {tn}, table.requires_grad(), "embedding_mean",
              [tn, rows, d, inv](TensorNode* o) {
                auto& g = ensure_grad(tn.get());
                for (std::size_t r : rows) {
                  for (std::size_t i = 0; i < d; ++i) g[r * d + i] += inv * o->grad[i];
                }
              });
}

Tensor dropout(const Tensor& a, double rate, std::mt19937_64& rng, bool training) {
  if (rate < 0.0 || rate >= 1.0) throw DomainError("dropout rate must be in [0, 1)");
  if (!training || rate == 0.0) return a;
  Tape* tape = common_tape({&a}, "dropout");
  double keep = 1.0 - rate;
  auto mask = std::make_shared<std::vector<double>>(a.size());
  std::vector<double> out(a.size());
  const auto& av = a.values();
  for (std::size_t i = 0; i < out.size(); ++i) {
    bool kept = uniform_real(rng, 0.0, 1.0) >= rate;
    (*mask)[i] = kept ? 1.0 / keep : 0.0;
    out[i] = av[i] * (*mask)[i];
  }
  auto an = a.node();
  return emit(tape, a.shape(), std::move(out), {an}, a.requires_grad(), "dropout",
              [an, mask](TensorNode* o) {
                auto& ga = ensure_grad(an.get());
                for (std::size_t i = 0; i < o->grad.size(); ++i) ga[i] += o->grad[i] * (*mask)[i];
              });
}

Tensor layer_norm(const Tensor& a, const Tensor& gain, const Tensor& bias) {
  Tape* tape = common_tape({&a, &gain, &bias}, "layer_norm");
  std::size_t rows = (a.rank() == 2) ? a.rows() : 1;
  std::size_t n = (a.rank() == 2) ? a.cols() : a.size();
  if (gain.size() != n || bias.size() != n) {
    throw DimensionError("layer_norm: gain/bias must have length " + std::to_string(n));
  }
  constexpr double eps = 1e-5;
  std::vector<double> out(a.size());
  auto xhat = std::make_shared<std::vector<double>>(a.size());
  auto inv_sigma = std::make_shared<std::vector<double>>(rows);
  const auto& av = a.values();
  const auto& gv = gain.values();
  const auto& bv = bias.values();
  for (std::size_t r = 0; r < rows; ++r) {
    const double* x = av.data() + r * n;
    double mu = 0.0;
    for (std::size_t j = 0; j < n; ++j) mu += x[j];
    mu /= static_cast<double>(n);
    double var = 0.0;
    for (std::size_t j = 0; j < n; ++j) var += (x[j] - mu) * (x[j] - mu);
    var /= static_cast<double>(n);
    double is = 1.0 / std::sqrt(var + eps);
    (*inv_sigma)[r] = is;
    for (std::size_t j = 0; j < n; ++j) {
      double xh = (x[j] - mu) * is;
      (*xhat)[r * n + j] = xh;
      out[r * n + j] = gv[j] * xh + bv[j];
    }
  }
  auto an = a.node(), gn = gain.node(), bn = bias.node();
  bool rg = any_requires({&a, &gain, &bias});
  return emit(tape, a.shape(), std::move(out), {an, gn, bn}, rg, "layer_norm",
              [an, gn, bn, xhat, inv_sigma, rows, n](TensorNode* o) {
                auto& ga = ensure_grad(an.get());
                auto& gg = ensure_grad(gn.get());
                auto& gb = ensure_grad(bn.get());
                for (std::size_t r = 0; r < rows; ++r) {
                  const double* g = o->grad.data() + r * n;
                  const double* xh = xhat->data() + r * n;
                  double is = (*inv_sigma)[r];
                  double sum_dxhat = 0.0, sum_dxhat_xhat = 0.0;
                  for (std::size_t j = 0; j < n; ++j) {
                    double dxh = g[j] * gn->data[j];
                    sum_dxhat += dxh;
                    sum_dxhat_xhat += dxh * xh[j];
                    gg[j] += g[j] * xh[j];
                    gb[j] += g[j];
                  }
                  double inv_n = 1.0 / static_cast<double>(n);
                  for (std::size_t j = 0; j < n; ++j) {
                    double dxh = g[j] * gn->data[j];
                    ga[r * n + j] += is * (dxh - inv_n * sum_dxhat - xh[j] * inv_n * sum_dxhat_xhat);
                  }
                }
              });
}

}  // namespace tgnn

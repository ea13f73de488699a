#include "sns/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "sns/error.hpp"

namespace sns {

using detail::Node;

std::string shape_to_string(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << 'x';
    os << shape[i];
  }
  os << ']';
  return os.str();
}

std::size_t shape_numel(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

void Node::ensure_grad() {
  if (grad.size() != values.size()) grad.assign(values.size(), 0.0);
}

namespace {

thread_local Tape* g_active_tape = nullptr;

void check_finite(const std::vector<double>& values, const char* op) {
  for (double v : values) {
    if (!std::isfinite(v)) {
      throw NumericError(std::string("non-finite value produced by ") + op);
    }
  }
}

const Node& node_of(const Tensor& t, const char* op) {
  if (!t.defined()) throw Error(std::string(op) + ": undefined tensor");
  return *t.node();
}

// Builds the output node and, when a tape is recording and any input needs
// gradients, records the backward rule produced by `make_backward(out)`.
template <class MakeBackward>
Tensor finish(const char* op, Shape shape, std::vector<double> values,
              std::vector<std::shared_ptr<Node>> inputs, MakeBackward&& make_backward) {
  check_finite(values, op);
  auto node = std::make_shared<Node>();
  node->shape = std::move(shape);
  node->values = std::move(values);
  Tensor out(node);
  Tape* tape = Tape::active();
  const bool needs_grad =
      std::any_of(inputs.begin(), inputs.end(), [](const auto& n) { return n->requires_grad; });
  if (tape != nullptr && needs_grad) {
    node->requires_grad = true;
    node->is_leaf = false;
    Tape::BackwardFn fn = make_backward(node.get());
    tape->record(out, std::move(inputs), std::move(fn));
  }
  return out;
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() != b.shape()) {
    throw DimensionError(std::string(op) + ": shape mismatch " + shape_to_string(a.shape()) +
                         " vs " + shape_to_string(b.shape()));
  }
}

void require_rank2(const Tensor& a, const char* op) {
  if (a.rank() != 2) {
    throw DimensionError(std::string(op) + ": expected rank-2 tensor, got " +
                         shape_to_string(a.shape()));
  }
}

double stable_sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double stable_softplus(double x) {
  return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

// Pointwise op where the local derivative is a function of (x, y).
template <class Fwd, class Deriv>
Tensor unary(const char* op, const Tensor& a, Fwd fwd, Deriv deriv) {
  const Node& an = node_of(a, op);
  std::vector<double> out(an.values.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = fwd(an.values[i]);
  return finish(op, an.shape, std::move(out), {a.node()}, [a_node = a.node().get(), deriv](Node* o) {
    return [a_node, o, deriv](std::span<const double> g) {
      if (!a_node->requires_grad) return;
      a_node->ensure_grad();
      for (std::size_t i = 0; i < g.size(); ++i) {
        a_node->grad[i] += g[i] * deriv(a_node->values[i], o->values[i]);
      }
    };
  });
}

}  // namespace

// ---- Tensor -----------------------------------------------------------

Tensor Tensor::zeros(Shape shape) { return full(std::move(shape), 0.0); }

Tensor Tensor::full(Shape shape, double value) {
  const std::size_t n = shape_numel(shape);
  return from(std::move(shape), std::vector<double>(n, value));
}

Tensor Tensor::from(Shape shape, std::vector<double> values) {
  if (shape_numel(shape) != values.size()) {
    throw DimensionError("tensor of shape " + shape_to_string(shape) + " cannot hold " +
                         std::to_string(values.size()) + " values");
  }
  check_finite(values, "Tensor::from");
  auto node = std::make_shared<Node>();
  node->shape = std::move(shape);
  node->values = std::move(values);
  return Tensor(std::move(node));
}

Tensor Tensor::scalar(double value) { return from({}, {value}); }

Tensor Tensor::row(std::vector<double> values) {
  const std::size_t n = values.size();
  return from({1, n}, std::move(values));
}

Tensor Tensor::parameter(Shape shape, std::vector<double> values) {
  Tensor t = from(std::move(shape), std::move(values));
  t.node_->requires_grad = true;
  return t;
}

const Shape& Tensor::shape() const { return node_of(*this, "shape").shape; }

std::size_t Tensor::size() const { return node_of(*this, "size").values.size(); }

std::size_t Tensor::dim(std::size_t axis) const {
  const Shape& s = shape();
  if (axis >= s.size()) {
    throw DimensionError("axis " + std::to_string(axis) + " out of range for " + shape_to_string(s));
  }
  return s[axis];
}

std::span<const double> Tensor::values() const { return node_of(*this, "values").values; }

std::span<double> Tensor::mutable_values() {
  node_of(*this, "mutable_values");
  return node_->values;
}

double Tensor::item() const {
  if (size() != 1) throw DimensionError("item() on tensor of shape " + shape_to_string(shape()));
  return node_->values[0];
}

double Tensor::at(std::size_t r, std::size_t c) const {
  const Shape& s = shape();
  if (s.size() != 2 || r >= s[0] || c >= s[1]) {
    throw DimensionError("at(" + std::to_string(r) + "," + std::to_string(c) + ") on " +
                         shape_to_string(s));
  }
  return node_->values[r * s[1] + c];
}

bool Tensor::requires_grad() const { return node_of(*this, "requires_grad").requires_grad; }

bool Tensor::has_grad() const { return !node_of(*this, "has_grad").grad.empty(); }

std::span<const double> Tensor::grad() const {
  node_of(*this, "grad");
  node_->ensure_grad();
  return node_->grad;
}

std::span<double> Tensor::mutable_grad() {
  node_of(*this, "mutable_grad");
  node_->ensure_grad();
  return node_->grad;
}

void Tensor::zero_grad() {
  node_of(*this, "zero_grad");
  node_->grad.assign(node_->values.size(), 0.0);
}

Tensor Tensor::detach() const { return from(shape(), std::vector<double>(values().begin(), values().end())); }

// ---- Tape -------------------------------------------------------------

Tape::~Tape() {
  if (g_active_tape == this) g_active_tape = nullptr;
}

Tape::Recording::Recording(Tape& tape) : previous_(g_active_tape) { g_active_tape = &tape; }

Tape::Recording::~Recording() { g_active_tape = previous_; }

Tape* Tape::active() { return g_active_tape; }

void Tape::record(const Tensor& output, std::vector<std::shared_ptr<Node>> inputs,
                  BackwardFn backward) {
  Node& out = *output.node();
  out.tape = this;
  out.tape_index = entries_.size();
  entries_.push_back({output.node(), std::move(inputs), std::move(backward)});
}

void Tape::clear() { entries_.clear(); }

void Tape::backward(const Tensor& loss) {
  if (!loss.defined()) throw Error("backward: undefined loss tensor");
  if (loss.size() != 1) {
    throw DimensionError("backward: loss must be scalar, got shape " +
                         shape_to_string(loss.shape()));
  }
  const auto& root = loss.node();
  if (root->tape != this || root->tape_index >= entries_.size() ||
      entries_[root->tape_index].output != root) {
    throw Error("backward: loss was not produced under this tape (detached tensor)");
  }
  const std::size_t last = root->tape_index;
  for (std::size_t i = 0; i <= last; ++i) {
    Node& out = *entries_[i].output;
    out.grad.assign(out.values.size(), 0.0);
  }
  root->grad[0] = 1.0;
  for (std::size_t i = last + 1; i-- > 0;) {
    Entry& e = entries_[i];
    e.backward(e.output->grad);
  }
}

// ---- linear algebra ---------------------------------------------------

Tensor matmul(const Tensor& a, const Tensor& b) {
  require_rank2(a, "matmul");
  require_rank2(b, "matmul");
  const std::size_t m = a.dim(0), k = a.dim(1), n = b.dim(1);
  if (b.dim(0) != k) {
    throw DimensionError("matmul: inner extents differ, " + shape_to_string(a.shape()) + " x " +
                         shape_to_string(b.shape()));
  }
  const auto av = a.values();
  const auto bv = b.values();
  std::vector<double> out(m * n, 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    double* orow = out.data() + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const double aip = av[i * k + p];
      if (aip == 0.0) continue;  // pooled inputs are mostly zero
      const double* brow = bv.data() + p * n;
      for (std::size_t j = 0; j < n; ++j) orow[j] += aip * brow[j];
    }
  }
  return finish("matmul", {m, n}, std::move(out), {a.node(), b.node()},
                [an = a.node().get(), bn = b.node().get(), m, k, n](Node*) {
                  return [an, bn, m, k, n](std::span<const double> g) {
                    if (an->requires_grad) {
                      an->ensure_grad();
                      for (std::size_t i = 0; i < m; ++i) {
                        const double* grow = g.data() + i * n;
                        for (std::size_t p = 0; p < k; ++p) {
                          const double* brow = bn->values.data() + p * n;
                          double acc = 0.0;
                          for (std::size_t j = 0; j < n; ++j) acc += grow[j] * brow[j];
                          an->grad[i * k + p] += acc;
                        }
                      }
                    }
                    if (bn->requires_grad) {
                      bn->ensure_grad();
                      for (std::size_t i = 0; i < m; ++i) {
                        const double* grow = g.data() + i * n;
                        for (std::size_t p = 0; p < k; ++p) {
                          const double aip = an->values[i * k + p];
                          if (aip == 0.0) continue;
                          double* gb = bn->grad.data() + p * n;
                          for (std::size_t j = 0; j < n; ++j) gb[j] += aip * grow[j];
                        }
                      }
                    }
                  };
                });
}

// ---- pointwise --------------------------------------------------------

namespace {

template <class Fwd, class GradA, class GradB>
Tensor binary(const char* op, const Tensor& a, const Tensor& b, Fwd fwd, GradA ga, GradB gb) {
  require_same_shape(a, b, op);
  const auto av = a.values();
  const auto bv = b.values();
  std::vector<double> out(av.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = fwd(av[i], bv[i]);
  return finish(op, a.shape(), std::move(out), {a.node(), b.node()},
                [an = a.node().get(), bn = b.node().get(), ga, gb](Node*) {
                  return [an, bn, ga, gb](std::span<const double> g) {
                    if (an->requires_grad) {
                      an->ensure_grad();
                      for (std::size_t i = 0; i < g.size(); ++i) {
                        an->grad[i] += g[i] * ga(an->values[i], bn->values[i]);
                      }
                    }
                    if (bn->requires_grad) {
                      bn->ensure_grad();
                      for (std::size_t i = 0; i < g.size(); ++i) {
                        bn->grad[i] += g[i] * gb(an->values[i], bn->values[i]);
                      }
                    }
                  };
                });
}

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) {
  return binary(
      "add", a, b, [](double x, double y) { return x + y; }, [](double, double) { return 1.0; },
      [](double, double) { return 1.0; });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  return binary(
      "sub", a, b, [](double x, double y) { return x - y; }, [](double, double) { return 1.0; },
      [](double, double) { return -1.0; });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  return binary(
      "mul", a, b, [](double x, double y) { return x * y; }, [](double, double y) { return y; },
      [](double x, double) { return x; });
}

Tensor div(const Tensor& a, const Tensor& b) {
  for (double y : b.values()) {
    if (y == 0.0) throw DomainError("div: division by zero");
  }
  return binary(
      "div", a, b, [](double x, double y) { return x / y; },
      [](double, double y) { return 1.0 / y; }, [](double x, double y) { return -x / (y * y); });
}

Tensor add_bias(const Tensor& a, const Tensor& b) {
  require_rank2(a, "add_bias");
  const std::size_t m = a.dim(0), n = a.dim(1);
  if (b.size() != n || b.rank() > 2 || (b.rank() == 2 && b.dim(0) != 1)) {
    throw DimensionError("add_bias: bias " + shape_to_string(b.shape()) + " does not match " +
                         shape_to_string(a.shape()));
  }
  const auto av = a.values();
  const auto bv = b.values();
  std::vector<double> out(m * n);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) out[i * n + j] = av[i * n + j] + bv[j];
  }
  return finish("add_bias", a.shape(), std::move(out), {a.node(), b.node()},
                [an = a.node().get(), bn = b.node().get(), m, n](Node*) {
                  return [an, bn, m, n](std::span<const double> g) {
                    if (an->requires_grad) {
                      an->ensure_grad();
                      for (std::size_t i = 0; i < g.size(); ++i) an->grad[i] += g[i];
                    }
                    if (bn->requires_grad) {
                      bn->ensure_grad();
                      for (std::size_t i = 0; i < m; ++i) {
                        for (std::size_t j = 0; j < n; ++j) bn->grad[j] += g[i * n + j];
                      }
                    }
                  };
                });
}

Tensor scale(const Tensor& a, double factor) {
  return unary(
      "scale", a, [factor](double x) { return x * factor; },
      [factor](double, double) { return factor; });
}

Tensor add_scalar(const Tensor& a, double offset) {
  return unary(
      "add_scalar", a, [offset](double x) { return x + offset; },
      [](double, double) { return 1.0; });
}

Tensor sigmoid(const Tensor& a) {
  return unary("sigmoid", a, stable_sigmoid, [](double, double y) { return y * (1.0 - y); });
}

Tensor tanh(const Tensor& a) {
  return unary(
      "tanh", a, [](double x) { return std::tanh(x); },
      [](double, double y) { return 1.0 - y * y; });
}

Tensor relu(const Tensor& a) {
  return unary(
      "relu", a, [](double x) { return x > 0.0 ? x : 0.0; },
      [](double x, double) { return x > 0.0 ? 1.0 : 0.0; });
}

Tensor exp(const Tensor& a) {
  return unary(
      "exp", a, [](double x) { return std::exp(x); }, [](double, double y) { return y; });
}

Tensor log(const Tensor& a) {
  for (double x : a.values()) {
    if (!(x > 0.0)) throw DomainError("log: argument " + std::to_string(x) + " is not positive");
  }
  return unary(
      "log", a, [](double x) { return std::log(x); }, [](double x, double) { return 1.0 / x; });
}

Tensor softplus(const Tensor& a) {
  return unary("softplus", a, stable_softplus, [](double x, double) { return stable_sigmoid(x); });
}

Tensor square(const Tensor& a) {
  return unary(
      "square", a, [](double x) { return x * x; }, [](double x, double) { return 2.0 * x; });
}

Tensor elementwise(UnaryOp op, const Tensor& a) {
  switch (op) {
    case UnaryOp::Sigmoid: return sigmoid(a);
    case UnaryOp::Tanh: return tanh(a);
    case UnaryOp::Relu: return relu(a);
    case UnaryOp::Exp: return exp(a);
    case UnaryOp::Log: return log(a);
    case UnaryOp::Softplus: return softplus(a);
    case UnaryOp::Square: return square(a);
  }
  throw Error("elementwise: unknown unary op");
}

Tensor elementwise(BinaryOp op, const Tensor& a, const Tensor& b) {
  switch (op) {
    case BinaryOp::Add: return add(a, b);
    case BinaryOp::Sub: return sub(a, b);
    case BinaryOp::Mul: return mul(a, b);
    case BinaryOp::Div: return div(a, b);
  }
  throw Error("elementwise: unknown binary op");
}

Tensor sum(const Tensor& a) {
  const auto av = a.values();
  double total = 0.0;
  for (double x : av) total += x;
  return finish("sum", {}, {total}, {a.node()}, [an = a.node().get()](Node*) {
    return [an](std::span<const double> g) {
      if (!an->requires_grad) return;
      an->ensure_grad();
      for (double& v : an->grad) v += g[0];
    };
  });
}

// ---- structural -------------------------------------------------------

Tensor concat(std::initializer_list<Tensor> tensors, std::size_t axis) {
  return concat(std::span<const Tensor>(tensors.begin(), tensors.size()), axis);
}

Tensor concat(std::span<const Tensor> tensors, std::size_t axis) {
  if (tensors.empty()) throw DimensionError("concat: no tensors");
  const Shape& first = tensors[0].shape();
  if (axis >= first.size()) {
    throw DimensionError("concat: axis " + std::to_string(axis) + " out of range for " +
                         shape_to_string(first));
  }
  Shape out_shape = first;
  out_shape[axis] = 0;
  for (const Tensor& t : tensors) {
    const Shape& s = t.shape();
    bool ok = s.size() == first.size();
    for (std::size_t d = 0; ok && d < s.size(); ++d) {
      if (d != axis && s[d] != first[d]) ok = false;
    }
    if (!ok) {
      throw DimensionError("concat: incompatible shapes " + shape_to_string(first) + " and " +
                           shape_to_string(s) + " along axis " + std::to_string(axis));
    }
    out_shape[axis] += s[axis];
  }
  std::size_t outer = 1;
  for (std::size_t d = 0; d < axis; ++d) outer *= first[d];
  std::size_t inner = 1;
  for (std::size_t d = axis + 1; d < first.size(); ++d) inner *= first[d];

  // chunk[k] = contiguous run contributed by tensor k per outer index
  std::vector<std::size_t> chunk;
  std::size_t out_chunk = 0;
  for (const Tensor& t : tensors) {
    chunk.push_back(t.shape()[axis] * inner);
    out_chunk += chunk.back();
  }
  std::vector<double> out(outer * out_chunk);
  for (std::size_t o = 0; o < outer; ++o) {
    std::size_t offset = o * out_chunk;
    for (std::size_t k = 0; k < tensors.size(); ++k) {
      const auto v = tensors[k].values();
      std::copy_n(v.begin() + static_cast<std::ptrdiff_t>(o * chunk[k]), chunk[k],
                  out.begin() + static_cast<std::ptrdiff_t>(offset));
      offset += chunk[k];
    }
  }
  std::vector<std::shared_ptr<Node>> inputs;
  std::vector<Node*> raw;
  for (const Tensor& t : tensors) {
    inputs.push_back(t.node());
    raw.push_back(t.node().get());
  }
  return finish("concat", std::move(out_shape), std::move(out), std::move(inputs),
                [raw, chunk, outer, out_chunk](Node*) {
                  return [raw, chunk, outer, out_chunk](std::span<const double> g) {
                    std::size_t start = 0;
                    for (std::size_t k = 0; k < raw.size(); ++k) {
                      Node* n = raw[k];
                      if (n->requires_grad) {
                        n->ensure_grad();
                        for (std::size_t o = 0; o < outer; ++o) {
                          const double* src = g.data() + o * out_chunk + start;
                          double* dst = n->grad.data() + o * chunk[k];
                          for (std::size_t i = 0; i < chunk[k]; ++i) dst[i] += src[i];
                        }
                      }
                      start += chunk[k];
                    }
                  };
                });
}

Tensor slice(const Tensor& a, std::size_t axis, std::size_t begin, std::size_t end) {
  const Shape& s = a.shape();
  if (axis >= s.size() || begin > end || end > s[axis]) {
    throw DimensionError("slice: range [" + std::to_string(begin) + "," + std::to_string(end) +
                         ") invalid on axis " + std::to_string(axis) + " of " + shape_to_string(s));
  }
  std::size_t outer = 1;
  for (std::size_t d = 0; d < axis; ++d) outer *= s[d];
  std::size_t inner = 1;
  for (std::size_t d = axis + 1; d < s.size(); ++d) inner *= s[d];
  const std::size_t in_chunk = s[axis] * inner;
  const std::size_t out_chunk = (end - begin) * inner;
  const std::size_t first = begin * inner;
  Shape out_shape = s;
  out_shape[axis] = end - begin;
  const auto av = a.values();
  std::vector<double> out(outer * out_chunk);
  for (std::size_t o = 0; o < outer; ++o) {
    std::copy_n(av.begin() + static_cast<std::ptrdiff_t>(o * in_chunk + first), out_chunk,
                out.begin() + static_cast<std::ptrdiff_t>(o * out_chunk));
  }
  return finish("slice", std::move(out_shape), std::move(out), {a.node()},
                [an = a.node().get(), outer, in_chunk, out_chunk, first](Node*) {
                  return [an, outer, in_chunk, out_chunk, first](std::span<const double> g) {
                    if (!an->requires_grad) return;
                    an->ensure_grad();
                    for (std::size_t o = 0; o < outer; ++o) {
                      for (std::size_t i = 0; i < out_chunk; ++i) {
                        an->grad[o * in_chunk + first + i] += g[o * out_chunk + i];
                      }
                    }
                  };
                });
}

Tensor reshape(const Tensor& a, Shape shape) {
  if (shape_numel(shape) != a.size()) {
    throw DimensionError("reshape: cannot view " + shape_to_string(a.shape()) + " as " + shape_to_string(shape));
  }
  const auto av = a.values();
  return finish("reshape", std::move(shape), std::vector<double>(av.begin(), av.end()), {a.node()},
                [an = a.node().get()](Node*) {
                  return [an](std::span<const double> g) {
                    if (!an->requires_grad) return;
                    an->ensure_grad();
                    for (std::size_t i = 0; i < g.size(); ++i) an->grad[i] += g[i];
                  };
                });
}

Tensor gather_rows(const Tensor& a, std::span<const std::size_t> rows) {
  require_rank2(a, "gather_rows");
  const std::size_t n = a.dim(1);
  const auto av = a.values();
  std::vector<double> out(rows.size() * n);
  for (std::size_t k = 0; k < rows.size(); ++k) {
    if (rows[k] >= a.dim(0)) {
      throw DimensionError("gather_rows: row " + std::to_string(rows[k]) + " out of range for " +
                           shape_to_string(a.shape()));
    }
    std::copy_n(av.begin() + static_cast<std::ptrdiff_t>(rows[k] * n), n,
                out.begin() + static_cast<std::ptrdiff_t>(k * n));
  }
  std::vector<std::size_t> idx(rows.begin(), rows.end());
  return finish("gather_rows", {rows.size(), n}, std::move(out), {a.node()},
                [an = a.node().get(), idx, n](Node*) {
                  return [an, idx, n](std::span<const double> g) {
                    if (!an->requires_grad) return;
                    an->ensure_grad();
                    for (std::size_t k = 0; k < idx.size(); ++k) {
                      for (std::size_t j = 0; j < n; ++j) an->grad[idx[k] * n + j] += g[k * n + j];
                    }
                  };
                });
}

Tensor scatter_rows(const Tensor& base, std::span<const std::size_t> rows, const Tensor& values) {
  require_rank2(base, "scatter_rows");
  require_rank2(values, "scatter_rows");
  const std::size_t m = base.dim(0), n = base.dim(1);
  if (values.dim(0) != rows.size() || values.dim(1) != n) {
    throw DimensionError("scatter_rows: values " + shape_to_string(values.shape()) +
                         " do not match " + std::to_string(rows.size()) + " rows of " +
                         shape_to_string(base.shape()));
  }
  std::vector<char> replaced(m, 0);
  for (std::size_t r : rows) {
    if (r >= m) throw DimensionError("scatter_rows: row " + std::to_string(r) + " out of range");
    if (replaced[r]) throw DimensionError("scatter_rows: row " + std::to_string(r) + " repeated");
    replaced[r] = 1;
  }
  std::vector<double> out(base.values().begin(), base.values().end());
  const auto vv = values.values();
  for (std::size_t k = 0; k < rows.size(); ++k) {
    std::copy_n(vv.begin() + static_cast<std::ptrdiff_t>(k * n), n,
                out.begin() + static_cast<std::ptrdiff_t>(rows[k] * n));
  }
  std::vector<std::size_t> idx(rows.begin(), rows.end());
  return finish("scatter_rows", base.shape(), std::move(out), {base.node(), values.node()},
                [bn = base.node().get(), vn = values.node().get(), idx, replaced, n](Node*) {
                  return [bn, vn, idx, replaced, n](std::span<const double> g) {
                    if (bn->requires_grad) {
                      bn->ensure_grad();
                      for (std::size_t r = 0; r < replaced.size(); ++r) {
                        if (replaced[r]) continue;
                        for (std::size_t j = 0; j < n; ++j) bn->grad[r * n + j] += g[r * n + j];
                      }
                    }
                    if (vn->requires_grad) {
                      vn->ensure_grad();
                      for (std::size_t k = 0; k < idx.size(); ++k) {
                        for (std::size_t j = 0; j < n; ++j) vn->grad[k * n + j] += g[idx[k] * n + j];
                      }
                    }
                  };
                });
}

Tensor scatter_blocks(const Tensor& src, std::size_t out_rows, std::size_t block_count,
                      std::span<const BlockPlacement> placements) {
  require_rank2(src, "scatter_blocks");
  const std::size_t d = src.dim(1);
  const std::size_t width = block_count * d;
  for (const BlockPlacement& p : placements) {
    if (p.out_row >= out_rows || p.block >= block_count || p.src_row >= src.dim(0)) {
      throw DimensionError("scatter_blocks: placement out of range");
    }
  }
  const auto sv = src.values();
  std::vector<double> out(out_rows * width, 0.0);
  for (const BlockPlacement& p : placements) {
    double* dst = out.data() + p.out_row * width + p.block * d;
    const double* s = sv.data() + p.src_row * d;
    for (std::size_t j = 0; j < d; ++j) dst[j] += s[j];
  }
  std::vector<BlockPlacement> pl(placements.begin(), placements.end());
  return finish("scatter_blocks", {out_rows, width}, std::move(out), {src.node()},
                [sn = src.node().get(), pl = std::move(pl), d, width](Node*) {
                  return [sn, pl, d, width](std::span<const double> g) {
                    if (!sn->requires_grad) return;
                    sn->ensure_grad();
                    for (const BlockPlacement& p : pl) {
                      const double* gs = g.data() + p.out_row * width + p.block * d;
                      double* dst = sn->grad.data() + p.src_row * d;
                      for (std::size_t j = 0; j < d; ++j) dst[j] += gs[j];
                    }
                  };
                });
}

}  // namespace sns

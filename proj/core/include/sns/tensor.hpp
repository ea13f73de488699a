#pragma once

// Dense float64 tensors with tape-based reverse-mode differentiation.
//
// A Tensor is a cheap shared handle. Leaves created with Tensor::parameter()
// require gradients; every op applied while a Tape is recording on the
// current thread appends an entry to that tape if any input requires
// gradients. Tape::backward() walks the entries once, newest first.
//
// Gradients of parameters accumulate across backward() calls until
// zero_grad() is called. Gradients of intermediate results are reset at
// the start of every backward().

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace sns {

using Shape = std::vector<std::size_t>;

std::string shape_to_string(const Shape& shape);
std::size_t shape_numel(const Shape& shape);

namespace detail {

struct Node {
  Shape shape;
  std::vector<double> values;
  std::vector<double> grad;  // empty until first written
  bool requires_grad = false;
  bool is_leaf = true;
  const void* tape = nullptr;  // owning tape for recorded outputs
  std::size_t tape_index = 0;

  void ensure_grad();
};

}  // namespace detail

class Tensor {
 public:
  Tensor() = default;

  static Tensor zeros(Shape shape);
  static Tensor full(Shape shape, double value);
  static Tensor from(Shape shape, std::vector<double> values);
  static Tensor scalar(double value);
  static Tensor row(std::vector<double> values);  // shape {1, n}
  // A leaf that requires gradients.
  static Tensor parameter(Shape shape, std::vector<double> values);

  bool defined() const { return node_ != nullptr; }
  const Shape& shape() const;
  std::size_t rank() const { return shape().size(); }
  std::size_t size() const;
  std::size_t dim(std::size_t axis) const;

  std::span<const double> values() const;
  // Writable view for in-place parameter updates. Never call on a tensor
  // whose value is captured by a live tape entry.
  std::span<double> mutable_values();
  double item() const;
  double operator[](std::size_t flat) const { return values()[flat]; }
  double at(std::size_t r, std::size_t c) const;

  bool requires_grad() const;
  bool has_grad() const;
  std::span<const double> grad() const;
  std::span<double> mutable_grad();
  void zero_grad();

  // Same values, no gradient tracking.
  Tensor detach() const;

  const std::shared_ptr<detail::Node>& node() const { return node_; }
  explicit Tensor(std::shared_ptr<detail::Node> node) : node_(std::move(node)) {}

 private:
  std::shared_ptr<detail::Node> node_;
};

// Ordered record of differentiable operations.
class Tape {
 public:
  using BackwardFn = std::function<void(std::span<const double> out_grad)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;
  ~Tape();

  // RAII guard that makes `tape` the recording tape of this thread.
  class Recording {
   public:
    explicit Recording(Tape& tape);
    ~Recording();
    Recording(const Recording&) = delete;
    Recording& operator=(const Recording&) = delete;

   private:
    Tape* previous_;
  };

  static Tape* active();

  // Seeds d(loss)/d(loss) = 1 and propagates to every reachable leaf.
  void backward(const Tensor& loss);
  void clear();
  std::size_t size() const { return entries_.size(); }

  // Used by op implementations.
  void record(const Tensor& output, std::vector<std::shared_ptr<detail::Node>> inputs,
              BackwardFn backward);

 private:
  struct Entry {
    std::shared_ptr<detail::Node> output;
    std::vector<std::shared_ptr<detail::Node>> inputs;
    BackwardFn backward;
  };
  std::vector<Entry> entries_;
};

// ---- operations --------------------------------------------------------

Tensor matmul(const Tensor& a, const Tensor& b);

Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor div(const Tensor& a, const Tensor& b);
// a[m x n] + b broadcast over rows, b of shape {n} or {1, n}.
Tensor add_bias(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double factor);
Tensor add_scalar(const Tensor& a, double offset);

Tensor sigmoid(const Tensor& a);
Tensor tanh(const Tensor& a);
Tensor relu(const Tensor& a);
Tensor exp(const Tensor& a);
Tensor log(const Tensor& a);
Tensor softplus(const Tensor& a);
Tensor square(const Tensor& a);

enum class UnaryOp { Sigmoid, Tanh, Relu, Exp, Log, Softplus, Square };
enum class BinaryOp { Add, Sub, Mul, Div };
Tensor elementwise(UnaryOp op, const Tensor& a);
Tensor elementwise(BinaryOp op, const Tensor& a, const Tensor& b);

// Sum of all entries, shape {} (scalar).
Tensor sum(const Tensor& a);

Tensor concat(std::span<const Tensor> tensors, std::size_t axis);
Tensor concat(std::initializer_list<Tensor> tensors, std::size_t axis);
// Half-open [begin, end) along `axis`.
Tensor slice(const Tensor& a, std::size_t axis, std::size_t begin, std::size_t end);
// Same values in row-major order under a new shape of equal size.
Tensor reshape(const Tensor& a, Shape shape);

// Rows of a rank-2 tensor, in the given order (duplicates allowed).
Tensor gather_rows(const Tensor& a, std::span<const std::size_t> rows);
// Copy of `base` with base[rows[k], :] replaced by values[k, :].
Tensor scatter_rows(const Tensor& base, std::span<const std::size_t> rows, const Tensor& values);

// Block scatter-add: out has shape {out_rows, block_count * D} where D is
// src's column count, and out[p.out_row, p.block*D : (p.block+1)*D] += src[p.src_row, :]
// for every placement p.
struct BlockPlacement {
  std::size_t out_row;
  std::size_t block;
  std::size_t src_row;
};
Tensor scatter_blocks(const Tensor& src, std::size_t out_rows, std::size_t block_count,
                      std::span<const BlockPlacement> placements);

// Convenience operators (same semantics as the named functions).
inline Tensor operator+(const Tensor& a, const Tensor& b) { return add(a, b); }
inline Tensor operator-(const Tensor& a, const Tensor& b) { return sub(a, b); }
inline Tensor operator*(const Tensor& a, const Tensor& b) { return mul(a, b); }

}  // namespace sns

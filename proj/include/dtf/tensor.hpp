#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace dtf {

using Shape = std::vector<std::size_t>;

std::size_t shape_size(const Shape& shape);
std::string shape_string(const Shape& shape);

// Plain row-major matrix for data that never takes part in differentiation
// (speed series, windows, adjacency).
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> values;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), values(r * c, fill) {}
  Matrix(std::size_t r, std::size_t c, std::vector<double> v);

  double& operator()(std::size_t r, std::size_t c) { return values[r * cols + c]; }
  double operator()(std::size_t r, std::size_t c) const { return values[r * cols + c]; }

  Matrix transposed() const;
  bool operator==(const Matrix&) const = default;
};

namespace detail {
struct Node {
  Shape shape;
  std::vector<double> data;
  std::vector<double> grad;  // empty until first accumulation
  bool requires_grad = false;
  bool leaf = true;

  void accumulate(std::size_t i, double g) {
    if (grad.empty()) grad.assign(data.size(), 0.0);
    grad[i] += g;
  }
  std::vector<double>& grad_buffer() {
    if (grad.empty()) grad.assign(data.size(), 0.0);
    return grad;
  }
};
}  // namespace detail

// Handle to a dense tensor of 64-bit reals. Copies share storage; a Tensor
// produced by an operation while a GradientTape is active carries a record
// on that tape so backward() can reach it.
class Tensor {
 public:
  Tensor() = default;

  static Tensor zeros(Shape shape);
  static Tensor full(Shape shape, double value);
  static Tensor from(Shape shape, std::vector<double> values);
  static Tensor from(const Matrix& m);
  static Tensor scalar(double value);
  // A leaf that accumulates gradients.
  static Tensor parameter(Shape shape, std::vector<double> values);

  bool defined() const { return node_ != nullptr; }
  const Shape& shape() const;
  std::size_t rank() const { return shape().size(); }
  std::size_t size() const;
  std::size_t rows() const;
  std::size_t cols() const;

  std::span<const double> data() const;
  std::span<double> mutable_data();
  // Empty span if no gradient has been accumulated yet.
  std::span<const double> grad() const;
  void zero_grad();

  bool requires_grad() const;
  void set_requires_grad(bool on);
  bool is_leaf() const;

  double item() const;
  double at(std::size_t r, std::size_t c) const;
  Matrix to_matrix() const;

  // A fresh leaf holding a copy of the values, with no gradient history.
  Tensor detach() const;

  explicit Tensor(std::shared_ptr<detail::Node> n) : node_(std::move(n)) {}
  detail::Node* node() const { return node_.get(); }
  const std::shared_ptr<detail::Node>& shared_node() const { return node_; }

 private:
  std::shared_ptr<detail::Node> node_;
};

// Ordered record of differentiable operations for one forward pass.
// Records are appended in execution order, so inputs always precede the
// operations that consume them.
class GradientTape {
 public:
  struct Record {
    std::vector<std::shared_ptr<detail::Node>> inputs;
    std::shared_ptr<detail::Node> output;
    std::function<void()> backward;
  };

  GradientTape() = default;
  GradientTape(const GradientTape&) = delete;
  GradientTape& operator=(const GradientTape&) = delete;

  void record(Record r) { records_.push_back(std::move(r)); }
  std::size_t size() const { return records_.size(); }
  void clear() { records_.clear(); }

  // Resets every intermediate gradient, seeds d(loss)/d(loss) = 1 and walks
  // the records once in reverse order. Leaf gradients accumulate.
  void backward(const Tensor& loss);

  // Tape that operations on the calling thread currently record onto, or
  // nullptr when recording is off.
  static GradientTape* active();

 private:
  friend class TapeScope;
  friend class NoTapeScope;
  std::vector<Record> records_;
};

// Makes a tape active on this thread for the lifetime of the scope.
class TapeScope {
 public:
  explicit TapeScope(GradientTape& tape);
  ~TapeScope();
  TapeScope(const TapeScope&) = delete;
  TapeScope& operator=(const TapeScope&) = delete;

 private:
  GradientTape* previous_;
};

// Suspends recording, e.g. for a frozen model's forward pass.
class NoTapeScope {
 public:
  NoTapeScope();
  ~NoTapeScope();
  NoTapeScope(const NoTapeScope&) = delete;
  NoTapeScope& operator=(const NoTapeScope&) = delete;

 private:
  GradientTape* previous_;
};

// Runs backward on the active tape.
void backward(const Tensor& loss);

namespace ops {

Tensor matmul(const Tensor& a, const Tensor& b);
// weights (m×k) · values (k×n) where each output sums its k terms in an
// order-independent way, so permuting the k rows of `values` together with
// the columns of `weights` gives bit-identical results.
Tensor mix_rows(const Tensor& weights, const Tensor& values);
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double factor);
// x (m×n) plus bias (n) broadcast over rows.
Tensor add_row_bias(const Tensor& x, const Tensor& bias);
Tensor relu(const Tensor& x);
Tensor sigmoid(const Tensor& x);
Tensor tanh(const Tensor& x);
Tensor softmax_rows(const Tensor& x);
Tensor layer_norm(const Tensor& x, const Tensor& gain, const Tensor& bias, double eps = 1e-5);
Tensor concat_cols(const Tensor& a, const Tensor& b);
Tensor slice_cols(const Tensor& x, std::size_t begin, std::size_t end);
Tensor transpose(const Tensor& x);
// m×n -> 1×n column means.
Tensor mean_rows(const Tensor& x);
// 1×n -> count×n.
Tensor repeat_rows(const Tensor& x, std::size_t count);
Tensor sum(const Tensor& x);
// Mean of squared differences; scalar result.
Tensor mse_reduce(const Tensor& a, const Tensor& b);

}  // namespace ops

}  // namespace dtf

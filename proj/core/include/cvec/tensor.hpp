#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace cvec {

/// Dimension sizes. Rank 0 is a scalar, rank 1 a vector, rank 2 a row-major
/// matrix; higher ranks are not needed by any network here.
using Shape = std::vector<std::size_t>;

std::size_t shape_size(const Shape& shape);
std::string shape_string(const Shape& shape);

namespace detail {

/// One recorded operation on the tape. Leaves have no inputs and no backward
/// rule; every other node owns references to the nodes it was computed from
/// and a rule that pushes its gradient into them.
struct Node {
  Shape shape;
  std::vector<double> value;
  std::vector<double> grad;
  bool requires_grad = false;
  const char* op = "leaf";
  std::vector<std::shared_ptr<Node>> inputs;
  std::function<void(Node&)> backward;

  std::span<double> ensure_grad();
};

}  // namespace detail

/// Dense double-precision tensor handle with reverse-mode gradient support.
///
/// Copies share the underlying node. Values are immutable once an operation
/// has produced them; only leaves (parameters and constants) expose mutable
/// storage, which the optimizer uses between tapes.
class Tensor {
 public:
  Tensor() = default;

  static Tensor constant(Shape shape, std::vector<double> values);
  static Tensor zeros(Shape shape);
  static Tensor scalar(double value);
  static Tensor vector(std::vector<double> values);
  static Tensor matrix(std::size_t rows, std::size_t cols, std::vector<double> values);
  /// Leaf that accumulates gradients.
  static Tensor parameter(Shape shape, std::vector<double> values);

  bool defined() const { return node_ != nullptr; }
  const Shape& shape() const;
  std::size_t rank() const { return shape().size(); }
  std::size_t size() const;
  /// Rows of the matrix view: shape[0] for rank 2, otherwise 1.
  std::size_t rows() const;
  /// Columns of the matrix view: last dimension, or 1 for a scalar.
  std::size_t cols() const;

  std::span<const double> values() const;
  double item() const;
  double operator()(std::size_t i) const;
  double operator()(std::size_t r, std::size_t c) const;

  bool requires_grad() const;
  bool is_leaf() const;
  const char* op() const;

  bool has_grad() const;
  std::span<const double> grad() const;
  void zero_grad();

  std::span<double> mutable_values();
  std::span<double> mutable_grad();

  /// Same values, no tape history, no gradient.
  Tensor detach() const;

  std::shared_ptr<detail::Node> node() const { return node_; }
  explicit Tensor(std::shared_ptr<detail::Node> node) : node_(std::move(node)) {}

 private:
  std::shared_ptr<detail::Node> node_;
};

/// Accumulates dLoss/dTensor into every reachable tensor that requires a
/// gradient. Leaf gradients add up across calls until zero_grad().
void backward(const Tensor& loss);

/// True while operations record onto the tape on this thread.
bool grad_enabled();

/// Disables tape recording on the current thread for its lifetime.
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

}  // namespace cvec

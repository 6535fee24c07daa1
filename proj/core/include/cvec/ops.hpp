#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "cvec/tensor.hpp"

namespace cvec {

enum class Activation { Identity, Sigmoid, Tanh, Relu };

Activation parse_activation(std::string_view name);
std::string_view activation_name(Activation f);

// Linear algebra. matmul promotes a rank-1 left operand to a 1xK row and a
// rank-1 right operand to a Kx1 column, dropping the promoted dimension from
// the result.
Tensor matmul(const Tensor& a, const Tensor& b);
Tensor transpose(const Tensor& a);
Tensor outer(const Tensor& e1, const Tensor& e2);

// Elementwise.
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor hadamard(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double factor);
Tensor tanh(const Tensor& a);
Tensor sigmoid(const Tensor& a);
Tensor relu(const Tensor& a);

/// While alive, hashes the sign pattern of every relu input on this thread.
/// Two evaluations with different patterns ran on different linear pieces.
class ReluPatternProbe {
 public:
  ReluPatternProbe();
  ~ReluPatternProbe();
  ReluPatternProbe(const ReluPatternProbe&) = delete;
  ReluPatternProbe& operator=(const ReluPatternProbe&) = delete;
  std::uint64_t pattern() const { return pattern_; }

 private:
  std::uint64_t pattern_ = 1469598103934665603ULL;
  std::uint64_t* previous_;
};
Tensor activate(Activation f, const Tensor& a);
/// Adds a length-N vector to every row of an MxN matrix (or to a length-N vector).
Tensor add_bias(const Tensor& a, const Tensor& bias);

// Reductions.
Tensor sum(const Tensor& a);
Tensor sum_squares(const Tensor& a);

/// Softmax over each column, stabilized by subtracting the column max.
Tensor softmax_columns(const Tensor& a);
/// Softmax over each row; rank-1 input is treated as one row.
Tensor softmax_rows(const Tensor& a);
/// Mean cross-entropy of row-wise logits (B x C, or a single C vector).
Tensor cross_entropy(const Tensor& logits, std::span<const std::size_t> labels);
/// Scales each row to unit L2 norm; rows with norm below eps are divided by eps.
Tensor normalize_rows(const Tensor& a, double eps = 1e-8);

// Restructuring.
Tensor reshape(const Tensor& a, Shape shape);
/// Row-major flattening to a vector: element (i, j) lands at i * cols + j.
Tensor vectorize(const Tensor& a);
/// Concatenates vectors end to end.
Tensor concat(std::span<const Tensor> parts);
/// Joins matrices with equal row counts side by side.
Tensor concat_cols(std::span<const Tensor> parts);
/// Stacks vectors (as rows) or matrices with equal column counts vertically.
Tensor stack_rows(std::span<const Tensor> parts);
Tensor select_row(const Tensor& a, std::size_t row);
Tensor slice_rows(const Tensor& a, std::size_t begin, std::size_t end);
/// Row i of the result is row indices[i] of a; repeats allowed.
Tensor gather_rows(const Tensor& a, std::span<const std::size_t> indices);

}  // namespace cvec

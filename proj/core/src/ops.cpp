#include "cvec/ops.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <string>

#include "cvec/error.hpp"

namespace cvec {

namespace {

using detail::Node;
using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatMap = Eigen::Map<RowMatrix>;
using ConstMatMap = Eigen::Map<const RowMatrix>;

ConstMatMap as_matrix(const std::vector<double>& v, std::size_t rows, std::size_t cols) {
  return ConstMatMap(v.data(), static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
}

MatMap as_matrix(std::span<double> v, std::size_t rows, std::size_t cols) {
  return MatMap(v.data(), static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
}

void require_same_shape(const char* op, const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) {
    throw DimensionError(std::string(op) + ": shape mismatch " + shape_string(a.shape()) + " vs " +
                         shape_string(b.shape()));
  }
}

bool tracks(const Node& n) { return n.requires_grad; }

/// Builds the result node, checks finiteness, and records it on the tape when
/// any input needs a gradient.
Tensor make_result_n(const char* op, Shape shape, std::vector<double> value,
                     std::span<const Tensor> inputs, std::function<void(Node&)> rule) {
  for (double v : value) {
    if (!std::isfinite(v)) throw NumericError(std::string("non-finite value produced by ") + op);
  }
  auto node = std::make_shared<Node>();
  node->shape = std::move(shape);
  node->value = std::move(value);
  node->op = op;
  bool record = false;
  if (grad_enabled()) {
    for (const auto& t : inputs) record = record || t.requires_grad();
  }
  if (record) {
    node->requires_grad = true;
    for (const auto& t : inputs) node->inputs.push_back(t.node());
    node->backward = std::move(rule);
  }
  return Tensor(std::move(node));
}

Tensor make_result(const char* op, Shape shape, std::vector<double> value,
                   std::initializer_list<Tensor> inputs, std::function<void(Node&)> rule) {
  return make_result_n(op, std::move(shape), std::move(value),
                       std::span<const Tensor>(inputs.begin(), inputs.size()), std::move(rule));
}

template <typename Fwd, typename Deriv>
Tensor unary(const char* op, const Tensor& a, Fwd fwd, Deriv deriv_from_output) {
  std::vector<double> out(a.size());
  auto in = a.values();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = fwd(in[i]);
  return make_result(op, a.shape(), std::move(out), {a}, [deriv_from_output](Node& self) {
    auto& x = *self.inputs[0];
    if (!tracks(x)) return;
    auto gx = x.ensure_grad();
    for (std::size_t i = 0; i < gx.size(); ++i) {
      gx[i] += self.grad[i] * deriv_from_output(x.value[i], self.value[i]);
    }
  });
}

}  // namespace

Activation parse_activation(std::string_view name) {
  if (name == "identity") return Activation::Identity;
  if (name == "sigmoid") return Activation::Sigmoid;
  if (name == "tanh") return Activation::Tanh;
  if (name == "relu") return Activation::Relu;
  throw ConfigError("unknown activation '" + std::string(name) + "'");
}

std::string_view activation_name(Activation f) {
  switch (f) {
    case Activation::Identity: return "identity";
    case Activation::Sigmoid: return "sigmoid";
    case Activation::Tanh: return "tanh";
    case Activation::Relu: return "relu";
  }
  return "identity";
}

Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.rank() == 0 || b.rank() == 0) throw DimensionError("matmul: scalar operand");
  const std::size_t m = a.rank() == 2 ? a.shape()[0] : 1;
  const std::size_t k = a.shape().back();
  const std::size_t kb = b.shape()[0];
  const std::size_t n = b.rank() == 2 ? b.shape()[1] : 1;
  if (k != kb) {
    throw DimensionError("matmul: inner dimensions disagree " + shape_string(a.shape()) + " x " +
                         shape_string(b.shape()));
  }
  Shape shape;
  if (a.rank() == 2) shape.push_back(m);
  if (b.rank() == 2) shape.push_back(n);

  std::vector<double> out(m * n);
  as_matrix(std::span<double>(out), m, n).noalias() =
      as_matrix(a.node()->value, m, k) * as_matrix(b.node()->value, k, n);
  return make_result("matmul", std::move(shape), std::move(out), {a, b}, [m, k, n](Node& self) {
    auto g = as_matrix(self.grad, m, n);
    auto& x = *self.inputs[0];
    auto& y = *self.inputs[1];
    if (tracks(x)) {
      as_matrix(x.ensure_grad(), m, k).noalias() += g * as_matrix(y.value, k, n).transpose();
    }
    if (tracks(y)) {
      as_matrix(y.ensure_grad(), k, n).noalias() += as_matrix(x.value, m, k).transpose() * g;
    }
  });
}

Tensor transpose(const Tensor& a) {
  if (a.rank() != 2) throw DimensionError("transpose: expected a matrix, got " + shape_string(a.shape()));
  const std::size_t r = a.shape()[0], c = a.shape()[1];
  std::vector<double> out(r * c);
  as_matrix(std::span<double>(out), c, r) = as_matrix(a.node()->value, r, c).transpose();
  return make_result("transpose", {c, r}, std::move(out), {a}, [r, c](Node& self) {
    auto& x = *self.inputs[0];
    if (!tracks(x)) return;
    as_matrix(x.ensure_grad(), r, c) += as_matrix(self.grad, c, r).transpose();
  });
}

Tensor outer(const Tensor& e1, const Tensor& e2) {
  if (e1.rank() != 1 || e2.rank() != 1) throw DimensionError("outer: operands must be vectors");
  const std::size_t m = e1.size(), n = e2.size();
  std::vector<double> out(m * n);
  auto u = e1.values();
  auto v = e2.values();
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) out[i * n + j] = u[i] * v[j];
  return make_result("outer", {m, n}, std::move(out), {e1, e2}, [m, n](Node& self) {
    auto& x = *self.inputs[0];
    auto& y = *self.inputs[1];
    if (tracks(x)) {
      auto gx = x.ensure_grad();
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) gx[i] += self.grad[i * n + j] * y.value[j];
    }
    if (tracks(y)) {
      auto gy = y.ensure_grad();
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) gy[j] += self.grad[i * n + j] * x.value[i];
    }
  });
}

Tensor add(const Tensor& a, const Tensor& b) {
  require_same_shape("add", a, b);
  std::vector<double> out(a.values().begin(), a.values().end());
  auto bv = b.values();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += bv[i];
  return make_result("add", a.shape(), std::move(out), {a, b}, [](Node& self) {
    for (auto& in : self.inputs) {
      if (!tracks(*in)) continue;
      auto g = in->ensure_grad();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
    }
  });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  require_same_shape("sub", a, b);
  std::vector<double> out(a.values().begin(), a.values().end());
  auto bv = b.values();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] -= bv[i];
  return make_result("sub", a.shape(), std::move(out), {a, b}, [](Node& self) {
    if (tracks(*self.inputs[0])) {
      auto g = self.inputs[0]->ensure_grad();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
    }
    if (tracks(*self.inputs[1])) {
      auto g = self.inputs[1]->ensure_grad();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] -= self.grad[i];
    }
  });
}

Tensor hadamard(const Tensor& a, const Tensor& b) {
  require_same_shape("hadamard", a, b);
  std::vector<double> out(a.values().begin(), a.values().end());
  auto bv = b.values();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= bv[i];
  return make_result("hadamard", a.shape(), std::move(out), {a, b}, [](Node& self) {
    auto& x = *self.inputs[0];
    auto& y = *self.inputs[1];
    if (tracks(x)) {
      auto g = x.ensure_grad();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * y.value[i];
    }
    if (tracks(y)) {
      auto g = y.ensure_grad();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * x.value[i];
    }
  });
}

Tensor scale(const Tensor& a, double factor) {
  return unary(
      "scale", a, [factor](double x) { return factor * x; },
      [factor](double, double) { return factor; });
}

Tensor tanh(const Tensor& a) {
  return unary(
      "tanh", a, [](double x) { return std::tanh(x); },
      [](double, double y) { return 1.0 - y * y; });
}

Tensor sigmoid(const Tensor& a) {
  return unary(
      "sigmoid", a,
      [](double x) {
        if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
        double e = std::exp(x);
        return e / (1.0 + e);
      },
      [](double, double y) { return y * (1.0 - y); });
}

namespace {
thread_local std::uint64_t* g_relu_pattern = nullptr;
}  // namespace

ReluPatternProbe::ReluPatternProbe() : previous_(g_relu_pattern) { g_relu_pattern = &pattern_; }
ReluPatternProbe::~ReluPatternProbe() { g_relu_pattern = previous_; }

Tensor relu(const Tensor& a) {
  if (g_relu_pattern != nullptr) {
    std::uint64_t h = *g_relu_pattern;
    for (double x : a.values()) h = (h ^ (x > 0 ? 1u : 2u)) * 1099511628211ULL;
    *g_relu_pattern = h;
  }
  return unary(
      "relu", a, [](double x) { return x > 0 ? x : 0.0; },
      [](double x, double) { return x > 0 ? 1.0 : 0.0; });
}

Tensor activate(Activation f, const Tensor& a) {
  switch (f) {
    case Activation::Identity: return a;
    case Activation::Sigmoid: return sigmoid(a);
    case Activation::Tanh: return tanh(a);
    case Activation::Relu: return relu(a);
  }
  return a;
}

Tensor add_bias(const Tensor& a, const Tensor& bias) {
  if (bias.rank() != 1 || a.rank() == 0 || a.cols() != bias.size()) {
    throw DimensionError("add_bias: cannot add " + shape_string(bias.shape()) + " to rows of " +
                         shape_string(a.shape()));
  }
  const std::size_t r = a.rows(), c = a.cols();
  std::vector<double> out(a.values().begin(), a.values().end());
  auto bv = bias.values();
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j) out[i * c + j] += bv[j];
  return make_result("add_bias", a.shape(), std::move(out), {a, bias}, [r, c](Node& self) {
    if (tracks(*self.inputs[0])) {
      auto g = self.inputs[0]->ensure_grad();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
    }
    if (tracks(*self.inputs[1])) {
      auto g = self.inputs[1]->ensure_grad();
      for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < c; ++j) g[j] += self.grad[i * c + j];
    }
  });
}

Tensor sum(const Tensor& a) {
  double s = 0.0;
  for (double v : a.values()) s += v;
  return make_result("sum", {}, {s}, {a}, [](Node& self) {
    auto& x = *self.inputs[0];
    if (!tracks(x)) return;
    auto g = x.ensure_grad();
    for (auto& v : g) v += self.grad[0];
  });
}

Tensor sum_squares(const Tensor& a) {
  double s = 0.0;
  for (double v : a.values()) s += v * v;
  return make_result("sum_squares", {}, {s}, {a}, [](Node& self) {
    auto& x = *self.inputs[0];
    if (!tracks(x)) return;
    auto g = x.ensure_grad();
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += 2.0 * x.value[i] * self.grad[0];
  });
}

Tensor softmax_columns(const Tensor& a) {
  if (a.rank() != 2) throw DimensionError("softmax_columns: expected a matrix");
  const std::size_t t = a.shape()[0], g = a.shape()[1];
  if (t == 0) throw DimensionError("softmax_columns: zero rows");
  std::vector<double> out(t * g);
  auto in = a.values();
  for (std::size_t j = 0; j < g; ++j) {
    double mx = in[j];
    for (std::size_t i = 1; i < t; ++i) mx = std::max(mx, in[i * g + j]);
    double z = 0.0;
    for (std::size_t i = 0; i < t; ++i) {
      out[i * g + j] = std::exp(in[i * g + j] - mx);
      z += out[i * g + j];
    }
    for (std::size_t i = 0; i < t; ++i) out[i * g + j] /= z;
  }
  return make_result("softmax_columns", a.shape(), std::move(out), {a}, [t, g](Node& self) {
    auto& x = *self.inputs[0];
    if (!tracks(x)) return;
    auto gx = x.ensure_grad();
    for (std::size_t j = 0; j < g; ++j) {
      double dot = 0.0;
      for (std::size_t i = 0; i < t; ++i) dot += self.grad[i * g + j] * self.value[i * g + j];
      for (std::size_t i = 0; i < t; ++i) {
        gx[i * g + j] += self.value[i * g + j] * (self.grad[i * g + j] - dot);
      }
    }
  });
}

Tensor softmax_rows(const Tensor& a) {
  if (a.rank() == 0) throw DimensionError("softmax_rows: scalar input");
  const std::size_t r = a.rows(), c = a.cols();
  std::vector<double> out(r * c);
  auto in = a.values();
  for (std::size_t i = 0; i < r; ++i) {
    const double* row = in.data() + i * c;
    double mx = *std::max_element(row, row + c);
    double z = 0.0;
    for (std::size_t j = 0; j < c; ++j) z += (out[i * c + j] = std::exp(row[j] - mx));
    for (std::size_t j = 0; j < c; ++j) out[i * c + j] /= z;
  }
  return make_result("softmax_rows", a.shape(), std::move(out), {a}, [r, c](Node& self) {
    auto& x = *self.inputs[0];
    if (!tracks(x)) return;
    auto gx = x.ensure_grad();
    for (std::size_t i = 0; i < r; ++i) {
      double dot = 0.0;
      for (std::size_t j = 0; j < c; ++j) dot += self.grad[i * c + j] * self.value[i * c + j];
      for (std::size_t j = 0; j < c; ++j) {
        gx[i * c + j] += self.value[i * c + j] * (self.grad[i * c + j] - dot);
      }
    }
  });
}

Tensor cross_entropy(const Tensor& logits, std::span<const std::size_t> labels) {
  if (logits.rank() == 0) throw DimensionError("cross_entropy: scalar logits");
  const std::size_t r = logits.rows(), c = logits.cols();
  if (labels.size() != r) {
    throw DimensionError("cross_entropy: " + std::to_string(labels.size()) + " labels for " +
                         std::to_string(r) + " rows");
  }
  std::vector<double> probs(r * c);
  std::vector<std::size_t> saved(labels.begin(), labels.end());
  auto in = logits.values();
  double loss = 0.0;
  for (std::size_t i = 0; i < r; ++i) {
    if (labels[i] >= c) throw ContractError("cross_entropy: label out of range");
    const double* row = in.data() + i * c;
    double mx = *std::max_element(row, row + c);
    double z = 0.0;
    for (std::size_t j = 0; j < c; ++j) z += (probs[i * c + j] = std::exp(row[j] - mx));
    for (std::size_t j = 0; j < c; ++j) probs[i * c + j] /= z;
    loss += std::log(z) + mx - row[labels[i]];
  }
  loss /= static_cast<double>(r);
  return make_result("cross_entropy", {}, {loss}, {logits},
                     [r, c, probs = std::move(probs), saved = std::move(saved)](Node& self) {
                       auto& x = *self.inputs[0];
                       if (!tracks(x)) return;
                       auto gx = x.ensure_grad();
                       const double w = self.grad[0] / static_cast<double>(r);
                       for (std::size_t i = 0; i < r; ++i) {
                         for (std::size_t j = 0; j < c; ++j) {
                           gx[i * c + j] += w * (probs[i * c + j] - (j == saved[i] ? 1.0 : 0.0));
                         }
                       }
                     });
}

Tensor normalize_rows(const Tensor& a, double eps) {
  if (a.rank() == 0) throw DimensionError("normalize_rows: scalar input");
  const std::size_t r = a.rows(), c = a.cols();
  std::vector<double> out(r * c);
  std::vector<double> norms(r);
  auto in = a.values();
  for (std::size_t i = 0; i < r; ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < c; ++j) s += in[i * c + j] * in[i * c + j];
    norms[i] = std::max(std::sqrt(s), eps);
    for (std::size_t j = 0; j < c; ++j) out[i * c + j] = in[i * c + j] / norms[i];
  }
  return make_result("normalize_rows", a.shape(), std::move(out), {a},
                     [r, c, eps, norms = std::move(norms)](Node& self) {
                       auto& x = *self.inputs[0];
                       if (!tracks(x)) return;
                       auto gx = x.ensure_grad();
                       for (std::size_t i = 0; i < r; ++i) {
                         const double n = norms[i];
                         if (n <= eps) {
                           for (std::size_t j = 0; j < c; ++j) gx[i * c + j] += self.grad[i * c + j] / n;
                           continue;
                         }
                         double dot = 0.0;
                         for (std::size_t j = 0; j < c; ++j) dot += self.grad[i * c + j] * self.value[i * c + j];
                         for (std::size_t j = 0; j < c; ++j) {
                           gx[i * c + j] += (self.grad[i * c + j] - dot * self.value[i * c + j]) / n;
                         }
                       }
                     });
}

Tensor reshape(const Tensor& a, Shape shape) {
  if (shape_size(shape) != a.size()) {
    throw DimensionError("reshape: cannot view " + shape_string(a.shape()) + " as " + shape_string(shape));
  }
  if (shape.size() > 2) throw DimensionError("reshape: rank above 2");
  std::vector<double> out(a.values().begin(), a.values().end());
  return make_result("reshape", std::move(shape), std::move(out), {a}, [](Node& self) {
    auto& x = *self.inputs[0];
    if (!tracks(x)) return;
    auto g = x.ensure_grad();
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
  });
}

Tensor vectorize(const Tensor& a) { return reshape(a, {a.size()}); }

Tensor concat(std::span<const Tensor> parts) {
  if (parts.empty()) throw DimensionError("concat: no inputs");
  std::vector<double> out;
  std::vector<std::size_t> offsets;
  for (const auto& p : parts) {
    if (p.rank() != 1) throw DimensionError("concat: inputs must be vectors");
    offsets.push_back(out.size());
    out.insert(out.end(), p.values().begin(), p.values().end());
  }
  Shape shape{out.size()};
  return make_result_n("concat", std::move(shape), std::move(out), parts,
                       [offsets = std::move(offsets)](Node& self) {
                         for (std::size_t k = 0; k < self.inputs.size(); ++k) {
                           auto& x = *self.inputs[k];
                           if (!tracks(x)) continue;
                           auto g = x.ensure_grad();
                           for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[offsets[k] + i];
                         }
                       });
}

Tensor concat_cols(std::span<const Tensor> parts) {
  if (parts.empty()) throw DimensionError("concat_cols: no inputs");
  const std::size_t r = parts[0].rows();
  std::size_t total = 0;
  std::vector<std::size_t> widths;
  for (const auto& p : parts) {
    if (p.rank() != 2 || p.rows() != r) throw DimensionError("concat_cols: row counts differ");
    widths.push_back(p.cols());
    total += p.cols();
  }
  std::vector<double> out(r * total);
  std::size_t off = 0;
  for (const auto& p : parts) {
    auto v = p.values();
    const std::size_t w = p.cols();
    for (std::size_t i = 0; i < r; ++i) std::copy_n(v.data() + i * w, w, out.data() + i * total + off);
    off += w;
  }
  return make_result_n("concat_cols", {r, total}, std::move(out), parts,
                       [r, total, widths = std::move(widths)](Node& self) {
                         std::size_t off = 0;
                         for (std::size_t k = 0; k < self.inputs.size(); ++k) {
                           auto& x = *self.inputs[k];
                           const std::size_t w = widths[k];
                           if (tracks(x)) {
                             auto g = x.ensure_grad();
                             for (std::size_t i = 0; i < r; ++i)
                               for (std::size_t j = 0; j < w; ++j) g[i * w + j] += self.grad[i * total + off + j];
                           }
                           off += w;
                         }
                       });
}

Tensor stack_rows(std::span<const Tensor> parts) {
  if (parts.empty()) throw DimensionError("stack_rows: no inputs");
  const std::size_t c = parts[0].cols();
  std::vector<double> out;
  std::vector<std::size_t> offsets;
  std::size_t rows = 0;
  for (const auto& p : parts) {
    if (p.rank() == 0 || p.cols() != c) throw DimensionError("stack_rows: column counts differ");
    offsets.push_back(out.size());
    out.insert(out.end(), p.values().begin(), p.values().end());
    rows += p.rows();
  }
  return make_result_n("stack_rows", {rows, c}, std::move(out), parts,
                       [offsets = std::move(offsets)](Node& self) {
                         for (std::size_t k = 0; k < self.inputs.size(); ++k) {
                           auto& x = *self.inputs[k];
                           if (!tracks(x)) continue;
                           auto g = x.ensure_grad();
                           for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[offsets[k] + i];
                         }
                       });
}

Tensor select_row(const Tensor& a, std::size_t row) {
  if (a.rank() != 2 || row >= a.rows()) throw DimensionError("select_row: row out of range");
  const std::size_t c = a.cols();
  auto v = a.values();
  std::vector<double> out(v.begin() + static_cast<std::ptrdiff_t>(row * c),
                          v.begin() + static_cast<std::ptrdiff_t>((row + 1) * c));
  return make_result("select_row", {c}, std::move(out), {a}, [row, c](Node& self) {
    auto& x = *self.inputs[0];
    if (!tracks(x)) return;
    auto g = x.ensure_grad();
    for (std::size_t j = 0; j < c; ++j) g[row * c + j] += self.grad[j];
  });
}

Tensor slice_rows(const Tensor& a, std::size_t begin, std::size_t end) {
  if (a.rank() != 2 || begin >= end || end > a.rows()) {
    throw DimensionError("slice_rows: invalid range [" + std::to_string(begin) + ", " +
                         std::to_string(end) + ") of " + shape_string(a.shape()));
  }
  const std::size_t c = a.cols();
  auto v = a.values();
  std::vector<double> out(v.begin() + static_cast<std::ptrdiff_t>(begin * c),
                          v.begin() + static_cast<std::ptrdiff_t>(end * c));
  return make_result("slice_rows", {end - begin, c}, std::move(out), {a}, [begin, c](Node& self) {
    auto& x = *self.inputs[0];
    if (!tracks(x)) return;
    auto g = x.ensure_grad();
    for (std::size_t i = 0; i < self.grad.size(); ++i) g[begin * c + i] += self.grad[i];
  });
}

Tensor gather_rows(const Tensor& a, std::span<const std::size_t> indices) {
  if (a.rank() != 2) throw DimensionError("gather_rows: expected a matrix");
  const std::size_t c = a.cols(), n = a.rows();
  std::vector<double> out(indices.size() * c);
  auto v = a.values();
  for (std::size_t i = 0; i < indices.size(); ++i) {
    if (indices[i] >= n) throw DimensionError("gather_rows: index out of range");
    std::copy_n(v.data() + indices[i] * c, c, out.data() + i * c);
  }
  std::vector<std::size_t> idx(indices.begin(), indices.end());
  return make_result("gather_rows", {indices.size(), c}, std::move(out), {a},
                     [c, idx = std::move(idx)](Node& self) {
                       auto& x = *self.inputs[0];
                       if (!tracks(x)) return;
                       auto g = x.ensure_grad();
                       for (std::size_t i = 0; i < idx.size(); ++i)
                         for (std::size_t j = 0; j < c; ++j) g[idx[i] * c + j] += self.grad[i * c + j];
                     });
}

}  // namespace cvec

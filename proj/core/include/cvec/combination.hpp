#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "cvec/nets.hpp"
#include "cvec/ops.hpp"
#include "cvec/param_store.hpp"
#include "cvec/pooling.hpp"

// Combination of window-level d-vectors into c-vectors.
//
// All weights use the (input x output) layout and act on row vectors,
// y = x W. Relative to the usual column form y = W x this stores the
// transpose for FC, permutation, projection (P) and shortcut (V) matrices,
// while the bilinear factors U_k are stored exactly as written (U_k^T e_k is
// e_k U_k).

namespace cvec::combination {

enum class Variant { FCFusion, SelfAtt1, SelfAtt2, GatedAdd, Bilinear, Stacked };

struct CombinerSpec {
  Variant variant = Variant::Stacked;
  /// Bounded activation applied before the Hadamard product (Bilinear, Stacked).
  Activation bilinear_activation = Activation::Sigmoid;
  /// Candidate activation for GatedAdd.
  Activation candidate_activation = Activation::Tanh;
  /// Window-level d-vector size of each input system.
  std::vector<std::size_t> input_dims = {640, 640};
  /// Output heads of each input system (used by SelfAtt2).
  std::vector<std::size_t> input_heads = {5, 5};
  std::size_t output_dim = 640;   // O
  std::size_t rank = 128;         // D
  std::size_t common_dim = 640;   // SelfAtt1 candidate size
  std::size_t head_common_dim = 128;  // SelfAtt2 per-head candidate size
  std::size_t attention_dim = 64;
  std::size_t selfatt1_heads = 1;
  std::size_t selfatt2_heads = 5;
  double mu = 0.05;
  bool shortcuts = true;

  /// Names: FCFusion, SelfAtt1, SelfAtt2, GatedAdd, Bilinear_sigmoid,
  /// Bilinear_tanh, Stacked_sigmoid, Stacked_tanh.
  static CombinerSpec from_name(const std::string& name, nets::Profile profile);
  static const std::vector<std::string>& variant_names();
  std::string name() const;

  std::size_t inputs() const { return input_dims.size(); }
  /// Size of the combined vector c.
  std::size_t combined_dim() const;
  pooling::PoolingConfig selfatt1_pooling() const;
  pooling::PoolingConfig selfatt2_pooling() const;
  void validate() const;
};

/// Combined vector plus the attention penalty of any attentive stage
/// (undefined when the variant has none).
struct CombineResult {
  Tensor c;
  Tensor penalty;
  Tensor annotation;
};

void init_combiner(ParamStore& params, const CombinerSpec& spec, Rng& rng, const std::string& prefix = "comb");

/// Dispatches on spec.variant. `inputs` holds the pooled output of each system.
CombineResult combine(const CombinerSpec& spec, std::span<const pooling::PooledEmbedding> inputs,
                      const ParamStore& params, const std::string& prefix = "comb");

/// c = ReLU(W Concat(e_1..e_K) + b).
Tensor fc_fusion(std::span<const Tensor> e, const ParamStore& params, const std::string& prefix);

/// C = SelfAtt(W_1 e_1, ..., W_K e_K); c = Vector(C).
CombineResult selfatt1_combine(std::span<const Tensor> e, const pooling::PoolingConfig& attention,
                               const ParamStore& params, const std::string& prefix);

/// Attention over every head vector of every system, each mapped by its
/// system's W_k. heads[k] is the G_k x N_k matrix of system k.
CombineResult selfatt2_combine(std::span<const Tensor> heads, const pooling::PoolingConfig& attention,
                               const ParamStore& params, const std::string& prefix);

/// c = sum_k f(W_k e_k + b_wk) (.) sigmoid(U_k e_k + b_uk).
Tensor gated_add_combine(std::span<const Tensor> e, Activation f, const ParamStore& params,
                         const std::string& prefix);

/// c* = P (f(U_1^T e_1) (.) f(U_2^T e_2)) + b; c = c* + V_1 e_1 + V_2 e_2
/// (shortcut terms only when V_1/V_2 are registered).
Tensor bilinear_combine(const Tensor& e1, const Tensor& e2, Activation f, const ParamStore& params,
                        const std::string& prefix);

/// K-input generalisation: Hadamard product over f(U_k^T e_k) for k = 1..K
/// and a shortcut per input.
Tensor bilinear_combine_k(std::span<const Tensor> e, Activation f, const ParamStore& params,
                          const std::string& prefix);

/// c' = SelfAtt1(e_1, e_2); c = Bilinear(c', e_2).
CombineResult stacked_combine(const Tensor& e1, const Tensor& e2, const pooling::PoolingConfig& attention,
                              Activation f, const ParamStore& params, const std::string& prefix);

/// Full bilinear weight tensor, entry (m, n, o) at index (m * N + n) * O + o.
struct BilinearTensor {
  std::size_t m = 0, n = 0, o = 0;
  std::vector<double> w;

  double at(std::size_t i, std::size_t j, std::size_t k) const { return w[(i * n + j) * o + k]; }
};

/// c_o = e_1^T W_o e_2 + b_o, one bilinear form per output.
std::vector<double> bilinear_form(std::span<const double> e1, std::span<const double> e2,
                                  const BilinearTensor& w, std::span<const double> b);

/// c = W Vector(e_1 (x) e_2) + b via the outer product and an FC projection.
std::vector<double> bilinear_outer_projection(std::span<const double> e1, std::span<const double> e2,
                                              const BilinearTensor& w, std::span<const double> b);

/// Rank-D tied tensor W_o = U_1 diag(p_o) U_2^T, with p_o column o of the
/// stored D x O projection.
BilinearTensor tied_bilinear_tensor(const Tensor& u1, const Tensor& u2, const Tensor& p);

}  // namespace cvec::combination

#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "cvec/param_store.hpp"
#include "cvec/tensor.hpp"

namespace cvec::pooling {

/// Multi-head self-attentive temporal pooling.
///
/// The penalty mu * ||A^T A - diag(lambda)||_F^2 pulls head g towards a one-hot
/// ("spiky") column when lambda_g = 1 and towards a flat column when lambda_g
/// is small.
struct PoolingConfig {
  std::size_t heads = 5;
  std::size_t attention_dim = 64;
  std::vector<double> lambda = {1.0, 1.0, 1.0, 0.2, 0.2};
  double mu = 0.05;
  /// Keep one frame-level vector every `stride` frames before attending.
  std::size_t stride = 1;

  /// First ceil(3G/5) entries 1, the rest 1/G.
  static std::vector<double> default_lambda(std::size_t heads);
  void validate() const;
};

struct PooledEmbedding {
  /// G x N matrix of integrated vectors, one row per head.
  Tensor integrated;
  /// Row-major flattening of `integrated`: the window-level d-vector (G*N).
  Tensor flat;
  /// T x G annotation matrix; every column sums to one.
  Tensor annotation;

  Tensor head(std::size_t g) const;
};

void init_pooling(ParamStore& params, std::size_t input_dim, const PoolingConfig& cfg, Rng& rng,
                  const std::string& prefix);

/// A = SoftmaxColumns(tanh(H W1) W2), E = A^T H. Subsampling by cfg.stride is
/// applied to H first.
PooledEmbedding self_attentive_pool(const Tensor& frames, const PoolingConfig& cfg, const ParamStore& params,
                                    const std::string& prefix);

/// Pools `batch` equal-length windows stacked vertically in `frames`. The
/// attention scores are computed for all rows at once.
std::vector<PooledEmbedding> self_attentive_pool_batch(const Tensor& frames, std::size_t batch,
                                                       const PoolingConfig& cfg, const ParamStore& params,
                                                       const std::string& prefix);

/// mu * ||A^T A - diag(lambda)||_F^2.
Tensor attention_penalty(const Tensor& annotation, const PoolingConfig& cfg);

/// Rows 0, stride, 2*stride, ...
Tensor subsample(const Tensor& frames, std::size_t stride);

}  // namespace cvec::pooling

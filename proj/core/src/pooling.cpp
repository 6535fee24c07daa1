#include "cvec/pooling.hpp"

#include "cvec/error.hpp"
#include "cvec/ops.hpp"

namespace cvec::pooling {

std::vector<double> PoolingConfig::default_lambda(std::size_t heads) {
  if (heads == 0) throw ConfigError("pooling: zero heads");
  const std::size_t spiky = (3 * heads + 4) / 5;
  std::vector<double> lambda(heads, 1.0 / static_cast<double>(heads));
  for (std::size_t g = 0; g < spiky; ++g) lambda[g] = 1.0;
  return lambda;
}

void PoolingConfig::validate() const {
  if (heads == 0) throw ConfigError("pooling: head count must be at least 1");
  if (attention_dim == 0) throw ConfigError("pooling: zero attention width");
  if (stride == 0) throw ConfigError("pooling: stride must be at least 1");
  if (lambda.size() != heads) {
    throw ConfigError("pooling: " + std::to_string(lambda.size()) + " lambda values for " +
                      std::to_string(heads) + " heads");
  }
  for (double l : lambda) {
    if (!(l > 0.0)) throw ConfigError("pooling: lambda entries must be positive");
  }
  if (mu < 0.0) throw ConfigError("pooling: negative penalty coefficient");
}

Tensor PooledEmbedding::head(std::size_t g) const { return select_row(integrated, g); }

void init_pooling(ParamStore& params, std::size_t input_dim, const PoolingConfig& cfg, Rng& rng,
                  const std::string& prefix) {
  cfg.validate();
  params.add_glorot(prefix + ".W1", input_dim, cfg.attention_dim, rng);
  params.add_glorot(prefix + ".W2", cfg.attention_dim, cfg.heads, rng);
}

PooledEmbedding self_attentive_pool(const Tensor& frames, const PoolingConfig& cfg, const ParamStore& params,
                                    const std::string& prefix) {
  cfg.validate();
  if (frames.rank() != 2 || frames.rows() == 0) {
    throw DimensionError("pooling: expected a non-empty T x N matrix, got " + shape_string(frames.shape()));
  }
  const Tensor h = subsample(frames, cfg.stride);
  PooledEmbedding out;
  out.annotation =
      softmax_columns(matmul(tanh(matmul(h, params.get(prefix + ".W1"))), params.get(prefix + ".W2")));
  out.integrated = matmul(transpose(out.annotation), h);
  out.flat = vectorize(out.integrated);
  return out;
}

std::vector<PooledEmbedding> self_attentive_pool_batch(const Tensor& frames, std::size_t batch,
                                                       const PoolingConfig& cfg, const ParamStore& params,
                                                       const std::string& prefix) {
  cfg.validate();
  if (frames.rank() != 2 || batch == 0 || frames.rows() == 0 || frames.rows() % batch != 0) {
    throw DimensionError("pooling: cannot split " + shape_string(frames.shape()) + " into " +
                         std::to_string(batch) + " windows");
  }
  const std::size_t t = frames.rows() / batch;
  Tensor h = frames;
  std::size_t kept = t;
  if (cfg.stride > 1) {
    kept = (t + cfg.stride - 1) / cfg.stride;
    std::vector<std::size_t> idx;
    idx.reserve(kept * batch);
    for (std::size_t b = 0; b < batch; ++b)
      for (std::size_t k = 0; k < t; k += cfg.stride) idx.push_back(b * t + k);
    h = gather_rows(frames, idx);
  }
  const Tensor scores = matmul(tanh(matmul(h, params.get(prefix + ".W1"))), params.get(prefix + ".W2"));
  std::vector<PooledEmbedding> out(batch);
  for (std::size_t b = 0; b < batch; ++b) {
    const Tensor hb = slice_rows(h, b * kept, (b + 1) * kept);
    out[b].annotation = softmax_columns(slice_rows(scores, b * kept, (b + 1) * kept));
    out[b].integrated = matmul(transpose(out[b].annotation), hb);
    out[b].flat = vectorize(out[b].integrated);
  }
  return out;
}

Tensor attention_penalty(const Tensor& annotation, const PoolingConfig& cfg) {
  if (annotation.rank() != 2) throw DimensionError("penalty: annotation must be a matrix");
  const std::size_t g = annotation.cols();
  if (cfg.lambda.size() != g) {
    throw ConfigError("penalty: " + std::to_string(cfg.lambda.size()) + " lambda values for " +
                      std::to_string(g) + " heads");
  }
  std::vector<double> diag(g * g, 0.0);
  for (std::size_t i = 0; i < g; ++i) diag[i * g + i] = cfg.lambda[i];
  const Tensor gram = matmul(transpose(annotation), annotation);
  return scale(sum_squares(sub(gram, Tensor::matrix(g, g, std::move(diag)))), cfg.mu);
}

Tensor subsample(const Tensor& frames, std::size_t stride) {
  if (stride == 0) throw ConfigError("subsample: stride must be at least 1");
  if (stride == 1) return frames;
  std::vector<std::size_t> idx;
  for (std::size_t t = 0; t < frames.rows(); t += stride) idx.push_back(t);
  return gather_rows(frames, idx);
}

}  // namespace cvec::pooling

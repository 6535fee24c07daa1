#include "cvec/nets.hpp"

#include <algorithm>
#include <numeric>

#include "cvec/error.hpp"

namespace cvec::nets {

namespace {

std::string layer_name(const std::string& prefix, std::size_t i) {
  return prefix + ".L" + std::to_string(i + 1);
}

Tensor linear(const Tensor& x, const ParamStore& params, const std::string& name) {
  return add_bias(matmul(x, params.get(name + ".W")), params.get(name + ".b"));
}

void init_linear(ParamStore& params, const std::string& name, std::size_t in, std::size_t out, Rng& rng) {
  params.add_glorot(name + ".W", in, out, rng);
  params.add_zeros(name + ".b", {out});
}

std::vector<std::size_t> reversed_rows(std::size_t n) {
  std::vector<std::size_t> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = n - 1 - i;
  return idx;
}

}  // namespace

Profile parse_profile(const std::string& name) {
  if (name == "standard") return Profile::Standard;
  if (name == "tiny") return Profile::Tiny;
  throw ConfigError("unknown profile '" + name + "' (expected standard or tiny)");
}

// ---------------------------------------------------------------- TDNN config

std::vector<TdnnLayer> TdnnConfig::standard_layers(std::size_t divisor) {
  const std::size_t h = 256 / divisor, out = 128 / divisor;
  return {
      {{-2, -1, 0, 1, 2}, h, Activation::Relu},
      {{-2, 0, 2}, h, Activation::Relu},
      {{-3, 0, 3}, h, Activation::Relu},
      {{0}, h, Activation::Relu},
      {{0}, h, Activation::Relu},
      {{0}, out, Activation::Identity},
  };
}

TdnnConfig TdnnConfig::for_profile(Profile p) {
  TdnnConfig cfg;
  cfg.layers = standard_layers(p == Profile::Tiny ? 4 : 1);
  return cfg;
}

std::size_t TdnnConfig::layer_input_dim(std::size_t i) const {
  const std::size_t prev = i == 0 ? input_dim : layers[i - 1].output_dim;
  return layers[i].context.size() * prev;
}

int TdnnConfig::left_context() const {
  int total = 0;
  for (const auto& l : layers) total += -*std::min_element(l.context.begin(), l.context.end());
  return total;
}

int TdnnConfig::right_context() const {
  int total = 0;
  for (const auto& l : layers) total += *std::max_element(l.context.begin(), l.context.end());
  return total;
}

void TdnnConfig::validate() const {
  if (input_dim == 0) throw ConfigError("tdnn: zero input dimension");
  if (layers.empty()) throw ConfigError("tdnn: no layers");
  for (const auto& l : layers) {
    if (l.context.empty()) throw ConfigError("tdnn: empty layer context");
    if (!std::is_sorted(l.context.begin(), l.context.end())) throw ConfigError("tdnn: unsorted context");
    if (l.output_dim == 0) throw ConfigError("tdnn: zero layer width");
    if (*std::min_element(l.context.begin(), l.context.end()) > 0 ||
        *std::max_element(l.context.begin(), l.context.end()) < 0) {
      throw ConfigError("tdnn: layer context must include offset 0 between its extremes");
    }
  }
}

HornnConfig HornnConfig::for_profile(Profile p) {
  HornnConfig cfg;
  if (p == Profile::Tiny) {
    cfg.hidden_dim = 64;
    cfg.projection_dim = 32;
  }
  return cfg;
}

void HornnConfig::validate() const {
  if (input_dim == 0 || hidden_dim == 0 || projection_dim == 0) throw ConfigError("hornn: zero width");
  if (lags.empty()) throw ConfigError("hornn: no recurrent lags");
  auto sorted = lags;
  std::sort(sorted.begin(), sorted.end());
  if (sorted.front() == 0) throw ConfigError("hornn: lags must be strictly positive");
  if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
    throw ConfigError("hornn: lags must be distinct");
  }
}

VadConfig VadConfig::for_profile(Profile p) {
  VadConfig cfg;
  if (p == Profile::Tiny) cfg.hidden_dim = 64;
  return cfg;
}

void VadConfig::validate() const {
  if (input_dim == 0 || hidden_dim == 0 || layers == 0) throw ConfigError("vad: zero width or depth");
}

CpdConfig CpdConfig::for_profile(Profile p) {
  CpdConfig cfg;
  cfg.tdnn = TdnnConfig::for_profile(p);
  if (p == Profile::Tiny) cfg.hidden_dim = 32;
  return cfg;
}

void CpdConfig::validate() const {
  if (context == 0) throw ConfigError("cpd: zero context");
  if (hidden_dim == 0) throw ConfigError("cpd: zero hidden width");
  tdnn.validate();
}

// ---------------------------------------------------------------- init

void init_tdnn(ParamStore& params, const TdnnConfig& cfg, Rng& rng, const std::string& prefix) {
  cfg.validate();
  for (std::size_t i = 0; i < cfg.layers.size(); ++i) {
    init_linear(params, layer_name(prefix, i), cfg.layer_input_dim(i), cfg.layers[i].output_dim, rng);
  }
}

void init_hornn(ParamStore& params, const HornnConfig& cfg, Rng& rng, const std::string& prefix) {
  cfg.validate();
  params.add_glorot(prefix + ".W", cfg.input_dim, cfg.hidden_dim, rng);
  for (auto lag : cfg.lags) {
    params.add_glorot(prefix + ".U.lag" + std::to_string(lag), cfg.hidden_dim, cfg.hidden_dim, rng);
  }
  params.add_zeros(prefix + ".b", {cfg.hidden_dim});
  params.add_glorot(prefix + ".proj", cfg.hidden_dim, cfg.projection_dim, rng);
}

void init_vad(ParamStore& params, const VadConfig& cfg, Rng& rng, const std::string& prefix) {
  cfg.validate();
  std::size_t in = cfg.spliced_dim();
  for (std::size_t i = 0; i < cfg.layers; ++i) {
    init_linear(params, layer_name(prefix, i), in, cfg.hidden_dim, rng);
    in = cfg.hidden_dim;
  }
  init_linear(params, prefix + ".out", in, 2, rng);
}

void init_cpd(ParamStore& params, const CpdConfig& cfg, Rng& rng, const std::string& prefix) {
  cfg.validate();
  init_tdnn(params, cfg.tdnn, rng, prefix + ".tdnn");
  params.add_glorot(prefix + ".rnn.W", cfg.tdnn.output_dim(), cfg.hidden_dim, rng);
  params.add_glorot(prefix + ".rnn.U", cfg.hidden_dim, cfg.hidden_dim, rng);
  params.add_zeros(prefix + ".rnn.b", {cfg.hidden_dim});
  init_linear(params, prefix + ".out", cfg.hidden_dim, 2, rng);
}

// ---------------------------------------------------------------- TDNN

Tensor tdnn_forward(const Tensor& feats, const TdnnConfig& cfg, const ParamStore& params,
                    const std::string& prefix) {
  const std::size_t lengths[] = {feats.rows()};
  return tdnn_forward_segments(feats, lengths, cfg, params, prefix);
}

Tensor tdnn_forward_segments(const Tensor& feats, std::span<const std::size_t> lengths,
                             const TdnnConfig& cfg, const ParamStore& params, const std::string& prefix) {
  cfg.validate();
  if (feats.rank() != 2 || feats.cols() != cfg.input_dim) {
    throw ConfigError("tdnn: expected " + std::to_string(cfg.input_dim) + "-dim features, got " +
                      shape_string(feats.shape()));
  }
  if (std::accumulate(lengths.begin(), lengths.end(), std::size_t{0}) != feats.rows()) {
    throw DimensionError("tdnn: segment lengths do not cover the input rows");
  }
  const auto left = static_cast<long>(cfg.left_context());
  const auto right = static_cast<long>(cfg.right_context());

  // Replicate-pad every segment by the receptive field. Each later layer maps
  // padded positions [a, b) to [a - min_offset, b - max_offset).
  std::vector<std::size_t> pad_index;
  std::vector<std::size_t> seg_rows;  // rows per segment in the current layer
  std::size_t start = 0;
  for (auto len : lengths) {
    if (len == 0) throw DimensionError("tdnn: empty segment");
    const long last = static_cast<long>(len) - 1;
    for (long p = -left; p <= last + right; ++p) {
      pad_index.push_back(start + static_cast<std::size_t>(std::clamp(p, 0L, last)));
    }
    seg_rows.push_back(len + static_cast<std::size_t>(left + right));
    start += len;
  }
  Tensor x = gather_rows(feats, pad_index);

  for (std::size_t li = 0; li < cfg.layers.size(); ++li) {
    const auto& layer = cfg.layers[li];
    const int lo = layer.context.front();
    const int hi = layer.context.back();
    const auto shrink = static_cast<std::size_t>(hi - lo);
    Tensor spliced;
    std::vector<std::size_t> next_rows;
    if (layer.context.size() == 1 && lo == 0) {
      spliced = x;
      next_rows = seg_rows;
    } else {
      std::vector<Tensor> parts;
      parts.reserve(layer.context.size());
      for (int offset : layer.context) {
        std::vector<std::size_t> idx;
        std::size_t in_start = 0;
        for (auto rows : seg_rows) {
          const std::size_t out_rows = rows - shrink;
          for (std::size_t r = 0; r < out_rows; ++r) {
            idx.push_back(in_start + r + static_cast<std::size_t>(offset - lo));
          }
          in_start += rows;
        }
        parts.push_back(gather_rows(x, idx));
      }
      for (auto rows : seg_rows) next_rows.push_back(rows - shrink);
      spliced = concat_cols(parts);
    }
    x = activate(layer.activation, linear(spliced, params, layer_name(prefix, li)));
    seg_rows = std::move(next_rows);
  }
  return x;
}

// ---------------------------------------------------------------- HORNN

Tensor hornn_forward(const Tensor& feats, const HornnConfig& cfg, const ParamStore& params,
                     const std::string& prefix) {
  return hornn_forward_batch(feats, 1, cfg, params, prefix);
}

Tensor hornn_forward_batch(const Tensor& feats, std::size_t batch, const HornnConfig& cfg,
                           const ParamStore& params, const std::string& prefix) {
  cfg.validate();
  if (feats.rank() != 2 || feats.cols() != cfg.input_dim) {
    throw ConfigError("hornn: expected " + std::to_string(cfg.input_dim) + "-dim features, got " +
                      shape_string(feats.shape()));
  }
  if (batch == 0 || feats.rows() % batch != 0 || feats.rows() == 0) {
    throw DimensionError("hornn: rows are not a whole number of equal-length sequences");
  }
  const std::size_t steps = feats.rows() / batch;
  const Tensor input = add_bias(matmul(feats, params.get(prefix + ".W")), params.get(prefix + ".b"));

  std::vector<Tensor> lag_weights;
  for (auto lag : cfg.lags) lag_weights.push_back(params.get(prefix + ".U.lag" + std::to_string(lag)));

  std::vector<Tensor> states;
  states.reserve(steps);
  std::vector<std::size_t> idx(batch);
  for (std::size_t t = 0; t < steps; ++t) {
    for (std::size_t b = 0; b < batch; ++b) idx[b] = b * steps + t;
    Tensor pre = gather_rows(input, idx);
    for (std::size_t k = 0; k < cfg.lags.size(); ++k) {
      if (t >= cfg.lags[k]) pre = add(pre, matmul(states[t - cfg.lags[k]], lag_weights[k]));
    }
    states.push_back(relu(pre));
  }

  // States are step-major; reorder to the input's sequence-major rows.
  Tensor stacked = stack_rows(states);
  std::vector<std::size_t> order(batch * steps);
  for (std::size_t b = 0; b < batch; ++b)
    for (std::size_t t = 0; t < steps; ++t) order[b * steps + t] = t * batch + b;
  return matmul(gather_rows(stacked, order), params.get(prefix + ".proj"));
}

// ---------------------------------------------------------------- VAD

Tensor vad_logits(const Tensor& spliced, const VadConfig& cfg, const ParamStore& params,
                  const std::string& prefix) {
  if (spliced.rank() != 2 || spliced.cols() != cfg.spliced_dim()) {
    throw DimensionError("vad: expected spliced width " + std::to_string(cfg.spliced_dim()) + ", got " +
                         shape_string(spliced.shape()));
  }
  Tensor x = spliced;
  for (std::size_t i = 0; i < cfg.layers; ++i) x = relu(linear(x, params, layer_name(prefix, i)));
  return linear(x, params, prefix + ".out");
}

Tensor vad_forward(const FeatureSequence& window, const VadConfig& cfg, const ParamStore& params,
                   const std::string& prefix) {
  if (window.frames() != cfg.window() || window.dim != cfg.input_dim) {
    throw ContractError("vad: window must be " + std::to_string(cfg.window()) + " frames of " +
                        std::to_string(cfg.input_dim) + " dims");
  }
  Tensor spliced = Tensor::matrix(1, cfg.spliced_dim(), window.data);
  return reshape(softmax_rows(vad_logits(spliced, cfg, params, prefix)), {2});
}

Tensor vad_splice(const FeatureSequence& stream, std::span<const std::size_t> frames, const VadConfig& cfg) {
  if (stream.dim != cfg.input_dim) throw ConfigError("vad: feature dimension mismatch");
  const std::size_t width = cfg.spliced_dim();
  std::vector<double> out(frames.size() * width);
  const long last = static_cast<long>(stream.frames()) - 1;
  const long ctx = static_cast<long>(cfg.context);
  for (std::size_t i = 0; i < frames.size(); ++i) {
    double* dst = out.data() + i * width;
    for (long o = -ctx; o <= ctx; ++o) {
      const auto src = static_cast<std::size_t>(std::clamp(static_cast<long>(frames[i]) + o, 0L, last));
      std::copy_n(stream.data.data() + src * stream.dim, stream.dim, dst);
      dst += stream.dim;
    }
  }
  return Tensor::matrix(frames.size(), width, std::move(out));
}

// ---------------------------------------------------------------- CPD

Tensor cpd_encode(const Tensor& dvecs, const StepIndex& steps, const CpdConfig& cfg,
                  const ParamStore& params, const std::string& prefix) {
  if (steps.empty() || steps.front().empty()) throw DimensionError("cpd: empty step index");
  const std::size_t batch = steps.front().size();
  const Tensor w = params.get(prefix + ".rnn.W");
  const Tensor u = params.get(prefix + ".rnn.U");
  const Tensor b = params.get(prefix + ".rnn.b");
  if (dvecs.cols() != w.rows()) throw DimensionError("cpd: d-vector width does not match the encoder");
  if (u.rows() != cfg.hidden_dim) throw ConfigError("cpd: encoder width does not match the config");
  // Project every referenced row once, then step through the recurrence.
  const Tensor projected = add_bias(matmul(dvecs, w), b);
  Tensor h;
  for (const auto& rows : steps) {
    if (rows.size() != batch) throw DimensionError("cpd: ragged step index");
    Tensor pre = gather_rows(projected, rows);
    if (h.defined()) pre = add(pre, matmul(h, u));
    h = relu(pre);
  }
  return h;
}

Tensor cpd_fuse(const Tensor& past_dvecs, const StepIndex& past_steps, const Tensor& future_dvecs,
                const StepIndex& future_steps, const CpdConfig& cfg, const ParamStore& params,
                const std::string& prefix) {
  return hadamard(cpd_encode(past_dvecs, past_steps, cfg, params, prefix),
                  cpd_encode(future_dvecs, future_steps, cfg, params, prefix));
}

Tensor cpd_classify(const Tensor& fused, const ParamStore& params, const std::string& prefix) {
  return linear(fused, params, prefix + ".out");
}

Tensor cpd_forward(const FeatureSequence& past, const FeatureSequence& future, const CpdConfig& cfg,
                   const ParamStore& params, const std::string& prefix) {
  if (past.empty() || future.empty()) throw ContractError("cpd: empty context side");
  const Tensor past_d = tdnn_forward(past.to_tensor(), cfg.tdnn, params, prefix + ".tdnn");
  const Tensor future_d = tdnn_forward(future.reversed().to_tensor(), cfg.tdnn, params, prefix + ".tdnn");
  StepIndex past_steps, future_steps;
  for (std::size_t i = 0; i < past.frames(); ++i) past_steps.push_back({i});
  for (std::size_t i = 0; i < future.frames(); ++i) future_steps.push_back({i});
  const Tensor fused = cpd_fuse(past_d, past_steps, future_d, future_steps, cfg, params, prefix);
  return reshape(softmax_rows(cpd_classify(fused, params, prefix)), {2});
}

CpdStreamFeatures cpd_stream_features(const Tensor& region_feats, const CpdConfig& cfg,
                                      const ParamStore& params, const std::string& prefix) {
  const auto rev = reversed_rows(region_feats.rows());
  CpdStreamFeatures out;
  out.forward = tdnn_forward(region_feats, cfg.tdnn, params, prefix + ".tdnn");
  out.reversed = gather_rows(tdnn_forward(gather_rows(region_feats, rev), cfg.tdnn, params, prefix + ".tdnn"), rev);
  return out;
}

void cpd_region_steps(std::span<const std::size_t> centers, std::size_t lo, std::size_t hi,
                      std::size_t context, StepIndex& past, StepIndex& future) {
  if (lo >= hi) throw ContractError("cpd: empty region");
  past.assign(context + 1, std::vector<std::size_t>(centers.size()));
  future.assign(context + 1, std::vector<std::size_t>(centers.size()));
  const long ctx = static_cast<long>(context);
  for (std::size_t b = 0; b < centers.size(); ++b) {
    const long t = static_cast<long>(centers[b]);
    for (long k = 0; k <= ctx; ++k) {
      past[static_cast<std::size_t>(k)][b] =
          static_cast<std::size_t>(std::clamp(t - ctx + k, static_cast<long>(lo), static_cast<long>(hi) - 1));
      future[static_cast<std::size_t>(k)][b] =
          static_cast<std::size_t>(std::clamp(t + ctx - k, static_cast<long>(lo), static_cast<long>(hi) - 1));
    }
  }
}

std::vector<double> cpd_region_posteriors(const Tensor& region_feats, const CpdConfig& cfg,
                                          const ParamStore& params, const std::string& prefix) {
  NoGradGuard no_grad;
  const std::size_t n = region_feats.rows();
  const auto dv = cpd_stream_features(region_feats, cfg, params, prefix);
  std::vector<double> out(n);
  constexpr std::size_t kChunk = 2048;
  for (std::size_t begin = 0; begin < n; begin += kChunk) {
    const std::size_t end = std::min(n, begin + kChunk);
    std::vector<std::size_t> centers(end - begin);
    std::iota(centers.begin(), centers.end(), begin);
    StepIndex past, future;
    cpd_region_steps(centers, 0, n, cfg.context, past, future);
    const Tensor probs =
        softmax_rows(cpd_classify(cpd_fuse(dv.forward, past, dv.reversed, future, cfg, params, prefix), params, prefix));
    for (std::size_t i = 0; i < centers.size(); ++i) out[begin + i] = probs(i, 1);
  }
  return out;
}

}  // namespace cvec::nets

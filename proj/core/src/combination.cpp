#include "cvec/combination.hpp"

#include <algorithm>
#include <numeric>

#include "cvec/error.hpp"

namespace cvec::combination {

namespace {

std::string indexed(const std::string& prefix, const char* name, std::size_t k) {
  return prefix + "." + name + std::to_string(k + 1);
}

std::vector<Tensor> flats(std::span<const pooling::PooledEmbedding> inputs) {
  std::vector<Tensor> out;
  for (const auto& p : inputs) out.push_back(p.flat);
  return out;
}

}  // namespace

// ---------------------------------------------------------------- spec

const std::vector<std::string>& CombinerSpec::variant_names() {
  static const std::vector<std::string> names = {"FCFusion",         "SelfAtt1",      "SelfAtt2",
                                                 "GatedAdd",         "Bilinear_sigmoid", "Bilinear_tanh",
                                                 "Stacked_sigmoid",  "Stacked_tanh"};
  return names;
}

CombinerSpec CombinerSpec::from_name(const std::string& name, nets::Profile profile) {
  CombinerSpec spec;
  if (name == "FCFusion") {
    spec.variant = Variant::FCFusion;
  } else if (name == "SelfAtt1") {
    spec.variant = Variant::SelfAtt1;
  } else if (name == "SelfAtt2") {
    spec.variant = Variant::SelfAtt2;
  } else if (name == "GatedAdd") {
    spec.variant = Variant::GatedAdd;
  } else if (name == "Bilinear_sigmoid" || name == "Bilinear_tanh") {
    spec.variant = Variant::Bilinear;
    spec.bilinear_activation = name == "Bilinear_tanh" ? Activation::Tanh : Activation::Sigmoid;
  } else if (name == "Stacked_sigmoid" || name == "Stacked_tanh") {
    spec.variant = Variant::Stacked;
    spec.bilinear_activation = name == "Stacked_tanh" ? Activation::Tanh : Activation::Sigmoid;
  } else {
    throw ConfigError("unknown combiner '" + name + "'");
  }
  if (profile == nets::Profile::Tiny) {
    spec.input_dims = {160, 160};
    spec.output_dim = 160;
    spec.rank = 32;
    spec.common_dim = 160;
    spec.head_common_dim = 32;
    spec.attention_dim = 16;
  }
  return spec;
}

std::string CombinerSpec::name() const {
  const std::string suffix = bilinear_activation == Activation::Tanh ? "_tanh" : "_sigmoid";
  switch (variant) {
    case Variant::FCFusion: return "FCFusion";
    case Variant::SelfAtt1: return "SelfAtt1";
    case Variant::SelfAtt2: return "SelfAtt2";
    case Variant::GatedAdd: return "GatedAdd";
    case Variant::Bilinear: return "Bilinear" + suffix;
    case Variant::Stacked: return "Stacked" + suffix;
  }
  return "unknown";
}

std::size_t CombinerSpec::combined_dim() const {
  switch (variant) {
    case Variant::SelfAtt1: return selfatt1_heads * common_dim;
    case Variant::SelfAtt2: return selfatt2_heads * head_common_dim;
    default: return output_dim;
  }
}

pooling::PoolingConfig CombinerSpec::selfatt1_pooling() const {
  pooling::PoolingConfig cfg;
  cfg.heads = selfatt1_heads;
  cfg.attention_dim = attention_dim;
  cfg.mu = mu;
  if (selfatt1_heads == 1) {
    cfg.lambda = {1.0 / static_cast<double>(inputs())};
  } else {
    cfg.lambda = pooling::PoolingConfig::default_lambda(selfatt1_heads);
  }
  return cfg;
}

pooling::PoolingConfig CombinerSpec::selfatt2_pooling() const {
  pooling::PoolingConfig cfg;
  cfg.heads = selfatt2_heads;
  cfg.attention_dim = attention_dim;
  cfg.mu = mu;
  cfg.lambda = pooling::PoolingConfig::default_lambda(selfatt2_heads);
  return cfg;
}

void CombinerSpec::validate() const {
  const std::size_t k = inputs();
  if (k == 0) throw ConfigError("combiner: no inputs");
  if (std::find(input_dims.begin(), input_dims.end(), std::size_t{0}) != input_dims.end()) {
    throw ConfigError("combiner: zero input dimension");
  }
  if (output_dim == 0 || rank == 0 || common_dim == 0 || head_common_dim == 0) {
    throw ConfigError("combiner: zero width");
  }
  switch (variant) {
    case Variant::FCFusion:
    case Variant::GatedAdd:
      if (k < 2) throw ConfigError(name() + ": needs at least two inputs");
      break;
    case Variant::SelfAtt1:
      selfatt1_pooling().validate();
      break;
    case Variant::SelfAtt2:
      if (input_heads.size() != k) throw ConfigError("SelfAtt2: one head count per input system required");
      for (std::size_t i = 0; i < k; ++i) {
        if (input_heads[i] == 0 || input_dims[i] % input_heads[i] != 0) {
          throw ConfigError("SelfAtt2: input dimension not divisible by its head count");
        }
      }
      selfatt2_pooling().validate();
      break;
    case Variant::Bilinear: {
      if (k < 2) throw ConfigError(name() + ": needs at least two inputs");
      const auto smallest = *std::min_element(input_dims.begin(), input_dims.end());
      if (rank > smallest) {
        throw ConfigError(name() + ": rank " + std::to_string(rank) + " exceeds min input dimension " +
                          std::to_string(smallest));
      }
      break;
    }
    case Variant::Stacked:
      if (k != 2) throw ConfigError(name() + ": combines exactly two inputs");
      selfatt1_pooling().validate();
      if (rank > std::min(selfatt1_heads * common_dim, input_dims[1])) {
        throw ConfigError(name() + ": rank exceeds the bilinear stage input dimension");
      }
      break;
  }
}

// ---------------------------------------------------------------- init

namespace {

void init_bilinear(ParamStore& params, std::span<const std::size_t> dims, std::size_t rank, std::size_t out,
                   bool shortcuts, Rng& rng, const std::string& prefix) {
  for (std::size_t k = 0; k < dims.size(); ++k) params.add_glorot(indexed(prefix, "U", k), dims[k], rank, rng);
  params.add_glorot(prefix + ".P", rank, out, rng);
  params.add_zeros(prefix + ".b", {out});
  if (shortcuts) {
    for (std::size_t k = 0; k < dims.size(); ++k) params.add_glorot(indexed(prefix, "V", k), dims[k], out, rng);
  }
}

void init_selfatt1(ParamStore& params, std::span<const std::size_t> dims, std::size_t common,
                   const pooling::PoolingConfig& att, Rng& rng, const std::string& prefix) {
  for (std::size_t k = 0; k < dims.size(); ++k) params.add_glorot(indexed(prefix, "W", k), dims[k], common, rng);
  pooling::init_pooling(params, common, att, rng, prefix + ".att");
}

}  // namespace

void init_combiner(ParamStore& params, const CombinerSpec& spec, Rng& rng, const std::string& prefix) {
  spec.validate();
  const auto& dims = spec.input_dims;
  switch (spec.variant) {
    case Variant::FCFusion: {
      const auto total = std::accumulate(dims.begin(), dims.end(), std::size_t{0});
      params.add_glorot(prefix + ".W", total, spec.output_dim, rng);
      params.add_zeros(prefix + ".b", {spec.output_dim});
      break;
    }
    case Variant::SelfAtt1:
      init_selfatt1(params, dims, spec.common_dim, spec.selfatt1_pooling(), rng, prefix);
      break;
    case Variant::SelfAtt2:
      for (std::size_t k = 0; k < dims.size(); ++k) {
        params.add_glorot(indexed(prefix, "W", k), dims[k] / spec.input_heads[k], spec.head_common_dim, rng);
      }
      pooling::init_pooling(params, spec.head_common_dim, spec.selfatt2_pooling(), rng, prefix + ".att");
      break;
    case Variant::GatedAdd:
      for (std::size_t k = 0; k < dims.size(); ++k) {
        params.add_glorot(indexed(prefix, "W", k), dims[k], spec.output_dim, rng);
        params.add_zeros(indexed(prefix, "bw", k), {spec.output_dim});
        params.add_glorot(indexed(prefix, "U", k), dims[k], spec.output_dim, rng);
        params.add_zeros(indexed(prefix, "bu", k), {spec.output_dim});
      }
      break;
    case Variant::Bilinear:
      init_bilinear(params, dims, spec.rank, spec.output_dim, spec.shortcuts, rng, prefix);
      break;
    case Variant::Stacked: {
      init_selfatt1(params, dims, spec.common_dim, spec.selfatt1_pooling(), rng, prefix + ".sa");
      const std::size_t stage_dims[] = {spec.selfatt1_heads * spec.common_dim, dims[1]};
      init_bilinear(params, stage_dims, spec.rank, spec.output_dim, spec.shortcuts, rng, prefix + ".bl");
      break;
    }
  }
}

// ---------------------------------------------------------------- forward

CombineResult combine(const CombinerSpec& spec, std::span<const pooling::PooledEmbedding> inputs,
                      const ParamStore& params, const std::string& prefix) {
  if (inputs.size() != spec.inputs()) {
    throw DimensionError("combiner: expected " + std::to_string(spec.inputs()) + " inputs, got " +
                         std::to_string(inputs.size()));
  }
  const auto e = flats(inputs);
  switch (spec.variant) {
    case Variant::FCFusion: return {fc_fusion(e, params, prefix), {}, {}};
    case Variant::SelfAtt1: return selfatt1_combine(e, spec.selfatt1_pooling(), params, prefix);
    case Variant::SelfAtt2: {
      std::vector<Tensor> heads;
      for (const auto& p : inputs) heads.push_back(p.integrated);
      return selfatt2_combine(heads, spec.selfatt2_pooling(), params, prefix);
    }
    case Variant::GatedAdd: return {gated_add_combine(e, spec.candidate_activation, params, prefix), {}, {}};
    case Variant::Bilinear: return {bilinear_combine_k(e, spec.bilinear_activation, params, prefix), {}, {}};
    case Variant::Stacked:
      return stacked_combine(e[0], e[1], spec.selfatt1_pooling(), spec.bilinear_activation, params, prefix);
  }
  throw ConfigError("combiner: unknown variant");
}

Tensor fc_fusion(std::span<const Tensor> e, const ParamStore& params, const std::string& prefix) {
  if (e.size() < 2) throw ContractError("FCFusion: needs at least two inputs");
  return relu(add_bias(matmul(concat(e), params.get(prefix + ".W")), params.get(prefix + ".b")));
}

CombineResult selfatt1_combine(std::span<const Tensor> e, const pooling::PoolingConfig& attention,
                               const ParamStore& params, const std::string& prefix) {
  if (e.empty()) throw ContractError("SelfAtt1: needs at least one input");
  std::vector<Tensor> candidates;
  for (std::size_t k = 0; k < e.size(); ++k) candidates.push_back(matmul(e[k], params.get(indexed(prefix, "W", k))));
  auto pooled = pooling::self_attentive_pool(stack_rows(candidates), attention, params, prefix + ".att");
  return {pooled.flat, pooling::attention_penalty(pooled.annotation, attention), pooled.annotation};
}

CombineResult selfatt2_combine(std::span<const Tensor> heads, const pooling::PoolingConfig& attention,
                               const ParamStore& params, const std::string& prefix) {
  if (heads.empty()) throw ContractError("SelfAtt2: needs at least one input");
  std::vector<Tensor> candidates;
  for (std::size_t k = 0; k < heads.size(); ++k) {
    if (heads[k].rank() != 2) throw DimensionError("SelfAtt2: head vectors must be given as a G x N matrix");
    candidates.push_back(matmul(heads[k], params.get(indexed(prefix, "W", k))));
  }
  auto pooled = pooling::self_attentive_pool(stack_rows(candidates), attention, params, prefix + ".att");
  return {pooled.flat, pooling::attention_penalty(pooled.annotation, attention), pooled.annotation};
}

Tensor gated_add_combine(std::span<const Tensor> e, Activation f, const ParamStore& params,
                         const std::string& prefix) {
  if (e.size() < 2) throw ContractError("GatedAdd: needs at least two inputs");
  Tensor c;
  for (std::size_t k = 0; k < e.size(); ++k) {
    const Tensor candidate =
        activate(f, add_bias(matmul(e[k], params.get(indexed(prefix, "W", k))), params.get(indexed(prefix, "bw", k))));
    const Tensor gate =
        sigmoid(add_bias(matmul(e[k], params.get(indexed(prefix, "U", k))), params.get(indexed(prefix, "bu", k))));
    const Tensor term = hadamard(candidate, gate);
    c = c.defined() ? add(c, term) : term;
  }
  return c;
}

Tensor bilinear_combine(const Tensor& e1, const Tensor& e2, Activation f, const ParamStore& params,
                        const std::string& prefix) {
  const Tensor inputs[] = {e1, e2};
  return bilinear_combine_k(inputs, f, params, prefix);
}

Tensor bilinear_combine_k(std::span<const Tensor> e, Activation f, const ParamStore& params,
                          const std::string& prefix) {
  if (e.size() < 2) throw ContractError("Bilinear: needs at least two inputs");
  Tensor joint;
  for (std::size_t k = 0; k < e.size(); ++k) {
    const Tensor& u = params.get(indexed(prefix, "U", k));
    if (u.cols() > u.rows()) throw ConfigError("Bilinear: rank exceeds input dimension");
    const Tensor factor = activate(f, matmul(e[k], u));
    joint = joint.defined() ? hadamard(joint, factor) : factor;
  }
  Tensor c = add_bias(matmul(joint, params.get(prefix + ".P")), params.get(prefix + ".b"));
  for (std::size_t k = 0; k < e.size(); ++k) {
    const auto name = indexed(prefix, "V", k);
    if (params.contains(name)) c = add(c, matmul(e[k], params.get(name)));
  }
  return c;
}

CombineResult stacked_combine(const Tensor& e1, const Tensor& e2, const pooling::PoolingConfig& attention,
                              Activation f, const ParamStore& params, const std::string& prefix) {
  const Tensor first[] = {e1, e2};
  auto initial = selfatt1_combine(first, attention, params, prefix + ".sa");
  return {bilinear_combine(initial.c, e2, f, params, prefix + ".bl"), initial.penalty, initial.annotation};
}

// ---------------------------------------------------------------- full tensor forms

std::vector<double> bilinear_form(std::span<const double> e1, std::span<const double> e2,
                                  const BilinearTensor& w, std::span<const double> b) {
  if (e1.size() != w.m || e2.size() != w.n || b.size() != w.o) throw DimensionError("bilinear form: size mismatch");
  std::vector<double> c(w.o);
  for (std::size_t o = 0; o < w.o; ++o) {
    double s = 0.0;
    for (std::size_t i = 0; i < w.m; ++i)
      for (std::size_t j = 0; j < w.n; ++j) s += e1[i] * w.at(i, j, o) * e2[j];
    c[o] = s + b[o];
  }
  return c;
}

std::vector<double> bilinear_outer_projection(std::span<const double> e1, std::span<const double> e2,
                                              const BilinearTensor& w, std::span<const double> b) {
  if (e1.size() != w.m || e2.size() != w.n || b.size() != w.o) throw DimensionError("bilinear form: size mismatch");
  NoGradGuard no_grad;
  const Tensor x = vectorize(outer(Tensor::vector({e1.begin(), e1.end()}), Tensor::vector({e2.begin(), e2.end()})));
  const Tensor c = add_bias(matmul(x, Tensor::matrix(w.m * w.n, w.o, w.w)), Tensor::vector({b.begin(), b.end()}));
  return {c.values().begin(), c.values().end()};
}

BilinearTensor tied_bilinear_tensor(const Tensor& u1, const Tensor& u2, const Tensor& p) {
  const std::size_t m = u1.rows(), n = u2.rows(), d = u1.cols(), o = p.cols();
  if (u2.cols() != d || p.rows() != d) throw DimensionError("tied tensor: rank mismatch");
  BilinearTensor w{m, n, o, std::vector<double>(m * n * o, 0.0)};
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j)
      for (std::size_t k = 0; k < o; ++k) {
        double s = 0.0;
        for (std::size_t r = 0; r < d; ++r) s += u1(i, r) * p(r, k) * u2(j, r);
        w.w[(i * n + j) * o + k] = s;
      }
  return w;
}

}  // namespace cvec::combination

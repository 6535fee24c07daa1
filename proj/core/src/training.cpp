#include "cvec/training.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numbers>
#include <numeric>
#include <random>

#include "cvec/error.hpp"

namespace cvec::training {

void TrainConfig::validate() const {
  if (window == 0 || shift == 0) throw ConfigError("train: window and shift must be positive");
  if (shift > window) throw ConfigError("train: shift must not exceed the window length");
  if (batch_size == 0) throw ConfigError("train: batch size must be positive");
  if (!(learning_rate > 0.0)) throw ConfigError("train: learning rate must be positive");
  if (!(final_lr_scale > 0.0 && final_lr_scale <= 1.0)) throw ConfigError("train: final_lr_scale must be in (0, 1]");
  if (margin != 1.0) throw ConfigError("train: only the angular margin m = 1 is supported");
  if (heldout_fraction < 0.0 || heldout_fraction >= 1.0) throw ConfigError("train: held-out fraction in [0,1)");
  if (!(clip_norm > 0.0)) throw ConfigError("train: clip norm must be positive");
}

// ---------------------------------------------------------------- windows

std::vector<std::size_t> window_offsets(std::size_t length, std::size_t window, std::size_t shift) {
  if (length == 0) return {};
  if (length <= window) return {0};
  std::vector<std::size_t> out;
  std::size_t off = 0;
  for (; off + window <= length; off += shift) out.push_back(off);
  const std::size_t covered = out.back() + window;
  if (covered < length && length - off >= shift) out.push_back(off);
  return out;
}

std::vector<Window> make_windows(const FeatureSequence& feats, const Timeline& timeline, const TrainConfig& cfg) {
  std::vector<Window> out;
  const std::size_t total = feats.frames();
  for (const auto& seg : timeline.segments) {
    const std::size_t begin = std::min(seconds_to_frame(seg.start), total);
    const std::size_t end = std::min(seconds_to_frame(seg.end), total);
    if (end <= begin) continue;
    const FeatureSequence piece = feats.slice(begin, end);
    for (std::size_t off : window_offsets(end - begin, cfg.window, cfg.shift)) {
      Window w;
      w.feats = piece.padded_slice(static_cast<long>(off), cfg.window);
      w.label = seg.label;
      w.begin = begin + off;
      w.end = std::min(end, w.begin + cfg.window);
      out.push_back(std::move(w));
    }
  }
  return out;
}

void split_heldout(std::vector<Window> windows, double fraction, std::vector<Window>& train,
                   std::vector<Window>& heldout) {
  train.clear();
  heldout.clear();
  std::map<std::string, std::vector<std::size_t>> by_label;
  for (std::size_t i = 0; i < windows.size(); ++i) by_label[windows[i].label].push_back(i);
  std::vector<bool> held(windows.size(), false);
  for (const auto& [label, idx] : by_label) {
    const auto want = static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(idx.size())));
    if (want == 0 || idx.size() < 2) continue;
    // Take from the end, extending to the start of the window's segment run so
    // overlapping windows of one segment never straddle the split.
    std::size_t n = 0;
    std::size_t k = idx.size();
    while (k > 1 && n < want) {
      --k;
      held[idx[k]] = true;
      ++n;
    }
    while (k > 1 && windows[idx[k - 1]].end > windows[idx[k]].begin &&
           windows[idx[k - 1]].begin < windows[idx[k]].begin) {
      --k;
      held[idx[k]] = true;
    }
  }
  for (std::size_t i = 0; i < windows.size(); ++i) (held[i] ? heldout : train).push_back(std::move(windows[i]));
}

// ---------------------------------------------------------------- loss

Tensor angular_logits(const Tensor& embeddings, const Tensor& class_weights) {
  if (class_weights.rank() != 2 || embeddings.cols() != class_weights.cols()) {
    throw DimensionError("angular softmax: embedding width " + std::to_string(embeddings.cols()) +
                         " does not match class weights " + shape_string(class_weights.shape()));
  }
  return matmul(embeddings, transpose(normalize_rows(class_weights)));
}

Tensor angular_softmax_loss(const Tensor& embeddings, std::span<const std::size_t> labels,
                            const Tensor& class_weights) {
  Tensor x = embeddings;
  if (x.rank() == 1) x = reshape(x, {1, x.size()});
  return cross_entropy(angular_logits(x, class_weights), labels);
}

// ---------------------------------------------------------------- model

std::vector<std::string> SystemSpec::names() {
  std::vector<std::string> out = {"TDNN", "HORNN"};
  for (const auto& n : combination::CombinerSpec::variant_names()) out.push_back(n);
  return out;
}

SystemSpec SystemSpec::from_name(const std::string& name, nets::Profile profile) {
  SystemSpec spec;
  spec.name = name;
  spec.profile = profile;
  spec.tdnn = nets::TdnnConfig::for_profile(profile);
  spec.hornn = nets::HornnConfig::for_profile(profile);
  const std::size_t divisor = profile == nets::Profile::Tiny ? 4 : 1;
  spec.tdnn_pool.attention_dim = 64 / divisor;
  spec.hornn_pool.attention_dim = 64 / divisor;
  spec.hornn_pool.stride = 10;
  spec.embedding_dim = 128 / divisor;
  if (name != "TDNN" && name != "HORNN") {
    auto comb = combination::CombinerSpec::from_name(name, profile);
    comb.input_dims = {spec.tdnn_pool.heads * spec.tdnn.output_dim(),
                       spec.hornn_pool.heads * spec.hornn.projection_dim};
    comb.input_heads = {spec.tdnn_pool.heads, spec.hornn_pool.heads};
    spec.combiner = comb;
  }
  spec.validate();
  return spec;
}

std::size_t SystemSpec::pre_projection_dim() const {
  if (combiner) return combiner->combined_dim();
  if (name == "TDNN") return tdnn_pool.heads * tdnn.output_dim();
  return hornn_pool.heads * hornn.projection_dim;
}

void SystemSpec::validate() const {
  if (!combiner && name != "TDNN" && name != "HORNN") throw ConfigError("unknown system '" + name + "'");
  if (embedding_dim == 0) throw ConfigError("system: zero embedding width");
  if (uses_tdnn()) {
    tdnn.validate();
    tdnn_pool.validate();
  }
  if (uses_hornn()) {
    hornn.validate();
    hornn_pool.validate();
  }
  if (combiner) {
    combiner->validate();
    if (combiner->inputs() != 2 ||
        combiner->input_dims[0] != tdnn_pool.heads * tdnn.output_dim() ||
        combiner->input_dims[1] != hornn_pool.heads * hornn.projection_dim) {
      throw ConfigError("system: combiner inputs do not match the TDNN and HORNN d-vector sizes");
    }
  }
}

void init_system(ParamStore& params, const SystemSpec& spec, Rng& rng) {
  spec.validate();
  if (spec.uses_tdnn()) {
    nets::init_tdnn(params, spec.tdnn, rng, "tdnn");
    pooling::init_pooling(params, spec.tdnn.output_dim(), spec.tdnn_pool, rng, "pool.tdnn");
  }
  if (spec.uses_hornn()) {
    nets::init_hornn(params, spec.hornn, rng, "hornn");
    pooling::init_pooling(params, spec.hornn.projection_dim, spec.hornn_pool, rng, "pool.hornn");
  }
  if (spec.combiner) combination::init_combiner(params, *spec.combiner, rng, "comb");
  params.add_glorot("proj.W", spec.pre_projection_dim(), spec.embedding_dim, rng);
  params.add_zeros("proj.b", {spec.embedding_dim});
}

EmbeddingBatch embed_batch(const SystemSpec& spec, const Tensor& feats, std::size_t batch, const ParamStore& params) {
  if (batch == 0 || feats.rank() != 2 || feats.rows() % batch != 0) {
    throw DimensionError("embed: rows are not a whole number of equal-length windows");
  }
  const std::size_t frames = feats.rows() / batch;
  std::vector<pooling::PooledEmbedding> t_pooled, h_pooled;
  Tensor penalty;
  auto add_penalty = [&](const Tensor& p) { penalty = penalty.defined() ? add(penalty, p) : p; };
  if (spec.uses_tdnn()) {
    const std::vector<std::size_t> lengths(batch, frames);
    const Tensor h = nets::tdnn_forward_segments(feats, lengths, spec.tdnn, params, "tdnn");
    t_pooled = pooling::self_attentive_pool_batch(h, batch, spec.tdnn_pool, params, "pool.tdnn");
    for (const auto& p : t_pooled) add_penalty(pooling::attention_penalty(p.annotation, spec.tdnn_pool));
  }
  if (spec.uses_hornn()) {
    const Tensor h = nets::hornn_forward_batch(feats, batch, spec.hornn, params, "hornn");
    h_pooled = pooling::self_attentive_pool_batch(h, batch, spec.hornn_pool, params, "pool.hornn");
    for (const auto& p : h_pooled) add_penalty(pooling::attention_penalty(p.annotation, spec.hornn_pool));
  }
  std::vector<Tensor> rows;
  rows.reserve(batch);
  for (std::size_t b = 0; b < batch; ++b) {
    if (spec.combiner) {
      const pooling::PooledEmbedding inputs[] = {t_pooled[b], h_pooled[b]};
      auto r = combination::combine(*spec.combiner, inputs, params, "comb");
      if (r.penalty.defined()) add_penalty(r.penalty);
      rows.push_back(r.c);
    } else {
      rows.push_back(spec.name == "TDNN" ? t_pooled[b].flat : h_pooled[b].flat);
    }
  }
  EmbeddingBatch out;
  out.embeddings = add_bias(matmul(stack_rows(rows), params.get("proj.W")), params.get("proj.b"));
  out.penalty = penalty.defined() ? scale(penalty, 1.0 / static_cast<double>(batch)) : Tensor::scalar(0.0);
  return out;
}

namespace {

Tensor stack_window_feats(std::span<const Window> windows, std::span<const std::size_t> idx) {
  const std::size_t frames = windows[idx[0]].feats.frames();
  const std::size_t dim = windows[idx[0]].feats.dim;
  std::vector<double> data;
  data.reserve(idx.size() * frames * dim);
  for (std::size_t i : idx) {
    const auto& f = windows[i].feats;
    if (f.frames() != frames || f.dim != dim) throw DimensionError("windows differ in shape");
    data.insert(data.end(), f.data.begin(), f.data.end());
  }
  return Tensor::matrix(idx.size() * frames, dim, std::move(data));
}

constexpr std::size_t kInferenceChunk = 64;

}  // namespace

std::vector<std::vector<double>> embed_windows(const SystemSpec& spec, std::span<const Window> windows,
                                               const ParamStore& params) {
  NoGradGuard no_grad;
  std::vector<std::vector<double>> out;
  out.reserve(windows.size());
  for (std::size_t begin = 0; begin < windows.size(); begin += kInferenceChunk) {
    const std::size_t end = std::min(windows.size(), begin + kInferenceChunk);
    std::vector<std::size_t> idx(end - begin);
    std::iota(idx.begin(), idx.end(), begin);
    const auto batch = embed_batch(spec, stack_window_feats(windows, idx), idx.size(), params);
    const auto v = batch.embeddings.values();
    const std::size_t e = batch.embeddings.cols();
    for (std::size_t i = 0; i < idx.size(); ++i) out.emplace_back(v.begin() + i * e, v.begin() + (i + 1) * e);
  }
  return out;
}

// ---------------------------------------------------------------- optimisation

double annealed_learning_rate(double base, double final, std::size_t step, std::size_t total_steps) {
  if (total_steps <= 1) return base;
  const double progress = static_cast<double>(step) / static_cast<double>(total_steps - 1);
  return final + 0.5 * (base - final) * (1.0 + std::cos(std::numbers::pi * progress));
}

double sgd_step(ParamStore& params, double learning_rate, double clip_norm) {
  double sq = 0.0;
  for (const auto& name : params.names()) {
    const Tensor p = params.get(name);
    if (!p.has_grad()) continue;
    for (double g : p.grad()) sq += g * g;
  }
  const double norm = std::sqrt(sq);
  if (!std::isfinite(norm)) throw NumericError("sgd: gradient norm is not finite");
  const double factor = norm > clip_norm ? clip_norm / norm : 1.0;
  for (const auto& name : params.names()) {
    Tensor p = params.get(name);
    if (!p.has_grad()) continue;
    auto values = p.mutable_values();
    const auto grad = p.grad();
    for (std::size_t i = 0; i < values.size(); ++i) values[i] -= learning_rate * factor * grad[i];
  }
  return norm;
}

double classification_accuracy(const SystemSpec& spec, std::span<const Window> windows,
                               std::span<const std::string> classes, const ParamStore& params) {
  if (windows.empty()) return 0.0;
  NoGradGuard no_grad;
  const auto emb = embed_windows(spec, windows, params);
  const Tensor w = params.get("cls.W");
  std::vector<double> flat;
  for (const auto& e : emb) flat.insert(flat.end(), e.begin(), e.end());
  const Tensor logits = angular_logits(Tensor::matrix(emb.size(), emb[0].size(), std::move(flat)), w);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < windows.size(); ++i) {
    std::size_t best = 0;
    for (std::size_t c = 1; c < logits.cols(); ++c)
      if (logits(i, c) > logits(i, best)) best = c;
    if (best < classes.size() && classes[best] == windows[i].label) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(windows.size());
}

TrainResult train_system(const SystemSpec& spec, std::span<const Recording> corpus, const TrainConfig& cfg) {
  cfg.validate();
  spec.validate();
  std::vector<Window> all;
  for (const auto& rec : corpus) {
    auto w = make_windows(rec.feats, rec.reference, cfg);
    all.insert(all.end(), std::make_move_iterator(w.begin()), std::make_move_iterator(w.end()));
  }
  if (all.empty()) throw ContractError("train: corpus yields no windows");
  std::vector<Window> train, heldout;
  split_heldout(std::move(all), cfg.heldout_fraction, train, heldout);

  TrainResult result;
  std::map<std::string, std::size_t> class_of;
  for (const auto& w : train) class_of.emplace(w.label, 0);
  for (const auto& w : heldout) class_of.emplace(w.label, 0);
  for (auto& [label, id] : class_of) {
    id = result.classes.size();
    result.classes.push_back(label);
  }

  Rng rng(cfg.seed);
  init_system(result.params, spec, rng);
  result.params.add_glorot("cls.W", result.classes.size(), spec.embedding_dim, rng);

  auto evaluate = [&](double loss) {
    result.epochs.push_back({loss, classification_accuracy(spec, heldout, result.classes, result.params)});
  };
  evaluate(0.0);

  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), 0);
  const std::size_t steps_per_epoch = (train.size() + cfg.batch_size - 1) / cfg.batch_size;
  std::size_t step = 0;
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double total = 0.0;
    std::size_t batches = 0;
    for (std::size_t begin = 0; begin < order.size(); begin += cfg.batch_size) {
      const std::size_t end = std::min(order.size(), begin + cfg.batch_size);
      const std::span<const std::size_t> idx(order.data() + begin, end - begin);
      std::vector<std::size_t> labels;
      for (std::size_t i : idx) labels.push_back(class_of.at(train[i].label));
      result.params.zero_grad();
      const auto batch = embed_batch(spec, stack_window_feats(train, idx), idx.size(), result.params);
      const Tensor loss =
          add(angular_softmax_loss(batch.embeddings, labels, result.params.get("cls.W")), batch.penalty);
      if (!std::isfinite(loss.item())) {
        throw NumericError("train: loss diverged in epoch " + std::to_string(epoch + 1));
      }
      backward(loss);
      sgd_step(result.params,
               annealed_learning_rate(cfg.learning_rate, cfg.learning_rate * cfg.final_lr_scale, step++,
                                      steps_per_epoch * cfg.epochs),
               cfg.clip_norm);
      total += loss.item();
      ++batches;
    }
    evaluate(total / static_cast<double>(std::max<std::size_t>(1, batches)));
  }
  return result;
}

// ---------------------------------------------------------------- VAD

std::vector<std::size_t> speech_labels(const Recording& rec) {
  const std::size_t n = rec.feats.frames();
  std::vector<std::size_t> labels(n, 0);
  for (const auto& seg : rec.reference.segments) {
    const std::size_t b = std::min(seconds_to_frame(seg.start), n);
    const std::size_t e = std::min(seconds_to_frame(seg.end), n);
    std::fill(labels.begin() + static_cast<long>(b), labels.begin() + static_cast<long>(e), std::size_t{1});
  }
  return labels;
}

ClassifierResult train_vad(std::span<const Recording> corpus, const nets::VadConfig& cfg, const VadTrainConfig& tc) {
  cfg.validate();
  if (corpus.empty()) throw ContractError("vad: empty corpus");
  if (tc.batch_size == 0) throw ConfigError("vad: batch size must be positive");
  ClassifierResult result;
  Rng rng(tc.seed);
  nets::init_vad(result.params, cfg, rng, "vad");

  std::vector<std::vector<std::size_t>> labels;
  std::size_t total_frames = 0;
  for (const auto& rec : corpus) {
    labels.push_back(speech_labels(rec));
    total_frames += rec.feats.frames();
  }
  if (total_frames == 0) throw ContractError("vad: corpus has no frames");
  std::uniform_int_distribution<std::size_t> pick_frame(0, total_frames - 1);

  for (std::size_t epoch = 0; epoch < tc.epochs; ++epoch) {
    double total = 0.0;
    std::size_t batches = 0;
    for (std::size_t done = 0; done < tc.frames_per_epoch; done += tc.batch_size) {
      const std::size_t n = std::min(tc.batch_size, tc.frames_per_epoch - done);
      // Draw frames uniformly over the whole corpus, grouped by recording for splicing.
      std::vector<std::pair<std::size_t, std::size_t>> picks;
      for (std::size_t i = 0; i < n; ++i) {
        std::size_t f = pick_frame(rng), r = 0;
        while (f >= corpus[r].feats.frames()) f -= corpus[r++].feats.frames();
        picks.emplace_back(r, f);
      }
      std::vector<Tensor> parts;
      std::vector<std::size_t> y;
      for (std::size_t r = 0; r < corpus.size(); ++r) {
        std::vector<std::size_t> frames;
        for (const auto& [pr, f] : picks)
          if (pr == r) frames.push_back(f);
        if (frames.empty()) continue;
        parts.push_back(nets::vad_splice(corpus[r].feats, frames, cfg));
        for (std::size_t f : frames) y.push_back(labels[r][f]);
      }
      result.params.zero_grad();
      const Tensor loss = cross_entropy(nets::vad_logits(stack_rows(parts), cfg, result.params, "vad"), y);
      backward(loss);
      sgd_step(result.params, tc.learning_rate, tc.clip_norm);
      total += loss.item();
      ++batches;
    }
    result.epoch_loss.push_back(total / static_cast<double>(std::max<std::size_t>(1, batches)));
  }
  return result;
}

double vad_frame_accuracy(const Recording& rec, const nets::VadConfig& cfg, const ParamStore& params) {
  NoGradGuard no_grad;
  const auto labels = speech_labels(rec);
  const std::size_t n = rec.feats.frames();
  if (n == 0) return 0.0;
  std::size_t correct = 0;
  constexpr std::size_t kChunk = 1024;
  for (std::size_t begin = 0; begin < n; begin += kChunk) {
    std::vector<std::size_t> frames(std::min(n, begin + kChunk) - begin);
    std::iota(frames.begin(), frames.end(), begin);
    const Tensor probs = softmax_rows(nets::vad_logits(nets::vad_splice(rec.feats, frames, cfg), cfg, params, "vad"));
    for (std::size_t i = 0; i < frames.size(); ++i) {
      const std::size_t guess = probs(i, 1) > 0.5 ? 1 : 0;
      if (guess == labels[frames[i]]) ++correct;
    }
  }
  return static_cast<double>(correct) / static_cast<double>(n);
}

// ---------------------------------------------------------------- CPD

ChangeRegions change_regions(const Timeline& reference, std::size_t frames, double merge_gap) {
  ChangeRegions out;
  const std::size_t gap = seconds_to_frame(merge_gap);
  std::string previous_label;
  for (const auto& seg : reference.segments) {
    const std::size_t b = std::min(seconds_to_frame(seg.start), frames);
    const std::size_t e = std::min(seconds_to_frame(seg.end), frames);
    if (e <= b) continue;
    if (!out.regions.empty() && b < out.regions.back().second + gap) {
      if (seg.label != previous_label) out.changes.push_back(b);
      out.regions.back().second = std::max(out.regions.back().second, e);
    } else {
      out.regions.emplace_back(b, e);
    }
    previous_label = seg.label;
  }
  return out;
}

namespace {

struct CpdSample {
  std::size_t recording;
  std::size_t region_begin, region_end;
  std::size_t center;
  std::size_t label;
};

struct CpdPools {
  std::vector<CpdSample> positives, negatives;
};

CpdPools cpd_candidates(std::span<const Recording> corpus, const CpdTrainConfig& tc) {
  CpdPools pools;
  for (std::size_t r = 0; r < corpus.size(); ++r) {
    const auto cr = change_regions(corpus[r].reference, corpus[r].feats.frames(), tc.merge_gap);
    for (const auto& [lo, hi] : cr.regions) {
      for (std::size_t t = lo; t < hi; ++t) {
        std::size_t nearest = std::numeric_limits<std::size_t>::max();
        for (std::size_t c : cr.changes) nearest = std::min(nearest, c > t ? c - t : t - c);
        if (nearest <= tc.positive_radius) {
          pools.positives.push_back({r, lo, hi, t, 1});
        } else if (nearest >= tc.negative_distance) {
          pools.negatives.push_back({r, lo, hi, t, 0});
        }
      }
    }
  }
  return pools;
}

}  // namespace

ClassifierResult train_cpd(std::span<const Recording> corpus, const nets::CpdConfig& cfg, const CpdTrainConfig& tc) {
  cfg.validate();
  if (tc.batch_size < 2) throw ConfigError("cpd: batch size must be at least 2");
  ClassifierResult result;
  Rng rng(tc.seed);
  nets::init_cpd(result.params, cfg, rng, "cpd");
  const auto pools = cpd_candidates(corpus, tc);
  if (pools.positives.empty() || pools.negatives.empty()) {
    throw ContractError("cpd: corpus has no change points or no non-change frames");
  }
  std::uniform_int_distribution<std::size_t> pick_pos(0, pools.positives.size() - 1);
  std::uniform_int_distribution<std::size_t> pick_neg(0, pools.negatives.size() - 1);
  // The TDNN sees `reach` frames beyond the outermost context frame, so a
  // chunk of this half-width reproduces the whole-region computation exactly.
  const std::size_t reach = cfg.context + static_cast<std::size_t>(cfg.tdnn.right_context());
  const std::size_t ctx = cfg.context;

  for (std::size_t epoch = 0; epoch < tc.epochs; ++epoch) {
    double total = 0.0;
    std::size_t batches = 0;
    for (std::size_t done = 0; done < tc.samples_per_epoch; done += tc.batch_size) {
      const std::size_t n = std::min(tc.batch_size, tc.samples_per_epoch - done);
      std::vector<CpdSample> batch;
      for (std::size_t i = 0; i < n; ++i) {
        batch.push_back(i % 2 == 0 ? pools.positives[pick_pos(rng)] : pools.negatives[pick_neg(rng)]);
      }
      std::vector<double> fwd, rev;
      std::vector<std::size_t> lengths, y;
      nets::StepIndex past(ctx + 1, std::vector<std::size_t>(n)), future(ctx + 1, std::vector<std::size_t>(n));
      std::size_t offset = 0;
      for (std::size_t b = 0; b < n; ++b) {
        const auto& s = batch[b];
        const std::size_t lo = s.center >= s.region_begin + reach ? s.center - reach : s.region_begin;
        const std::size_t hi = std::min(s.region_end, s.center + reach + 1);
        const auto& feats = corpus[s.recording].feats;
        const std::size_t len = hi - lo;
        for (std::size_t t = lo; t < hi; ++t) fwd.insert(fwd.end(), feats.frame(t).begin(), feats.frame(t).end());
        for (std::size_t t = hi; t-- > lo;) rev.insert(rev.end(), feats.frame(t).begin(), feats.frame(t).end());
        const long c = static_cast<long>(s.center - lo);
        for (std::size_t k = 0; k <= ctx; ++k) {
          const long kk = static_cast<long>(k), cc = static_cast<long>(ctx);
          const auto p = static_cast<std::size_t>(std::clamp(c - cc + kk, 0L, static_cast<long>(len) - 1));
          const auto f = static_cast<std::size_t>(std::clamp(c + cc - kk, 0L, static_cast<long>(len) - 1));
          past[k][b] = offset + p;
          future[k][b] = offset + (len - 1 - f);
        }
        offset += len;
        lengths.push_back(len);
        y.push_back(s.label);
      }
      result.params.zero_grad();
      const Tensor fwd_d = nets::tdnn_forward_segments(Tensor::matrix(offset, kFeatureDim, std::move(fwd)), lengths,
                                                       cfg.tdnn, result.params, "cpd.tdnn");
      const Tensor rev_d = nets::tdnn_forward_segments(Tensor::matrix(offset, kFeatureDim, std::move(rev)), lengths,
                                                       cfg.tdnn, result.params, "cpd.tdnn");
      const Tensor fused = nets::cpd_fuse(fwd_d, past, rev_d, future, cfg, result.params, "cpd");
      const Tensor loss = cross_entropy(nets::cpd_classify(fused, result.params, "cpd"), y);
      backward(loss);
      sgd_step(result.params, tc.learning_rate, tc.clip_norm);
      total += loss.item();
      ++batches;
    }
    result.epoch_loss.push_back(total / static_cast<double>(std::max<std::size_t>(1, batches)));
  }
  return result;
}

}  // namespace cvec::training

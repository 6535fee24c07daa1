#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cvec/combination.hpp"
#include "cvec/corpus.hpp"
#include "cvec/nets.hpp"
#include "cvec/param_store.hpp"
#include "cvec/pooling.hpp"

namespace cvec::training {

struct TrainConfig {
  std::size_t window = 200;
  std::size_t shift = 100;
  std::size_t batch_size = 16;
  double learning_rate = 0.05;
  /// Cosine annealing from `learning_rate` down to `learning_rate *
  /// final_lr_scale` over all steps; 1 keeps the rate constant.
  double final_lr_scale = 1.0;
  std::size_t epochs = 8;
  /// Angular margin. Only m = 1 is supported.
  double margin = 1.0;
  double heldout_fraction = 0.1;
  double clip_norm = 5.0;
  std::uint64_t seed = 1;

  void validate() const;
};

// ---------------------------------------------------------------- windows

struct Window {
  FeatureSequence feats;
  std::string label;
  /// Frames [begin, end) of the stream that the window covers before padding.
  std::size_t begin = 0;
  std::size_t end = 0;
};

/// Window start offsets inside a segment of `length` frames. Full windows
/// advance by `shift`; a trailing partial window of at least `shift` frames
/// is kept when it adds uncovered frames, and a segment shorter than one
/// window always yields one window.
std::vector<std::size_t> window_offsets(std::size_t length, std::size_t window, std::size_t shift);

/// Windows for every timeline entry, replicate-padded to `cfg.window` frames
/// inside their own segment. Entries carry the timeline label.
std::vector<Window> make_windows(const FeatureSequence& feats, const Timeline& timeline, const TrainConfig& cfg);

/// Splits windows per label: the last `fraction` of each label's windows (in
/// input order, whole timeline entries at a time) is held out.
void split_heldout(std::vector<Window> windows, double fraction, std::vector<Window>& train,
                   std::vector<Window>& heldout);

// ---------------------------------------------------------------- loss

/// Logits ||x|| cos(theta_j) = x . w_j / ||w_j|| for a batch of embeddings
/// (B x E) and class weights (C x E).
Tensor angular_logits(const Tensor& embeddings, const Tensor& class_weights);

/// Mean cross-entropy over the angular logits.
Tensor angular_softmax_loss(const Tensor& embeddings, std::span<const std::size_t> labels,
                            const Tensor& class_weights);

// ---------------------------------------------------------------- model

/// A d-vector system (TDNN or HORNN) or both systems joined by a combiner,
/// followed by a linear projection to the final embedding.
struct SystemSpec {
  std::string name = "Stacked_sigmoid";
  nets::Profile profile = nets::Profile::Standard;
  nets::TdnnConfig tdnn;
  nets::HornnConfig hornn;
  pooling::PoolingConfig tdnn_pool;
  pooling::PoolingConfig hornn_pool;
  std::optional<combination::CombinerSpec> combiner;
  std::size_t embedding_dim = 128;

  /// "TDNN", "HORNN" or a combiner name (see CombinerSpec::variant_names).
  static SystemSpec from_name(const std::string& name, nets::Profile profile);
  static std::vector<std::string> names();

  bool uses_tdnn() const { return combiner.has_value() || name == "TDNN"; }
  bool uses_hornn() const { return combiner.has_value() || name == "HORNN"; }
  /// Size of the vector fed to the final projection.
  std::size_t pre_projection_dim() const;
  void validate() const;
};

void init_system(ParamStore& params, const SystemSpec& spec, Rng& rng);

struct EmbeddingBatch {
  /// B x embedding_dim.
  Tensor embeddings;
  /// Mean over the batch of every attentive stage's penalty (scalar).
  Tensor penalty;
};

/// Forward pass for `batch` equal-length windows stacked vertically in `feats`.
EmbeddingBatch embed_batch(const SystemSpec& spec, const Tensor& feats, std::size_t batch, const ParamStore& params);

/// Final embeddings for windows, computed without gradients in chunks.
std::vector<std::vector<double>> embed_windows(const SystemSpec& spec, std::span<const Window> windows,
                                               const ParamStore& params);

// ---------------------------------------------------------------- optimisation

/// Learning rate at `step` of `total_steps` (cosine from `base` to `final`).
double annealed_learning_rate(double base, double final, std::size_t step, std::size_t total_steps);

/// Plain SGD with global gradient-norm clipping. Returns the norm before clipping.
double sgd_step(ParamStore& params, double learning_rate, double clip_norm);

struct EpochStats {
  double loss = 0.0;
  double heldout_accuracy = 0.0;
};

struct TrainResult {
  ParamStore params;
  std::vector<std::string> classes;
  /// Entry 0 describes the initialization; entry e the state after epoch e.
  std::vector<EpochStats> epochs;
};

/// Speaker classification with the angular softmax and attention penalties.
/// Throws NumericError if the loss stops being finite.
TrainResult train_system(const SystemSpec& spec, std::span<const Recording> corpus, const TrainConfig& cfg);

/// Fraction of windows whose angular logits pick the right class.
double classification_accuracy(const SystemSpec& spec, std::span<const Window> windows,
                               std::span<const std::string> classes, const ParamStore& params);

// ---------------------------------------------------------------- VAD and CPD

struct VadTrainConfig {
  std::size_t frames_per_epoch = 6000;
  std::size_t batch_size = 64;
  double learning_rate = 0.05;
  std::size_t epochs = 4;
  double clip_norm = 5.0;
  std::uint64_t seed = 1;
};

struct ClassifierResult {
  ParamStore params;
  std::vector<double> epoch_loss;
};

ClassifierResult train_vad(std::span<const Recording> corpus, const nets::VadConfig& cfg, const VadTrainConfig& tc);

/// Per-frame speech labels of a recording (1 inside reference speech).
std::vector<std::size_t> speech_labels(const Recording& rec);

/// Frame accuracy of thresholded VAD posteriors against the reference.
double vad_frame_accuracy(const Recording& rec, const nets::VadConfig& cfg, const ParamStore& params);

struct CpdTrainConfig {
  std::size_t samples_per_epoch = 2000;
  std::size_t batch_size = 32;
  double learning_rate = 0.05;
  std::size_t epochs = 12;
  double clip_norm = 5.0;
  /// Centers within this many frames of a change are positives.
  std::size_t positive_radius = 5;
  /// Centers at least this far from every change are negatives.
  std::size_t negative_distance = 20;
  /// Reference gaps shorter than this (seconds) are bridged into one region.
  double merge_gap = 0.2;
  std::uint64_t seed = 1;
};

/// Speech regions in frames (gaps under `merge_gap` bridged) and the change
/// frames inside them.
struct ChangeRegions {
  std::vector<std::pair<std::size_t, std::size_t>> regions;
  std::vector<std::size_t> changes;
};

ChangeRegions change_regions(const Timeline& reference, std::size_t frames, double merge_gap);

ClassifierResult train_cpd(std::span<const Recording> corpus, const nets::CpdConfig& cfg, const CpdTrainConfig& tc);

}  // namespace cvec::training

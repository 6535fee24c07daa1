#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "cvec/features.hpp"
#include "cvec/ops.hpp"
#include "cvec/param_store.hpp"

namespace cvec::nets {

/// Width profile. `Tiny` divides every hidden and output width by four.
enum class Profile { Standard, Tiny };

Profile parse_profile(const std::string& name);

struct TdnnLayer {
  std::vector<int> context;
  std::size_t output_dim;
  Activation activation;
};

/// Time-delay network. The default layers are contexts {-2..2}, {-2,0,2},
/// {-3,0,3}, {0}, {0}, {0} with widths 256,256,256,256,256,128; the last
/// layer is linear and the total receptive field is 15 frames.
struct TdnnConfig {
  std::size_t input_dim = kFeatureDim;
  std::vector<TdnnLayer> layers = standard_layers(1);

  static std::vector<TdnnLayer> standard_layers(std::size_t divisor);
  static TdnnConfig for_profile(Profile p);

  std::size_t output_dim() const { return layers.back().output_dim; }
  /// Spliced input width of layer i (context size times previous width).
  std::size_t layer_input_dim(std::size_t i) const;
  int left_context() const;
  int right_context() const;
  void validate() const;
};

/// High-order RNN: h(t) = ReLU(W x(t) + sum_k U_k h(t - k) + b), d(t) = h(t) Proj.
struct HornnConfig {
  std::size_t input_dim = kFeatureDim;
  std::size_t hidden_dim = 256;
  std::vector<std::size_t> lags = {1, 4};
  std::size_t projection_dim = 128;

  static HornnConfig for_profile(Profile p);
  void validate() const;
};

/// Frame classifier over a 2 * context + 1 frame window: `layers` ReLU layers
/// followed by a 2-way softmax output (class 1 = speech).
struct VadConfig {
  std::size_t input_dim = kFeatureDim;
  std::size_t context = 27;
  std::size_t layers = 7;
  std::size_t hidden_dim = 256;

  static VadConfig for_profile(Profile p);
  std::size_t window() const { return 2 * context + 1; }
  std::size_t spliced_dim() const { return window() * input_dim; }
  void validate() const;
};

/// Change-point model: a shared TDNN feeds a shared ReLU RNN that reads the
/// past side forward and the future side time-reversed, both ending at the
/// current frame; the two final states are fused by Hadamard product and
/// classified (class 1 = change).
struct CpdConfig {
  std::size_t context = 50;
  TdnnConfig tdnn;
  std::size_t hidden_dim = 128;

  static CpdConfig for_profile(Profile p);
  std::size_t side_length() const { return context + 1; }
  void validate() const;
};

// Parameter initialization (Glorot-uniform weights, zero biases).
void init_tdnn(ParamStore& params, const TdnnConfig& cfg, Rng& rng, const std::string& prefix = "tdnn");
void init_hornn(ParamStore& params, const HornnConfig& cfg, Rng& rng, const std::string& prefix = "hornn");
void init_vad(ParamStore& params, const VadConfig& cfg, Rng& rng, const std::string& prefix = "vad");
void init_cpd(ParamStore& params, const CpdConfig& cfg, Rng& rng, const std::string& prefix = "cpd");

/// One frame-level d-vector per input frame (T x output_dim). The feature
/// sequence is replicate-padded by the receptive field on both sides.
Tensor tdnn_forward(const Tensor& feats, const TdnnConfig& cfg, const ParamStore& params,
                    const std::string& prefix = "tdnn");

/// Runs the TDNN over several sequences stacked vertically in `feats`; each
/// sequence is padded independently. Output rows follow the input rows.
Tensor tdnn_forward_segments(const Tensor& feats, std::span<const std::size_t> lengths,
                             const TdnnConfig& cfg, const ParamStore& params,
                             const std::string& prefix = "tdnn");

Tensor hornn_forward(const Tensor& feats, const HornnConfig& cfg, const ParamStore& params,
                     const std::string& prefix = "hornn");

/// HORNN over `batch` equal-length sequences stacked vertically; output rows
/// follow the input rows.
Tensor hornn_forward_batch(const Tensor& feats, std::size_t batch, const HornnConfig& cfg,
                           const ParamStore& params, const std::string& prefix = "hornn");

/// Speech/non-speech posterior pair for one 55-frame window.
Tensor vad_forward(const FeatureSequence& window, const VadConfig& cfg, const ParamStore& params,
                   const std::string& prefix = "vad");

/// Logits (B x 2) for a batch of spliced windows (B x window*dim).
Tensor vad_logits(const Tensor& spliced, const VadConfig& cfg, const ParamStore& params,
                  const std::string& prefix = "vad");

/// Spliced VAD inputs for the given frames of a stream, replicate-padded at the edges.
Tensor vad_splice(const FeatureSequence& stream, std::span<const std::size_t> frames, const VadConfig& cfg);

/// Row indices read at each RNN step: steps[k][b] is the row consumed by item b at step k.
using StepIndex = std::vector<std::vector<std::size_t>>;

/// Final ReLU-RNN state (B x hidden) after consuming the rows named by `steps`.
Tensor cpd_encode(const Tensor& dvecs, const StepIndex& steps, const CpdConfig& cfg,
                  const ParamStore& params, const std::string& prefix = "cpd");

/// Hadamard-fused past/future states (B x hidden).
Tensor cpd_fuse(const Tensor& past_dvecs, const StepIndex& past_steps, const Tensor& future_dvecs,
                const StepIndex& future_steps, const CpdConfig& cfg, const ParamStore& params,
                const std::string& prefix = "cpd");

/// Change/non-change logits (B x 2) from fused states.
Tensor cpd_classify(const Tensor& fused, const ParamStore& params, const std::string& prefix = "cpd");

/// Change posterior pair for one frame. `past` covers [t-50, t] in time order
/// and `future` covers [t, t+50] in time order.
Tensor cpd_forward(const FeatureSequence& past, const FeatureSequence& future, const CpdConfig& cfg,
                   const ParamStore& params, const std::string& prefix = "cpd");

/// Frame d-vectors for change detection over one speech region: the forward
/// pass over the region and the time-reversed pass mapped back to time order.
struct CpdStreamFeatures {
  Tensor forward;
  Tensor reversed;
};

CpdStreamFeatures cpd_stream_features(const Tensor& region_feats, const CpdConfig& cfg,
                                      const ParamStore& params, const std::string& prefix = "cpd");

/// Step indices for centers inside a region [lo, hi): the past side reads
/// t-context..t, the future side reads t+context..t, clamped to the region.
void cpd_region_steps(std::span<const std::size_t> centers, std::size_t lo, std::size_t hi,
                      std::size_t context, StepIndex& past, StepIndex& future);

/// Change posteriors for every frame of a region.
std::vector<double> cpd_region_posteriors(const Tensor& region_feats, const CpdConfig& cfg,
                                          const ParamStore& params, const std::string& prefix = "cpd");

}  // namespace cvec::nets

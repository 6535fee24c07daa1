#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "cvec/features.hpp"
#include "cvec/timeline.hpp"

namespace cvec {

/// One recording: features plus the reference speaker timeline.
struct Recording {
  std::string id;
  FeatureSequence feats;
  Timeline reference;
};

struct Corpus {
  std::vector<Recording> train;
  /// Held-out recordings for tuning; same form as `eval`.
  std::vector<Recording> dev;
  std::vector<Recording> eval;
};

/// Generator for multi-speaker feature streams. Each speaker has a smooth
/// 40-dim spectral template; speech frames add a shared phone-like content
/// track and AR(1) noise, non-speech frames are low-energy white noise.
struct SyntheticCorpusSpec {
  std::size_t speakers = 8;
  std::size_t train_recordings = 8;
  double train_seconds = 90.0;
  std::size_t eval_recordings = 2;
  double eval_seconds = 60.0;
  /// Speakers drawn per evaluation or dev recording.
  std::size_t eval_speakers = 4;
  /// Tuning recordings, generated like evaluation recordings.
  std::size_t dev_recordings = 2;

  /// Standard deviation of the per-speaker template offsets.
  double template_scale = 0.3;
  double content_scale = 0.8;
  double noise_scale = 0.6;
  double noise_correlation = 0.7;
  double speech_level = 0.5;
  double silence_level = -2.5;
  double silence_noise = 0.3;

  double min_turn = 2.5;
  double max_turn = 7.0;
  /// Probability that a speaker change has no pause.
  double direct_change = 0.5;
  double min_pause = 0.3;
  double max_pause = 1.2;
  /// Expected short within-turn gaps per second of speech.
  double gap_rate = 0.08;
  double min_gap = 0.08;
  double max_gap = 0.15;
  double lead_silence = 1.0;

  std::uint64_t seed = 1;

  void validate() const;
};

Corpus generate_synthetic_corpus(const SyntheticCorpusSpec& spec);

/// Speaker label used in references ("spk0", "spk1", ...).
std::string speaker_label(std::size_t speaker);

/// `<dir>/<split>/<rec>/feats.f64` and `ref.rttm`.
void write_corpus(const std::string& dir, const Corpus& corpus);
/// Reads one split ("train", "dev" or "eval"); recordings come back sorted by id.
std::vector<Recording> read_corpus_split(const std::string& dir, const std::string& split);

}  // namespace cvec

#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "cvec/features.hpp"
#include "cvec/nets.hpp"
#include "cvec/param_store.hpp"
#include "cvec/timeline.hpp"

namespace cvec::segmentation {

/// Which neighbour absorbs a sub-segment that is too short.
enum class MergeRule { ShorterNeighbor, LongerNeighbor, PreviousNeighbor };

MergeRule parse_merge_rule(const std::string& name);

struct SegmenterConfig {
  double speech_threshold = 0.5;
  /// Non-speech gaps shorter than this (seconds) are bridged.
  double min_nonspeech = 0.2;
  /// Sub-segments shorter than this (seconds) are merged into a neighbour.
  double min_segment = 0.3;
  double change_threshold = 0.5;
  /// Median filter length applied to speech posteriors (1 disables it).
  std::size_t median_window = 11;
  MergeRule merge_rule = MergeRule::ShorterNeighbor;

  void validate() const;
};

using FrameSpan = std::pair<std::size_t, std::size_t>;

/// Running median; the window is truncated at the sequence ends.
std::vector<double> median_filter(std::span<const double> x, std::size_t window);

/// Thresholds posteriors and bridges short gaps. Returns [begin, end) frame spans.
std::vector<FrameSpan> speech_spans(std::span<const double> posteriors, double threshold, std::size_t min_gap_frames);

/// Speech posterior of every frame.
std::vector<double> vad_posteriors(const FeatureSequence& feats, const nets::VadConfig& cfg, const ParamStore& params);

/// Speech timeline of a stream; every entry is labeled "speech".
Timeline vad_segment(const FeatureSequence& feats, const nets::VadConfig& vad, const ParamStore& params,
                     const SegmenterConfig& cfg, const std::string& recording = "");

/// Split frames: the middle frame of every maximal run above `threshold`.
std::vector<std::size_t> change_frames(std::span<const double> posteriors, double threshold);

/// Repeatedly merges the shortest piece under `min_frames` into a neighbour
/// chosen by `rule` (ties go to the earlier neighbour). Pieces must tile a span.
std::vector<FrameSpan> merge_short(std::vector<FrameSpan> pieces, std::size_t min_frames, MergeRule rule);

/// Splits a span at the given frames (ignoring frames on or outside its ends).
std::vector<FrameSpan> split_span(FrameSpan span, std::span<const std::size_t> cuts);

/// Speaker-homogeneous segments: each speech entry is split at detected
/// change points and short pieces merged back. Entries shorter than the CPD
/// window pass through unsplit.
Timeline cpd_segment(const FeatureSequence& feats, const Timeline& speech, const nets::CpdConfig& cpd,
                     const ParamStore& params, const SegmenterConfig& cfg);

struct ChangeScore {
  std::size_t true_positives = 0;
  std::size_t false_positives = 0;
  std::size_t false_negatives = 0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

/// Greedy one-to-one matching in hypothesis order: each hypothesis takes the
/// nearest unmatched reference within `collar` seconds (earlier on ties).
/// A ratio with a zero denominator is 0, except that two empty sets score 1.
ChangeScore cpd_eval(std::span<const double> hypothesis, std::span<const double> reference, double collar = 0.5);

}  // namespace cvec::segmentation

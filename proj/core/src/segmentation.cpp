#include "cvec/segmentation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "cvec/error.hpp"

namespace cvec::segmentation {

MergeRule parse_merge_rule(const std::string& name) {
  if (name == "shorter") return MergeRule::ShorterNeighbor;
  if (name == "longer") return MergeRule::LongerNeighbor;
  if (name == "previous") return MergeRule::PreviousNeighbor;
  throw ConfigError("unknown merge rule '" + name + "' (expected shorter, longer or previous)");
}

void SegmenterConfig::validate() const {
  if (!(speech_threshold > 0.0 && speech_threshold < 1.0)) throw ConfigError("segmenter: speech threshold in (0,1)");
  if (!(change_threshold > 0.0 && change_threshold < 1.0)) throw ConfigError("segmenter: change threshold in (0,1)");
  if (!(min_nonspeech > 0.0)) throw ConfigError("segmenter: min_nonspeech must be positive");
  if (!(min_segment > 0.0)) throw ConfigError("segmenter: min_segment must be positive");
  if (median_window == 0 || median_window % 2 == 0) throw ConfigError("segmenter: median window must be odd");
}

std::vector<double> median_filter(std::span<const double> x, std::size_t window) {
  if (window <= 1) return {x.begin(), x.end()};
  const std::size_t half = window / 2;
  std::vector<double> out(x.size()), buf;
  for (std::size_t t = 0; t < x.size(); ++t) {
    const std::size_t lo = t >= half ? t - half : 0;
    const std::size_t hi = std::min(x.size(), t + half + 1);
    buf.assign(x.begin() + static_cast<long>(lo), x.begin() + static_cast<long>(hi));
    const auto mid = buf.begin() + static_cast<long>((buf.size() - 1) / 2);
    std::nth_element(buf.begin(), mid, buf.end());
    out[t] = *mid;
  }
  return out;
}

std::vector<FrameSpan> speech_spans(std::span<const double> posteriors, double threshold, std::size_t min_gap_frames) {
  std::vector<FrameSpan> spans;
  for (std::size_t t = 0; t < posteriors.size();) {
    if (posteriors[t] <= threshold) {
      ++t;
      continue;
    }
    std::size_t e = t;
    while (e < posteriors.size() && posteriors[e] > threshold) ++e;
    if (!spans.empty() && t - spans.back().second < min_gap_frames) {
      spans.back().second = e;
    } else {
      spans.emplace_back(t, e);
    }
    t = e;
  }
  return spans;
}

std::vector<double> vad_posteriors(const FeatureSequence& feats, const nets::VadConfig& cfg, const ParamStore& params) {
  NoGradGuard no_grad;
  const std::size_t n = feats.frames();
  std::vector<double> out(n);
  constexpr std::size_t kChunk = 1024;
  for (std::size_t begin = 0; begin < n; begin += kChunk) {
    std::vector<std::size_t> frames(std::min(n, begin + kChunk) - begin);
    std::iota(frames.begin(), frames.end(), begin);
    const Tensor probs = softmax_rows(nets::vad_logits(nets::vad_splice(feats, frames, cfg), cfg, params, "vad"));
    for (std::size_t i = 0; i < frames.size(); ++i) out[begin + i] = probs(i, 1);
  }
  return out;
}

Timeline vad_segment(const FeatureSequence& feats, const nets::VadConfig& vad, const ParamStore& params,
                     const SegmenterConfig& cfg, const std::string& recording) {
  cfg.validate();
  Timeline out;
  out.recording = recording;
  if (feats.empty()) return out;
  const auto post = median_filter(vad_posteriors(feats, vad, params), cfg.median_window);
  for (const auto& [b, e] : speech_spans(post, cfg.speech_threshold, seconds_to_frame(cfg.min_nonspeech))) {
    out.add(frame_to_seconds(b), frame_to_seconds(e), "speech");
  }
  return out;
}

std::vector<std::size_t> change_frames(std::span<const double> posteriors, double threshold) {
  std::vector<std::size_t> out;
  for (std::size_t t = 0; t < posteriors.size();) {
    if (posteriors[t] <= threshold) {
      ++t;
      continue;
    }
    std::size_t e = t;
    while (e < posteriors.size() && posteriors[e] > threshold) ++e;
    out.push_back(t + (e - 1 - t) / 2);
    t = e;
  }
  return out;
}

std::vector<FrameSpan> split_span(FrameSpan span, std::span<const std::size_t> cuts) {
  std::vector<FrameSpan> out;
  std::size_t begin = span.first;
  for (std::size_t c : cuts) {
    if (c <= begin || c >= span.second) continue;
    out.emplace_back(begin, c);
    begin = c;
  }
  out.emplace_back(begin, span.second);
  return out;
}

std::vector<FrameSpan> merge_short(std::vector<FrameSpan> pieces, std::size_t min_frames, MergeRule rule) {
  auto len = [](const FrameSpan& s) { return s.second - s.first; };
  while (pieces.size() > 1) {
    std::size_t victim = pieces.size();
    for (std::size_t i = 0; i < pieces.size(); ++i) {
      if (len(pieces[i]) < min_frames && (victim == pieces.size() || len(pieces[i]) < len(pieces[victim]))) victim = i;
    }
    if (victim == pieces.size()) break;
    std::size_t into;
    if (victim == 0) {
      into = 1;
    } else if (victim + 1 == pieces.size()) {
      into = victim - 1;
    } else {
      const std::size_t left = len(pieces[victim - 1]), right = len(pieces[victim + 1]);
      switch (rule) {
        case MergeRule::ShorterNeighbor: into = right < left ? victim + 1 : victim - 1; break;
        case MergeRule::LongerNeighbor: into = right > left ? victim + 1 : victim - 1; break;
        default: into = victim - 1; break;
      }
    }
    const std::size_t keep = std::min(victim, into);
    pieces[keep] = {pieces[keep].first, pieces[keep + 1].second};
    pieces.erase(pieces.begin() + static_cast<long>(keep + 1));
  }
  return pieces;
}

Timeline cpd_segment(const FeatureSequence& feats, const Timeline& speech, const nets::CpdConfig& cpd,
                     const ParamStore& params, const SegmenterConfig& cfg) {
  cfg.validate();
  Timeline out;
  out.recording = speech.recording;
  const std::size_t min_split = 2 * cpd.context + 1;
  const std::size_t min_piece = seconds_to_frame(cfg.min_segment);
  for (const auto& seg : speech.segments) {
    const std::size_t b = std::min(seconds_to_frame(seg.start), feats.frames());
    const std::size_t e = std::min(seconds_to_frame(seg.end), feats.frames());
    if (e <= b || e - b < min_split) {
      out.segments.push_back(seg);
      continue;
    }
    const auto post = nets::cpd_region_posteriors(feats.slice(b, e).to_tensor(), cpd, params, "cpd");
    auto cuts = change_frames(post, cfg.change_threshold);
    for (auto& c : cuts) c += b;
    for (const auto& [pb, pe] : merge_short(split_span({b, e}, cuts), min_piece, cfg.merge_rule)) {
      out.add(frame_to_seconds(pb), frame_to_seconds(pe), seg.label);
    }
  }
  return out;
}

ChangeScore cpd_eval(std::span<const double> hypothesis, std::span<const double> reference, double collar) {
  if (collar < 0.0) throw ConfigError("cpd_eval: negative collar");
  ChangeScore s;
  std::vector<bool> used(reference.size(), false);
  for (double h : hypothesis) {
    std::size_t best = reference.size();
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t r = 0; r < reference.size(); ++r) {
      const double d = std::abs(h - reference[r]);
      if (!used[r] && d <= collar + 1e-9 && d < best_d) {
        best = r;
        best_d = d;
      }
    }
    if (best < reference.size()) {
      used[best] = true;
      ++s.true_positives;
    } else {
      ++s.false_positives;
    }
  }
  s.false_negatives = reference.size() - s.true_positives;
  if (hypothesis.empty() && reference.empty()) {
    s.precision = s.recall = s.f1 = 1.0;
    return s;
  }
  auto ratio = [](std::size_t a, std::size_t b) { return b == 0 ? 0.0 : static_cast<double>(a) / static_cast<double>(b); };
  s.precision = ratio(s.true_positives, s.true_positives + s.false_positives);
  s.recall = ratio(s.true_positives, s.true_positives + s.false_negatives);
  s.f1 = s.precision + s.recall > 0.0 ? 2.0 * s.precision * s.recall / (s.precision + s.recall) : 0.0;
  return s;
}

}  // namespace cvec::segmentation

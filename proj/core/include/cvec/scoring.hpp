#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "cvec/timeline.hpp"

namespace cvec::scoring {

/// Internal time unit: 0.1 ms.
using Tick = std::int64_t;
inline constexpr double kTicksPerSecond = 10000.0;

Tick to_ticks(double seconds);
double to_seconds(Tick t);

struct Interval {
  Tick begin = 0;
  Tick end = 0;
  bool operator==(const Interval&) const = default;
};

/// Sorted, disjoint, non-adjacent intervals.
using IntervalSet = std::vector<Interval>;

IntervalSet normalize(std::vector<Interval> parts);
IntervalSet intersect(const IntervalSet& a, const IntervalSet& b);
IntervalSet subtract(const IntervalSet& a, const IntervalSet& b);
Tick total_length(const IntervalSet& s);

struct ScoreConfig {
  double collar = 0.25;
  bool score_overlap = false;

  void validate() const;
};

/// [0, extent) minus +-collar around every reference boundary, minus spans
/// where two or more reference speakers talk unless overlap is scored.
IntervalSet apply_collar_and_overlap(const Timeline& reference, const ScoreConfig& cfg, Tick extent);

/// One-to-one partial assignment maximizing the summed overlap.
/// result[r] is the column matched to row r, or -1.
std::vector<long> optimal_mapping(const std::vector<std::vector<double>>& overlap);

struct RecordingScore {
  std::string recording;
  /// Seconds of scored reference speaker time and of each error type.
  double scored_speech = 0.0;
  double missed = 0.0;
  double false_alarm = 0.0;
  double speaker_error = 0.0;
  /// Hypothesis label to reference label.
  std::map<std::string, std::string> mapping;
};

struct ScoreReport {
  std::vector<RecordingScore> recordings;
  double scored_speech = 0.0;
  double missed = 0.0;
  double false_alarm = 0.0;
  double speaker_error = 0.0;
  /// Percentages of scored reference speech; der = ms + fa + ser.
  double ms = 0.0;
  double fa = 0.0;
  double ser = 0.0;
  double der = 0.0;
  /// False when no reference speech was scored.
  bool valid = false;
};

RecordingScore score_recording(const Timeline& reference, const Timeline& hypothesis, const ScoreConfig& cfg);

/// Single-recording report.
ScoreReport score(const Timeline& reference, const Timeline& hypothesis, const ScoreConfig& cfg);

/// Pools times over all reference recordings; a recording without a
/// hypothesis is scored against an empty one.
ScoreReport score_corpus(const std::map<std::string, Timeline>& references,
                         const std::map<std::string, Timeline>& hypotheses, const ScoreConfig& cfg);

/// Human-readable table followed by `KEY=value` lines (MS, FA, SER, DER,
/// SCORED, VALID).
std::string format_report(const ScoreReport& report);

}  // namespace cvec::scoring

#pragma once

#include <cstddef>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

namespace cvec {

inline constexpr double kFramesPerSecond = 100.0;

/// Frame index to seconds; exact at three decimals.
inline double frame_to_seconds(std::size_t frame) { return static_cast<double>(frame) / kFramesPerSecond; }
std::size_t seconds_to_frame(double seconds);

struct Segment {
  double start = 0.0;
  double end = 0.0;
  std::string label;

  double duration() const { return end - start; }
  bool operator==(const Segment&) const = default;
};

/// Labeled intervals over one recording, kept sorted by start time.
struct Timeline {
  std::string recording;
  std::vector<Segment> segments;

  bool empty() const { return segments.empty(); }
  std::size_t size() const { return segments.size(); }
  void add(double start, double end, std::string label);
  void sort();
  /// Sorted distinct labels.
  std::vector<std::string> labels() const;
  /// Throws ContractError unless start < end and entries are sorted; with
  /// `disjoint` also requires non-overlapping entries.
  void validate(bool disjoint) const;
  bool operator==(const Timeline&) const = default;
};

/// `SPEAKER <rec> 1 <start> <dur> <NA> <NA> <label> <NA> <NA>`, seconds at
/// three decimals.
void write_rttm(std::ostream& out, const Timeline& timeline);
void write_rttm_file(const std::string& path, const Timeline& timeline);

/// Parses RTTM text, grouped by recording id. Blank lines and lines starting
/// with ';' or '#' are skipped; non-SPEAKER records are ignored. A malformed
/// line throws IoError naming `source` and the line number.
std::map<std::string, Timeline> parse_rttm(std::istream& in, const std::string& source);
std::map<std::string, Timeline> read_rttm_file(const std::string& path);

/// Times of label changes between adjacent entries whose gap is at most
/// `max_gap` seconds (the later entry's start).
std::vector<double> change_points(const Timeline& timeline, double max_gap);

}  // namespace cvec

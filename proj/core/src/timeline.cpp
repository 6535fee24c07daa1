#include "cvec/timeline.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>

#include "cvec/error.hpp"

namespace cvec {

std::size_t seconds_to_frame(double seconds) {
  if (!(seconds >= 0.0)) return 0;
  return static_cast<std::size_t>(std::llround(seconds * kFramesPerSecond));
}

void Timeline::add(double start, double end, std::string label) {
  segments.push_back({start, end, std::move(label)});
}

void Timeline::sort() {
  std::stable_sort(segments.begin(), segments.end(), [](const Segment& a, const Segment& b) {
    return a.start != b.start ? a.start < b.start : a.end < b.end;
  });
}

std::vector<std::string> Timeline::labels() const {
  std::set<std::string> s;
  for (const auto& seg : segments) s.insert(seg.label);
  return {s.begin(), s.end()};
}

void Timeline::validate(bool disjoint) const {
  for (std::size_t i = 0; i < segments.size(); ++i) {
    const auto& s = segments[i];
    if (!(s.start < s.end)) {
      throw ContractError("timeline " + recording + ": entry " + std::to_string(i) + " has start >= end");
    }
    if (i == 0) continue;
    if (segments[i - 1].start > s.start) throw ContractError("timeline " + recording + ": entries not sorted");
    if (disjoint && segments[i - 1].end > s.start) {
      throw ContractError("timeline " + recording + ": entries " + std::to_string(i - 1) + " and " +
                          std::to_string(i) + " overlap");
    }
  }
}

void write_rttm(std::ostream& out, const Timeline& timeline) {
  const auto flags = out.flags();
  out << std::fixed << std::setprecision(3);
  for (const auto& s : timeline.segments) {
    // Round the end first so start + dur re-parses to the same end tick.
    const double start = std::round(s.start * 1000.0) / 1000.0;
    const double end = std::round(s.end * 1000.0) / 1000.0;
    out << "SPEAKER " << timeline.recording << " 1 " << start << ' ' << (end - start) << " <NA> <NA> "
        << s.label << " <NA> <NA>\n";
  }
  out.flags(flags);
}

void write_rttm_file(const std::string& path, const Timeline& timeline) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path);
  write_rttm(out, timeline);
  if (!out) throw IoError("write failed: " + path);
}

namespace {

double parse_number(const std::string& token, const std::string& where) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(token, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != token.size() || !std::isfinite(v)) throw IoError(where + ": bad number '" + token + "'");
  return v;
}

}  // namespace

std::map<std::string, Timeline> parse_rttm(std::istream& in, const std::string& source) {
  std::map<std::string, Timeline> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream fields(line);
    std::vector<std::string> tok;
    for (std::string t; fields >> t;) tok.push_back(t);
    if (tok.empty() || tok[0][0] == ';' || tok[0][0] == '#') continue;
    const std::string where = source + ":" + std::to_string(line_no);
    if (tok[0] != "SPEAKER") continue;
    if (tok.size() < 8) throw IoError(where + ": expected at least 8 fields, got " + std::to_string(tok.size()));
    const double start = parse_number(tok[3], where);
    const double dur = parse_number(tok[4], where);
    if (start < 0.0) throw IoError(where + ": negative start time");
    if (dur <= 0.0) throw IoError(where + ": non-positive duration");
    // Snap to milliseconds so start + dur is reproducible.
    const double s = std::round(start * 1000.0) / 1000.0;
    const double e = std::round((start + dur) * 1000.0) / 1000.0;
    auto& tl = out[tok[1]];
    tl.recording = tok[1];
    tl.add(s, e, tok[7]);
  }
  if (in.bad()) throw IoError("read failed: " + source);
  for (auto& [rec, tl] : out) tl.sort();
  return out;
}

std::map<std::string, Timeline> read_rttm_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  return parse_rttm(in, path);
}

std::vector<double> change_points(const Timeline& timeline, double max_gap) {
  std::vector<double> out;
  for (std::size_t i = 1; i < timeline.segments.size(); ++i) {
    const auto& a = timeline.segments[i - 1];
    const auto& b = timeline.segments[i];
    if (a.label != b.label && b.start - a.end <= max_gap + 1e-9) out.push_back(b.start);
  }
  return out;
}

}  // namespace cvec

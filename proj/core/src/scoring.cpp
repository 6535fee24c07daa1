#include "cvec/scoring.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <sstream>

#include "cvec/error.hpp"

namespace cvec::scoring {

Tick to_ticks(double seconds) { return static_cast<Tick>(std::llround(seconds * kTicksPerSecond)); }
double to_seconds(Tick t) { return static_cast<double>(t) / kTicksPerSecond; }

IntervalSet normalize(std::vector<Interval> parts) {
  std::erase_if(parts, [](const Interval& i) { return i.end <= i.begin; });
  std::sort(parts.begin(), parts.end(), [](const Interval& a, const Interval& b) { return a.begin < b.begin; });
  IntervalSet out;
  for (const auto& p : parts) {
    if (!out.empty() && p.begin <= out.back().end) {
      out.back().end = std::max(out.back().end, p.end);
    } else {
      out.push_back(p);
    }
  }
  return out;
}

IntervalSet intersect(const IntervalSet& a, const IntervalSet& b) {
  IntervalSet out;
  std::size_t i = 0, j = 0;
  while (i < a.size() && j < b.size()) {
    const Tick lo = std::max(a[i].begin, b[j].begin);
    const Tick hi = std::min(a[i].end, b[j].end);
    if (lo < hi) out.push_back({lo, hi});
    (a[i].end < b[j].end) ? ++i : ++j;
  }
  return out;
}

IntervalSet subtract(const IntervalSet& a, const IntervalSet& b) {
  IntervalSet out;
  std::size_t j = 0;
  for (auto cur : a) {
    while (j < b.size() && b[j].end <= cur.begin) ++j;
    std::size_t k = j;
    while (k < b.size() && b[k].begin < cur.end) {
      if (b[k].begin > cur.begin) out.push_back({cur.begin, b[k].begin});
      cur.begin = std::max(cur.begin, b[k].end);
      ++k;
    }
    if (cur.begin < cur.end) out.push_back(cur);
  }
  return out;
}

Tick total_length(const IntervalSet& s) {
  Tick t = 0;
  for (const auto& i : s) t += i.end - i.begin;
  return t;
}

void ScoreConfig::validate() const {
  if (!(collar >= 0.0)) throw ConfigError("score: collar must be non-negative");
}

IntervalSet apply_collar_and_overlap(const Timeline& reference, const ScoreConfig& cfg, Tick extent) {
  cfg.validate();
  IntervalSet region{{0, extent}};
  const Tick c = to_ticks(cfg.collar);
  std::vector<Interval> excluded;
  if (c > 0) {
    for (const auto& s : reference.segments) {
      excluded.push_back({to_ticks(s.start) - c, to_ticks(s.start) + c});
      excluded.push_back({to_ticks(s.end) - c, to_ticks(s.end) + c});
    }
  }
  if (!cfg.score_overlap) {
    // Speaker count sweep over per-speaker merged speech.
    std::map<std::string, std::vector<Interval>> by_speaker;
    for (const auto& s : reference.segments) by_speaker[s.label].push_back({to_ticks(s.start), to_ticks(s.end)});
    std::vector<std::pair<Tick, int>> events;
    for (auto& [label, parts] : by_speaker) {
      for (const auto& i : normalize(std::move(parts))) {
        events.emplace_back(i.begin, 1);
        events.emplace_back(i.end, -1);
      }
    }
    std::sort(events.begin(), events.end());
    int active = 0;
    Tick since = 0;
    for (const auto& [t, delta] : events) {
      if (active >= 2 && t > since) excluded.push_back({since, t});
      active += delta;
      since = t;
    }
  }
  return subtract(region, normalize(std::move(excluded)));
}

std::vector<long> optimal_mapping(const std::vector<std::vector<double>>& overlap) {
  const std::size_t rows = overlap.size();
  const std::size_t cols = rows == 0 ? 0 : overlap[0].size();
  std::vector<long> result(rows, -1);
  if (rows == 0 || cols == 0) return result;
  // Hungarian method (shortest augmenting path) on the square cost matrix
  // -overlap, padded with zeros.
  const std::size_t n = std::max(rows, cols);
  auto cost = [&](std::size_t i, std::size_t j) {
    if (i >= rows || j >= cols) return 0.0;
    if (overlap[i].size() != cols) throw DimensionError("mapping: ragged overlap matrix");
    if (overlap[i][j] < 0.0) throw ContractError("mapping: negative overlap");
    return -overlap[i][j];
  };
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
  std::vector<std::size_t> p(n + 1, 0), way(n + 1, 0);
  for (std::size_t i = 1; i <= n; ++i) {
    p[0] = i;
    std::size_t j0 = 0;
    std::vector<double> minv(n + 1, inf);
    std::vector<bool> used(n + 1, false);
    do {
      used[j0] = true;
      const std::size_t i0 = p[j0];
      double delta = inf;
      std::size_t j1 = 0;
      for (std::size_t j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (std::size_t j = 0; j <= n; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const std::size_t j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  for (std::size_t j = 1; j <= n; ++j) {
    const std::size_t i = p[j] - 1;
    if (i < rows && j - 1 < cols && overlap[i][j - 1] > 0.0) result[i] = static_cast<long>(j - 1);
  }
  return result;
}

RecordingScore score_recording(const Timeline& reference, const Timeline& hypothesis, const ScoreConfig& cfg) {
  cfg.validate();
  RecordingScore out;
  out.recording = reference.recording.empty() ? hypothesis.recording : reference.recording;
  Tick extent = 0;
  for (const auto& s : reference.segments) extent = std::max(extent, to_ticks(s.end) + to_ticks(cfg.collar));
  for (const auto& s : hypothesis.segments) extent = std::max(extent, to_ticks(s.end));
  const IntervalSet region = apply_collar_and_overlap(reference, cfg, extent);

  const auto ref_labels = reference.labels();
  const auto hyp_labels = hypothesis.labels();
  auto speaker_sets = [&](const Timeline& tl, const std::vector<std::string>& labels) {
    std::vector<IntervalSet> sets;
    for (const auto& label : labels) {
      std::vector<Interval> parts;
      for (const auto& s : tl.segments)
        if (s.label == label) parts.push_back({to_ticks(s.start), to_ticks(s.end)});
      sets.push_back(intersect(normalize(std::move(parts)), region));
    }
    return sets;
  };
  const auto ref_sets = speaker_sets(reference, ref_labels);
  const auto hyp_sets = speaker_sets(hypothesis, hyp_labels);

  // Elementary pieces between consecutive boundaries inside the scored region.
  std::set<Tick> cuts;
  for (const auto& i : region) cuts.insert({i.begin, i.end});
  for (const auto& s : ref_sets)
    for (const auto& i : s) cuts.insert({i.begin, i.end});
  for (const auto& s : hyp_sets)
    for (const auto& i : s) cuts.insert({i.begin, i.end});
  const std::vector<Tick> bounds(cuts.begin(), cuts.end());

  auto active = [](const IntervalSet& s, Tick t) {
    auto it = std::upper_bound(s.begin(), s.end(), t, [](Tick x, const Interval& i) { return x < i.end; });
    return it != s.end() && it->begin <= t;
  };

  std::vector<std::vector<double>> overlap(ref_labels.size(), std::vector<double>(hyp_labels.size(), 0.0));
  struct Piece {
    Tick len;
    std::vector<std::size_t> refs, hyps;
  };
  std::vector<Piece> pieces;
  for (std::size_t k = 0; k + 1 < bounds.size(); ++k) {
    const Tick t = bounds[k], len = bounds[k + 1] - bounds[k];
    if (!active(region, t)) continue;
    Piece p{len, {}, {}};
    for (std::size_t r = 0; r < ref_sets.size(); ++r)
      if (active(ref_sets[r], t)) p.refs.push_back(r);
    for (std::size_t h = 0; h < hyp_sets.size(); ++h)
      if (active(hyp_sets[h], t)) p.hyps.push_back(h);
    for (std::size_t r : p.refs)
      for (std::size_t h : p.hyps) overlap[r][h] += static_cast<double>(len);
    if (!p.refs.empty() || !p.hyps.empty()) pieces.push_back(std::move(p));
  }

  const auto map = optimal_mapping(overlap);
  std::vector<long> hyp_to_ref(hyp_labels.size(), -1);
  for (std::size_t r = 0; r < map.size(); ++r) {
    if (map[r] >= 0) {
      hyp_to_ref[static_cast<std::size_t>(map[r])] = static_cast<long>(r);
      out.mapping[hyp_labels[static_cast<std::size_t>(map[r])]] = ref_labels[r];
    }
  }

  Tick scored = 0, missed = 0, fa = 0, ser = 0;
  for (const auto& p : pieces) {
    const auto nref = static_cast<Tick>(p.refs.size()), nhyp = static_cast<Tick>(p.hyps.size());
    Tick correct = 0;
    for (std::size_t h : p.hyps) {
      const long r = hyp_to_ref[h];
      if (r >= 0 && std::find(p.refs.begin(), p.refs.end(), static_cast<std::size_t>(r)) != p.refs.end()) ++correct;
    }
    scored += p.len * nref;
    missed += p.len * std::max<Tick>(0, nref - nhyp);
    fa += p.len * std::max<Tick>(0, nhyp - nref);
    ser += p.len * (std::min(nref, nhyp) - correct);
  }
  out.scored_speech = to_seconds(scored);
  out.missed = to_seconds(missed);
  out.false_alarm = to_seconds(fa);
  out.speaker_error = to_seconds(ser);
  return out;
}

namespace {

void finish(ScoreReport& r) {
  for (const auto& rec : r.recordings) {
    r.scored_speech += rec.scored_speech;
    r.missed += rec.missed;
    r.false_alarm += rec.false_alarm;
    r.speaker_error += rec.speaker_error;
  }
  r.valid = r.scored_speech > 0.0;
  if (!r.valid) return;
  r.ms = 100.0 * r.missed / r.scored_speech;
  r.fa = 100.0 * r.false_alarm / r.scored_speech;
  r.ser = 100.0 * r.speaker_error / r.scored_speech;
  r.der = r.ms + r.fa + r.ser;
}

}  // namespace

ScoreReport score(const Timeline& reference, const Timeline& hypothesis, const ScoreConfig& cfg) {
  ScoreReport r;
  r.recordings.push_back(score_recording(reference, hypothesis, cfg));
  finish(r);
  return r;
}

ScoreReport score_corpus(const std::map<std::string, Timeline>& references,
                         const std::map<std::string, Timeline>& hypotheses, const ScoreConfig& cfg) {
  ScoreReport r;
  for (const auto& [rec, ref] : references) {
    auto it = hypotheses.find(rec);
    Timeline empty;
    empty.recording = rec;
    r.recordings.push_back(score_recording(ref, it == hypotheses.end() ? empty : it->second, cfg));
  }
  finish(r);
  return r;
}

std::string format_report(const ScoreReport& report) {
  std::ostringstream out;
  char line[160];
  std::snprintf(line, sizeof line, "%-16s %10s %8s %8s %8s %8s\n", "recording", "scored(s)", "MS%", "FA%", "SER%",
                "DER%");
  out << line;
  for (const auto& r : report.recordings) {
    if (r.scored_speech > 0.0) {
      const double ms = 100.0 * r.missed / r.scored_speech, fa = 100.0 * r.false_alarm / r.scored_speech,
                   ser = 100.0 * r.speaker_error / r.scored_speech;
      std::snprintf(line, sizeof line, "%-16s %10.2f %8.2f %8.2f %8.2f %8.2f\n", r.recording.c_str(), r.scored_speech,
                    ms, fa, ser, ms + fa + ser);
    } else {
      std::snprintf(line, sizeof line, "%-16s %10.2f %8s %8s %8s %8s\n", r.recording.c_str(), 0.0, "-", "-", "-", "-");
    }
    out << line;
  }
  std::snprintf(line, sizeof line, "%-16s %10.2f %8.2f %8.2f %8.2f %8.2f\n", "TOTAL", report.scored_speech, report.ms,
                report.fa, report.ser, report.der);
  out << line;
  std::snprintf(line, sizeof line, "MS=%.4f\nFA=%.4f\nSER=%.4f\nDER=%.4f\nSCORED=%.4f\nVALID=%d\n", report.ms,
                report.fa, report.ser, report.der, report.scored_speech, report.valid ? 1 : 0);
  out << line;
  return out.str();
}

}  // namespace cvec::scoring

#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>

#include "cvec/checks/oracles.hpp"
#include "cvec/error.hpp"
#include "cvec/scoring.hpp"
#include "test_util.hpp"

namespace cvec::scoring {
namespace {

Timeline make(std::initializer_list<Segment> segs) {
  Timeline t;
  t.recording = "r";
  for (const auto& s : segs) t.add(s.start, s.end, s.label);
  return t;
}

ScoreConfig collar(double c, bool overlap = false) {
  ScoreConfig cfg;
  cfg.collar = c;
  cfg.score_overlap = overlap;
  return cfg;
}

/// Random timeline on a 0.01 s grid; overlapping references when `overlap`.
Timeline random_timeline(Rng& rng, std::size_t speakers, bool overlap, const std::string& prefix) {
  std::uniform_int_distribution<int> len(20, 300), gap(0, 150), spk(0, static_cast<int>(speakers) - 1);
  Timeline t;
  t.recording = "r";
  int at = gap(rng);
  while (at < 3000) {
    const int l = len(rng);
    t.add(at / 100.0, (at + l) / 100.0, prefix + std::to_string(spk(rng)));
    at += overlap ? l / 2 + gap(rng) : l + gap(rng);
  }
  t.sort();
  return t;
}

// ---- interval algebra

TEST(Intervals, NormalizeIntersectSubtract) {
  const auto a = normalize({{5, 8}, {0, 2}, {2, 3}, {7, 9}, {12, 12}});
  EXPECT_EQ(a, (IntervalSet{{0, 3}, {5, 9}}));
  const IntervalSet b = {{1, 6}, {8, 20}};
  EXPECT_EQ(intersect(a, b), (IntervalSet{{1, 3}, {5, 6}, {8, 9}}));
  EXPECT_EQ(subtract(a, b), (IntervalSet{{0, 1}, {6, 8}}));
  EXPECT_EQ(total_length(a), 7);
}

TEST(Intervals, TicksAreExactAtMillisecondInputs) {
  EXPECT_EQ(to_ticks(1.234), 12340);
  EXPECT_EQ(to_ticks(0.1) + to_ticks(0.2), to_ticks(0.3));
  EXPECT_DOUBLE_EQ(to_seconds(12345), 1.2345);
}

// ---- scored region

TEST(ScoredRegion, ZeroCollarNoOverlapIsWholeExtent) {
  const auto ref = make({{1, 2, "a"}, {2.5, 4, "b"}});
  EXPECT_EQ(apply_collar_and_overlap(ref, collar(0), to_ticks(5)), (IntervalSet{{0, to_ticks(5)}}));
}

TEST(ScoredRegion, OverlapExcludedUnlessScored) {
  const auto ref = make({{0, 4, "a"}, {3, 6, "b"}});
  EXPECT_EQ(apply_collar_and_overlap(ref, collar(0), to_ticks(6)),
            (IntervalSet{{0, to_ticks(3)}, {to_ticks(4), to_ticks(6)}}));
  EXPECT_EQ(apply_collar_and_overlap(ref, collar(0, true), to_ticks(6)), (IntervalSet{{0, to_ticks(6)}}));
}

TEST(ScoredRegion, CollarZonesAroundBoundaries) {
  const auto ref = make({{1, 2, "a"}});
  EXPECT_EQ(apply_collar_and_overlap(ref, collar(0.25), to_ticks(3)),
            (IntervalSet{{0, to_ticks(0.75)}, {to_ticks(1.25), to_ticks(1.75)}, {to_ticks(2.25), to_ticks(3)}}));
}

// ---- mapping

TEST(Mapping, DiagonalDominantIsIdentity) {
  EXPECT_EQ(optimal_mapping({{9, 1}, {2, 7}}), (std::vector<long>{0, 1}));
}

TEST(Mapping, MoreReferencesThanClusters) {
  const std::vector<std::vector<double>> w = {{5, 0}, {0, 0}, {0, 4}};
  const auto m = optimal_mapping(w);
  EXPECT_EQ(m, (std::vector<long>{0, -1, 1}));
  std::vector<long> oracle;
  EXPECT_EQ(checks::exhaustive_assignment(w, &oracle), 9.0);
  EXPECT_EQ(oracle, m);
}

TEST(Mapping, AgreesWithExhaustiveAssignment) {
  Rng rng(1);
  std::uniform_real_distribution<double> u(0.0, 10.0);
  std::uniform_int_distribution<std::size_t> dim(1, 5);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<std::vector<double>> w(dim(rng), std::vector<double>(dim(rng)));
    for (auto& row : w) {
      for (auto& v : row) v = u(rng) < 3.0 ? 0.0 : u(rng);
    }
    const auto m = optimal_mapping(w);
    double total = 0.0;
    std::vector<bool> used(w[0].size(), false);
    for (std::size_t r = 0; r < w.size(); ++r) {
      if (m[r] < 0) continue;
      EXPECT_FALSE(used[static_cast<std::size_t>(m[r])]);
      used[static_cast<std::size_t>(m[r])] = true;
      total += w[r][static_cast<std::size_t>(m[r])];
    }
    EXPECT_NEAR(total, checks::exhaustive_assignment(w), 1e-9);
  }
}

TEST(Mapping, PermutedRowsPermuteMapping) {
  const std::vector<std::vector<double>> w = {{1, 8, 0}, {6, 2, 1}, {0, 3, 5}};
  const auto m = optimal_mapping(w);
  const std::vector<std::vector<double>> p = {w[2], w[0], w[1]};
  EXPECT_EQ(optimal_mapping(p), (std::vector<long>{m[2], m[0], m[1]}));
}

// ---- scores

TEST(Score, IdenticalHypothesisIsPerfect) {
  const auto ref = make({{0.5, 4, "a"}, {4.5, 9, "b"}, {9, 12, "a"}});
  const auto r = score(ref, ref, ScoreConfig{});
  EXPECT_TRUE(r.valid);
  EXPECT_EQ(r.der, 0.0);
}

TEST(Score, HalfCoveredSingleSpeakerFixture) {
  const auto r = score(make({{0, 10, "a"}}), make({{0, 5, "x"}}), collar(0.25));
  EXPECT_NEAR(r.scored_speech, 9.5, 1e-12);
  EXPECT_NEAR(r.ms, 50.0, 1e-9);
  EXPECT_EQ(r.fa, 0.0);
  EXPECT_EQ(r.ser, 0.0);
  EXPECT_EQ(r.recordings[0].mapping.at("x"), "a");
}

TEST(Score, SwappedLabelsCostNothing) {
  const auto ref = make({{0, 3, "a"}, {3, 7, "b"}, {7, 9, "a"}});
  const auto hyp = make({{0, 3, "B"}, {3, 7, "A"}, {7, 9, "B"}});
  const auto r = score(ref, hyp, ScoreConfig{});
  EXPECT_EQ(r.ser, 0.0);
  EXPECT_EQ(r.der, 0.0);
}

TEST(Score, FalseAlarmAndSpeakerErrorFixture) {
  // Collar 0: ref a [0,4], b [4,8]; hyp x [0,6], y [6,10].
  const auto r = score(make({{0, 4, "a"}, {4, 8, "b"}}), make({{0, 6, "x"}, {6, 10, "y"}}), collar(0));
  EXPECT_NEAR(r.scored_speech, 8.0, 1e-12);
  EXPECT_NEAR(r.false_alarm, 2.0, 1e-12);
  EXPECT_NEAR(r.speaker_error, 2.0, 1e-12);
  EXPECT_NEAR(r.missed, 0.0, 1e-12);
  EXPECT_NEAR(r.der, 50.0, 1e-9);
}

TEST(Score, UnmappedClusterIsSpeakerError) {
  const auto r = score(make({{0, 10, "a"}}), make({{0, 6, "x"}, {6, 10, "y"}}), collar(0));
  EXPECT_NEAR(r.speaker_error, 4.0, 1e-12);
}

TEST(Score, EmptyReferenceIsInvalid) {
  Timeline empty;
  empty.recording = "r";
  const auto r = score(empty, make({{0, 2, "x"}}), ScoreConfig{});
  EXPECT_FALSE(r.valid);
  EXPECT_EQ(r.der, 0.0);
  ScoreConfig bad;
  bad.collar = -0.1;
  EXPECT_THROW(bad.validate(), ConfigError);
}

TEST(Score, RandomTimelinesMatchOracleAndDecompose) {
  Rng rng(2);
  for (int trial = 0; trial < 50; ++trial) {
    const bool overlap = trial % 2 == 1;
    const auto ref = random_timeline(rng, 3, overlap, "s");
    const auto hyp = random_timeline(rng, 4, false, "c");
    for (double c : {0.0, 0.25}) {
      const auto cfg = collar(c, trial % 4 == 3);
      const auto r = score(ref, hyp, cfg);
      ASSERT_TRUE(r.valid);
      EXPECT_NEAR(r.ms + r.fa + r.ser, r.der, 1e-9);
      const auto o = checks::der_oracle(ref, hyp, c, cfg.score_overlap);
      EXPECT_NEAR(r.scored_speech, o.scored, 1e-9);
      EXPECT_NEAR(r.missed, o.missed, 1e-9);
      EXPECT_NEAR(r.false_alarm, o.false_alarm, 1e-9);
      EXPECT_NEAR(r.speaker_error, o.speaker_error, 1e-9);
    }
  }
}

TEST(Score, InvariantToLabelPermutationAndSegmentSplits) {
  Rng rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    const auto ref = random_timeline(rng, 3, trial % 2 == 0, "s");
    const auto hyp = random_timeline(rng, 3, false, "c");
    const auto base = score(ref, hyp, ScoreConfig{});
    Timeline renamed = hyp, split = hyp;
    for (auto& s : renamed.segments) s.label = "z" + s.label.substr(1);
    std::reverse(renamed.segments.begin(), renamed.segments.end());
    renamed.sort();
    split.segments.clear();
    for (const auto& s : hyp.segments) {
      const double mid = std::round((s.start + s.end) * 50.0) / 100.0;
      if (mid > s.start && mid < s.end) {
        split.add(s.start, mid, s.label);
        split.add(mid, s.end, s.label);
      } else {
        split.add(s.start, s.end, s.label);
      }
    }
    const auto a = score(ref, renamed, ScoreConfig{}), b = score(ref, split, ScoreConfig{});
    EXPECT_EQ(a.der, base.der);
    EXPECT_EQ(a.ser, base.ser);
    EXPECT_EQ(b.der, base.der);
  }
}

TEST(Score, LargerCollarNeverAddsScoredTime) {
  Rng rng(4);
  for (int trial = 0; trial < 20; ++trial) {
    const auto ref = random_timeline(rng, 3, true, "s");
    const auto hyp = random_timeline(rng, 3, false, "c");
    double previous = 1e18;
    for (double c : {0.0, 0.1, 0.25, 0.5, 1.0}) {
      const auto r = score(ref, hyp, collar(c));
      EXPECT_LE(r.scored_speech, previous + 1e-12);
      previous = r.scored_speech;
      EXPECT_GE(r.missed, 0.0);
      EXPECT_GE(r.false_alarm, 0.0);
      EXPECT_GE(r.speaker_error, 0.0);
    }
  }
}

TEST(Corpus, PoolsTimesAcrossRecordings) {
  std::map<std::string, Timeline> ref, hyp;
  ref["r1"] = make({{0, 10, "a"}});
  ref["r1"].recording = "r1";
  ref["r2"] = make({{0, 10, "a"}});
  ref["r2"].recording = "r2";
  hyp["r1"] = make({{0, 10, "x"}});
  const auto r = score_corpus(ref, hyp, collar(0));
  ASSERT_EQ(r.recordings.size(), 2u);
  EXPECT_NEAR(r.ms, 50.0, 1e-12);
  const auto text = format_report(r);
  EXPECT_NE(text.find("DER="), std::string::npos);
  EXPECT_NE(text.find("VALID=1"), std::string::npos);
}

}  // namespace
}  // namespace cvec::scoring

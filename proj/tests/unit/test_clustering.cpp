#include <gtest/gtest.h>

#include <cmath>
#include <set>

#include "cvec/checks/oracles.hpp"
#include "cvec/clustering.hpp"
#include "cvec/error.hpp"
#include "test_util.hpp"

namespace cvec::clustering {
namespace {

/// `per` points around each of `k` random unit directions scaled to 10,
/// spread sigma = 1; returns points and true labels.
std::vector<Embedding> clouds(std::size_t k, std::size_t per, std::size_t dim, Rng& rng,
                              std::vector<std::size_t>& truth) {
  std::normal_distribution<double> n01(0.0, 1.0);
  std::vector<Embedding> centers;
  for (std::size_t c = 0; c < k; ++c) {
    Embedding v(dim);
    double norm = 0.0;
    for (auto& x : v) {
      x = n01(rng);
      norm += x * x;
    }
    for (auto& x : v) x *= 10.0 / std::sqrt(norm);
    centers.push_back(v);
  }
  std::vector<Embedding> pts;
  truth.clear();
  for (std::size_t c = 0; c < k; ++c) {
    for (std::size_t i = 0; i < per; ++i) {
      Embedding p = centers[c];
      for (auto& x : p) x += n01(rng) * 0.3;
      pts.push_back(p);
      truth.push_back(c);
    }
  }
  return pts;
}

AffinityMatrix random_affinity(std::size_t n, Rng& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  AffinityMatrix a{n, std::vector<double>(n * n)};
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) a(i, j) = i == j ? 1.0 : u(rng);
  }
  return a;
}

// ---- affinity

TEST(Affinity, IdenticalAntipodalOrthogonal) {
  const std::vector<Embedding> x = {{1, 0}, {2, 0}, {-3, 0}, {0, 0.5}};
  const auto a = cosine_affinity(x);
  EXPECT_DOUBLE_EQ(a(0, 1), 1.0);
  EXPECT_DOUBLE_EQ(a(0, 2), 0.0);
  EXPECT_DOUBLE_EQ(a(0, 3), 0.5);
  for (std::size_t i = 0; i < 4; ++i) EXPECT_EQ(a(i, i), 1.0);
}

TEST(Affinity, ZeroNormAndSingletonRejected) {
  const std::vector<Embedding> zero = {{1, 0}, {0, 0}};
  EXPECT_THROW(cosine_affinity(zero), ContractError);
  const std::vector<Embedding> one = {{1, 0}};
  EXPECT_THROW(cosine_affinity(one), ContractError);
}

TEST(Affinity, ScalingAndRotationInvariance) {
  Rng rng(1);
  std::vector<std::size_t> truth;
  const auto x = clouds(3, 6, 5, rng, truth);
  std::uniform_real_distribution<double> pos(0.1, 20.0);
  auto scaled = x;
  for (auto& v : scaled) {
    const double s = pos(rng);
    for (auto& c : v) c *= s;
  }
  // Plane rotation in coordinates (1, 3) by 0.7 rad.
  auto rotated = x;
  for (auto& v : rotated) {
    const double a = v[1], b = v[3];
    v[1] = std::cos(0.7) * a - std::sin(0.7) * b;
    v[3] = std::sin(0.7) * a + std::cos(0.7) * b;
  }
  const auto base = cosine_affinity(x);
  EXPECT_LT(test::max_abs_diff(base.a, cosine_affinity(scaled).a), 1e-12);
  EXPECT_LT(test::max_abs_diff(base.a, cosine_affinity(rotated).a), 1e-12);
  ClusterConfig cfg;
  EXPECT_EQ(cluster_embeddings(x, cfg).labels, cluster_embeddings(rotated, cfg).labels);
  EXPECT_EQ(cluster_embeddings(x, cfg).labels, cluster_embeddings(scaled, cfg).labels);
}

TEST(Refine, TinyThresholdOnlySymmetrizes) {
  Rng rng(2);
  const auto a = random_affinity(7, rng);
  const auto r = refine_affinity(a, 1e-9);
  for (std::size_t i = 0; i < 7; ++i) {
    for (std::size_t j = 0; j < 7; ++j) EXPECT_EQ(r(i, j), i == j ? 1.0 : std::max(a(i, j), a(j, i)));
  }
}

TEST(Refine, OutputSymmetricWithUnitDiagonal) {
  Rng rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    const auto r = refine_affinity(random_affinity(9, rng), 0.6);
    for (std::size_t i = 0; i < 9; ++i) {
      EXPECT_EQ(r(i, i), 1.0);
      for (std::size_t j = 0; j < 9; ++j) {
        EXPECT_LE(std::abs(r(i, j) - r(j, i)), 1e-15);
        EXPECT_GE(r(i, j), 0.0);
        EXPECT_LE(r(i, j), 1.0);
      }
    }
  }
}

TEST(Refine, AttenuatesEntriesBelowRowFraction) {
  AffinityMatrix a{3, {1.0, 0.8, 0.2, 0.8, 1.0, 0.3, 0.2, 0.3, 1.0}};
  const auto r = refine_affinity(a, 0.5);
  EXPECT_DOUBLE_EQ(r(0, 1), 0.8);
  // 0.2 < 0.5 * 0.8 in row 0, 0.2 < 0.5 * 0.3 fails in row 2, so max keeps 0.2.
  EXPECT_DOUBLE_EQ(r(0, 2), 0.2);
  // 0.3 < 0.4 in row 1, not below 0.15 in row 2.
  EXPECT_DOUBLE_EQ(r(1, 2), 0.3);
  const auto strict = refine_affinity(a, 0.99);
  EXPECT_DOUBLE_EQ(strict(0, 2), 0.2 * 0.01);
}

TEST(Refine, TwoBlockFixtureStaysBlockDominant) {
  Rng rng(4);
  std::uniform_real_distribution<double> hi(0.8, 0.95), lo(0.3, 0.45);
  const std::size_t n = 10;
  AffinityMatrix a{n, std::vector<double>(n * n)};
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j <= i; ++j) {
      const double v = i == j ? 1.0 : ((i < 5) == (j < 5) ? hi(rng) : lo(rng));
      a(i, j) = a(j, i) = v;
    }
  }
  const auto r = refine_affinity(a, 0.85);
  for (std::size_t i = 0; i < n; ++i) {
    double within = 1e9, across = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j) continue;
      if ((i < 5) == (j < 5)) within = std::min(within, r(i, j));
      else across = std::max(across, r(i, j));
    }
    EXPECT_GT(within, 10.0 * across);
  }
}

// ---- spectrum and eigengap

TEST(Spectrum, EigenvaluesInUnitRangeWithZeroFloor) {
  Rng rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    const auto a = refine_affinity(random_affinity(12, rng), 0.5);
    const auto s = laplacian_spectrum(a);
    ASSERT_EQ(s.values.size(), 12u);
    EXPECT_NEAR(s.values.front(), 0.0, 1e-9);
    for (std::size_t i = 0; i < 12; ++i) {
      EXPECT_GE(s.values[i], -1e-9);
      EXPECT_LE(s.values[i], 2.0 + 1e-9);
      if (i) EXPECT_GE(s.values[i], s.values[i - 1]);
    }
  }
}

TEST(Spectrum, EigenvectorsSatisfyEigenEquation) {
  Rng rng(6);
  const auto a = refine_affinity(random_affinity(6, rng), 0.5);
  const auto s = laplacian_spectrum(a);
  std::vector<double> d(6, 0.0);
  for (std::size_t i = 0; i < 6; ++i) {
    for (std::size_t j = 0; j < 6; ++j) d[i] += a(i, j);
  }
  for (std::size_t k = 0; k < 6; ++k) {
    for (std::size_t i = 0; i < 6; ++i) {
      double lv = s.vectors[i * 6 + k];
      for (std::size_t j = 0; j < 6; ++j) lv -= a(i, j) / std::sqrt(d[i] * d[j]) * s.vectors[j * 6 + k];
      EXPECT_NEAR(lv, s.values[k] * s.vectors[i * 6 + k], 1e-10);
    }
  }
}

TEST(Eigengap, PicksLargestGapFromTwo) {
  const std::vector<double> v = {0.0, 0.0, 0.01, 0.02, 0.9, 1.0, 1.1};
  EXPECT_EQ(eigengap_k(v, 6), 4u);
  EXPECT_EQ(eigengap_k(v, 3), 2u);
  // k is never below 2 even when the first gap is the largest.
  EXPECT_EQ(eigengap_k(std::vector<double>{0.0, 1.0, 1.01, 1.02}, 3), 2u);
}

// ---- clustering

TEST(Cluster, TwoExactBlocks) {
  std::vector<Embedding> x;
  for (int i = 0; i < 6; ++i) x.push_back({1.0, 0.2, 0.0});
  for (int i = 0; i < 4; ++i) x.push_back({0.0, -0.3, 1.0});
  const auto r = cluster_embeddings(x, ClusterConfig{});
  EXPECT_EQ(r.k, 2u);
  EXPECT_EQ(r.labels, (std::vector<std::size_t>{0, 0, 0, 0, 0, 0, 1, 1, 1, 1}));
}

TEST(Cluster, GaussianCloudsRecoveredExactly) {
  for (std::size_t k : {2u, 3u, 4u, 5u}) {
    Rng rng(100 + k);
    std::vector<std::size_t> truth;
    const auto x = clouds(k, 20, 16, rng, truth);
    const auto r = cluster_embeddings(x, ClusterConfig{});
    EXPECT_EQ(r.k, k);
    EXPECT_EQ(checks::adjusted_rand_index(r.labels, truth), 1.0) << "k=" << k;
  }
}

TEST(Cluster, TightCloudHonoursFloorOfTwo) {
  // Identical vectors: every gap from k = 2 on is zero.
  const std::vector<Embedding> x(30, Embedding{0.3, -1.0, 2.0});
  const auto r = cluster_embeddings(x, ClusterConfig{});
  EXPECT_EQ(r.k, 2u);
  EXPECT_EQ(r.labels.size(), 30u);
  EXPECT_EQ(r.centroids.size(), 2u);
}

TEST(Cluster, LabelsFollowFirstAppearanceAndCentroidsAreUnit) {
  Rng rng(8);
  std::vector<std::size_t> truth;
  auto x = clouds(3, 10, 6, rng, truth);
  std::reverse(x.begin(), x.end());
  const auto r = cluster_embeddings(x, ClusterConfig{});
  EXPECT_EQ(r.labels.front(), 0u);
  std::size_t next = 0;
  for (std::size_t l : r.labels) {
    EXPECT_LE(l, next);
    if (l == next) ++next;
  }
  for (const auto& c : r.centroids) {
    double n = 0.0;
    for (double v : c) n += v * v;
    EXPECT_NEAR(n, 1.0, 1e-12);
  }
}

TEST(Cluster, DegenerateSizes) {
  EXPECT_TRUE(cluster_embeddings(std::vector<Embedding>{}, ClusterConfig{}).labels.empty());
  const auto one = cluster_embeddings(std::vector<Embedding>{{1.0, 2.0}}, ClusterConfig{});
  EXPECT_EQ(one.labels, (std::vector<std::size_t>{0}));
  ClusterConfig bad;
  bad.k_max = 1;
  EXPECT_THROW(bad.validate(), ConfigError);
}

TEST(KMeans, DeterministicAndSeparates) {
  const std::vector<std::vector<double>> p = {{0, 0}, {0.1, 0}, {0, 0.1}, {5, 5}, {5.1, 5}, {5, 5.1}};
  const auto a = kmeans(p, 2, 10, 3), b = kmeans(p, 2, 10, 3);
  EXPECT_EQ(a.labels, b.labels);
  EXPECT_EQ(a.inertia, b.inertia);
  EXPECT_EQ(a.labels[0], a.labels[2]);
  EXPECT_NE(a.labels[0], a.labels[3]);
  // Each triple has centroid (1/30, 1/30) and squared spread 12/900.
  EXPECT_NEAR(a.inertia, 24.0 / 900.0, 1e-12);
}

// ---- assignment

TEST(Assign, SegmentTakesNearestCentroid) {
  Timeline seg;
  seg.recording = "r";
  seg.add(0.0, 2.0, "speech");
  seg.add(2.0, 5.0, "speech");
  const std::vector<Embedding> centroids = {{1, 0}, {0, 1}, {-1, 0}};
  // Segment 1 straddles clusters 1 and 2 but its mean is nearest centroid 1.
  const std::vector<Embedding> emb = {{0, 1}, {0.1, 1}, {0, 1}, {-1, 0.2}, {0.1, 1}};
  const std::size_t owner[] = {0, 0, 1, 1, 1};
  const auto out = assign_segments(seg, owner, emb, centroids);
  ASSERT_EQ(out.size(), 2u);
  EXPECT_EQ(out.segments[0].label, cluster_label(1));
  EXPECT_EQ(out.segments[1].label, cluster_label(1));
  EXPECT_EQ(out.segments[1].start, 2.0);
}

TEST(Assign, TieGoesToLowerClusterId) {
  const std::vector<Embedding> centroids = {{1, 0}, {0, 1}};
  EXPECT_EQ(nearest_centroid({1, 1}, centroids), 0u);
  const std::vector<Embedding> swapped = {{0, 1}, {1, 0}};
  EXPECT_EQ(nearest_centroid({1, 1}, swapped), 0u);
  EXPECT_EQ(nearest_centroid({0.2, 1}, centroids), 1u);
}

TEST(Assign, EverySegmentAppearsOnceWithClusterLabels) {
  Rng rng(9);
  std::vector<std::size_t> truth;
  const auto emb = clouds(3, 8, 5, rng, truth);
  const auto clusters = cluster_embeddings(emb, ClusterConfig{});
  Timeline seg;
  std::vector<std::size_t> owner;
  for (std::size_t s = 0; s < 6; ++s) seg.add(static_cast<double>(s), static_cast<double>(s) + 0.8, "speech");
  for (std::size_t w = 0; w < emb.size(); ++w) owner.push_back(w % 6);
  const auto out = assign_segments(seg, owner, emb, clusters.centroids);
  ASSERT_EQ(out.size(), seg.size());
  std::set<std::string> allowed;
  for (std::size_t c = 0; c < clusters.k; ++c) allowed.insert(cluster_label(c));
  for (std::size_t i = 0; i < out.size(); ++i) {
    EXPECT_EQ(out.segments[i].start, seg.segments[i].start);
    EXPECT_EQ(out.segments[i].end, seg.segments[i].end);
    EXPECT_TRUE(allowed.count(out.segments[i].label));
  }
}

TEST(WindowTimeline, OverlapsSplitAtMidpoint) {
  const WindowSpan w[] = {{0, 200}, {100, 300}, {200, 400}, {600, 650}};
  const std::size_t labels[] = {0, 1, 1, 0};
  const auto tl = window_timeline("r", w, labels);
  ASSERT_EQ(tl.size(), 4u);
  EXPECT_DOUBLE_EQ(tl.segments[0].end, 1.5);
  EXPECT_DOUBLE_EQ(tl.segments[1].start, 1.5);
  EXPECT_DOUBLE_EQ(tl.segments[1].end, 2.5);
  EXPECT_DOUBLE_EQ(tl.segments[2].start, 2.5);
  EXPECT_DOUBLE_EQ(tl.segments[2].end, 4.0);
  EXPECT_DOUBLE_EQ(tl.segments[3].start, 6.0);
  EXPECT_EQ(tl.segments[3].label, cluster_label(0));
  tl.validate(true);
}

}  // namespace
}  // namespace cvec::clustering

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "cvec/timeline.hpp"

namespace cvec::clustering {

using Embedding = std::vector<double>;

/// Dense symmetric n x n matrix, row-major.
struct AffinityMatrix {
  std::size_t n = 0;
  std::vector<double> a;

  double operator()(std::size_t i, std::size_t j) const { return a[i * n + j]; }
  double& operator()(std::size_t i, std::size_t j) { return a[i * n + j]; }
};

/// A[i][j] = (1 + cos(x_i, x_j)) / 2, diagonal 1. Throws ContractError on a
/// zero-norm embedding or fewer than two embeddings.
AffinityMatrix cosine_affinity(std::span<const Embedding> x);

/// Entries below p * (row max, off-diagonal) are scaled by `attenuation`,
/// then A = max(A, A^T) and the diagonal is reset to 1.
AffinityMatrix refine_affinity(const AffinityMatrix& a, double p, double attenuation = 0.01);

/// Ascending eigenvalues of L = I - D^-1/2 A D^-1/2, with the matching
/// eigenvectors as columns of a row-major n x n matrix.
struct Spectrum {
  std::vector<double> values;
  std::vector<double> vectors;
};
Spectrum laplacian_spectrum(const AffinityMatrix& a);

/// Largest gap lambda_{k+1} - lambda_k over 2 <= k <= k_max (first on ties);
/// k_max is clamped to n - 1.
std::size_t eigengap_k(std::span<const double> ascending, std::size_t k_max);

struct KMeansResult {
  std::vector<std::size_t> labels;
  std::vector<std::vector<double>> centers;
  double inertia = 0.0;
};

/// Lloyd iterations from k-means++ seeds; the restart with the lowest inertia
/// wins (first on ties).
KMeansResult kmeans(std::span<const std::vector<double>> points, std::size_t k, std::size_t restarts,
                    std::uint64_t seed);

struct ClusterConfig {
  double threshold = 0.85;
  std::size_t k_max = 10;
  std::size_t restarts = 50;
  std::uint64_t seed = 1;

  void validate() const;
};

struct ClusterResult {
  /// Cluster id per window, numbered in order of first appearance.
  std::vector<std::size_t> labels;
  /// Unit-normalized mean embedding of each cluster.
  std::vector<Embedding> centroids;
  std::size_t k = 0;
  std::vector<double> eigenvalues;
};

/// Spectral clustering with the eigengap cluster count (at least 2).
/// The affinity matrix is used as given; `embeddings` only feed the centroids.
ClusterResult choose_k_and_cluster(const AffinityMatrix& a, std::span<const Embedding> embeddings,
                                   const ClusterConfig& cfg);

/// Refined cosine affinity followed by choose_k_and_cluster. A single window
/// forms one cluster; no windows give an empty result.
ClusterResult cluster_embeddings(std::span<const Embedding> embeddings, const ClusterConfig& cfg);

/// Index of the centroid with the largest cosine similarity (lowest id on ties).
std::size_t nearest_centroid(const Embedding& x, std::span<const Embedding> centroids);

std::string cluster_label(std::size_t id);

/// Labels each segment with the centroid nearest to the mean embedding of its
/// windows. window_segment[w] is the segment owning window w.
Timeline assign_segments(const Timeline& segments, std::span<const std::size_t> window_segment,
                         std::span<const Embedding> embeddings, std::span<const Embedding> centroids);

/// Window-level output: each window [begin, end) (frames) becomes a segment
/// with its own cluster label; overlapping neighbours are cut at the middle
/// of their overlap.
struct WindowSpan {
  std::size_t begin = 0;
  std::size_t end = 0;
};
Timeline window_timeline(const std::string& recording, std::span<const WindowSpan> windows,
                         std::span<const std::size_t> labels);

}  // namespace cvec::clustering

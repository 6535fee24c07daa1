#include "cvec/clustering.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "cvec/error.hpp"

namespace cvec::clustering {

namespace {

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double squared_distance(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return s;
}

std::vector<double> unit(std::vector<double> v) {
  const double n = std::sqrt(dot(v, v));
  if (n > 0.0)
    for (auto& x : v) x /= n;
  return v;
}

}  // namespace

AffinityMatrix cosine_affinity(std::span<const Embedding> x) {
  if (x.size() < 2) throw ContractError("affinity: need at least two embeddings");
  const std::size_t dim = x[0].size();
  std::vector<Embedding> u;
  u.reserve(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (x[i].size() != dim) throw DimensionError("affinity: embeddings differ in size");
    const double n = std::sqrt(dot(x[i], x[i]));
    if (!(n > 0.0)) throw ContractError("affinity: embedding " + std::to_string(i) + " has zero norm");
    u.push_back(unit(x[i]));
  }
  AffinityMatrix a{x.size(), std::vector<double>(x.size() * x.size(), 1.0)};
  for (std::size_t i = 0; i < a.n; ++i)
    for (std::size_t j = i + 1; j < a.n; ++j) {
      const double c = std::clamp(dot(u[i], u[j]), -1.0, 1.0);
      a(i, j) = a(j, i) = 0.5 * (1.0 + c);
    }
  return a;
}

AffinityMatrix refine_affinity(const AffinityMatrix& a, double p, double attenuation) {
  if (!(p > 0.0 && p < 1.0)) throw ConfigError("refine: threshold fraction must lie in (0,1)");
  AffinityMatrix r = a;
  for (std::size_t i = 0; i < a.n; ++i) {
    double row_max = 0.0;
    for (std::size_t j = 0; j < a.n; ++j)
      if (j != i) row_max = std::max(row_max, a(i, j));
    for (std::size_t j = 0; j < a.n; ++j)
      if (j != i && a(i, j) < p * row_max) r(i, j) = a(i, j) * attenuation;
  }
  for (std::size_t i = 0; i < a.n; ++i) {
    r(i, i) = 1.0;
    for (std::size_t j = i + 1; j < a.n; ++j) r(i, j) = r(j, i) = std::max(r(i, j), r(j, i));
  }
  return r;
}

Spectrum laplacian_spectrum(const AffinityMatrix& a) {
  const auto n = static_cast<Eigen::Index>(a.n);
  Eigen::VectorXd d_inv_sqrt(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    double d = 0.0;
    for (Eigen::Index j = 0; j < n; ++j) d += a(i, j);
    if (!(d > 0.0)) throw NumericError("laplacian: zero degree");
    d_inv_sqrt(i) = 1.0 / std::sqrt(d);
  }
  Eigen::MatrixXd l(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j)
      l(i, j) = (i == j ? 1.0 : 0.0) - d_inv_sqrt(i) * a(i, j) * d_inv_sqrt(j);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(l);
  if (solver.info() != Eigen::Success) throw NumericError("laplacian: eigendecomposition failed");
  Spectrum s;
  s.values.assign(solver.eigenvalues().data(), solver.eigenvalues().data() + n);
  s.vectors.resize(a.n * a.n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) s.vectors[static_cast<std::size_t>(i * n + j)] = solver.eigenvectors()(i, j);
  return s;
}

std::size_t eigengap_k(std::span<const double> ascending, std::size_t k_max) {
  if (ascending.size() < 3) return 2;
  k_max = std::min(k_max, ascending.size() - 1);
  std::size_t best = 2;
  double best_gap = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 2; k <= k_max; ++k) {
    // 1-based: lambda_{k+1} - lambda_k.
    const double gap = ascending[k] - ascending[k - 1];
    if (gap > best_gap) {
      best_gap = gap;
      best = k;
    }
  }
  return best;
}

KMeansResult kmeans(std::span<const std::vector<double>> points, std::size_t k, std::size_t restarts,
                    std::uint64_t seed) {
  const std::size_t n = points.size();
  if (k == 0 || k > n) throw ContractError("kmeans: k must lie in [1, point count]");
  if (restarts == 0) throw ConfigError("kmeans: at least one restart required");
  std::mt19937_64 rng(seed);
  KMeansResult best;
  best.inertia = std::numeric_limits<double>::infinity();
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  for (std::size_t run = 0; run < restarts; ++run) {
    // k-means++ seeding.
    std::vector<std::vector<double>> centers;
    centers.push_back(points[std::uniform_int_distribution<std::size_t>(0, n - 1)(rng)]);
    std::vector<double> d2(n, std::numeric_limits<double>::infinity());
    while (centers.size() < k) {
      double total = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        d2[i] = std::min(d2[i], squared_distance(points[i], centers.back()));
        total += d2[i];
      }
      std::size_t pick = n - 1;
      if (total > 0.0) {
        double r = u01(rng) * total;
        for (std::size_t i = 0; i < n; ++i) {
          r -= d2[i];
          if (r <= 0.0 && d2[i] > 0.0) {
            pick = i;
            break;
          }
        }
      } else {
        pick = std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
      }
      centers.push_back(points[pick]);
    }
    // Lloyd iterations.
    std::vector<std::size_t> labels(n, 0);
    for (int iter = 0; iter < 100; ++iter) {
      bool changed = iter == 0;
      for (std::size_t i = 0; i < n; ++i) {
        std::size_t arg = 0;
        double dmin = squared_distance(points[i], centers[0]);
        for (std::size_t c = 1; c < k; ++c) {
          const double d = squared_distance(points[i], centers[c]);
          if (d < dmin) {
            dmin = d;
            arg = c;
          }
        }
        if (labels[i] != arg) changed = true;
        labels[i] = arg;
      }
      if (!changed) break;
      std::vector<std::vector<double>> sums(k, std::vector<double>(points[0].size(), 0.0));
      std::vector<std::size_t> counts(k, 0);
      for (std::size_t i = 0; i < n; ++i) {
        ++counts[labels[i]];
        for (std::size_t d = 0; d < points[i].size(); ++d) sums[labels[i]][d] += points[i][d];
      }
      for (std::size_t c = 0; c < k; ++c) {
        if (counts[c] == 0) continue;  // keep an empty cluster's previous center
        for (auto& v : sums[c]) v /= static_cast<double>(counts[c]);
        centers[c] = std::move(sums[c]);
      }
    }
    double inertia = 0.0;
    for (std::size_t i = 0; i < n; ++i) inertia += squared_distance(points[i], centers[labels[i]]);
    if (inertia < best.inertia) {
      best.inertia = inertia;
      best.labels = std::move(labels);
      best.centers = std::move(centers);
    }
  }
  return best;
}

void ClusterConfig::validate() const {
  if (!(threshold > 0.0 && threshold < 1.0)) throw ConfigError("cluster: threshold must lie in (0,1)");
  if (k_max < 2) throw ConfigError("cluster: k_max must be at least 2");
  if (restarts == 0) throw ConfigError("cluster: at least one k-means restart required");
}

namespace {

/// Renumbers labels by first appearance.
std::vector<std::size_t> canonical(const std::vector<std::size_t>& labels, std::size_t k) {
  std::vector<std::size_t> map(k, k);
  std::size_t next = 0;
  std::vector<std::size_t> out(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (map[labels[i]] == k) map[labels[i]] = next++;
    out[i] = map[labels[i]];
  }
  return out;
}

std::vector<Embedding> centroids_of(std::span<const Embedding> x, const std::vector<std::size_t>& labels,
                                    std::size_t k) {
  std::vector<Embedding> c(k, Embedding(x.empty() ? 0 : x[0].size(), 0.0));
  for (std::size_t i = 0; i < x.size(); ++i)
    for (std::size_t d = 0; d < x[i].size(); ++d) c[labels[i]][d] += x[i][d];
  for (auto& v : c) v = unit(std::move(v));
  return c;
}

}  // namespace

ClusterResult choose_k_and_cluster(const AffinityMatrix& a, std::span<const Embedding> embeddings,
                                   const ClusterConfig& cfg) {
  cfg.validate();
  if (embeddings.size() != a.n) throw DimensionError("cluster: affinity and embedding counts differ");
  if (a.n < 2) throw ContractError("cluster: need at least two windows");
  const Spectrum s = laplacian_spectrum(a);
  ClusterResult r;
  r.eigenvalues = s.values;
  r.k = std::min(eigengap_k(s.values, cfg.k_max), a.n);
  std::vector<std::vector<double>> rows(a.n, std::vector<double>(r.k));
  for (std::size_t i = 0; i < a.n; ++i) {
    for (std::size_t j = 0; j < r.k; ++j) rows[i][j] = s.vectors[i * a.n + j];
    rows[i] = unit(std::move(rows[i]));
  }
  const auto km = kmeans(rows, r.k, cfg.restarts, cfg.seed);
  r.labels = canonical(km.labels, r.k);
  // A cluster left empty by k-means gets no centroid.
  r.centroids = centroids_of(embeddings, r.labels, *std::max_element(r.labels.begin(), r.labels.end()) + 1);
  return r;
}

ClusterResult cluster_embeddings(std::span<const Embedding> embeddings, const ClusterConfig& cfg) {
  cfg.validate();
  ClusterResult r;
  if (embeddings.empty()) return r;
  if (embeddings.size() == 1) {
    r.k = 1;
    r.labels = {0};
    r.centroids = {unit(embeddings[0])};
    return r;
  }
  return choose_k_and_cluster(refine_affinity(cosine_affinity(embeddings), cfg.threshold), embeddings, cfg);
}

std::size_t nearest_centroid(const Embedding& x, std::span<const Embedding> centroids) {
  if (centroids.empty()) throw ContractError("assign: no centroids");
  const Embedding u = unit(x);
  std::size_t best = 0;
  double best_sim = -std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < centroids.size(); ++c) {
    const double sim = dot(u, unit(centroids[c]));
    if (sim > best_sim + 1e-12) {
      best_sim = sim;
      best = c;
    }
  }
  return best;
}

std::string cluster_label(std::size_t id) { return "C" + std::to_string(id); }

Timeline assign_segments(const Timeline& segments, std::span<const std::size_t> window_segment,
                         std::span<const Embedding> embeddings, std::span<const Embedding> centroids) {
  if (window_segment.size() != embeddings.size()) throw DimensionError("assign: window map and embeddings differ");
  std::vector<Embedding> sums(segments.size());
  std::vector<std::size_t> counts(segments.size(), 0);
  for (std::size_t w = 0; w < embeddings.size(); ++w) {
    const std::size_t s = window_segment[w];
    if (s >= segments.size()) throw ContractError("assign: window mapped to a missing segment");
    if (sums[s].empty()) sums[s].assign(embeddings[w].size(), 0.0);
    for (std::size_t d = 0; d < embeddings[w].size(); ++d) sums[s][d] += embeddings[w][d];
    ++counts[s];
  }
  Timeline out;
  out.recording = segments.recording;
  for (std::size_t s = 0; s < segments.size(); ++s) {
    if (counts[s] == 0) throw ContractError("assign: segment " + std::to_string(s) + " owns no window");
    const auto& seg = segments.segments[s];
    out.add(seg.start, seg.end, cluster_label(nearest_centroid(sums[s], centroids)));
  }
  return out;
}

Timeline window_timeline(const std::string& recording, std::span<const WindowSpan> windows,
                         std::span<const std::size_t> labels) {
  if (windows.size() != labels.size()) throw DimensionError("window timeline: label count differs");
  Timeline out;
  out.recording = recording;
  for (std::size_t i = 0; i < windows.size(); ++i) {
    std::size_t begin = windows[i].begin, end = windows[i].end;
    if (i > 0 && windows[i - 1].end > begin) begin = (begin + windows[i - 1].end) / 2;
    if (i + 1 < windows.size() && windows[i + 1].begin < end) end = (windows[i + 1].begin + end) / 2;
    if (end > begin) out.add(frame_to_seconds(begin), frame_to_seconds(end), cluster_label(labels[i]));
  }
  return out;
}

}  // namespace cvec::clustering

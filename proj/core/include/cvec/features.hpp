#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "cvec/tensor.hpp"

namespace cvec {

inline constexpr double kFramePeriod = 0.01;
inline constexpr std::size_t kFeatureDim = 40;

/// Time-major matrix of acoustic feature frames (frames x dim, row-major).
struct FeatureSequence {
  std::size_t dim = kFeatureDim;
  std::vector<double> data;

  std::size_t frames() const { return dim == 0 ? 0 : data.size() / dim; }
  bool empty() const { return data.empty(); }
  std::span<const double> frame(std::size_t t) const { return {data.data() + t * dim, dim}; }

  /// Frames [begin, end).
  FeatureSequence slice(std::size_t begin, std::size_t end) const;
  FeatureSequence reversed() const;
  /// Frames begin..begin+length-1 with indices clamped to [0, frames()).
  FeatureSequence padded_slice(long begin, std::size_t length) const;
  Tensor to_tensor() const;
};

/// `feats.f64`: 16-byte header (magic "CVFT", uint64 frame count, uint32 dim)
/// followed by frames x dim little-endian doubles.
void write_feats(const std::string& path, const FeatureSequence& feats);
FeatureSequence read_feats(const std::string& path);

}  // namespace cvec

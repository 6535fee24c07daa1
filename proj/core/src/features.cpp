#include "cvec/features.hpp"

#include <algorithm>
#include <cstdint>

#include "byte_io.hpp"
#include "cvec/error.hpp"

namespace cvec {

namespace {
constexpr char kMagic[4] = {'C', 'V', 'F', 'T'};
}

FeatureSequence FeatureSequence::slice(std::size_t begin, std::size_t end) const {
  if (begin > end || end > frames()) throw ContractError("feature slice out of range");
  FeatureSequence out{dim, {}};
  out.data.assign(data.begin() + static_cast<std::ptrdiff_t>(begin * dim),
                  data.begin() + static_cast<std::ptrdiff_t>(end * dim));
  return out;
}

FeatureSequence FeatureSequence::reversed() const {
  FeatureSequence out{dim, {}};
  out.data.reserve(data.size());
  for (std::size_t t = frames(); t-- > 0;) {
    auto f = frame(t);
    out.data.insert(out.data.end(), f.begin(), f.end());
  }
  return out;
}

FeatureSequence FeatureSequence::padded_slice(long begin, std::size_t length) const {
  if (frames() == 0) throw ContractError("padded slice of an empty sequence");
  FeatureSequence out{dim, {}};
  out.data.reserve(length * dim);
  const long last = static_cast<long>(frames()) - 1;
  for (std::size_t i = 0; i < length; ++i) {
    auto f = frame(static_cast<std::size_t>(std::clamp(begin + static_cast<long>(i), 0L, last)));
    out.data.insert(out.data.end(), f.begin(), f.end());
  }
  return out;
}

Tensor FeatureSequence::to_tensor() const { return Tensor::matrix(frames(), dim, data); }

void write_feats(const std::string& path, const FeatureSequence& feats) {
  std::string out(kMagic, sizeof(kMagic));
  detail::put_le<std::uint64_t>(out, feats.frames());
  detail::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(feats.dim));
  for (double v : feats.data) detail::put_le<double>(out, v);
  detail::write_file(path, out);
}

FeatureSequence read_feats(const std::string& path) {
  const auto bytes = detail::read_file(path);
  detail::ByteReader in(bytes, path);
  if (in.take(sizeof(kMagic)) != std::string_view(kMagic, sizeof(kMagic))) {
    throw IoError(path + ": not a feature file (bad magic)");
  }
  const auto frames = in.get<std::uint64_t>();
  const auto dim = in.get<std::uint32_t>();
  if (dim == 0) throw IoError(path + ": zero feature dimension");
  if (in.remaining() != frames * dim * 8) throw IoError(path + ": size does not match header");
  FeatureSequence feats{dim, std::vector<double>(frames * dim)};
  for (auto& v : feats.data) v = in.get<double>();
  return feats;
}

}  // namespace cvec

#pragma once

#include <cstdint>
#include <map>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "cvec/tensor.hpp"

namespace cvec {

using Rng = std::mt19937_64;

/// Named collection of trainable tensors.
///
/// Names are dotted paths (`tdnn.L1.W`, `pool.tdnn.W2`, ...). Iteration order
/// is lexicographic so that every traversal, and the archive, is stable.
class ParamStore {
 public:
  static constexpr std::uint32_t kFormatVersion = 1;

  /// Registers a new parameter; duplicate names are a contract error.
  Tensor add(const std::string& name, Shape shape, std::vector<double> values);
  /// Weight matrix drawn from uniform(-a, a), a = sqrt(6 / (fan_in + fan_out)).
  Tensor add_glorot(const std::string& name, std::size_t fan_in, std::size_t fan_out, Rng& rng);
  Tensor add_zeros(const std::string& name, Shape shape);

  bool contains(const std::string& name) const { return params_.count(name) != 0; }
  const Tensor& get(const std::string& name) const;
  Tensor& get(const std::string& name);

  std::vector<std::string> names() const;
  std::size_t size() const { return params_.size(); }
  std::size_t parameter_count() const;
  std::size_t parameter_count(std::string_view prefix) const;

  void zero_grad();

  auto begin() { return params_.begin(); }
  auto end() { return params_.end(); }
  auto begin() const { return params_.begin(); }
  auto end() const { return params_.end(); }

  /// Binary archive: magic, format version, entry count, then per entry the
  /// name, rank, dims and little-endian doubles, closed by an FNV-1a checksum.
  std::string serialize() const;
  static ParamStore deserialize(std::string_view bytes);

  void save(const std::string& path) const;
  static ParamStore load(const std::string& path);

 private:
  std::map<std::string, Tensor> params_;
};

}  // namespace cvec

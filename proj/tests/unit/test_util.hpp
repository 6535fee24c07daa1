#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "cvec/param_store.hpp"
#include "cvec/tensor.hpp"

namespace cvec::test {

inline std::vector<double> normal_values(std::size_t n, Rng& rng, double sd = 1.0) {
  std::normal_distribution<double> d(0.0, sd);
  std::vector<double> v(n);
  for (auto& x : v) x = d(rng);
  return v;
}

inline Tensor random_matrix(std::size_t r, std::size_t c, Rng& rng, double sd = 1.0) {
  return Tensor::matrix(r, c, normal_values(r * c, rng, sd));
}

inline Tensor random_parameter(Shape shape, Rng& rng, double sd = 1.0) {
  const auto n = shape_size(shape);
  return Tensor::parameter(std::move(shape), normal_values(n, rng, sd));
}

/// Central difference of a scalar function of one entry of a leaf tensor.
inline double numeric_partial(Tensor& leaf, std::size_t i, const std::function<double()>& f, double h = 1e-5) {
  auto v = leaf.mutable_values();
  const double x0 = v[i];
  v[i] = x0 + h;
  const double up = f();
  v[i] = x0 - h;
  const double down = f();
  v[i] = x0;
  return (up - down) / (2.0 * h);
}

inline double max_abs_diff(std::span<const double> a, std::span<const double> b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() / ("cvec_" + tag + "_" + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }
  std::string str(const std::string& child = "") const { return child.empty() ? path_.string() : (path_ / child).string(); }

 private:
  std::filesystem::path path_;
};

}  // namespace cvec::test

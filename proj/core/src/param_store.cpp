#include "cvec/param_store.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "byte_io.hpp"
#include "cvec/error.hpp"

namespace cvec {

namespace {
constexpr char kMagic[8] = {'C', 'V', 'E', 'C', 'P', 'R', 'M', '\0'};
}

namespace detail {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, std::string_view bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write '" + path + "'");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("short write to '" + path + "'");
}

}  // namespace detail

Tensor ParamStore::add(const std::string& name, Shape shape, std::vector<double> values) {
  if (contains(name)) throw ContractError("duplicate parameter '" + name + "'");
  auto t = Tensor::parameter(std::move(shape), std::move(values));
  params_.emplace(name, t);
  return t;
}

Tensor ParamStore::add_glorot(const std::string& name, std::size_t fan_in, std::size_t fan_out, Rng& rng) {
  const double a = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  std::uniform_real_distribution<double> dist(-a, a);
  std::vector<double> v(fan_in * fan_out);
  for (auto& x : v) x = dist(rng);
  return add(name, {fan_in, fan_out}, std::move(v));
}

Tensor ParamStore::add_zeros(const std::string& name, Shape shape) {
  auto n = shape_size(shape);
  return add(name, std::move(shape), std::vector<double>(n, 0.0));
}

const Tensor& ParamStore::get(const std::string& name) const {
  auto it = params_.find(name);
  if (it == params_.end()) throw ModelError("missing parameter '" + name + "'");
  return it->second;
}

Tensor& ParamStore::get(const std::string& name) {
  auto it = params_.find(name);
  if (it == params_.end()) throw ModelError("missing parameter '" + name + "'");
  return it->second;
}

std::vector<std::string> ParamStore::names() const {
  std::vector<std::string> out;
  out.reserve(params_.size());
  for (const auto& [name, _] : params_) out.push_back(name);
  return out;
}

std::size_t ParamStore::parameter_count() const { return parameter_count(""); }

std::size_t ParamStore::parameter_count(std::string_view prefix) const {
  std::size_t n = 0;
  for (const auto& [name, t] : params_) {
    if (std::string_view(name).substr(0, prefix.size()) == prefix) n += t.size();
  }
  return n;
}

void ParamStore::zero_grad() {
  for (auto& [_, t] : params_) t.zero_grad();
}

std::string ParamStore::serialize() const {
  std::string out(kMagic, sizeof(kMagic));
  detail::put_le<std::uint32_t>(out, kFormatVersion);
  detail::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(params_.size()));
  for (const auto& [name, t] : params_) {
    detail::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(name.size()));
    out += name;
    detail::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(t.rank()));
    for (auto d : t.shape()) detail::put_le<std::uint64_t>(out, d);
    for (double v : t.values()) detail::put_le<double>(out, v);
  }
  detail::put_le<std::uint64_t>(out, detail::fnv1a64(out));
  return out;
}

ParamStore ParamStore::deserialize(std::string_view bytes) {
  if (bytes.size() < sizeof(kMagic) + 16) throw IoError("parameter archive: truncated data");
  const auto body = bytes.substr(0, bytes.size() - 8);
  detail::ByteReader tail(bytes.substr(bytes.size() - 8), "parameter archive");
  if (tail.get<std::uint64_t>() != detail::fnv1a64(body)) {
    throw IoError("parameter archive: checksum mismatch (file is corrupted)");
  }

  detail::ByteReader in(body, "parameter archive");
  if (in.take(sizeof(kMagic)) != std::string_view(kMagic, sizeof(kMagic))) {
    throw IoError("parameter archive: bad magic");
  }
  const auto version = in.get<std::uint32_t>();
  if (version != kFormatVersion) {
    throw IoError("parameter archive: unsupported format version " + std::to_string(version));
  }
  const auto count = in.get<std::uint32_t>();
  ParamStore store;
  for (std::uint32_t i = 0; i < count; ++i) {
    const auto name_len = in.get<std::uint32_t>();
    std::string name(in.take(name_len));
    const auto rank = in.get<std::uint32_t>();
    if (rank > 2) throw IoError("parameter archive: rank " + std::to_string(rank) + " for '" + name + "'");
    Shape shape;
    for (std::uint32_t d = 0; d < rank; ++d) shape.push_back(static_cast<std::size_t>(in.get<std::uint64_t>()));
    const auto n = shape_size(shape);
    if (n > in.remaining() / 8) throw IoError("parameter archive: truncated values for '" + name + "'");
    std::vector<double> values(n);
    for (auto& v : values) v = in.get<double>();
    store.add(name, std::move(shape), std::move(values));
  }
  if (in.remaining() != 0) throw IoError("parameter archive: trailing bytes");
  return store;
}

void ParamStore::save(const std::string& path) const { detail::write_file(path, serialize()); }

ParamStore ParamStore::load(const std::string& path) { return deserialize(detail::read_file(path)); }

}  // namespace cvec

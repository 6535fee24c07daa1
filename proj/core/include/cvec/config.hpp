#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <variant>

#include "cvec/clustering.hpp"
#include "cvec/corpus.hpp"
#include "cvec/nets.hpp"
#include "cvec/scoring.hpp"
#include "cvec/segmentation.hpp"
#include "cvec/training.hpp"

namespace cvec {

/// A parsed scalar: string, integer, float or boolean.
struct ConfigValue {
  std::variant<std::string, std::int64_t, double, bool> value;
  std::size_t line = 0;

  const std::string& as_string(const std::string& key) const;
  std::int64_t as_int(const std::string& key) const;
  std::size_t as_size(const std::string& key) const;
  /// Integers are accepted where a float is expected.
  double as_double(const std::string& key) const;
  bool as_bool(const std::string& key) const;
};

/// Flat "section.key" -> value map.
using ConfigTable = std::map<std::string, ConfigValue>;

/// TOML subset: `[section]` headers, `key = value` pairs with basic strings,
/// integers, floats and booleans, and `#` comments. Duplicate keys and any
/// other syntax raise ConfigError with the line number.
ConfigTable parse_config(const std::string& text, const std::string& source = "<config>");
ConfigTable read_config_file(const std::string& path);

enum class SegmentationMode { Window, Cpd };

struct PipelineConfig {
  std::string corpus_dir = "corpus";
  std::string model_dir = "model";
  std::string output_dir = "out";
  nets::Profile profile = nets::Profile::Tiny;
  std::string system = "Stacked_sigmoid";
  SegmentationMode segmentation = SegmentationMode::Cpd;
  std::uint64_t seed = 1;

  SyntheticCorpusSpec corpus;
  training::TrainConfig train;
  training::VadTrainConfig vad;
  training::CpdTrainConfig cpd;
  segmentation::SegmenterConfig segmenter;
  clustering::ClusterConfig cluster;
  scoring::ScoreConfig score;
  /// Penalty coefficient of every attentive stage.
  double mu = 0.05;

  /// Applies every key of `table`; unknown keys raise ConfigError.
  static PipelineConfig from_table(const ConfigTable& table);
  static PipelineConfig load(const std::string& path);

  /// Propagates the global seed into the module configs.
  void set_seed(std::uint64_t s);
  training::SystemSpec system_spec() const;
  nets::VadConfig vad_config() const { return nets::VadConfig::for_profile(profile); }
  nets::CpdConfig cpd_config() const { return nets::CpdConfig::for_profile(profile); }
  void validate() const;
};

const char* segmentation_mode_name(SegmentationMode m);

}  // namespace cvec

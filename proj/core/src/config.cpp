#include "cvec/config.hpp"

#include <cctype>
#include <charconv>
#include <fstream>
#include <functional>
#include <sstream>

#include "cvec/error.hpp"

namespace cvec {

namespace {

std::string where(const std::string& key, std::size_t line) {
  return "config key '" + key + "' (line " + std::to_string(line) + ")";
}

}  // namespace

const std::string& ConfigValue::as_string(const std::string& key) const {
  if (const auto* s = std::get_if<std::string>(&value)) return *s;
  throw ConfigError(where(key, line) + ": expected a string");
}

std::int64_t ConfigValue::as_int(const std::string& key) const {
  if (const auto* i = std::get_if<std::int64_t>(&value)) return *i;
  throw ConfigError(where(key, line) + ": expected an integer");
}

std::size_t ConfigValue::as_size(const std::string& key) const {
  const auto v = as_int(key);
  if (v < 0) throw ConfigError(where(key, line) + ": expected a non-negative integer");
  return static_cast<std::size_t>(v);
}

double ConfigValue::as_double(const std::string& key) const {
  if (const auto* d = std::get_if<double>(&value)) return *d;
  if (const auto* i = std::get_if<std::int64_t>(&value)) return static_cast<double>(*i);
  throw ConfigError(where(key, line) + ": expected a number");
}

bool ConfigValue::as_bool(const std::string& key) const {
  if (const auto* b = std::get_if<bool>(&value)) return *b;
  throw ConfigError(where(key, line) + ": expected true or false");
}

// ---------------------------------------------------------------- parser

namespace {

std::string trim(const std::string& s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

bool valid_key(const std::string& k) {
  if (k.empty()) return false;
  for (char c : k)
    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-')) return false;
  return true;
}

/// Strips a trailing comment that is outside a string.
std::string strip_comment(const std::string& line) {
  bool in_string = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    if (line[i] == '\\' && in_string) {
      ++i;
    } else if (line[i] == '"') {
      in_string = !in_string;
    } else if (line[i] == '#' && !in_string) {
      return line.substr(0, i);
    }
  }
  return line;
}

ConfigValue parse_value(const std::string& text, const std::string& err) {
  ConfigValue v;
  if (text.empty()) throw ConfigError(err + ": missing value");
  if (text.front() == '"') {
    std::string out;
    std::size_t i = 1;
    for (; i < text.size() && text[i] != '"'; ++i) {
      if (text[i] == '\\' && i + 1 < text.size()) {
        const char c = text[++i];
        if (c == 'n') out += '\n';
        else if (c == 't') out += '\t';
        else if (c == '"' || c == '\\') out += c;
        else throw ConfigError(err + ": unsupported escape");
      } else {
        out += text[i];
      }
    }
    if (i >= text.size() || i + 1 != text.size()) throw ConfigError(err + ": malformed string");
    v.value = out;
    return v;
  }
  if (text == "true" || text == "false") {
    v.value = text == "true";
    return v;
  }
  std::string digits;
  for (char c : text)
    if (c != '_') digits += c;
  std::int64_t i = 0;
  auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), i);
  if (ec == std::errc() && ptr == digits.data() + digits.size()) {
    v.value = i;
    return v;
  }
  double d = 0.0;
  auto [dptr, dec] = std::from_chars(digits.data(), digits.data() + digits.size(), d);
  if (dec == std::errc() && dptr == digits.data() + digits.size() && !digits.empty() && digits[0] != '+') {
    v.value = d;
    return v;
  }
  throw ConfigError(err + ": cannot parse value '" + text + "'");
}

}  // namespace

ConfigTable parse_config(const std::string& text, const std::string& source) {
  ConfigTable table;
  std::istringstream in(text);
  std::string raw, section;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const std::string line = trim(strip_comment(raw));
    if (line.empty()) continue;
    const std::string err = source + ":" + std::to_string(line_no);
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError(err + ": malformed section header");
      section = trim(line.substr(1, line.size() - 2));
      if (!valid_key(section)) throw ConfigError(err + ": bad section name '" + section + "'");
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError(err + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    if (!valid_key(key)) throw ConfigError(err + ": bad key '" + key + "'");
    ConfigValue v = parse_value(trim(line.substr(eq + 1)), err);
    v.line = line_no;
    const std::string full = section.empty() ? key : section + "." + key;
    if (!table.emplace(full, std::move(v)).second) throw ConfigError(err + ": duplicate key '" + full + "'");
  }
  return table;
}

ConfigTable read_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path);
}

// ---------------------------------------------------------------- pipeline config

const char* segmentation_mode_name(SegmentationMode m) { return m == SegmentationMode::Cpd ? "cpd" : "window"; }

namespace {

using Setter = std::function<void(PipelineConfig&, const ConfigValue&, const std::string&)>;

template <typename T>
Setter size_field(T PipelineConfig::*group, std::size_t T::*field) {
  return [=](PipelineConfig& c, const ConfigValue& v, const std::string& k) { (c.*group).*field = v.as_size(k); };
}

template <typename T>
Setter double_field(T PipelineConfig::*group, double T::*field) {
  return [=](PipelineConfig& c, const ConfigValue& v, const std::string& k) { (c.*group).*field = v.as_double(k); };
}

const std::map<std::string, Setter>& setters() {
  using C = PipelineConfig;
  static const std::map<std::string, Setter> table = {
      {"seed", [](C& c, const ConfigValue& v, const std::string& k) { c.seed = static_cast<std::uint64_t>(v.as_size(k)); }},
      {"profile", [](C& c, const ConfigValue& v, const std::string& k) { c.profile = nets::parse_profile(v.as_string(k)); }},
      {"system", [](C& c, const ConfigValue& v, const std::string& k) { c.system = v.as_string(k); }},
      {"segmentation",
       [](C& c, const ConfigValue& v, const std::string& k) {
         const auto& s = v.as_string(k);
         if (s == "cpd") c.segmentation = SegmentationMode::Cpd;
         else if (s == "window") c.segmentation = SegmentationMode::Window;
         else throw ConfigError(where(k, v.line) + ": expected \"cpd\" or \"window\"");
       }},
      {"paths.corpus", [](C& c, const ConfigValue& v, const std::string& k) { c.corpus_dir = v.as_string(k); }},
      {"paths.model", [](C& c, const ConfigValue& v, const std::string& k) { c.model_dir = v.as_string(k); }},
      {"paths.output", [](C& c, const ConfigValue& v, const std::string& k) { c.output_dir = v.as_string(k); }},

      {"corpus.speakers", size_field(&C::corpus, &SyntheticCorpusSpec::speakers)},
      {"corpus.train_recordings", size_field(&C::corpus, &SyntheticCorpusSpec::train_recordings)},
      {"corpus.train_seconds", double_field(&C::corpus, &SyntheticCorpusSpec::train_seconds)},
      {"corpus.eval_recordings", size_field(&C::corpus, &SyntheticCorpusSpec::eval_recordings)},
      {"corpus.eval_seconds", double_field(&C::corpus, &SyntheticCorpusSpec::eval_seconds)},
      {"corpus.eval_speakers", size_field(&C::corpus, &SyntheticCorpusSpec::eval_speakers)},
      {"corpus.dev_recordings", size_field(&C::corpus, &SyntheticCorpusSpec::dev_recordings)},
      {"corpus.template_scale", double_field(&C::corpus, &SyntheticCorpusSpec::template_scale)},
      {"corpus.content_scale", double_field(&C::corpus, &SyntheticCorpusSpec::content_scale)},
      {"corpus.noise_scale", double_field(&C::corpus, &SyntheticCorpusSpec::noise_scale)},
      {"corpus.direct_change", double_field(&C::corpus, &SyntheticCorpusSpec::direct_change)},

      {"train.epochs", size_field(&C::train, &training::TrainConfig::epochs)},
      {"train.batch_size", size_field(&C::train, &training::TrainConfig::batch_size)},
      {"train.learning_rate", double_field(&C::train, &training::TrainConfig::learning_rate)},
      {"train.final_lr_scale", double_field(&C::train, &training::TrainConfig::final_lr_scale)},
      {"train.window", size_field(&C::train, &training::TrainConfig::window)},
      {"train.shift", size_field(&C::train, &training::TrainConfig::shift)},
      {"train.heldout_fraction", double_field(&C::train, &training::TrainConfig::heldout_fraction)},
      {"train.clip_norm", double_field(&C::train, &training::TrainConfig::clip_norm)},
      {"train.margin", double_field(&C::train, &training::TrainConfig::margin)},
      {"train.mu", [](C& c, const ConfigValue& v, const std::string& k) { c.mu = v.as_double(k); }},

      {"vad.epochs", size_field(&C::vad, &training::VadTrainConfig::epochs)},
      {"vad.frames_per_epoch", size_field(&C::vad, &training::VadTrainConfig::frames_per_epoch)},
      {"vad.batch_size", size_field(&C::vad, &training::VadTrainConfig::batch_size)},
      {"vad.learning_rate", double_field(&C::vad, &training::VadTrainConfig::learning_rate)},

      {"cpd.epochs", size_field(&C::cpd, &training::CpdTrainConfig::epochs)},
      {"cpd.samples_per_epoch", size_field(&C::cpd, &training::CpdTrainConfig::samples_per_epoch)},
      {"cpd.batch_size", size_field(&C::cpd, &training::CpdTrainConfig::batch_size)},
      {"cpd.learning_rate", double_field(&C::cpd, &training::CpdTrainConfig::learning_rate)},
      {"cpd.positive_radius", size_field(&C::cpd, &training::CpdTrainConfig::positive_radius)},
      {"cpd.negative_distance", size_field(&C::cpd, &training::CpdTrainConfig::negative_distance)},

      {"segmenter.speech_threshold", double_field(&C::segmenter, &segmentation::SegmenterConfig::speech_threshold)},
      {"segmenter.min_nonspeech", double_field(&C::segmenter, &segmentation::SegmenterConfig::min_nonspeech)},
      {"segmenter.min_segment", double_field(&C::segmenter, &segmentation::SegmenterConfig::min_segment)},
      {"segmenter.change_threshold", double_field(&C::segmenter, &segmentation::SegmenterConfig::change_threshold)},
      {"segmenter.median_window", size_field(&C::segmenter, &segmentation::SegmenterConfig::median_window)},
      {"segmenter.merge_rule",
       [](C& c, const ConfigValue& v, const std::string& k) {
         c.segmenter.merge_rule = segmentation::parse_merge_rule(v.as_string(k));
       }},

      {"cluster.threshold", double_field(&C::cluster, &clustering::ClusterConfig::threshold)},
      {"cluster.k_max", size_field(&C::cluster, &clustering::ClusterConfig::k_max)},
      {"cluster.restarts", size_field(&C::cluster, &clustering::ClusterConfig::restarts)},

      {"score.collar", double_field(&C::score, &scoring::ScoreConfig::collar)},
      {"score.score_overlap",
       [](C& c, const ConfigValue& v, const std::string& k) { c.score.score_overlap = v.as_bool(k); }},
  };
  return table;
}

}  // namespace

PipelineConfig PipelineConfig::from_table(const ConfigTable& table) {
  PipelineConfig c;
  const auto& known = setters();
  for (const auto& [key, value] : table) {
    auto it = known.find(key);
    if (it == known.end()) throw ConfigError("unknown " + where(key, value.line));
    try {
      it->second(c, value, key);
    } catch (const ConfigError& e) {
      const std::string msg = e.what();
      if (msg.rfind("config key", 0) == 0) throw;
      throw ConfigError(where(key, value.line) + ": " + msg);
    }
  }
  c.set_seed(c.seed);
  c.validate();
  return c;
}

PipelineConfig PipelineConfig::load(const std::string& path) { return from_table(read_config_file(path)); }

void PipelineConfig::set_seed(std::uint64_t s) {
  seed = s;
  corpus.seed = s;
  train.seed = s;
  vad.seed = s + 1;
  cpd.seed = s + 2;
  cluster.seed = s + 3;
}

training::SystemSpec PipelineConfig::system_spec() const {
  auto spec = training::SystemSpec::from_name(system, profile);
  spec.tdnn_pool.mu = mu;
  spec.hornn_pool.mu = mu;
  if (spec.combiner) spec.combiner->mu = mu;
  spec.validate();
  return spec;
}

void PipelineConfig::validate() const {
  if (!(mu >= 0.0)) throw ConfigError("train.mu must be non-negative");
  corpus.validate();
  train.validate();
  segmenter.validate();
  cluster.validate();
  score.validate();
  if (vad.epochs > 0 && (vad.batch_size == 0 || vad.frames_per_epoch == 0)) {
    throw ConfigError("vad: batch size and frames per epoch must be positive");
  }
  if (cpd.epochs > 0 && (cpd.batch_size < 2 || cpd.samples_per_epoch == 0)) {
    throw ConfigError("cpd: batch size must be at least 2 and samples per epoch positive");
  }
  system_spec();
}

}  // namespace cvec

#include "cvec/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <random>

#include "cvec/error.hpp"
#include "cvec/param_store.hpp"

namespace cvec {

namespace fs = std::filesystem;

void SyntheticCorpusSpec::validate() const {
  if (speakers < 2) throw ConfigError("corpus: at least two speakers required");
  if (eval_recordings + dev_recordings > 0 && (eval_speakers < 2 || eval_speakers > speakers)) {
    throw ConfigError("corpus: eval_speakers must lie in [2, speakers]");
  }
  if (!(min_turn > 0.0 && max_turn >= min_turn)) throw ConfigError("corpus: bad turn length range");
  if (!(min_pause > 0.0 && max_pause >= min_pause)) throw ConfigError("corpus: bad pause range");
  if (!(min_gap > 0.0 && max_gap >= min_gap)) throw ConfigError("corpus: bad gap range");
  if (direct_change < 0.0 || direct_change > 1.0) throw ConfigError("corpus: direct_change must be a probability");
  if (noise_correlation < 0.0 || noise_correlation >= 1.0) throw ConfigError("corpus: noise_correlation in [0,1)");
  if (train_seconds < 2.0 * max_turn || (eval_recordings + dev_recordings > 0 && eval_seconds < 2.0 * max_turn)) {
    throw ConfigError("corpus: recordings must hold at least two turns");
  }
}

std::string speaker_label(std::size_t speaker) { return "spk" + std::to_string(speaker); }

namespace {

using Vec = std::vector<double>;

Vec smooth_random(Rng& rng, double scale) {
  std::normal_distribution<double> n(0.0, 1.0);
  Vec raw(kFeatureDim);
  for (auto& v : raw) v = n(rng);
  Vec out(kFeatureDim);
  for (std::size_t d = 0; d < kFeatureDim; ++d) {
    const std::size_t lo = d == 0 ? 0 : d - 1;
    const std::size_t hi = std::min(kFeatureDim - 1, d + 1);
    double s = 0.0;
    for (std::size_t j = lo; j <= hi; ++j) s += raw[j];
    out[d] = s / static_cast<double>(hi - lo + 1);
  }
  double mean = 0.0, var = 0.0;
  for (double v : out) mean += v;
  mean /= kFeatureDim;
  for (double v : out) var += (v - mean) * (v - mean);
  const double sd = std::sqrt(var / kFeatureDim);
  for (auto& v : out) v = (v - mean) / sd * scale;
  return out;
}

struct Voices {
  Vec base;
  std::vector<Vec> speakers;
  std::vector<Vec> phones;
};

Voices make_voices(const SyntheticCorpusSpec& spec) {
  Rng rng(spec.seed);
  Voices v;
  v.base.resize(kFeatureDim);
  for (std::size_t d = 0; d < kFeatureDim; ++d) v.base[d] = -0.75 * static_cast<double>(d) / kFeatureDim;
  for (std::size_t s = 0; s < spec.speakers; ++s) v.speakers.push_back(smooth_random(rng, spec.template_scale));
  for (std::size_t p = 0; p < 16; ++p) v.phones.push_back(smooth_random(rng, spec.content_scale));
  return v;
}

struct Turn {
  std::size_t begin, end;  // frames
  std::size_t speaker;
};

std::size_t to_frames(double seconds) { return static_cast<std::size_t>(std::llround(seconds * kFramesPerSecond)); }

Recording make_recording(const SyntheticCorpusSpec& spec, const Voices& voices, const std::string& id,
                         double seconds, const std::vector<std::size_t>& cast, Rng& rng) {
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  auto uniform = [&](double lo, double hi) { return lo + (hi - lo) * u01(rng); };

  const std::size_t total = to_frames(seconds);
  const std::size_t tail = to_frames(0.5);
  std::vector<Turn> speech;
  std::size_t t = to_frames(uniform(0.5, 1.5) * spec.lead_silence);
  std::size_t previous = cast.size();
  while (true) {
    const std::size_t len = to_frames(uniform(spec.min_turn, spec.max_turn));
    if (t + len + tail > total) break;
    std::size_t pick = std::uniform_int_distribution<std::size_t>(0, cast.size() - 1)(rng);
    if (pick == previous) pick = (pick + 1 + std::uniform_int_distribution<std::size_t>(0, cast.size() - 2)(rng)) % cast.size();
    previous = pick;
    // Short within-turn gaps split the turn into several speech intervals.
    std::vector<std::size_t> cuts;
    const auto whole_seconds = static_cast<std::size_t>(static_cast<double>(len) / kFramesPerSecond);
    for (std::size_t s = 1; s + 1 < whole_seconds; ++s) {
      if (u01(rng) < spec.gap_rate) cuts.push_back(t + s * 100 + to_frames(uniform(0.0, 0.5)));
    }
    std::size_t begin = t;
    for (std::size_t c : cuts) {
      speech.push_back({begin, c, cast[pick]});
      begin = c + to_frames(uniform(spec.min_gap, spec.max_gap));
    }
    speech.push_back({begin, t + len, cast[pick]});
    t += len;
    if (u01(rng) >= spec.direct_change) t += to_frames(uniform(spec.min_pause, spec.max_pause));
  }

  Recording rec;
  rec.id = id;
  rec.reference.recording = id;
  rec.feats.dim = kFeatureDim;
  rec.feats.data.assign(total * kFeatureDim, 0.0);
  std::normal_distribution<double> n01(0.0, 1.0);

  // Non-speech everywhere first, then speech overwrites its intervals.
  for (std::size_t f = 0; f < total; ++f) {
    for (std::size_t d = 0; d < kFeatureDim; ++d) {
      rec.feats.data[f * kFeatureDim + d] =
          spec.silence_level + 0.2 * voices.base[d] + spec.silence_noise * n01(rng);
    }
  }
  const double rho = spec.noise_correlation;
  const double innovation = std::sqrt(1.0 - rho * rho) * spec.noise_scale;
  Vec noise(kFeatureDim, 0.0);
  for (const auto& turn : speech) {
    rec.reference.add(frame_to_seconds(turn.begin), frame_to_seconds(turn.end), speaker_label(turn.speaker));
    const double loudness = 0.3 * n01(rng);
    for (auto& v : noise) v = spec.noise_scale * n01(rng);
    std::size_t phone = 0, phone_left = 0;
    for (std::size_t f = turn.begin; f < turn.end; ++f) {
      if (phone_left == 0) {
        phone = std::uniform_int_distribution<std::size_t>(0, voices.phones.size() - 1)(rng);
        phone_left = std::uniform_int_distribution<std::size_t>(5, 15)(rng);
      }
      --phone_left;
      for (std::size_t d = 0; d < kFeatureDim; ++d) {
        noise[d] = rho * noise[d] + innovation * n01(rng);
        rec.feats.data[f * kFeatureDim + d] = spec.speech_level + loudness + voices.base[d] +
                                              voices.speakers[turn.speaker][d] + voices.phones[phone][d] +
                                              noise[d];
      }
    }
  }
  return rec;
}

std::string recording_id(const char* split, std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%s%03zu", split, i);
  return buf;
}

}  // namespace

Corpus generate_synthetic_corpus(const SyntheticCorpusSpec& spec) {
  spec.validate();
  const Voices voices = make_voices(spec);
  Corpus corpus;
  std::vector<std::size_t> everyone(spec.speakers);
  for (std::size_t s = 0; s < spec.speakers; ++s) everyone[s] = s;
  for (std::size_t i = 0; i < spec.train_recordings; ++i) {
    std::seed_seq seq{spec.seed, std::uint64_t{1}, static_cast<std::uint64_t>(i)};
    Rng rng(seq);
    corpus.train.push_back(make_recording(spec, voices, recording_id("train", i), spec.train_seconds, everyone, rng));
  }
  auto held_out = [&](const char* split, std::uint64_t stream, std::size_t count, std::vector<Recording>& out) {
    for (std::size_t i = 0; i < count; ++i) {
      std::seed_seq seq{spec.seed, stream, static_cast<std::uint64_t>(i)};
      Rng rng(seq);
      std::vector<std::size_t> cast = everyone;
      std::shuffle(cast.begin(), cast.end(), rng);
      cast.resize(spec.eval_speakers);
      std::sort(cast.begin(), cast.end());
      out.push_back(make_recording(spec, voices, recording_id(split, i), spec.eval_seconds, cast, rng));
    }
  };
  held_out("eval", 2, spec.eval_recordings, corpus.eval);
  held_out("dev", 3, spec.dev_recordings, corpus.dev);
  return corpus;
}

void write_corpus(const std::string& dir, const Corpus& corpus) {
  auto write_split = [&](const std::string& split, const std::vector<Recording>& recs) {
    for (const auto& rec : recs) {
      const fs::path path = fs::path(dir) / split / rec.id;
      std::error_code ec;
      fs::create_directories(path, ec);
      if (ec) throw IoError("cannot create " + path.string() + ": " + ec.message());
      write_feats((path / "feats.f64").string(), rec.feats);
      write_rttm_file((path / "ref.rttm").string(), rec.reference);
    }
  };
  write_split("train", corpus.train);
  write_split("dev", corpus.dev);
  write_split("eval", corpus.eval);
}

std::vector<Recording> read_corpus_split(const std::string& dir, const std::string& split) {
  const fs::path root = fs::path(dir) / split;
  if (!fs::is_directory(root)) throw IoError("corpus split not found: " + root.string());
  std::vector<fs::path> dirs;
  for (const auto& entry : fs::directory_iterator(root)) {
    if (entry.is_directory()) dirs.push_back(entry.path());
  }
  std::sort(dirs.begin(), dirs.end());
  std::vector<Recording> out;
  for (const auto& path : dirs) {
    Recording rec;
    rec.id = path.filename().string();
    rec.feats = read_feats((path / "feats.f64").string());
    const fs::path ref = path / "ref.rttm";
    if (fs::exists(ref)) {
      auto parsed = read_rttm_file(ref.string());
      auto it = parsed.find(rec.id);
      if (it != parsed.end()) rec.reference = it->second;
    }
    rec.reference.recording = rec.id;
    out.push_back(std::move(rec));
  }
  return out;
}

}  // namespace cvec

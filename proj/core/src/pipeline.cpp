#include "cvec/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <thread>

#include "cvec/corpus.hpp"
#include "cvec/error.hpp"
#include "cvec/segmentation.hpp"

namespace cvec::pipeline {

namespace fs = std::filesystem;

int report_error(const std::exception& e, std::ostream& err) {
  err << "error: " << e.what() << "\n";
  if (dynamic_cast<const ModelError*>(&e) != nullptr) return kModelError;
  if (dynamic_cast<const IoError*>(&e) != nullptr || dynamic_cast<const ConfigError*>(&e) != nullptr) {
    return kInputError;
  }
  return kFailure;
}

// ---------------------------------------------------------------- model files

namespace {

const char* profile_name(nets::Profile p) { return p == nets::Profile::Tiny ? "tiny" : "standard"; }

std::string manifest_text(const Model& m) {
  std::ostringstream out;
  out << "system=" << m.spec.name << "\n";
  out << "profile=" << profile_name(m.spec.profile) << "\n";
  out << "classes=";
  for (std::size_t i = 0; i < m.classes.size(); ++i) out << (i ? "," : "") << m.classes[i];
  out << "\n";
  return out.str();
}

std::map<std::string, std::string> read_manifest(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ModelError("model manifest not found: " + path.string());
  std::map<std::string, std::string> kv;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ModelError(path.string() + ": malformed line '" + line + "'");
    kv[line.substr(0, eq)] = line.substr(eq + 1);
  }
  for (const char* key : {"system", "profile", "classes"}) {
    if (!kv.count(key)) throw ModelError(path.string() + ": missing '" + key + "'");
  }
  return kv;
}

std::vector<std::string> split_commas(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

ParamStore load_params(const fs::path& path) {
  if (!fs::exists(path)) throw ModelError("model file not found: " + path.string());
  try {
    return ParamStore::load(path.string());
  } catch (const IoError& e) {
    throw ModelError(path.string() + ": " + e.what());
  }
}

/// Requires `actual` to hold exactly the parameters and shapes of `expected`.
void check_inventory(const ParamStore& expected, const ParamStore& actual, const std::string& what) {
  if (expected.names() != actual.names()) throw ModelError(what + ": parameter names do not match the configuration");
  for (const auto& [name, t] : expected) {
    if (t.shape() != actual.get(name).shape()) {
      throw ModelError(what + ": shape of '" + name + "' is " + shape_string(actual.get(name).shape()) +
                       ", expected " + shape_string(t.shape()));
    }
  }
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
  if (!out) throw IoError("cannot write " + path.string());
}

}  // namespace

Model train_model(const PipelineConfig& cfg, std::ostream& log) {
  const auto corpus = read_corpus_split(cfg.corpus_dir, "train");
  if (corpus.empty()) throw IoError("no training recordings under " + cfg.corpus_dir);

  Model m;
  m.spec = cfg.system_spec();
  m.vad_cfg = cfg.vad_config();
  m.cpd_cfg = cfg.cpd_config();

  log << "training VAD on " << corpus.size() << " recordings\n";
  auto vad = training::train_vad(corpus, m.vad_cfg, cfg.vad);
  m.vad = std::move(vad.params);
  log << "training CPD\n";
  auto cpd = training::train_cpd(corpus, m.cpd_cfg, cfg.cpd);
  m.cpd = std::move(cpd.params);
  log << "training " << m.spec.name << "\n";
  auto emb = training::train_system(m.spec, corpus, cfg.train);
  m.embed = std::move(emb.params);
  m.classes = std::move(emb.classes);

  std::ostringstream metrics;
  metrics << std::setprecision(6) << std::fixed;
  metrics << "stage\tepoch\tloss\theldout_accuracy\n";
  for (std::size_t e = 0; e < vad.epoch_loss.size(); ++e) {
    metrics << "vad\t" << e + 1 << "\t" << vad.epoch_loss[e] << "\t-\n";
  }
  for (std::size_t e = 0; e < cpd.epoch_loss.size(); ++e) {
    metrics << "cpd\t" << e + 1 << "\t" << cpd.epoch_loss[e] << "\t-\n";
  }
  for (std::size_t e = 0; e < emb.epochs.size(); ++e) {
    metrics << "embed\t" << e << "\t" << emb.epochs[e].loss << "\t" << emb.epochs[e].heldout_accuracy << "\n";
    log << "  epoch " << e << " held-out accuracy " << emb.epochs[e].heldout_accuracy << "\n";
  }
  save_model(cfg.model_dir, m, metrics.str());
  return m;
}

void save_model(const std::string& dir, const Model& model, const std::string& metrics) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir + ": " + ec.message());
  const fs::path root(dir);
  model.vad.save((root / kVadFile).string());
  model.cpd.save((root / kCpdFile).string());
  model.embed.save((root / kEmbedFile).string());
  write_text(root / kManifestFile, manifest_text(model));
  write_text(root / kMetricsFile, metrics);
}

Model load_model(const std::string& dir, const PipelineConfig& cfg) {
  const fs::path root(dir);
  if (!fs::is_directory(root)) throw ModelError("model directory not found: " + dir + " (run train first)");
  const auto kv = read_manifest(root / kManifestFile);
  if (kv.at("system") != cfg.system || kv.at("profile") != profile_name(cfg.profile)) {
    throw ModelError("model was trained as " + kv.at("system") + "/" + kv.at("profile") + " but the config selects " +
                     cfg.system + "/" + profile_name(cfg.profile));
  }
  Model m;
  m.spec = cfg.system_spec();
  m.vad_cfg = cfg.vad_config();
  m.cpd_cfg = cfg.cpd_config();
  m.classes = split_commas(kv.at("classes"));
  if (m.classes.size() < 2) throw ModelError("model manifest lists fewer than two classes");
  m.vad = load_params(root / kVadFile);
  m.cpd = load_params(root / kCpdFile);
  m.embed = load_params(root / kEmbedFile);

  Rng rng(0);
  ParamStore vad, cpd, embed;
  nets::init_vad(vad, m.vad_cfg, rng);
  nets::init_cpd(cpd, m.cpd_cfg, rng);
  training::init_system(embed, m.spec, rng);
  embed.add_zeros("cls.W", {m.classes.size(), m.spec.embedding_dim});
  check_inventory(vad, m.vad, kVadFile);
  check_inventory(cpd, m.cpd, kCpdFile);
  check_inventory(embed, m.embed, kEmbedFile);
  return m;
}

// ---------------------------------------------------------------- diarization

std::uint64_t recording_seed(std::uint64_t seed, const std::string& recording) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : recording) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h ^ (seed * 0x9E3779B97F4A7C15ULL);
}

Hypothesis diarize_recording(const std::string& recording, const FeatureSequence& feats, const Model& model,
                             const PipelineConfig& cfg) {
  Hypothesis hyp;
  hyp.timeline.recording = recording;
  hyp.segments.recording = recording;
  if (feats.frames() == 0) return hyp;

  const Timeline speech = segmentation::vad_segment(feats, model.vad_cfg, model.vad, cfg.segmenter, recording);
  hyp.segments = cfg.segmentation == SegmentationMode::Cpd
                     ? segmentation::cpd_segment(feats, speech, model.cpd_cfg, model.cpd, cfg.segmenter)
                     : speech;
  hyp.segments.recording = recording;
  if (hyp.segments.empty()) return hyp;

  std::vector<training::Window> windows;
  std::vector<std::size_t> owner;
  for (std::size_t i = 0; i < hyp.segments.size(); ++i) {
    Timeline one;
    one.recording = recording;
    one.segments.push_back(hyp.segments.segments[i]);
    for (auto& w : training::make_windows(feats, one, cfg.train)) {
      windows.push_back(std::move(w));
      owner.push_back(i);
    }
  }
  hyp.embeddings = training::embed_windows(model.spec, windows, model.embed);

  clustering::ClusterConfig cc = cfg.cluster;
  cc.seed = recording_seed(cfg.cluster.seed, recording);
  const auto clusters = clustering::cluster_embeddings(hyp.embeddings, cc);

  if (cfg.segmentation == SegmentationMode::Cpd) {
    hyp.timeline = clustering::assign_segments(hyp.segments, owner, hyp.embeddings, clusters.centroids);
  } else {
    std::vector<clustering::WindowSpan> spans;
    spans.reserve(windows.size());
    for (const auto& w : windows) spans.push_back({w.begin, w.end});
    hyp.timeline = clustering::window_timeline(recording, spans, clusters.labels);
  }
  hyp.timeline.recording = recording;
  return hyp;
}

std::map<std::string, Hypothesis> diarize_all(const std::map<std::string, FeatureSequence>& recordings,
                                              const Model& model, const PipelineConfig& cfg, std::size_t jobs) {
  std::vector<const std::pair<const std::string, FeatureSequence>*> items;
  for (const auto& kv : recordings) items.push_back(&kv);
  std::vector<Hypothesis> results(items.size());
  std::vector<std::exception_ptr> errors(items.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < items.size(); i = next++) {
      try {
        results[i] = diarize_recording(items[i]->first, items[i]->second, model, cfg);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const std::size_t n = std::clamp<std::size_t>(jobs, 1, std::max<std::size_t>(items.size(), 1));
  std::vector<std::thread> pool;
  for (std::size_t t = 1; t < n; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  std::map<std::string, Hypothesis> out;
  for (std::size_t i = 0; i < items.size(); ++i) out.emplace(items[i]->first, std::move(results[i]));
  return out;
}

std::map<std::string, Timeline> read_rttm_path(const std::string& path) {
  const fs::path root(path);
  if (!fs::exists(root)) throw IoError("not found: " + path);
  std::vector<fs::path> files;
  if (fs::is_directory(root)) {
    for (const auto& entry : fs::recursive_directory_iterator(root)) {
      if (entry.is_regular_file() && entry.path().extension() == ".rttm") files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());
  } else {
    files.push_back(root);
  }
  std::map<std::string, Timeline> out;
  for (const auto& f : files) {
    for (auto& [rec, tl] : read_rttm_file(f.string())) {
      auto& dst = out[rec];
      dst.recording = rec;
      for (auto& s : tl.segments) dst.segments.push_back(std::move(s));
    }
  }
  for (auto& [rec, tl] : out) tl.sort();
  return out;
}

// ---------------------------------------------------------------- subcommands

int cmd_synth(const PipelineConfig& cfg, std::ostream& out, std::ostream& err) {
  try {
    const Corpus corpus = generate_synthetic_corpus(cfg.corpus);
    write_corpus(cfg.corpus_dir, corpus);
    out << "wrote " << corpus.train.size() << " training, " << corpus.dev.size() << " dev and " << corpus.eval.size()
        << " evaluation recordings to " << cfg.corpus_dir << "\n";
    return kOk;
  } catch (const std::exception& e) {
    return report_error(e, err);
  }
}

int cmd_train(const PipelineConfig& cfg, std::ostream& out, std::ostream& err) {
  try {
    if (!fs::is_directory(cfg.corpus_dir)) throw IoError("corpus directory not found: " + cfg.corpus_dir);
    const Model m = train_model(cfg, out);
    out << "model written to " << cfg.model_dir << " (" << m.embed.parameter_count() << " embedding parameters)\n";
    return kOk;
  } catch (const std::exception& e) {
    return report_error(e, err);
  }
}

int cmd_diarize(const PipelineConfig& cfg, const std::string& split, const std::vector<std::string>& recordings,
                std::size_t jobs, std::ostream& out, std::ostream& err) {
  try {
    const Model model = load_model(cfg.model_dir, cfg);
    const fs::path root = fs::path(cfg.corpus_dir) / split;
    if (!fs::is_directory(root)) throw IoError("corpus split not found: " + root.string());

    std::vector<std::string> ids = recordings;
    if (ids.empty()) {
      for (const auto& entry : fs::directory_iterator(root)) {
        if (entry.is_directory()) ids.push_back(entry.path().filename().string());
      }
    }
    std::map<std::string, FeatureSequence> feats;
    for (const auto& id : ids) {
      const fs::path f = root / id / "feats.f64";
      if (!fs::exists(f)) throw IoError("recording not found: " + f.string());
      feats.emplace(id, read_feats(f.string()));
    }

    const auto hyps = diarize_all(feats, model, cfg, jobs);

    std::error_code ec;
    fs::create_directories(cfg.output_dir, ec);
    if (ec) throw IoError("cannot create " + cfg.output_dir + ": " + ec.message());
    for (const auto& [id, h] : hyps) {
      write_rttm_file((fs::path(cfg.output_dir) / (id + ".rttm")).string(), h.timeline);
      out << id << ": " << h.segments.size() << " segments, " << h.timeline.labels().size() << " speakers\n";
    }
    return kOk;
  } catch (const std::exception& e) {
    return report_error(e, err);
  }
}

int cmd_score(const std::string& reference, const std::string& hypothesis, const scoring::ScoreConfig& cfg,
              std::ostream& out, std::ostream& err) {
  try {
    cfg.validate();
    const auto ref = read_rttm_path(reference);
    const auto hyp = read_rttm_path(hypothesis);
    out << scoring::format_report(scoring::score_corpus(ref, hyp, cfg));
    return kOk;
  } catch (const std::exception& e) {
    return report_error(e, err);
  }
}

}  // namespace cvec::pipeline

#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "cvec/clustering.hpp"
#include "cvec/config.hpp"
#include "cvec/features.hpp"
#include "cvec/param_store.hpp"
#include "cvec/scoring.hpp"
#include "cvec/timeline.hpp"
#include "cvec/training.hpp"

namespace cvec::pipeline {

enum ExitCode : int { kOk = 0, kFailure = 1, kInputError = 2, kModelError = 3, kSelftestFailure = 4 };

/// Maps an exception to the exit-code contract and prints it to `err`.
int report_error(const std::exception& e, std::ostream& err);

/// Model directory contents.
inline constexpr const char* kVadFile = "vad.params";
inline constexpr const char* kCpdFile = "cpd.params";
inline constexpr const char* kEmbedFile = "embed.params";
inline constexpr const char* kManifestFile = "manifest.txt";
inline constexpr const char* kMetricsFile = "metrics.tsv";

struct Model {
  training::SystemSpec spec;
  nets::VadConfig vad_cfg;
  nets::CpdConfig cpd_cfg;
  std::vector<std::string> classes;
  ParamStore vad;
  ParamStore cpd;
  ParamStore embed;
};

/// Trains VAD, CPD and the configured embedding system on the training split.
Model train_model(const PipelineConfig& cfg, std::ostream& log);
void save_model(const std::string& dir, const Model& model, const std::string& metrics);
/// Throws ModelError when files are missing, corrupted, or do not match the
/// configured system and profile.
Model load_model(const std::string& dir, const PipelineConfig& cfg);

/// Diarization output of one recording.
struct Hypothesis {
  Timeline timeline;
  /// Window embeddings that fed the clustering.
  std::vector<clustering::Embedding> embeddings;
  /// Speaker-homogeneous segments before labeling.
  Timeline segments;
};

/// Seed for one recording, independent of processing order.
std::uint64_t recording_seed(std::uint64_t seed, const std::string& recording);

/// VAD, optional CPD, windowed embeddings, spectral clustering, assignment.
Hypothesis diarize_recording(const std::string& recording, const FeatureSequence& feats, const Model& model,
                             const PipelineConfig& cfg);

/// Hypotheses for several recordings on `jobs` threads; the result does not
/// depend on `jobs`.
std::map<std::string, Hypothesis> diarize_all(const std::map<std::string, FeatureSequence>& recordings,
                                              const Model& model, const PipelineConfig& cfg, std::size_t jobs);

/// Reads every *.rttm under a file or directory path.
std::map<std::string, Timeline> read_rttm_path(const std::string& path);

// ---------------------------------------------------------------- subcommands

/// Writes the synthetic corpus to cfg.corpus_dir.
int cmd_synth(const PipelineConfig& cfg, std::ostream& out, std::ostream& err);
/// Trains every model and writes it, with metrics.tsv, to cfg.model_dir.
int cmd_train(const PipelineConfig& cfg, std::ostream& out, std::ostream& err);
/// Diarizes the named recordings of a corpus split (all when empty) into
/// `<output>/<rec>.rttm`.
int cmd_diarize(const PipelineConfig& cfg, const std::string& split, const std::vector<std::string>& recordings,
                std::size_t jobs, std::ostream& out, std::ostream& err);
/// Scores hypothesis RTTM against reference RTTM (files or directories).
int cmd_score(const std::string& reference, const std::string& hypothesis, const scoring::ScoreConfig& cfg,
              std::ostream& out, std::ostream& err);

}  // namespace cvec::pipeline

// cvec: train, diarize and score with combined speaker embeddings.

#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "cvec/checks/suite.hpp"
#include "cvec/config.hpp"
#include "cvec/error.hpp"
#include "cvec/pipeline.hpp"

namespace {

using cvec::PipelineConfig;
namespace pl = cvec::pipeline;

struct Overrides {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> corpus, model, output, system, profile, segmentation;
  std::optional<std::size_t> epochs;
};

void add_common(CLI::App* cmd, Overrides& o) {
  cmd->add_option("-c,--config", o.config, "Pipeline config file (TOML subset)");
  cmd->add_option("--seed", o.seed, "Global seed (overrides CVEC_SEED and the config)");
  cmd->add_option("--corpus", o.corpus, "Corpus directory");
  cmd->add_option("--model", o.model, "Model directory");
  cmd->add_option("--system", o.system, "TDNN, HORNN or a combiner name");
  cmd->add_option("--profile", o.profile, "standard or tiny");
}

PipelineConfig resolve(const Overrides& o) {
  PipelineConfig cfg = o.config.empty() ? PipelineConfig{} : PipelineConfig::load(o.config);
  if (const char* env = std::getenv("CVEC_SEED"); env != nullptr && *env != '\0') {
    try {
      std::size_t used = 0;
      const auto v = std::stoull(env, &used);
      if (used != std::string(env).size()) throw std::invalid_argument(env);
      cfg.set_seed(v);
    } catch (const std::exception&) {
      throw cvec::ConfigError(std::string("CVEC_SEED is not an unsigned integer: ") + env);
    }
  }
  if (o.seed) cfg.set_seed(*o.seed);
  if (o.corpus) cfg.corpus_dir = *o.corpus;
  if (o.model) cfg.model_dir = *o.model;
  if (o.output) cfg.output_dir = *o.output;
  if (o.system) cfg.system = *o.system;
  if (o.profile) cfg.profile = cvec::nets::parse_profile(*o.profile);
  if (o.segmentation) {
    if (*o.segmentation == "cpd") cfg.segmentation = cvec::SegmentationMode::Cpd;
    else if (*o.segmentation == "window") cfg.segmentation = cvec::SegmentationMode::Window;
    else throw cvec::ConfigError("--segmentation must be cpd or window");
  }
  if (o.epochs) cfg.train.epochs = cfg.vad.epochs = cfg.cpd.epochs = *o.epochs;
  cfg.validate();
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Speaker diarization with combined deep speaker embeddings"};
  app.require_subcommand(1);

  Overrides o;
  auto* synth = app.add_subcommand("synth", "Write the synthetic corpus");
  add_common(synth, o);

  auto* train = app.add_subcommand("train", "Train VAD, CPD and the embedding system");
  add_common(train, o);
  train->add_option("--epochs", o.epochs, "Epochs for every model (0 writes the initialization)");

  std::vector<std::string> recordings;
  std::size_t jobs = 1;
  std::string split = "eval";
  auto* diarize = app.add_subcommand("diarize", "Diarize evaluation recordings");
  add_common(diarize, o);
  diarize->add_option("recordings", recordings, "Recording ids (default: every evaluation recording)");
  diarize->add_option("--split", split, "Corpus split to diarize (eval or dev)");
  diarize->add_option("-o,--output", o.output, "Output directory for RTTM files");
  diarize->add_option("--segmentation", o.segmentation, "cpd or window");
  diarize->add_option("-j,--jobs", jobs, "Recordings processed in parallel")->check(CLI::PositiveNumber);

  std::string ref, hyp;
  cvec::scoring::ScoreConfig score_cfg;
  auto* score = app.add_subcommand("score", "Score hypothesis RTTM against a reference");
  score->add_option("reference", ref, "Reference RTTM file or directory")->required();
  score->add_option("hypothesis", hyp, "Hypothesis RTTM file or directory")->required();
  score->add_option("--collar", score_cfg.collar, "No-score collar in seconds");
  score->add_flag("--score-overlap", score_cfg.score_overlap, "Score overlapping reference speech");

  auto* selftest = app.add_subcommand("selftest", "Run the oracle suite");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : pl::kInputError;
  }

  if (*selftest) return cvec::checks::cmd_selftest(std::cout, std::cerr);
  if (*score) return pl::cmd_score(ref, hyp, score_cfg, std::cout, std::cerr);

  PipelineConfig cfg;
  try {
    cfg = resolve(o);
  } catch (const std::exception& e) {
    return pl::report_error(e, std::cerr);
  }
  if (*synth) return pl::cmd_synth(cfg, std::cout, std::cerr);
  if (*train) return pl::cmd_train(cfg, std::cout, std::cerr);
  return pl::cmd_diarize(cfg, split, recordings, jobs, std::cout, std::cerr);
}

#include <gtest/gtest.h>

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "cvec/checks/suite.hpp"
#include "cvec/config.hpp"
#include "cvec/error.hpp"
#include "cvec/pipeline.hpp"
#include "test_util.hpp"

namespace cvec {
namespace {

namespace fs = std::filesystem;
using test::TempDir;

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

void write_file(const std::string& path, const std::string& text) {
  fs::create_directories(fs::path(path).parent_path());
  std::ofstream(path, std::ios::binary) << text;
}

std::string error_message(const std::function<void()>& f) {
  try {
    f();
  } catch (const std::exception& e) {
    return e.what();
  }
  return "";
}

/// Small corpus and one-epoch models: a full train takes a few seconds.
std::string mini_config(const TempDir& dir, std::uint64_t seed = 3) {
  return "seed = " + std::to_string(seed) +
         "\n"
         "profile = \"tiny\"\nsystem = \"Stacked_sigmoid\"\nsegmentation = \"cpd\"\n"
         "[paths]\ncorpus = \"" + dir.str("corpus") + "\"\nmodel = \"" + dir.str("model") + "\"\noutput = \"" +
         dir.str("hyp") +
         "\"\n"
         "[corpus]\nspeakers = 3\ntrain_recordings = 2\ntrain_seconds = 30.0\neval_recordings = 2\n"
         "eval_seconds = 20.0\neval_speakers = 2\ndev_recordings = 0\n"
         "[train]\nepochs = 1\n[vad]\nepochs = 1\nframes_per_epoch = 600\n"
         "[cpd]\nepochs = 1\nsamples_per_epoch = 200\n";
}

PipelineConfig mini_pipeline(const TempDir& dir, std::uint64_t seed = 3) {
  return PipelineConfig::from_table(parse_config(mini_config(dir, seed)));
}

/// Synthesizes the corpus and trains the model in `dir`.
PipelineConfig trained(const TempDir& dir, std::uint64_t seed = 3) {
  auto cfg = mini_pipeline(dir, seed);
  std::ostringstream out, err;
  EXPECT_EQ(pipeline::cmd_synth(cfg, out, err), 0) << err.str();
  EXPECT_EQ(pipeline::cmd_train(cfg, out, err), 0) << err.str();
  return cfg;
}

// ---- config format

TEST(Config, ParsesScalarsSectionsAndComments) {
  const auto t = parse_config(
      "# top\nseed = 7\nname = \"a # b\"  # trailing\n\n[train]\nlearning_rate = 0.5\nflag = true\nn = -3\n");
  EXPECT_EQ(t.at("seed").as_int("seed"), 7);
  EXPECT_EQ(t.at("name").as_string("name"), "a # b");
  EXPECT_EQ(t.at("train.learning_rate").as_double("x"), 0.5);
  EXPECT_EQ(t.at("train.flag").as_bool("x"), true);
  EXPECT_EQ(t.at("train.n").as_int("x"), -3);
  EXPECT_EQ(t.at("seed").as_double("seed"), 7.0);
  EXPECT_EQ(t.at("train.flag").line, 7u);
}

TEST(Config, DuplicateKeyNamesLine) {
  const auto msg = error_message([] { parse_config("[a]\nx = 1\nx = 2\n", "dup.toml"); });
  EXPECT_NE(msg.find("dup.toml"), std::string::npos);
  EXPECT_NE(msg.find("3"), std::string::npos);
  EXPECT_THROW(parse_config("[a]\nx = 1\nx = 2\n"), ConfigError);
}

TEST(Config, BadSyntaxRejectedWithLine) {
  EXPECT_THROW(parse_config("x = \n"), ConfigError);
  EXPECT_THROW(parse_config("x 1\n"), ConfigError);
  EXPECT_THROW(parse_config("[open\n"), ConfigError);
  EXPECT_THROW(parse_config("x = \"unterminated\n"), ConfigError);
  EXPECT_NE(error_message([] { parse_config("a = 1\nb = 2\nc = ?\n", "f"); }).find("3"), std::string::npos);
}

TEST(Config, UnknownKeyRejected) {
  const auto msg = error_message([] { PipelineConfig::from_table(parse_config("[train]\nepohcs = 3\n")); });
  EXPECT_NE(msg.find("train.epohcs"), std::string::npos);
  EXPECT_THROW(PipelineConfig::from_table(parse_config("[train]\nepohcs = 3\n")), ConfigError);
  EXPECT_THROW(PipelineConfig::from_table(parse_config("[train]\nepochs = \"three\"\n")), ConfigError);
}

TEST(Config, SeedReachesEveryModule) {
  auto cfg = PipelineConfig::from_table(parse_config("seed = 11\n"));
  EXPECT_EQ(cfg.seed, 11u);
  EXPECT_EQ(cfg.corpus.seed, 11u);
  EXPECT_EQ(cfg.train.seed, 11u);
  cfg.set_seed(5);
  EXPECT_EQ(cfg.train.seed, 5u);
  EXPECT_EQ(cfg.corpus.seed, 5u);
  EXPECT_NE(cfg.vad.seed, 11u);
  EXPECT_NE(cfg.cpd.seed, 11u);
  EXPECT_NE(cfg.cluster.seed, 11u);
}

TEST(Config, ShippedDeskConfigLoads) {
  const auto cfg = PipelineConfig::load(std::string(CVEC_SOURCE_DIR) + "/configs/tiny.toml");
  EXPECT_EQ(cfg.system, "Stacked_sigmoid");
  EXPECT_EQ(cfg.profile, nets::Profile::Tiny);
  EXPECT_EQ(cfg.segmentation, SegmentationMode::Cpd);
  EXPECT_NO_THROW(cfg.validate());
  EXPECT_THROW(PipelineConfig::load("/nonexistent/cvec.toml"), IoError);
}

// ---- file formats

TEST(Rttm, RoundTrip) {
  Timeline t;
  t.recording = "rec1";
  t.add(0.5, 1.25, "spk0");
  t.add(1.25, 3.007, "spk1");
  std::stringstream s;
  write_rttm(s, t);
  EXPECT_NE(s.str().find("SPEAKER rec1 1 1.250 1.757 <NA> <NA> spk1 <NA> <NA>"), std::string::npos);
  const auto back = parse_rttm(s, "mem");
  ASSERT_EQ(back.count("rec1"), 1u);
  EXPECT_EQ(back.at("rec1"), t);
}

TEST(Rttm, CommentsAndOtherRecordTypesSkipped) {
  std::stringstream s(";; header\n# note\n\nSPKR-INFO r 1 <NA> <NA> <NA> unknown a <NA> <NA>\n"
                      "SPEAKER r 1 0.000 1.000 <NA> <NA> a <NA> <NA>\n");
  const auto t = parse_rttm(s, "mem");
  EXPECT_EQ(t.at("r").size(), 1u);
}

TEST(Rttm, MalformedLineNamesLineNumber) {
  std::stringstream s("SPEAKER r 1 0.000 1.000 <NA> <NA> a <NA> <NA>\nSPEAKER r 1 zero 1.0 <NA> <NA> a\n");
  const auto msg = error_message([&] { parse_rttm(s, "bad.rttm"); });
  EXPECT_NE(msg.find("bad.rttm"), std::string::npos);
  EXPECT_NE(msg.find("2"), std::string::npos);
  std::stringstream neg("SPEAKER r 1 1.000 -1.0 <NA> <NA> a <NA> <NA>\n");
  EXPECT_THROW(parse_rttm(neg, "x"), IoError);
}

TEST(ParamArchive, RoundTripAndCorruption) {
  Rng rng(1);
  ParamStore p;
  p.add_glorot("a.W", 3, 4, rng);
  p.add("b", {2}, {1.5, -2.0});
  const auto bytes = p.serialize();
  const auto q = ParamStore::deserialize(bytes);
  EXPECT_EQ(q.serialize(), bytes);
  EXPECT_EQ(q.get("a.W").shape(), (Shape{3, 4}));
  auto bad = bytes;
  bad[bad.size() / 2] ^= 0x10;
  EXPECT_THROW(ParamStore::deserialize(bad), IoError);
  EXPECT_THROW(ParamStore::deserialize(bytes.substr(0, 10)), IoError);
}

TEST(Features, FileRoundTrip) {
  TempDir dir("feats");
  Rng rng(2);
  FeatureSequence f;
  f.data = test::normal_values(7 * kFeatureDim, rng);
  write_feats(dir.str("x.f64"), f);
  const auto g = read_feats(dir.str("x.f64"));
  EXPECT_EQ(g.dim, kFeatureDim);
  EXPECT_EQ(g.data, f.data);
  write_file(dir.str("junk.f64"), "not a feature file");
  EXPECT_THROW(read_feats(dir.str("junk.f64")), IoError);
}

// ---- subcommands in process

TEST(Train, SameSeedGivesIdenticalParamFiles) {
  TempDir a("train_a"), b("train_b");
  trained(a, 7);
  trained(b, 7);
  for (const char* f : {pipeline::kVadFile, pipeline::kCpdFile, pipeline::kEmbedFile}) {
    const auto x = read_file(a.str(std::string("model/") + f));
    EXPECT_FALSE(x.empty());
    EXPECT_EQ(x, read_file(b.str(std::string("model/") + f))) << f;
  }
}

TEST(Train, StackedInventoryCoversBothSystemsAndBothStages) {
  TempDir dir("inventory");
  const auto cfg = trained(dir);
  const auto m = pipeline::load_model(cfg.model_dir, cfg);
  for (const char* prefix : {"tdnn.", "hornn.", "pool.tdnn.", "pool.hornn.", "comb.sa.", "comb.bl.", "proj."}) {
    EXPECT_GT(m.embed.parameter_count(prefix), 0u) << prefix;
  }
  EXPECT_TRUE(m.embed.contains("comb.bl.U1"));
  EXPECT_TRUE(m.embed.contains("comb.sa.att.W1"));
  EXPECT_GT(m.vad.parameter_count(), 0u);
  EXPECT_GT(m.cpd.parameter_count(), 0u);
}

TEST(Train, ZeroEpochsWritesInitialization) {
  TempDir dir("init");
  auto cfg = mini_pipeline(dir);
  cfg.train.epochs = cfg.vad.epochs = cfg.cpd.epochs = 0;
  std::ostringstream out, err;
  ASSERT_EQ(pipeline::cmd_synth(cfg, out, err), 0);
  ASSERT_EQ(pipeline::cmd_train(cfg, out, err), 0) << err.str();
  const auto metrics = read_file(dir.str(std::string("model/") + pipeline::kMetricsFile));
  EXPECT_NE(metrics.find("embed\t0\t"), std::string::npos);
  EXPECT_EQ(metrics.find("embed\t1\t"), std::string::npos);
  EXPECT_EQ(metrics.find("vad\t"), std::string::npos);

  const auto m = pipeline::load_model(cfg.model_dir, cfg);
  ParamStore vad;
  Rng rng(cfg.vad.seed);
  nets::init_vad(vad, cfg.vad_config(), rng);
  EXPECT_EQ(vad.serialize(), m.vad.serialize());
}

TEST(Diarize, DeterministicAcrossJobsAndRoundTripsThroughRttm) {
  TempDir dir("diarize");
  const auto cfg = trained(dir);
  const auto model = pipeline::load_model(cfg.model_dir, cfg);
  std::map<std::string, FeatureSequence> feats;
  for (const auto& rec : read_corpus_split(cfg.corpus_dir, "eval")) feats.emplace(rec.id, rec.feats);
  ASSERT_EQ(feats.size(), 2u);
  const auto one = pipeline::diarize_all(feats, model, cfg, 1);
  const auto three = pipeline::diarize_all(feats, model, cfg, 3);
  for (const auto& [id, h] : one) EXPECT_EQ(h.timeline, three.at(id).timeline);

  std::ostringstream out, err;
  ASSERT_EQ(pipeline::cmd_diarize(cfg, "eval", {}, 2, out, err), 0) << err.str();
  for (const auto& [id, h] : one) {
    const auto parsed = read_rttm_file(dir.str("hyp/" + id + ".rttm"));
    ASSERT_EQ(parsed.count(id), 1u);
    EXPECT_EQ(parsed.at(id), h.timeline) << id;
  }
}

TEST(Diarize, WindowModeNeverTouchesCpd) {
  TempDir dir("window");
  auto cfg = trained(dir);
  auto model = pipeline::load_model(cfg.model_dir, cfg);
  model.cpd = ParamStore{};
  const auto rec = read_corpus_split(cfg.corpus_dir, "eval").front();
  EXPECT_THROW(pipeline::diarize_recording(rec.id, rec.feats, model, cfg), ModelError);
  cfg.segmentation = SegmentationMode::Window;
  const auto h = pipeline::diarize_recording(rec.id, rec.feats, model, cfg);
  EXPECT_FALSE(h.timeline.empty());
  h.timeline.validate(true);
}

TEST(Diarize, EmptyRecordingGivesEmptyRttm) {
  TempDir dir("empty");
  const auto cfg = trained(dir);
  FeatureSequence nothing;
  fs::create_directories(dir.path() / "corpus/silent/quiet");
  write_feats(dir.str("corpus/silent/quiet/feats.f64"), nothing);
  std::ostringstream out, err;
  EXPECT_EQ(pipeline::cmd_diarize(cfg, "silent", {}, 1, out, err), 0) << err.str();
  const auto parsed = read_rttm_file(dir.str("hyp/quiet.rttm"));
  EXPECT_TRUE(parsed.empty() || parsed.begin()->second.empty());
}

TEST(Score, SelfScoreAndCollarFixture) {
  TempDir dir("score");
  Timeline ref;
  ref.recording = "r";
  ref.add(0.0, 4.0, "a");
  write_rttm_file(dir.str("ref.rttm"), ref);
  std::ostringstream out, err;
  ASSERT_EQ(pipeline::cmd_score(dir.str("ref.rttm"), dir.str("ref.rttm"), scoring::ScoreConfig{}, out, err), 0);
  EXPECT_NE(out.str().find("DER=0.0000"), std::string::npos);

  // Hypothesis ends 0.2 s early: inside the collar at 0.25, missed at 0.
  Timeline hyp = ref;
  hyp.segments[0].end = 3.8;
  write_rttm_file(dir.str("hyp.rttm"), hyp);
  scoring::ScoreConfig zero, quarter;
  zero.collar = 0.0;
  quarter.collar = 0.25;
  std::ostringstream a, b;
  pipeline::cmd_score(dir.str("ref.rttm"), dir.str("hyp.rttm"), zero, a, err);
  pipeline::cmd_score(dir.str("ref.rttm"), dir.str("hyp.rttm"), quarter, b, err);
  EXPECT_NE(a.str().find("MS=5.0000"), std::string::npos) << a.str();
  EXPECT_NE(b.str().find("MS=0.0000"), std::string::npos) << b.str();
}

// ---- command line tool as a subprocess

#ifdef CVEC_EXE
int run(const std::string& args, const TempDir& dir) {
  const std::string cmd = std::string(CVEC_EXE) + " " + args + " > " + dir.str("stdout.txt") + " 2> " +
                          dir.str("stderr.txt");
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

TEST(Exe, MissingInputsExitTwo) {
  TempDir dir("exe_missing");
  EXPECT_EQ(run("score " + dir.str("nope.rttm") + " " + dir.str("nope2.rttm"), dir), 2);
  EXPECT_EQ(run("train --corpus " + dir.str("no_corpus") + " --model " + dir.str("m"), dir), 2);
  EXPECT_EQ(run("train -c " + dir.str("missing.toml"), dir), 2);
}

TEST(Exe, MalformedRttmExitsTwoWithLineNumber) {
  TempDir dir("exe_rttm");
  write_file(dir.str("ref.rttm"), "SPEAKER r 1 0.000 1.000 <NA> <NA> a <NA> <NA>\n");
  write_file(dir.str("hyp.rttm"), "SPEAKER r 1 0.000 1.000 <NA> <NA> a <NA> <NA>\nSPEAKER r 1 x\n");
  EXPECT_EQ(run("score " + dir.str("ref.rttm") + " " + dir.str("hyp.rttm"), dir), 2);
  EXPECT_NE(read_file(dir.str("stderr.txt")).find("2"), std::string::npos);
}

TEST(Exe, UnknownConfigKeyExitsTwo) {
  TempDir dir("exe_cfg");
  write_file(dir.str("c.toml"), "[train]\nepohcs = 1\n");
  EXPECT_EQ(run("synth -c " + dir.str("c.toml"), dir), 2);
  EXPECT_NE(read_file(dir.str("stderr.txt")).find("epohcs"), std::string::npos);
}

TEST(Exe, UntrainedModelExitsThree) {
  TempDir dir("exe_model");
  write_file(dir.str("c.toml"), mini_config(dir));
  ASSERT_EQ(run("synth -c " + dir.str("c.toml"), dir), 0);
  EXPECT_EQ(run("diarize -c " + dir.str("c.toml"), dir), 3);
}

TEST(Exe, SeedFlagOverridesConfigAndEnvironment) {
  TempDir dir("exe_seed");
  write_file(dir.str("c.toml"), mini_config(dir));
  ASSERT_EQ(run("synth -c " + dir.str("c.toml") + " --seed 9", dir), 0);
  const auto flagged = read_file(dir.str("corpus/eval/eval000/feats.f64"));
  ASSERT_EQ(run("synth -c " + dir.str("c.toml"), dir), 0);
  EXPECT_NE(read_file(dir.str("corpus/eval/eval000/feats.f64")), flagged);
  ASSERT_EQ(run("synth -c " + dir.str("c.toml") + " --seed 9", dir), 0);
  EXPECT_EQ(read_file(dir.str("corpus/eval/eval000/feats.f64")), flagged);
  ASSERT_EQ(setenv("CVEC_SEED", "9", 1), 0);
  EXPECT_EQ(run("synth -c " + dir.str("c.toml"), dir), 0);
  unsetenv("CVEC_SEED");
  EXPECT_EQ(read_file(dir.str("corpus/eval/eval000/feats.f64")), flagged);
}

TEST(Exe, FullPipelineAndSelftest) {
  TempDir dir("exe_full");
  write_file(dir.str("c.toml"), mini_config(dir));
  ASSERT_EQ(run("synth -c " + dir.str("c.toml"), dir), 0);
  ASSERT_EQ(run("train -c " + dir.str("c.toml"), dir), 0) << read_file(dir.str("stderr.txt"));
  ASSERT_EQ(run("diarize -c " + dir.str("c.toml") + " -j 2", dir), 0) << read_file(dir.str("stderr.txt"));
  ASSERT_EQ(run("score " + dir.str("corpus/eval") + " " + dir.str("hyp") + " --collar 0.25", dir), 0);
  EXPECT_NE(read_file(dir.str("stdout.txt")).find("VALID=1"), std::string::npos);
  EXPECT_EQ(run("selftest", dir), 0);
}
#endif

}  // namespace
}  // namespace cvec

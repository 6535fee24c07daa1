#include <benchmark/benchmark.h>

#include <random>

#include "cvec/clustering.hpp"
#include "cvec/ops.hpp"
#include "cvec/scoring.hpp"
#include "cvec/training.hpp"

namespace {

using namespace cvec;

std::vector<double> normals(std::size_t n, Rng& rng) {
  std::normal_distribution<double> d(0.0, 1.0);
  std::vector<double> v(n);
  for (auto& x : v) x = d(rng);
  return v;
}

void BM_Matmul(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  Rng rng(1);
  const auto a = Tensor::matrix(n, n, normals(n * n, rng));
  const auto b = Tensor::matrix(n, n, normals(n * n, rng));
  for (auto _ : state) benchmark::DoNotOptimize(matmul(a, b));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n * n * n));
}
BENCHMARK(BM_Matmul)->Arg(32)->Arg(128)->Arg(256);

/// Forward pass for a batch of 16 two-second windows at the tiny profile.
void BM_EmbedForward(benchmark::State& state, const std::string& system) {
  const auto spec = training::SystemSpec::from_name(system, nets::Profile::Tiny);
  ParamStore params;
  Rng rng(2);
  training::init_system(params, spec, rng);
  const std::size_t batch = 16, frames = 200;
  const auto feats = Tensor::matrix(batch * frames, kFeatureDim, normals(batch * frames * kFeatureDim, rng));
  for (auto _ : state) benchmark::DoNotOptimize(training::embed_batch(spec, feats, batch, params).embeddings);
}

/// Forward plus backward of the same batch.
void BM_EmbedTrainStep(benchmark::State& state, const std::string& system) {
  const auto spec = training::SystemSpec::from_name(system, nets::Profile::Tiny);
  ParamStore params;
  Rng rng(3);
  training::init_system(params, spec, rng);
  const std::size_t batch = 16, frames = 200;
  const auto feats = Tensor::matrix(batch * frames, kFeatureDim, normals(batch * frames * kFeatureDim, rng));
  for (auto _ : state) {
    params.zero_grad();
    const auto out = training::embed_batch(spec, feats, batch, params);
    backward(add(sum_squares(out.embeddings), out.penalty));
  }
}

void register_systems() {
  for (const auto& name : training::SystemSpec::names()) {
    benchmark::RegisterBenchmark(("BM_EmbedForward/" + name).c_str(), BM_EmbedForward, name)
        ->Unit(benchmark::kMillisecond);
  }
  for (const char* name : {"TDNN", "HORNN", "Stacked_sigmoid"}) {
    benchmark::RegisterBenchmark((std::string("BM_EmbedTrainStep/") + name).c_str(), BM_EmbedTrainStep, name)
        ->Unit(benchmark::kMillisecond);
  }
}
const int registered = (register_systems(), 0);

/// Four speaker clouds of `n / 4` windows each.
void BM_SpectralClustering(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  Rng rng(4);
  std::normal_distribution<double> d(0.0, 1.0);
  std::vector<clustering::Embedding> centers(4, clustering::Embedding(32));
  for (auto& c : centers) {
    for (auto& x : c) x = 3.0 * d(rng);
  }
  std::vector<clustering::Embedding> x;
  for (std::size_t i = 0; i < n; ++i) {
    auto p = centers[i % 4];
    for (auto& v : p) v += 0.5 * d(rng);
    x.push_back(p);
  }
  for (auto _ : state) benchmark::DoNotOptimize(clustering::cluster_embeddings(x, clustering::ClusterConfig{}));
}
BENCHMARK(BM_SpectralClustering)->Arg(60)->Arg(120)->Arg(240)->Unit(benchmark::kMillisecond);

/// One hour of alternating turns against a hypothesis with shifted boundaries.
void BM_Score(benchmark::State& state) {
  Timeline ref, hyp;
  ref.recording = hyp.recording = "r";
  Rng rng(5);
  std::uniform_real_distribution<double> len(2.0, 8.0), jitter(-0.3, 0.3);
  double t = 0.0;
  std::size_t turn = 0;
  while (t < 3600.0) {
    const double end = t + len(rng);
    ref.add(t, end, "s" + std::to_string(turn % 4));
    hyp.add(std::max(0.0, t + jitter(rng)), end + jitter(rng) * 0.1, "c" + std::to_string((turn + 1) % 4));
    t = end + 0.5;
    ++turn;
  }
  hyp.sort();
  for (auto _ : state) benchmark::DoNotOptimize(scoring::score(ref, hyp, scoring::ScoreConfig{}));
}
BENCHMARK(BM_Score)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();

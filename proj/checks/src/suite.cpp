#include "cvec/checks/suite.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <ostream>
#include <random>
#include <sstream>

#include "cvec/checks/oracles.hpp"
#include "cvec/clustering.hpp"
#include "cvec/combination.hpp"
#include "cvec/error.hpp"
#include "cvec/nets.hpp"
#include "cvec/ops.hpp"
#include "cvec/pooling.hpp"
#include "cvec/scoring.hpp"
#include "cvec/segmentation.hpp"

namespace cvec::checks {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::vector<double> normal_values(std::size_t n, std::mt19937_64& rng, double sd = 1.0) {
  std::normal_distribution<double> d(0.0, sd);
  std::vector<double> v(n);
  for (auto& x : v) x = d(rng);
  return v;
}

Tensor random_matrix(std::size_t r, std::size_t c, std::mt19937_64& rng) {
  return Tensor::matrix(r, c, normal_values(r * c, rng));
}

FeatureSequence random_feats(std::size_t frames, std::mt19937_64& rng) {
  FeatureSequence f;
  f.data = normal_values(frames * f.dim, rng);
  return f;
}

std::string fmt(double v, int precision = 3) {
  std::ostringstream s;
  s << std::setprecision(precision) << v;
  return s.str();
}

/// Random pooled inputs for a combiner: heads x (dim / heads) per system.
std::vector<pooling::PooledEmbedding> random_pooled(const combination::CombinerSpec& spec, std::mt19937_64& rng) {
  std::vector<pooling::PooledEmbedding> out;
  for (std::size_t k = 0; k < spec.inputs(); ++k) {
    pooling::PooledEmbedding p;
    const std::size_t g = spec.input_heads[k];
    p.integrated = random_matrix(g, spec.input_dims[k] / g, rng);
    p.flat = vectorize(p.integrated);
    out.push_back(std::move(p));
  }
  return out;
}

Tensor with_penalty(const Tensor& loss, const Tensor& penalty) {
  return penalty.defined() ? add(loss, penalty) : loss;
}

}  // namespace

// ---------------------------------------------------------------- gradients

std::vector<std::string> gradient_items() {
  std::vector<std::string> items = {"tdnn", "hornn", "vad", "cpd", "pooling"};
  for (const auto& n : combination::CombinerSpec::variant_names()) items.push_back(n);
  return items;
}

CheckResult gradient_check_item(const std::string& item, std::size_t samples, std::uint64_t seed) {
  const auto t0 = Clock::now();
  const auto profile = nets::Profile::Tiny;
  std::mt19937_64 rng(seed);
  Rng init_rng(seed + 1);
  ParamStore params;
  std::function<Tensor()> loss;

  if (item == "tdnn") {
    const auto cfg = nets::TdnnConfig::for_profile(profile);
    nets::init_tdnn(params, cfg, init_rng);
    const Tensor x = random_feats(24, rng).to_tensor();
    loss = [&, cfg, x] { return random_projection_loss(nets::tdnn_forward(x, cfg, params), seed); };
  } else if (item == "hornn") {
    const auto cfg = nets::HornnConfig::for_profile(profile);
    nets::init_hornn(params, cfg, init_rng);
    const Tensor x = random_feats(24, rng).to_tensor();
    loss = [&, cfg, x] { return random_projection_loss(nets::hornn_forward(x, cfg, params), seed); };
  } else if (item == "vad") {
    const auto cfg = nets::VadConfig::for_profile(profile);
    nets::init_vad(params, cfg, init_rng);
    const std::vector<std::size_t> frames = {0, 17, 40, 79};
    const Tensor x = nets::vad_splice(random_feats(80, rng), frames, cfg);
    loss = [&, cfg, x] { return random_projection_loss(nets::vad_logits(x, cfg, params), seed); };
  } else if (item == "cpd") {
    const auto cfg = nets::CpdConfig::for_profile(profile);
    nets::init_cpd(params, cfg, init_rng);
    const Tensor x = random_feats(40, rng).to_tensor();
    const std::vector<std::size_t> centers = {5, 20, 35};
    nets::StepIndex past, future;
    nets::cpd_region_steps(centers, 0, 40, cfg.context, past, future);
    loss = [&, cfg, x, past, future] {
      const auto dv = nets::cpd_stream_features(x, cfg, params);
      const Tensor logits = nets::cpd_classify(nets::cpd_fuse(dv.forward, past, dv.reversed, future, cfg, params), params);
      return random_projection_loss(logits, seed);
    };
  } else if (item == "pooling") {
    pooling::PoolingConfig cfg;
    cfg.attention_dim = 16;
    pooling::init_pooling(params, 32, cfg, init_rng, "pool");
    const Tensor h = random_matrix(30, 32, rng);
    loss = [&, cfg, h] {
      const auto p = pooling::self_attentive_pool(h, cfg, params, "pool");
      return add(random_projection_loss(p.flat, seed), pooling::attention_penalty(p.annotation, cfg));
    };
  } else {
    const auto spec = combination::CombinerSpec::from_name(item, profile);
    combination::init_combiner(params, spec, init_rng);
    const auto inputs = random_pooled(spec, rng);
    loss = [&, spec, inputs] {
      const auto r = combination::combine(spec, inputs, params);
      return with_penalty(random_projection_loss(r.c, seed), r.penalty);
    };
  }

  const auto report = gradient_check(params, loss, samples, seed + 2);
  CheckResult r;
  r.name = "gradient " + item;
  r.value = report.normwise_rel_error;
  r.pass = report.checked >= std::min(samples, params.parameter_count()) && report.normwise_rel_error < 1e-5;
  r.detail = std::to_string(report.checked) + " params (" + std::to_string(report.kinks_skipped) +
             " kink draws replaced), rel err " + fmt(report.normwise_rel_error) + "; worst entry " +
             report.worst_param + "[" + std::to_string(report.worst_index) + "] " + fmt(report.max_rel_error) +
             " at |g|=" + fmt(std::abs(report.worst_numeric));
  r.seconds = seconds_since(t0);
  return r;
}

CheckResult check_gradients(std::uint64_t seed, std::vector<CheckResult>* items) {
  const auto t0 = Clock::now();
  CheckResult r{"gradient correctness", true, "", 0.0};
  double worst = 0.0;
  std::string failed;
  std::uint64_t s = seed;
  for (const auto& item : gradient_items()) {
    auto one = gradient_check_item(item, 200, s);
    s += 101;
    if (!one.pass) {
      r.pass = false;
      failed += (failed.empty() ? "" : ",") + item;
    }
    worst = std::max(worst, one.value);
    if (items != nullptr) items->push_back(one);
  }
  r.seconds = seconds_since(t0);
  if (r.seconds >= 60.0) r.pass = false;
  r.detail = std::to_string(gradient_items().size()) + " items x 200 params, worst rel err " + fmt(worst) + ", " +
             fmt(r.seconds, 3) + " s (< 60 s)" + (failed.empty() ? "" : "; failed: " + failed);
  return r;
}

// ---------------------------------------------------------------- bilinear

CheckResult check_bilinear_algebra(std::uint64_t seed) {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> dim(1, 6);
  double route_diff = 0.0, tied_diff = 0.0;
  bool shortcut_exact = true;
  for (int draw = 0; draw < 100; ++draw) {
    const std::size_t m = dim(rng), n = dim(rng), o = dim(rng);
    const std::size_t d = std::uniform_int_distribution<std::size_t>(1, std::min(m, n))(rng);
    const auto e1 = normal_values(m, rng), e2 = normal_values(n, rng), b = normal_values(o, rng);

    combination::BilinearTensor w{m, n, o, normal_values(m * n * o, rng)};
    const auto a = combination::bilinear_form(e1, e2, w, b);
    const auto c = combination::bilinear_outer_projection(e1, e2, w, b);
    for (std::size_t i = 0; i < o; ++i) route_diff = std::max(route_diff, std::abs(a[i] - c[i]));

    ParamStore p;
    const Tensor u1 = p.add("bl.U1", {m, d}, normal_values(m * d, rng));
    const Tensor u2 = p.add("bl.U2", {n, d}, normal_values(n * d, rng));
    const Tensor proj = p.add("bl.P", {d, o}, normal_values(d * o, rng));
    p.add("bl.b", {o}, b);
    p.add_zeros("bl.V1", {m, o});
    p.add_zeros("bl.V2", {n, o});
    const Tensor te1 = Tensor::vector(e1), te2 = Tensor::vector(e2);
    const auto tied = combination::bilinear_form(e1, e2, combination::tied_bilinear_tensor(u1, u2, proj), b);
    const Tensor low = combination::bilinear_combine(te1, te2, Activation::Identity, p, "bl");
    for (std::size_t i = 0; i < o; ++i) tied_diff = std::max(tied_diff, std::abs(low(i) - tied[i]));

    ParamStore q;
    q.add("bl.U1", {m, d}, normal_values(m * d, rng));
    q.add("bl.U2", {n, d}, normal_values(n * d, rng));
    q.add_zeros("bl.P", {d, o});
    q.add_zeros("bl.b", {o});
    const Tensor v1 = q.add("bl.V1", {m, o}, normal_values(m * o, rng));
    const Tensor v2 = q.add("bl.V2", {n, o}, normal_values(n * o, rng));
    const Tensor shortcut = combination::bilinear_combine(te1, te2, Activation::Sigmoid, q, "bl");
    const Tensor expected = add(matmul(te1, v1), matmul(te2, v2));
    for (std::size_t i = 0; i < o; ++i) shortcut_exact = shortcut_exact && shortcut(i) == expected(i);
  }
  CheckResult r;
  r.name = "bilinear algebra";
  r.pass = route_diff <= 1e-12 && tied_diff <= 1e-12 && shortcut_exact;
  r.detail = "100 draws: routes " + fmt(route_diff) + ", tied tensor " + fmt(tied_diff) + ", shortcut " +
             (shortcut_exact ? "exact" : "MISMATCH");
  r.seconds = seconds_since(t0);
  return r;
}

// ---------------------------------------------------------------- attention

CheckResult check_attention(std::uint64_t seed) {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(seed);
  Rng init_rng(seed + 1);
  double col_dev = 0.0;
  auto check_columns = [&](const Tensor& a) {
    for (std::size_t g = 0; g < a.cols(); ++g) {
      double s = 0.0;
      for (std::size_t t = 0; t < a.rows(); ++t) s += a(t, g);
      col_dev = std::max(col_dev, std::abs(s - 1.0));
    }
  };

  NoGradGuard no_grad;
  pooling::PoolingConfig cfg;
  cfg.attention_dim = 16;
  ParamStore params;
  pooling::init_pooling(params, 32, cfg, init_rng, "pool");
  std::uniform_int_distribution<std::size_t> len(1, 60);
  for (int i = 0; i < 50; ++i) {
    pooling::PoolingConfig c = cfg;
    c.stride = i % 2 == 0 ? 1 : 10;
    check_columns(pooling::self_attentive_pool(random_matrix(len(rng), 32, rng), c, params, "pool").annotation);
  }
  for (const char* name : {"SelfAtt1", "SelfAtt2", "Stacked_sigmoid", "Stacked_tanh"}) {
    const auto spec = combination::CombinerSpec::from_name(name, nets::Profile::Tiny);
    ParamStore cp;
    combination::init_combiner(cp, spec, init_rng);
    for (int i = 0; i < 10; ++i) check_columns(combination::combine(spec, random_pooled(spec, rng), cp).annotation);
  }

  // Analytic zeros.
  pooling::PoolingConfig one;
  one.heads = 1;
  one.mu = 1.0;
  one.lambda = {1.0};
  const double spiky = pooling::attention_penalty(Tensor::matrix(5, 1, {1, 0, 0, 0, 0}), one).item();
  one.lambda = {0.2};
  const double smooth = pooling::attention_penalty(Tensor::matrix(5, 1, std::vector<double>(5, 0.2)), one).item();
  pooling::PoolingConfig five;
  five.mu = 1.0;
  five.lambda = std::vector<double>(5, 1.0);
  std::vector<double> eye(25, 0.0);
  for (std::size_t g = 0; g < 5; ++g) eye[g * 5 + (4 - g)] = 1.0;
  const double onehot_heads = pooling::attention_penalty(Tensor::matrix(5, 5, eye), five).item();

  // Positive on random column-stochastic matrices.
  std::size_t positive = 0;
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::uniform_int_distribution<std::size_t> rows(2, 20);
  for (int i = 0; i < 100; ++i) {
    const std::size_t t = rows(rng);
    std::vector<double> a(t * 5);
    for (auto& x : a) x = unif(rng);
    for (std::size_t g = 0; g < 5; ++g) {
      double s = 0.0;
      for (std::size_t r = 0; r < t; ++r) s += a[r * 5 + g];
      for (std::size_t r = 0; r < t; ++r) a[r * 5 + g] /= s;
    }
    if (pooling::attention_penalty(Tensor::matrix(t, 5, a), pooling::PoolingConfig{}).item() > 0.0) ++positive;
  }

  CheckResult r;
  r.name = "attention invariants";
  r.pass = col_dev <= 1e-12 && spiky == 0.0 && std::abs(smooth) <= 1e-15 && onehot_heads == 0.0 && positive == 100;
  r.detail = "column sum dev " + fmt(col_dev) + ", penalty one-hot " + fmt(spiky) + ", uniform " + fmt(smooth) +
             ", 5-head one-hot " + fmt(onehot_heads) + ", positive " + std::to_string(positive) + "/100";
  r.seconds = seconds_since(t0);
  return r;
}

// ---------------------------------------------------------------- clustering

CheckResult check_clustering_recovery(std::uint64_t seed) {
  const auto t0 = Clock::now();
  constexpr std::size_t kDim = 8;
  constexpr double kSigma = 1.0;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, kSigma);
  std::string detail;
  bool pass = true;
  for (std::size_t k : {3, 2, 4, 5}) {
    // Centroids on scaled axes: pairwise distance 10 sigma.
    const double radius = 10.0 * kSigma / std::sqrt(2.0);
    std::vector<clustering::Embedding> x;
    std::vector<std::size_t> truth;
    for (std::size_t c = 0; c < k; ++c) {
      for (int w = 0; w < 20; ++w) {
        clustering::Embedding e(kDim);
        for (auto& v : e) v = noise(rng);
        e[c] += radius;
        x.push_back(std::move(e));
        truth.push_back(c);
      }
    }
    // Interleave so that cluster order differs from input order.
    std::vector<std::size_t> order(x.size());
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);
    std::vector<clustering::Embedding> xs;
    std::vector<std::size_t> ts;
    for (auto i : order) {
      xs.push_back(x[i]);
      ts.push_back(truth[i]);
    }
    clustering::ClusterConfig cfg;
    cfg.seed = seed;
    const auto res = clustering::cluster_embeddings(xs, cfg);
    const double ari = adjusted_rand_index(res.labels, ts);
    pass = pass && res.k == k && ari == 1.0;
    detail += (detail.empty() ? "" : ", ") + std::string("k=") + std::to_string(k) + "->" + std::to_string(res.k) +
              " ARI " + fmt(ari);
  }
  CheckResult r;
  r.name = "clustering recovery";
  r.seconds = seconds_since(t0);
  r.pass = pass && r.seconds < 10.0;
  r.detail = detail + ", " + fmt(r.seconds, 3) + " s (< 10 s)";
  return r;
}

// ---------------------------------------------------------------- scoring

namespace {

Timeline random_timeline(std::mt19937_64& rng, std::size_t max_segments, std::size_t speakers, bool disjoint) {
  Timeline tl;
  tl.recording = "r";
  std::uniform_int_distribution<std::size_t> count(1, max_segments);
  std::uniform_int_distribution<int> ms(0, 20000);
  std::uniform_int_distribution<int> len(100, 5000);
  std::uniform_int_distribution<std::size_t> spk(0, speakers - 1);
  const std::size_t n = count(rng);
  int cursor = 0;
  for (std::size_t i = 0; i < n; ++i) {
    int start = disjoint ? cursor + ms(rng) / 10 : ms(rng);
    const int end = start + len(rng);
    cursor = end;
    tl.add(start / 1000.0, end / 1000.0, "s" + std::to_string(spk(rng)));
  }
  tl.sort();
  return tl;
}

bool same_report(const scoring::ScoreReport& a, const scoring::ScoreReport& b) {
  return a.ms == b.ms && a.fa == b.fa && a.ser == b.ser && a.der == b.der && a.scored_speech == b.scored_speech;
}

}  // namespace

CheckResult check_scoring(std::uint64_t seed) {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(seed);
  scoring::ScoreConfig cfg;

  Timeline ref, hyp;
  ref.recording = hyp.recording = "fixture";
  ref.add(0.0, 10.0, "A");
  hyp.add(0.0, 5.0, "A");
  const auto fixture = scoring::score(ref, hyp, cfg);
  const bool fixture_ok = std::abs(fixture.ms - 50.0) <= 0.1 && fixture.fa == 0.0 && fixture.ser == 0.0;

  const std::vector<std::vector<double>> overlap = {{5, 0}, {0, 0}, {0, 4}};
  const auto mapping = scoring::optimal_mapping(overlap);
  const bool mapping_ok = mapping == std::vector<long>{0, -1, 1};

  std::size_t perm_ok = 0, sum_ok = 0, oracle_ok = 0, draws = 0;
  double max_sum_dev = 0.0, max_oracle_dev = 0.0;
  while (draws < 50) {
    const bool overlap_allowed = draws % 2 == 0;
    Timeline r = random_timeline(rng, 5, 3, !overlap_allowed);
    Timeline h = random_timeline(rng, 5, 4, false);
    scoring::ScoreConfig c = cfg;
    c.score_overlap = draws % 4 == 0;
    const auto rep = scoring::score(r, h, c);
    if (!rep.valid) continue;
    ++draws;
    const double dev = std::abs(rep.ms + rep.fa + rep.ser - rep.der);
    max_sum_dev = std::max(max_sum_dev, dev);
    if (dev <= 1e-9) ++sum_ok;

    Timeline permuted = h;
    std::vector<std::string> names = {"x", "y", "z", "w"};
    std::shuffle(names.begin(), names.end(), rng);
    for (auto& s : permuted.segments) s.label = names[static_cast<std::size_t>(s.label[1] - '0')];
    if (same_report(rep, scoring::score(r, permuted, c))) ++perm_ok;

    const auto o = der_oracle(r, h, c.collar, c.score_overlap);
    const auto& rs = rep.recordings.front();
    const double d = std::max({std::abs(o.scored - rs.scored_speech), std::abs(o.missed - rs.missed),
                               std::abs(o.false_alarm - rs.false_alarm), std::abs(o.speaker_error - rs.speaker_error)});
    max_oracle_dev = std::max(max_oracle_dev, d);
    if (d <= 1e-9) ++oracle_ok;
  }

  CheckResult r;
  r.name = "scoring fixtures";
  r.pass = fixture_ok && mapping_ok && perm_ok == 50 && sum_ok == 50 && oracle_ok == 50;
  r.detail = "MS " + fmt(fixture.ms, 6) + "% FA " + fmt(fixture.fa) + " SER " + fmt(fixture.ser) + ", mapping " +
             (mapping_ok ? "ok" : "WRONG") + ", permutation " + std::to_string(perm_ok) + "/50, MS+FA+SER=DER " +
             std::to_string(sum_ok) + "/50 (dev " + fmt(max_sum_dev) + "), oracle " + std::to_string(oracle_ok) +
             "/50 (dev " + fmt(max_oracle_dev) + ")";
  r.seconds = seconds_since(t0);
  return r;
}

CheckResult check_cpd_metric() {
  const auto t0 = Clock::now();
  const std::vector<double> ref = {2.0, 6.0, 10.0};
  const std::vector<double> hyp = {2.3, 8.0};
  const auto s = segmentation::cpd_eval(hyp, ref, 0.5);
  CheckResult r;
  r.name = "cpd metric";
  r.pass = s.true_positives == 1 && s.false_positives == 1 && s.false_negatives == 2 &&
           std::abs(s.precision - 0.5) <= 1e-12 && std::abs(s.recall - 1.0 / 3.0) <= 1e-12 &&
           std::abs(s.f1 - 0.4) <= 1e-12;
  std::ostringstream d;
  d << std::fixed << std::setprecision(3) << "P=" << s.precision << " R=" << s.recall << " F1=" << s.f1;
  r.detail = d.str();
  r.seconds = seconds_since(t0);
  return r;
}

// ---------------------------------------------------------------- numerics and archives

CheckResult check_matmul(std::uint64_t seed) {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(seed);
  double diff = 0.0;
  std::uniform_int_distribution<std::size_t> dim(1, 9);
  for (int i = 0; i < 50; ++i) {
    const std::size_t m = dim(rng), k = dim(rng), n = dim(rng);
    const auto a = normal_values(m * k, rng), b = normal_values(k * n, rng);
    const Tensor c = matmul(Tensor::matrix(m, k, a), Tensor::matrix(k, n, b));
    const auto o = matmul_oracle(a, b, m, k, n);
    for (std::size_t j = 0; j < o.size(); ++j) diff = std::max(diff, std::abs(c.values()[j] - o[j]));
  }
  CheckResult r{"matmul oracle", diff < 1e-12, "50 draws, max abs diff " + fmt(diff), seconds_since(t0)};
  return r;
}

CheckResult check_serialization(std::uint64_t seed) {
  const auto t0 = Clock::now();
  Rng rng(seed);
  ParamStore p;
  nets::init_hornn(p, nets::HornnConfig::for_profile(nets::Profile::Tiny), rng);
  const std::string bytes = p.serialize();
  const ParamStore back = ParamStore::deserialize(bytes);
  bool round_trip = back.serialize() == bytes;

  auto rejected = [](const std::string& data) {
    try {
      ParamStore::deserialize(data);
      return false;
    } catch (const IoError&) {
      return true;
    }
  };
  std::string flipped = bytes;
  flipped[bytes.size() / 2] = static_cast<char>(flipped[bytes.size() / 2] ^ 0x10);
  const bool flip_caught = rejected(flipped);
  const bool truncation_caught = rejected(bytes.substr(0, bytes.size() - 9));

  // Same fault on disk through the file loader.
  const auto path = std::filesystem::temp_directory_path() / ("cvec_selftest_" + std::to_string(seed) + ".params");
  p.save(path.string());
  {
    std::fstream f(path, std::ios::in | std::ios::out | std::ios::binary);
    f.seekp(static_cast<std::streamoff>(bytes.size() / 3));
    f.put('\x7f');
  }
  bool file_caught = false;
  try {
    ParamStore::load(path.string());
  } catch (const IoError&) {
    file_caught = true;
  }
  std::filesystem::remove(path);

  CheckResult r;
  r.name = "param serialization";
  r.pass = round_trip && flip_caught && truncation_caught && file_caught;
  r.detail = std::string("round trip ") + (round_trip ? "ok" : "FAILED") + ", bit flip " +
             (flip_caught ? "rejected" : "ACCEPTED") + ", truncation " + (truncation_caught ? "rejected" : "ACCEPTED") +
             ", corrupted file " + (file_caught ? "rejected" : "ACCEPTED");
  r.seconds = seconds_since(t0);
  return r;
}

void print_results(std::ostream& out, const std::vector<CheckResult>& results) {
  std::size_t passed = 0;
  for (const auto& r : results) {
    out << (r.pass ? "PASS" : "FAIL") << "  " << std::left << std::setw(28) << r.name << std::right << std::fixed
        << std::setprecision(2) << std::setw(8) << r.seconds << " s  " << r.detail << "\n";
    out.unsetf(std::ios::fixed);
    if (r.pass) ++passed;
  }
  out << passed << "/" << results.size() << " checks passed\n";
}

int cmd_selftest(std::ostream& out, std::ostream& err) {
  try {
    std::vector<CheckResult> results;
    results.push_back(check_matmul());
    std::vector<CheckResult> items;
    const auto grads = check_gradients(1, &items);
    results.insert(results.end(), items.begin(), items.end());
    results.push_back(grads);
    results.push_back(check_bilinear_algebra());
    results.push_back(check_attention());
    results.push_back(check_clustering_recovery());
    results.push_back(check_scoring());
    results.push_back(check_cpd_metric());
    results.push_back(check_serialization());
    print_results(out, results);
    const bool ok = std::all_of(results.begin(), results.end(), [](const CheckResult& r) { return r.pass; });
    return ok ? 0 : 4;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 4;
  }
}

}  // namespace cvec::checks

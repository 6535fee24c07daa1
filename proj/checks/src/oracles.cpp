#include "cvec/checks/oracles.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <random>
#include <set>

#include "cvec/error.hpp"
#include "cvec/ops.hpp"

namespace cvec::checks {

std::vector<double> matmul_oracle(const std::vector<double>& a, const std::vector<double>& b, std::size_t m,
                                  std::size_t k, std::size_t n) {
  std::vector<double> c(m * n, 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      double s = 0.0;
      for (std::size_t p = 0; p < k; ++p) s += a[i * k + p] * b[p * n + j];
      c[i * n + j] = s;
    }
  }
  return c;
}

double central_difference(const std::function<double(double)>& f, double x, double h) {
  return (f(x + h) - f(x - h)) / (2.0 * h);
}

double relative_error(double analytic, double numeric, double floor) {
  return std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), floor});
}

GradCheckReport gradient_check(ParamStore& params, const std::function<Tensor()>& loss, std::size_t samples,
                               std::uint64_t seed, double h) {
  params.zero_grad();
  std::uint64_t base_pattern = 0;
  {
    ReluPatternProbe probe;
    backward(loss());
    base_pattern = probe.pattern();
  }

  std::vector<std::pair<std::string, std::size_t>> entries;
  for (const auto& [name, t] : params) {
    for (std::size_t i = 0; i < t.size(); ++i) entries.emplace_back(name, i);
  }
  std::mt19937_64 rng(seed);
  std::shuffle(entries.begin(), entries.end(), rng);

  GradCheckReport report;
  NoGradGuard no_grad;
  for (const auto& [name, i] : entries) {
    if (report.checked == samples) break;
    Tensor& p = params.get(name);
    const double analytic = p.has_grad() ? p.grad()[i] : 0.0;
    auto value = p.mutable_values();
    const double x0 = value[i];
    bool kink = false;
    const double numeric = central_difference(
        [&](double x) {
          value[i] = x;
          ReluPatternProbe probe;
          const double v = loss().item();
          kink = kink || probe.pattern() != base_pattern;
          return v;
        },
        x0, h);
    value[i] = x0;
    if (kink) {
      ++report.kinks_skipped;
      continue;
    }
    ++report.checked;
    const double abs_err = std::abs(analytic - numeric);
    report.max_abs_error = std::max(report.max_abs_error, abs_err);
    report.max_abs_numeric = std::max(report.max_abs_numeric, std::abs(numeric));
    const double err = relative_error(analytic, numeric);
    if (err >= report.max_rel_error) {
      report.max_rel_error = err;
      report.worst_param = name;
      report.worst_index = i;
      report.worst_analytic = analytic;
      report.worst_numeric = numeric;
    }
  }
  report.normwise_rel_error =
      report.max_abs_numeric > 0.0 ? report.max_abs_error / report.max_abs_numeric : report.max_abs_error;
  params.zero_grad();
  return report;
}

Tensor random_projection_loss(const Tensor& x, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> r(x.size());
  for (auto& v : r) v = normal(rng);
  return sum(hadamard(x, Tensor::constant(x.shape(), std::move(r))));
}

double adjusted_rand_index(const std::vector<std::size_t>& a, const std::vector<std::size_t>& b) {
  if (a.size() != b.size()) throw DimensionError("adjusted_rand_index: labelings differ in length");
  const double n = static_cast<double>(a.size());
  std::map<std::pair<std::size_t, std::size_t>, double> joint;
  std::map<std::size_t, double> ca, cb;
  for (std::size_t i = 0; i < a.size(); ++i) {
    joint[{a[i], b[i]}] += 1.0;
    ca[a[i]] += 1.0;
    cb[b[i]] += 1.0;
  }
  auto pairs = [](double x) { return x * (x - 1.0) / 2.0; };
  double sum_joint = 0.0, sum_a = 0.0, sum_b = 0.0;
  for (const auto& [k, v] : joint) sum_joint += pairs(v);
  for (const auto& [k, v] : ca) sum_a += pairs(v);
  for (const auto& [k, v] : cb) sum_b += pairs(v);
  const double expected = sum_a * sum_b / pairs(n);
  const double max_index = 0.5 * (sum_a + sum_b);
  if (max_index == expected) return 1.0;
  return (sum_joint - expected) / (max_index - expected);
}

namespace {

void assign_rows(const std::vector<std::vector<double>>& w, std::size_t row, std::vector<bool>& used,
                 std::vector<long>& current, double total, double& best, std::vector<long>& best_map) {
  if (row == w.size()) {
    if (total > best) {
      best = total;
      best_map = current;
    }
    return;
  }
  current[row] = -1;
  assign_rows(w, row + 1, used, current, total, best, best_map);
  for (std::size_t c = 0; c < w[row].size(); ++c) {
    if (used[c]) continue;
    used[c] = true;
    current[row] = static_cast<long>(c);
    assign_rows(w, row + 1, used, current, total + w[row][c], best, best_map);
    used[c] = false;
  }
  current[row] = -1;
}

}  // namespace

double exhaustive_assignment(const std::vector<std::vector<double>>& w, std::vector<long>* rows_to_cols) {
  const std::size_t cols = w.empty() ? 0 : w[0].size();
  std::vector<bool> used(cols, false);
  std::vector<long> current(w.size(), -1), best_map(w.size(), -1);
  double best = 0.0;
  assign_rows(w, 0, used, current, 0.0, best, best_map);
  if (rows_to_cols != nullptr) *rows_to_cols = best_map;
  return best;
}

DerOracle der_oracle(const Timeline& reference, const Timeline& hypothesis, double collar, bool score_overlap) {
  auto tick = [](double s) { return static_cast<long long>(std::llround(s * 10000.0)); };
  const long long c = tick(collar);
  std::set<long long> cuts;
  for (const auto& s : reference.segments) {
    for (long long t : {tick(s.start), tick(s.end)}) {
      cuts.insert(t - c);
      cuts.insert(t);
      cuts.insert(t + c);
    }
  }
  for (const auto& s : hypothesis.segments) {
    cuts.insert(tick(s.start));
    cuts.insert(tick(s.end));
  }
  const std::vector<long long> points(cuts.begin(), cuts.end());

  auto active = [&](const Timeline& tl, long long t) {
    std::set<std::string> out;
    for (const auto& s : tl.segments) {
      if (tick(s.start) <= t && t < tick(s.end)) out.insert(s.label);
    }
    return out;
  };
  auto in_collar = [&](long long t) {
    for (const auto& s : reference.segments) {
      for (long long b : {tick(s.start), tick(s.end)}) {
        if (b - c <= t && t < b + c) return true;
      }
    }
    return false;
  };

  struct Piece {
    double dur;
    std::set<std::string> ref, hyp;
  };
  std::vector<Piece> pieces;
  for (std::size_t i = 0; i + 1 < points.size(); ++i) {
    const long long t = points[i];
    if (in_collar(t)) continue;
    Piece p{static_cast<double>(points[i + 1] - t) / 10000.0, active(reference, t), active(hypothesis, t)};
    if (!score_overlap && p.ref.size() >= 2) continue;
    pieces.push_back(std::move(p));
  }

  const auto ref_labels = reference.labels();
  const auto hyp_labels = hypothesis.labels();
  std::vector<std::vector<double>> overlap(ref_labels.size(), std::vector<double>(hyp_labels.size(), 0.0));
  for (const auto& p : pieces) {
    for (std::size_t r = 0; r < ref_labels.size(); ++r) {
      for (std::size_t h = 0; h < hyp_labels.size(); ++h) {
        if (p.ref.count(ref_labels[r]) && p.hyp.count(hyp_labels[h])) overlap[r][h] += p.dur;
      }
    }
  }
  const double mapped = exhaustive_assignment(overlap);

  DerOracle out;
  double matched_pairs = 0.0;
  for (const auto& p : pieces) {
    const double nr = static_cast<double>(p.ref.size());
    const double nh = static_cast<double>(p.hyp.size());
    out.scored += nr * p.dur;
    out.missed += std::max(0.0, nr - nh) * p.dur;
    out.false_alarm += std::max(0.0, nh - nr) * p.dur;
    matched_pairs += std::min(nr, nh) * p.dur;
  }
  out.speaker_error = matched_pairs - mapped;
  return out;
}

}  // namespace cvec::checks

#pragma once

// Oracle-backed checks shared by `cvec selftest` and the acceptance binary.

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace cvec::checks {

struct CheckResult {
  std::string name;
  bool pass = false;
  std::string detail;
  double seconds = 0.0;
  /// Headline measurement of the check (for gradient items, the normwise
  /// relative error).
  double value = 0.0;
};

/// Gradient check of one network or combiner at the tiny profile.
CheckResult gradient_check_item(const std::string& item, std::size_t samples, std::uint64_t seed);
/// "tdnn", "hornn", "vad", "cpd", "pooling" and every combiner name.
std::vector<std::string> gradient_items();

/// Every gradient item with 200 samples, plus the 60 s budget.
CheckResult check_gradients(std::uint64_t seed = 1, std::vector<CheckResult>* items = nullptr);
/// Sum and outer-product bilinear routes, tied low-rank tensor, shortcut-only form.
CheckResult check_bilinear_algebra(std::uint64_t seed = 2);
/// Annotation columns sum to one; penalty zeros and positivity.
CheckResult check_attention(std::uint64_t seed = 3);
/// Gaussian clouds recovered with the right k and ARI 1, within 10 s.
CheckResult check_clustering_recovery(std::uint64_t seed = 4);
/// Hand fixture, permutation invariance, decomposition and the DER oracle.
CheckResult check_scoring(std::uint64_t seed = 5);
/// Three references, two hypotheses, one match.
CheckResult check_cpd_metric();
/// Matmul against the triple-loop oracle.
CheckResult check_matmul(std::uint64_t seed = 6);
/// Archive round trip, and corrupted archives rejected.
CheckResult check_serialization(std::uint64_t seed = 7);

/// Prints one line per check followed by a summary line.
void print_results(std::ostream& out, const std::vector<CheckResult>& results);

/// Runs the full suite; returns 0 when every check passes and 4 otherwise.
int cmd_selftest(std::ostream& out, std::ostream& err);

}  // namespace cvec::checks

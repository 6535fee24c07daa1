#pragma once

// Independent reference implementations used to verify the library.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "cvec/param_store.hpp"
#include "cvec/tensor.hpp"
#include "cvec/timeline.hpp"

namespace cvec::checks {

/// Row-major (m x k) times (k x n) by three nested loops.
std::vector<double> matmul_oracle(const std::vector<double>& a, const std::vector<double>& b, std::size_t m,
                                  std::size_t k, std::size_t n);

/// (f(x + h) - f(x - h)) / 2h.
double central_difference(const std::function<double(double)>& f, double x, double h);

/// |a - n| / max(|a|, |n|, floor).
double relative_error(double analytic, double numeric, double floor = 1e-8);

struct GradCheckReport {
  std::size_t checked = 0;
  /// Coordinates redrawn because x - h, x or x + h ran on different relu pieces.
  std::size_t kinks_skipped = 0;
  double max_abs_error = 0.0;
  double max_abs_numeric = 0.0;
  /// max |a - n| / max |n| over the checked coordinates.
  double normwise_rel_error = 0.0;
  /// Worst componentwise relative_error() and where it occurred.
  double max_rel_error = 0.0;
  std::string worst_param;
  std::size_t worst_index = 0;
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;
};

/// Compares backward() gradients of `loss` with central differences on
/// `samples` parameter entries drawn without replacement (all entries when
/// fewer exist). Entries whose difference quotient straddles a relu kink are
/// replaced by further draws.
GradCheckReport gradient_check(ParamStore& params, const std::function<Tensor()>& loss, std::size_t samples,
                               std::uint64_t seed, double h = 1e-5);

/// sum(x (.) R) with R drawn from N(0, 1): a generic scalar loss.
Tensor random_projection_loss(const Tensor& x, std::uint64_t seed);

/// Adjusted Rand index of two labelings of the same items.
double adjusted_rand_index(const std::vector<std::size_t>& a, const std::vector<std::size_t>& b);

/// Best total of a one-to-one partial row/column assignment, by enumeration.
/// `rows_to_cols` receives the column of each row, or -1.
double exhaustive_assignment(const std::vector<std::vector<double>>& w, std::vector<long>* rows_to_cols = nullptr);

/// Error times in seconds from a direct sweep over elementary intervals with
/// an enumerated speaker mapping.
struct DerOracle {
  double scored = 0.0;
  double missed = 0.0;
  double false_alarm = 0.0;
  double speaker_error = 0.0;
};

DerOracle der_oracle(const Timeline& reference, const Timeline& hypothesis, double collar, bool score_overlap);

}  // namespace cvec::checks

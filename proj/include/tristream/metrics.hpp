#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <absl/container/flat_hash_map.h>

#include "tristream/types.hpp"

namespace tristream {

using CountMap = absl::flat_hash_map<NodeId, std::uint64_t>;
using EstimateMap = absl::flat_hash_map<NodeId, double>;

/// |x - est| / (1 + x). Throws std::invalid_argument on negative truth.
double global_error(double truth, double est);

/// Aligned vectors: truth[j] and est[j] describe the same node. All throw
/// std::invalid_argument on empty input or mismatched lengths.
double local_error(std::span<const double> truth, std::span<const double> est);
double local_rmse(std::span<const double> truth, std::span<const double> est);

struct Correlation {
  double value = 0.0;
  bool defined = false;  // false when either rank vector is constant
};

/// Spearman: Pearson correlation of average (fractional) ranks. Needs at
/// least two entries.
Correlation rank_correlation(std::span<const double> truth, std::span<const double> est);

/// 1-based ranks, ties share the mean of the positions they occupy.
std::vector<double> average_ranks(std::span<const double> values);

/// Map forms: the node set is the truth's key set; missing estimates are 0.
double local_error(const CountMap& truth, const EstimateMap& est);
double local_rmse(const CountMap& truth, const EstimateMap& est);
Correlation rank_correlation(const CountMap& truth, const EstimateMap& est);

struct AccuracyReport {
  double global_error = 0.0;
  double local_error = 0.0;
  double local_rmse = 0.0;
  Correlation rank_correlation;
};

AccuracyReport accuracy(std::uint64_t truth_global, const CountMap& truth_local, double est_global,
                        const EstimateMap& est_local);

struct TrialStats {
  double mean = 0.0;
  double variance = 0.0;  // n-1 denominator
  double std_error = 0.0; // sqrt(variance / n)
};

/// Throws std::invalid_argument with fewer than two samples.
TrialStats trial_stats(std::span<const double> samples);

/// Standard error of the sample variance, from the fourth central moment.
double variance_std_error(std::span<const double> samples);

/// Least-squares slope of log(y) against log(x). Needs two or more distinct
/// positive x and positive y.
double loglog_slope(std::span<const double> x, std::span<const double> y);

}  // namespace tristream
